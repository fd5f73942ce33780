#include "mstp/backends.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mstp/error.hpp"
#include "mstp/random.hpp"
#include "mstp/remote.hpp"

namespace mstp {
namespace {

constexpr std::uint64_t kControllerSalt = 0x5743;  // level salts are 1..L

const TruthTrack& track_for(const TruthBook& book, const StepContext& ctx) {
  const auto& track = book.at(ctx.clip_id);
  if (ctx.step < 0 || static_cast<std::size_t>(ctx.step) + 1 >= track.states.size()) {
    throw Error(Errc::MissingGroundTruth, "clip '" + ctx.clip_id + "' has no annotation at step " +
                                              std::to_string(ctx.step + 1));
  }
  return track;
}

std::string pick_other(RandomStream& rng, std::span<const std::string> allowed, const std::string& avoid) {
  std::vector<const std::string*> others;
  for (const auto& label : allowed) {
    if (label != avoid) others.push_back(&label);
  }
  if (others.empty()) return avoid;
  return *others[rng.below(others.size())];
}

}  // namespace

// --- ground truth ----------------------------------------------------------

TransitionDecision coarsest_change(const StateVector& a, const StateVector& b) {
  const auto depth = std::min(a.depth(), b.depth());
  for (std::size_t level = 1; level <= depth; ++level) {
    if (a.at(level) != b.at(level)) return TransitionDecision::at(level);
  }
  return TransitionDecision::continue_();
}

GroundTruthOracle::GroundTruthOracle(std::shared_ptr<const TruthBook> truth) : truth_(std::move(truth)) {
  if (!truth_) throw Error(Errc::BackendUnavailable, "ground-truth oracle needs a truth binding");
}

const StateVector& GroundTruthOracle::next_truth(const StepContext& ctx) const {
  return track_for(*truth_, ctx).states[static_cast<std::size_t>(ctx.step) + 1];
}

TransitionDecision GroundTruthOracle::decide(const StepContext& ctx, const StateVector&, const ImageBuffer&) {
  const auto& track = track_for(*truth_, ctx);
  const auto k = static_cast<std::size_t>(ctx.step);
  return coarsest_change(track.states[k], track.states[k + 1]);
}

std::string GroundTruthOracle::predict(const StepContext& ctx, std::size_t level, const StateVector&,
                                       std::span<const std::string>, const ImageBuffer&) {
  return next_truth(ctx).at(level);
}

// --- noisy -----------------------------------------------------------------

NoisyOracleConfig NoisyOracleConfig::from_params(const nlohmann::json& params, std::size_t depth) {
  NoisyOracleConfig cfg;
  const auto& p = params.at("p");
  if (p.is_array()) {
    cfg.level_error = p.get<std::vector<double>>();
  } else {
    cfg.level_error.assign(depth, p.get<double>());
  }
  if (cfg.level_error.size() != depth) {
    throw Error(Errc::InvalidArgument, "noisy backend has " + std::to_string(cfg.level_error.size()) +
                                           " error rates for " + std::to_string(depth) + " levels");
  }
  cfg.stc_error = params.value("p_stc", 0.0);
  const auto mode = params.value("mode", std::string("independent"));
  if (mode != "independent" && mode != "corrective") {
    throw Error(Errc::InvalidArgument, "noisy mode must be independent or corrective, not '" + mode + "'");
  }
  cfg.mode = mode == "corrective" ? Mode::Corrective : Mode::Independent;
  cfg.seed = params.value("seed", std::uint64_t{0});
  return cfg;
}

NoisyOracle::NoisyOracle(NoisyOracleConfig config, std::shared_ptr<const TruthBook> truth, std::size_t depth)
    : config_(std::move(config)), truth_(std::move(truth)), depth_(depth) {
  if (!truth_) throw Error(Errc::BackendUnavailable, "noisy oracle needs a truth binding");
  if (config_.level_error.size() != depth_) {
    throw Error(Errc::InvalidArgument, "noisy oracle error rates do not match schema depth");
  }
  for (double p : config_.level_error) {
    if (!(p >= 0 && p <= 1)) throw Error(Errc::InvalidArgument, "error probability outside [0, 1]");
  }
  if (!(config_.stc_error >= 0 && config_.stc_error <= 1)) {
    throw Error(Errc::InvalidArgument, "controller error probability outside [0, 1]");
  }
}

TransitionDecision NoisyOracle::decide(const StepContext& ctx, const StateVector& state, const ImageBuffer&) {
  const auto& track = track_for(*truth_, ctx);
  const auto k = static_cast<std::size_t>(ctx.step);
  const auto& reference = config_.mode == NoisyOracleConfig::Mode::Corrective ? state : track.states[k];
  const auto truth = coarsest_change(reference, track.states[k + 1]);
  if (config_.stc_error == 0) return truth;

  RandomStream rng(derive_seed(config_.seed, ctx.clip_id, ctx.step, kControllerSalt));
  if (rng.uniform() >= config_.stc_error) return truth;
  // Any of the other depth_ decisions (Continue or a different level).
  auto pick = rng.below(depth_);
  if (pick >= truth.level()) ++pick;
  return pick == 0 ? TransitionDecision::continue_() : TransitionDecision::at(pick);
}

std::string NoisyOracle::predict(const StepContext& ctx, std::size_t level, const StateVector&,
                                 std::span<const std::string> allowed, const ImageBuffer&) {
  const auto& track = track_for(*truth_, ctx);
  const auto& truth = track.states[static_cast<std::size_t>(ctx.step) + 1].at(level);
  RandomStream rng(derive_seed(config_.seed, ctx.clip_id, ctx.step, level));
  const bool wrong = rng.uniform() < config_.level_error[level - 1];
  const bool reachable = std::find(allowed.begin(), allowed.end(), truth) != allowed.end();
  if (!reachable) return allowed.empty() ? truth : allowed[rng.below(allowed.size())];
  return wrong ? pick_other(rng, allowed, truth) : truth;
}

// --- markov ----------------------------------------------------------------

namespace {

Distribution distribution_from_json(const nlohmann::json& j) {
  Distribution d;
  if (j.is_object()) {
    for (const auto& [label, p] : j.items()) d.outcomes.emplace_back(label, p.get<double>());
  } else {
    for (const auto& item : j) d.outcomes.emplace_back(item.at(0).get<std::string>(), item.at(1).get<double>());
  }
  return d;
}

nlohmann::json distribution_to_json(const Distribution& d) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [label, p] : d.outcomes) arr.push_back({label, p});
  return arr;
}

const std::string& draw(const Distribution& d, double u) {
  double acc = 0;
  for (const auto& [label, p] : d.outcomes) {
    acc += p;
    if (u < acc) return label;
  }
  // Rounding slack: fall back to the last outcome with mass.
  for (auto it = d.outcomes.rbegin(); it != d.outcomes.rend(); ++it) {
    if (it->second > 0) return it->first;
  }
  return d.outcomes.back().first;
}

void check_distribution(const Distribution& d, std::span<const std::string> allowed, const std::string& what) {
  if (d.outcomes.empty()) throw Error(Errc::InvalidArgument, what + " is empty");
  double sum = 0;
  for (const auto& [label, p] : d.outcomes) {
    if (!(p >= 0)) throw Error(Errc::InvalidArgument, what + " has a negative probability");
    if (p > 0 && std::find(allowed.begin(), allowed.end(), label) == allowed.end()) {
      throw Error(Errc::InvalidArgument, what + " puts mass on '" + label + "' outside the allowed labels");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(Errc::InvalidArgument, what + " sums to " + std::to_string(sum));
  }
}

}  // namespace

void MarkovModel::validate(const LevelSchema& schema) const {
  if (levels.size() != schema.depth()) {
    throw Error(Errc::InvalidArgument, "markov model depth does not match the schema");
  }
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::size_t level = i + 1;
    for (const auto& [parent, dist] : levels[i].initial) {
      check_distribution(dist, schema.allowed_labels(level, parent),
                         "initial distribution at level " + std::to_string(level));
    }
    for (const auto& [key, dist] : levels[i].rows) {
      if (!schema.contains(level, key.second)) {
        throw Error(Errc::InvalidArgument, "markov row for unknown label '" + key.second + "'");
      }
      check_distribution(dist, schema.allowed_labels(level, key.first),
                         "row (" + key.first + ", " + key.second + ") at level " + std::to_string(level));
    }
  }
}

StateVector MarkovModel::sample_initial(std::uint64_t seed) const {
  StateVector state;
  std::string parent;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    auto it = levels[i].initial.find(parent);
    if (it == levels[i].initial.end()) {
      throw Error(Errc::MissingRow, "no initial distribution at level " + std::to_string(i + 1) +
                                        " for parent '" + parent + "'");
    }
    RandomStream rng(derive_seed(seed, "initial", 0, i + 1));
    parent = draw(it->second, rng.uniform());
    state.labels.push_back(parent);
  }
  return state;
}

MarkovModel markov_from_json(const nlohmann::json& j) {
  try {
    MarkovModel model;
    for (const auto& lvl : j.at("levels")) {
      MarkovModel::Level level;
      if (auto it = lvl.find("initial"); it != lvl.end()) {
        for (const auto& [parent, dist] : it->items()) level.initial[parent] = distribution_from_json(dist);
      }
      for (const auto& row : lvl.at("rows")) {
        level.rows[{row.value("parent", ""), row.at("from").get<std::string>()}] =
            distribution_from_json(row.at("to"));
      }
      model.levels.push_back(std::move(level));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("markov model: ") + e.what());
  }
}

nlohmann::json markov_to_json(const MarkovModel& model) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& level : model.levels) {
    nlohmann::json initial = nlohmann::json::object();
    for (const auto& [parent, dist] : level.initial) initial[parent] = distribution_to_json(dist);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [key, dist] : level.rows) {
      rows.push_back({{"parent", key.first}, {"from", key.second}, {"to", distribution_to_json(dist)}});
    }
    levels.push_back({{"initial", initial}, {"rows", rows}});
  }
  return {{"levels", levels}};
}

MarkovModel load_markov_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open markov model " + path.string());
  try {
    return markov_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

std::string markov_sample(const MarkovModel& model, const StateVector& state, std::size_t level,
                          const std::string& parent_label, std::uint64_t rng_seed) {
  if (level < 1 || level > model.levels.size()) {
    throw Error(Errc::MissingRow, "markov model has no level " + std::to_string(level));
  }
  const auto& rows = model.levels[level - 1].rows;
  auto it = rows.find({parent_label, state.at(level)});
  if (it == rows.end()) {
    throw Error(Errc::MissingRow, "no row for (" + parent_label + ", " + state.at(level) + ") at level " +
                                      std::to_string(level));
  }
  RandomStream rng(rng_seed);
  return draw(it->second, rng.uniform());
}

MarkovBackend::MarkovBackend(std::shared_ptr<const MarkovModel> model, std::uint64_t seed)
    : model_(std::move(model)), seed_(seed) {
  if (!model_) throw Error(Errc::BackendUnavailable, "markov backend needs a model");
}

std::uint64_t MarkovBackend::seed_for(const StepContext& ctx, std::size_t level) const {
  return derive_seed(seed_, ctx.clip_id, ctx.step, level);
}

TransitionDecision MarkovBackend::decide(const StepContext& ctx, const StateVector& state, const ImageBuffer&) {
  StateVector sampled = state;
  for (std::size_t level = 1; level <= state.depth(); ++level) {
    const std::string parent = level > 1 ? sampled.at(level - 1) : std::string{};
    sampled.at(level) = markov_sample(*model_, sampled, level, parent, seed_for(ctx, level));
  }
  return coarsest_change(state, sampled);
}

std::string MarkovBackend::predict(const StepContext& ctx, std::size_t level, const StateVector& assembled,
                                   std::span<const std::string>, const ImageBuffer&) {
  const std::string parent = level > 1 ? assembled.at(level - 1) : std::string{};
  return markov_sample(*model_, assembled, level, parent, seed_for(ctx, level));
}

// --- scripted --------------------------------------------------------------

ScriptedTable ScriptedTable::parse(const std::string& text) {
  ScriptedTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string step, target;
    if (!(fields >> step)) continue;
    auto fail = [&](const std::string& why) {
      throw Error(Errc::ParseError, "script line " + std::to_string(line_no) + ": " + why);
    };
    if (!(fields >> target)) fail("missing target");
    std::vector<std::string> rest;
    for (std::string tok; fields >> tok;) rest.push_back(tok);
    if (rest.empty()) fail("missing value");

    Rule rule;
    if (step != "*") {
      try {
        rule.step = std::stoll(step);
      } catch (const std::exception&) {
        fail("bad step '" + step + "'");
      }
    }
    if (target == "stc") {
      if (rest[0] == "continue" && rest.size() == 1) {
        rule.decision = TransitionDecision::continue_();
      } else if (rest[0] == "transition" && rest.size() == 2) {
        try {
          const auto level = std::stoul(rest[1]);
          if (level == 0) fail("transition level must be >= 1");
          rule.decision = TransitionDecision::at(level);
        } catch (const Error&) {
          throw;
        } catch (const std::exception&) {
          fail("bad transition level");
        }
      } else {
        fail("controller value must be 'continue' or 'transition <level>'");
      }
    } else {
      try {
        rule.level = std::stoul(target);
      } catch (const std::exception&) {
        fail("bad target '" + target + "'");
      }
      if (rule.level == 0) fail("levels are 1-based");
      if (rest.size() == 3 && rest[1] == "->") {
        rule.from = rest[0];
        rule.label = rest[2];
      } else if (rest.size() == 1) {
        rule.label = rest[0];
      } else {
        fail("agent value must be 'LABEL' or 'FROM -> TO'");
      }
    }
    table.rules_.push_back(std::move(rule));
  }
  return table;
}

ScriptedTable ScriptedTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open script " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

ScriptedBackend::ScriptedBackend(std::shared_ptr<const ScriptedTable> table) : table_(std::move(table)) {
  if (!table_) throw Error(Errc::BackendUnavailable, "scripted backend needs a table");
}

TransitionDecision ScriptedBackend::decide(const StepContext& ctx, const StateVector&, const ImageBuffer&) {
  for (const auto& rule : table_->rules()) {
    if (rule.level == 0 && (!rule.step || *rule.step == ctx.step)) return *rule.decision;
  }
  throw Error(Errc::BackendUnavailable, "script has no controller rule for step " + std::to_string(ctx.step));
}

std::string ScriptedBackend::predict(const StepContext& ctx, std::size_t level, const StateVector& assembled,
                                     std::span<const std::string>, const ImageBuffer&) {
  for (const auto& rule : table_->rules()) {
    if (rule.level != level || (rule.step && *rule.step != ctx.step)) continue;
    if (rule.from && *rule.from != assembled.at(level)) continue;
    return rule.label;
  }
  throw Error(Errc::BackendUnavailable, "script has no rule for level " + std::to_string(level) +
                                            " at step " + std::to_string(ctx.step));
}

// --- factory ---------------------------------------------------------------

namespace {

template <typename Backend>
DecisionStack uniform_stack(std::shared_ptr<Backend> backend, std::size_t depth, unsigned retries) {
  DecisionStack stack;
  stack.controller = backend;
  stack.agents.assign(depth, backend);
  stack.retries = retries;
  return stack;
}

}  // namespace

DecisionStack make_decision_stack(const DecisionBackendDescriptor& desc, const BackendEnvironment& env,
                                  unsigned retries) {
  if (!env.schema) throw Error(Errc::InvalidArgument, "backend environment has no schema");
  validate(desc);
  const auto depth = env.schema->depth();
  const auto& p = desc.params;
  switch (desc.kind) {
    case DecisionKind::GroundTruth:
      return uniform_stack(std::make_shared<GroundTruthOracle>(env.truth), depth, retries);
    case DecisionKind::Noisy:
      return uniform_stack(
          std::make_shared<NoisyOracle>(NoisyOracleConfig::from_params(p, depth), env.truth, depth), depth,
          retries);
    case DecisionKind::Markov: {
      auto model = std::make_shared<MarkovModel>(p.contains("model_json")
                                                     ? markov_from_json(p.at("model_json"))
                                                     : load_markov_model(p.at("model").get<std::string>()));
      model->validate(*env.schema);
      return uniform_stack(std::make_shared<MarkovBackend>(model, p.value("seed", std::uint64_t{0})), depth,
                           retries);
    }
    case DecisionKind::Scripted: {
      auto table = std::make_shared<ScriptedTable>(
          p.contains("table_text") ? ScriptedTable::parse(p.at("table_text").get<std::string>())
                                   : ScriptedTable::load(p.at("table").get<std::string>()));
      return uniform_stack(std::make_shared<ScriptedBackend>(table), depth, retries);
    }
    case DecisionKind::Remote: {
      auto client = std::make_shared<RemoteClient>(p.at("endpoint").get<std::string>(), CallPolicy::from_params(p));
      return uniform_stack(std::make_shared<RemoteDecisionBackend>(client, env.schema), depth, retries);
    }
  }
  throw Error(Errc::InvalidArgument, "unhandled decision backend kind");
}

}  // namespace mstp
