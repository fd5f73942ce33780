// mstp: command-line front end for dataset building, closed-loop runs,
// evaluation, augmentation, analysis and the mock backend server.

#include <atomic>
#include <chrono>
#include <csignal>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mstp/analysis.hpp"
#include "mstp/augment.hpp"
#include "mstp/backends.hpp"
#include "mstp/dataset.hpp"
#include "mstp/error.hpp"
#include "mstp/generation.hpp"
#include "mstp/harness.hpp"
#include "mstp/image_io.hpp"
#include "mstp/log.hpp"
#include "mstp/mock_server.hpp"
#include "mstp/state_metrics.hpp"
#include "mstp/truth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw mstp::Error(mstp::Errc::InvalidArgument, std::string(what) + ": '" + item + "' is not a number");
    }
    out.push_back(v);
  }
  if (out.empty()) throw mstp::Error(mstp::Errc::InvalidArgument, std::string(what) + " is empty");
  return out;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw mstp::Error(mstp::Errc::IoError, "cannot write " + path.string());
  return out;
}

std::string iso_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// Fill in the run-level seed for seeded backends that did not set one.
template <typename Desc>
void default_seed(Desc& desc, std::uint64_t seed) {
  if (!desc.params.contains("seed")) desc.params["seed"] = seed;
}

std::shared_ptr<const mstp::ImageSource> image_source(const std::string& root, int placeholder_size) {
  auto files = std::make_shared<mstp::FileImageSource>(root);
  mstp::ImageBuffer blank(placeholder_size, placeholder_size, 1, 8);
  for (auto& v : blank.data()) v = 128;
  return std::make_shared<mstp::PlaceholderImageSource>(files, std::move(blank));
}

// ---------------------------------------------------------------------------
// build-dataset

struct BuildArgs {
  std::string annotations, schema, out;
  std::string horizons = "1,5,30,60";
  double fps = 1;
  double stride = 1;
  std::string split = "10:1";
  std::string split_unit = "clip";
  std::uint64_t seed = 0;
  unsigned workers = default_workers();
};

int cmd_build_dataset(const BuildArgs& a) {
  const auto schema = mstp::load_schema(a.schema);
  const auto seqs = mstp::read_sequences(a.annotations, schema);
  mstp::ClipBuildOptions opts;
  opts.horizons = parse_list(a.horizons, "--horizons");
  opts.sample_fps = a.fps;
  opts.stride = a.stride;
  auto clips = mstp::build_clips(seqs, opts, a.workers);

  auto spec = mstp::parse_split_ratio(a.split);
  spec.seed = a.seed;
  if (a.split_unit == "sequence") {
    spec.unit = mstp::SplitSpec::Unit::SourceSequence;
  } else if (a.split_unit != "clip") {
    throw mstp::Error(mstp::Errc::InvalidArgument, "--split-unit must be clip or sequence");
  }
  const auto split = mstp::split_clips(clips, spec);

  std::vector<mstp::Clip> all;
  all.insert(all.end(), split.train.begin(), split.train.end());
  all.insert(all.end(), split.test.begin(), split.test.end());
  std::stable_sort(all.begin(), all.end(), [&](const mstp::Clip& x, const mstp::Clip& y) {
    return std::tie(x.sequence_id, x.start_index, x.horizon) < std::tie(y.sequence_id, y.start_index, y.horizon);
  });

  const fs::path out(a.out);
  fs::create_directories(out);
  mstp::write_manifest(all, out / "clips.jsonl");
  mstp::write_manifest(split.train, out / "train.jsonl");
  mstp::write_manifest(split.test, out / "test.jsonl");

  struct Row {
    std::size_t clips = 0, train = 0, test = 0, frames = 0, states = 0;
  };
  std::map<double, Row> rows;
  for (const auto& c : all) {
    auto& r = rows[c.horizon];
    ++r.clips;
    (c.split == "test" ? r.test : r.train) += 1;
    r.frames = c.frames.size();
    r.states = c.state_count();
  }
  std::ostringstream table;
  table << "horizon\tclips\ttrain\ttest\tframes_per_clip\tstates_per_clip\n";
  for (const auto& [h, r] : rows) {
    table << h << '\t' << r.clips << '\t' << r.train << '\t' << r.test << '\t' << r.frames << '\t' << r.states << '\n';
  }
  open_out(out / "summary.tsv") << table.str();
  std::cout << table.str();
  return 0;
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  std::string schema, manifest, out;
  double temporal_scale = 1;
  double incremental_scale = 1;
  std::string dm = "oracle:gt";
  std::string vg = "passthrough";
  std::string gating = "every-step";
  std::uint64_t seed = 0;
  unsigned workers = default_workers();
  unsigned retries = 1;
  std::string split = "all";
  std::string image_root;
  int placeholder_size = 64;
  bool dump_images = false;
};

int cmd_run(const RunArgs& a) {
  const auto started = iso_now();
  auto schema = std::make_shared<const mstp::LevelSchema>(mstp::load_schema(a.schema));
  auto clips = mstp::read_manifest(a.manifest, *schema);
  if (a.split != "all") {
    if (a.split != "train" && a.split != "test") {
      throw mstp::Error(mstp::Errc::InvalidArgument, "--split must be all, train or test");
    }
    std::erase_if(clips, [&](const mstp::Clip& c) { return c.split != a.split; });
  }
  if (clips.empty()) throw mstp::Error(mstp::Errc::EmptyInput, "no clips to run");

  mstp::HarnessConfig cfg;
  cfg.temporal_scale = a.temporal_scale;
  cfg.incremental_scale = a.incremental_scale;
  cfg.dm = mstp::parse_decision_descriptor(a.dm);
  cfg.vg = mstp::parse_generator_descriptor(a.vg);
  default_seed(cfg.dm, a.seed);
  default_seed(cfg.vg, a.seed);
  cfg.gating = mstp::gating_from_string(a.gating);
  cfg.workers = std::max(1u, a.workers);
  cfg.retries = a.retries;

  const auto root = a.image_root.empty() ? fs::path(a.manifest).parent_path().string() : a.image_root;
  const auto result = mstp::evaluate_clips(clips, schema, image_source(root, a.placeholder_size), cfg);

  const fs::path out(a.out);
  fs::create_directories(out);
  {
    auto scores = open_out(out / "scores.tsv");
    mstp::write_score_table(scores, result, schema->depth());
  }
  {
    auto traj = open_out(out / "trajectories.jsonl");
    auto truth = open_out(out / "truth.jsonl");
    for (const auto& r : result.clips) {
      if (r.trajectory) {
        std::vector<std::string> paths;
        if (a.dump_images) {
          for (const auto& e : r.trajectory->entries) {
            const auto rel = fs::path("images") / r.clip_id / (std::to_string(e.k) + ".png");
            fs::create_directories((out / rel).parent_path());
            mstp::write_image(*e.image, out / rel);
            paths.push_back(rel.string());
          }
        }
        mstp::append_trajectory(traj, *r.trajectory, paths);
      }
      if (r.score) {
        for (std::size_t i = 0; i < r.score->points.size(); ++i) {
          truth << json{{"clip_id", r.clip_id}, {"k", r.score->points[i]}, {"state", r.score->truth[i].labels}}.dump()
                << '\n';
        }
      }
    }
  }

  std::vector<mstp::StateVector> pred, truth;
  for (const auto& r : result.clips) {
    if (!r.score) continue;
    pred.insert(pred.end(), r.score->predicted.begin(), r.score->predicted.end());
    truth.insert(truth.end(), r.score->truth.begin(), r.score->truth.end());
  }
  if (!pred.empty()) {
    auto metrics = open_out(out / "metrics.tsv");
    metrics << "metric\tclass\tvalue\n";
    for (std::size_t l = 1; l <= schema->depth(); ++l) {
      metrics << mstp::metrics_table(mstp::level_state_metrics(pred, truth, l), schema->level(l).name);
    }
    metrics << mstp::metrics_table(mstp::joint_state_metrics(pred, truth), "joint");
  }

  // Timestamps and the resolved config live in a sidecar so the artifacts
  // above stay byte-reproducible.
  open_out(out / "run.json") << json{{"started", started},
                                      {"finished", iso_now()},
                                      {"schema", a.schema},
                                      {"manifest", a.manifest},
                                      {"temporal_scale", a.temporal_scale},
                                      {"incremental_scale", a.incremental_scale},
                                      {"dm", {{"kind", mstp::to_string(cfg.dm.kind)}, {"params", cfg.dm.params}}},
                                      {"vg", {{"kind", mstp::to_string(cfg.vg.kind)}, {"params", cfg.vg.params}}},
                                      {"gating", a.gating},
                                      {"seed", a.seed},
                                      {"workers", cfg.workers},
                                      {"clips", result.overall.clips},
                                      {"scored", result.overall.scored},
                                      {"skipped", result.overall.skipped}}
                                        .dump(2)
                                 << '\n';

  std::cout << "clips\t" << result.overall.clips << "\nscored\t" << result.overall.scored << "\nskipped\t"
            << result.overall.skipped << "\nobjective\t" << std::fixed << std::setprecision(6)
            << result.overall.objective << '\n';
  return result.overall.scored + result.overall.skipped == result.overall.clips ? 0 : kExitRuntime;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string pred, truth, out;
  std::vector<std::size_t> levels;
  bool output_only = true;
};

struct LabelledState {
  std::string key;
  mstp::StateVector state;
};

std::vector<LabelledState> read_states(const std::string& path, bool output_only) {
  std::vector<LabelledState> out;
  mstp::for_each_record(path, [&](const json& j, std::size_t line) {
    if (output_only && j.contains("is_output") && !j.at("is_output").get<bool>()) return;
    LabelledState s;
    const char* field = j.contains("state") ? "state" : "labels";
    if (!j.contains(field)) {
      throw mstp::Error(mstp::Errc::ParseError, path + ":" + std::to_string(line) + ": record has no state");
    }
    s.state.labels = j.at(field).get<std::vector<std::string>>();
    if (j.contains("clip_id") && j.contains("k")) {
      s.key = j.at("clip_id").get<std::string>() + "#" + std::to_string(j.at("k").get<std::int64_t>());
    }
    out.push_back(std::move(s));
  });
  return out;
}

int cmd_eval(const EvalArgs& a) {
  const auto pred_records = read_states(a.pred, a.output_only);
  const auto truth_records = read_states(a.truth, false);

  std::vector<mstp::StateVector> pred, truth;
  const bool keyed = !truth_records.empty() && !truth_records.front().key.empty();
  if (keyed) {
    std::map<std::string, const mstp::StateVector*> by_key;
    for (const auto& p : pred_records) by_key[p.key] = &p.state;
    for (const auto& t : truth_records) {
      auto it = by_key.find(t.key);
      if (it == by_key.end()) throw mstp::Error(mstp::Errc::LengthMismatch, "no prediction for " + t.key);
      pred.push_back(*it->second);
      truth.push_back(t.state);
    }
  } else {
    for (const auto& p : pred_records) pred.push_back(p.state);
    for (const auto& t : truth_records) truth.push_back(t.state);
  }
  if (truth.empty()) throw mstp::Error(mstp::Errc::EmptyInput, "no truth records");

  auto levels = a.levels;
  if (levels.empty()) {
    for (std::size_t l = 1; l <= truth.front().depth(); ++l) levels.push_back(l);
  }
  std::ostringstream table;
  table << "metric\tclass\tvalue\n";
  for (auto l : levels) table << mstp::metrics_table(mstp::level_state_metrics(pred, truth, l), "level" + std::to_string(l));
  table << mstp::metrics_table(mstp::joint_state_metrics(pred, truth), "joint");
  if (!a.out.empty()) open_out(a.out) << table.str();
  std::cout << table.str();
  return 0;
}

// ---------------------------------------------------------------------------
// augment

struct AugmentArgs {
  std::string annotations, schema, out;
  std::string alpha = "auto";
  std::int64_t delta_tau = 1;
  double eps_img = 4;
  double tau = 1;
  std::uint64_t seed = 0;
  std::string image_root;
};

int cmd_augment(const AugmentArgs& a) {
  const auto schema = mstp::load_schema(a.schema);
  const auto seqs = mstp::read_sequences(a.annotations, schema);
  mstp::AugmentConfig cfg;
  if (a.alpha != "auto") {
    const auto v = parse_list(a.alpha, "--alpha");
    if (v.size() != 1 || v[0] < 0 || v[0] != std::floor(v[0])) {
      throw mstp::Error(mstp::Errc::InvalidArgument, "--alpha must be 'auto' or a non-negative integer");
    }
    cfg.alpha = static_cast<std::int64_t>(v[0]);
  }
  cfg.max_shift = a.delta_tau;
  cfg.image_noise = a.eps_img;
  cfg.seed = a.seed;

  const auto root = a.image_root.empty() ? fs::path(a.annotations).parent_path().string() : a.image_root;
  mstp::FileImageSource images(root);
  const fs::path out(a.out);
  fs::create_directories(out);
  auto manifest = open_out(out / "augmented.jsonl");
  std::cout << "sequence_id\tsteps\ttransitions\talpha\tsamples\tbalance\n";
  for (const auto& seq : seqs) {
    const auto stepped = mstp::resample(seq, a.tau);
    const auto index = mstp::find_transitions(stepped);
    if (index.count() == 0 && !cfg.alpha) {
      mstp::log::warn(seq.sequence_id + ": no transitions, skipped");
      std::cout << seq.sequence_id << '\t' << index.steps << "\t0\t-\t0\t-\n";
      continue;
    }
    const auto alpha = cfg.alpha ? *cfg.alpha
                                 : mstp::compute_alpha(index.steps, static_cast<std::int64_t>(index.count()));
    const auto samples = mstp::augment_transitions(stepped, index, cfg, schema, &images);
    for (const auto& s : samples) {
      std::string path;
      if (s.image) {
        const auto rel = fs::path("images") / seq.sequence_id /
                         ("t" + std::to_string(s.source_k) + "_v" + std::to_string(s.variant) + ".png");
        fs::create_directories((out / rel).parent_path());
        mstp::write_image(*s.image, out / rel);
        path = rel.string();
      }
      manifest << mstp::sample_record(s, a.tau, path).dump() << '\n';
    }
    const auto rest = index.steps - static_cast<std::int64_t>(index.count());
    std::cout << seq.sequence_id << '\t' << index.steps << '\t' << index.count() << '\t' << alpha << '\t'
              << samples.size() << '\t';
    if (rest > 0) {
      std::cout << std::setprecision(6) << mstp::class_balance(index.steps, static_cast<std::int64_t>(index.count()), alpha);
    } else {
      std::cout << '-';
    }
    std::cout << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

int cmd_product_bound(const std::string& in) {
  for (const auto& row : mstp::read_product_rows(in)) {
    const double pi = mstp::product_bound(row.marginals);
    if (!row.label.empty()) std::cout << row.label << '\t';
    std::cout << std::fixed << std::setprecision(1) << mstp::round_to(pi, 1);
    if (row.mc_accuracy) {
      const double gap = mstp::round_to(mstp::mc_gap(*row.mc_accuracy, pi), 1);
      std::cout << '\t' << std::showpos << gap << std::noshowpos;
    }
    std::cout << '\n';
  }
  return 0;
}

int cmd_fid_accuracy(const std::string& in, const std::string& plot) {
  const auto points = mstp::read_accuracy_fid(in);
  const auto fit = mstp::fit_accuracy_fid(points);
  std::cout << std::setprecision(10) << "n\t" << fit.n << "\nintercept\t" << fit.intercept << "\nslope\t" << fit.slope
            << "\nr\t" << fit.r << "\nt\t" << fit.t_statistic << "\nmax_residual\t" << fit.max_residual << '\n';
  if (!plot.empty()) {
    auto out = open_out(plot);
    mstp::write_fit_plot(out, points, fit);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// serve-mock

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

struct ServeArgs {
  std::string bind = "127.0.0.1:8080";
  std::string dm = "oracle:gt";
  std::string vg = "passthrough";
  std::string schema, manifest, image_root;
  double temporal_scale = 1;
  double incremental_scale = 1;
  std::uint64_t seed = 0;
  unsigned threads = 16;
  int placeholder_size = 64;
};

int cmd_serve_mock(const ServeArgs& a) {
  const auto colon = a.bind.rfind(':');
  if (colon == std::string::npos) throw mstp::Error(mstp::Errc::InvalidArgument, "--bind must be HOST:PORT");
  const auto host = a.bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(a.bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw mstp::Error(mstp::Errc::InvalidArgument, "--bind port is not a number");
  }

  mstp::BackendEnvironment env;
  env.schema = std::make_shared<const mstp::LevelSchema>(mstp::load_schema(a.schema));
  if (!a.manifest.empty()) {
    const auto clips = mstp::read_manifest(a.manifest, *env.schema);
    env.truth = mstp::TruthBook::from_clips(clips, a.incremental_scale, a.temporal_scale);
  } else {
    env.truth = std::make_shared<mstp::TruthBook>();
  }
  const auto root = a.image_root.empty() && !a.manifest.empty() ? fs::path(a.manifest).parent_path().string()
                                                                 : a.image_root;
  env.images = image_source(root, a.placeholder_size);

  auto dm = mstp::parse_decision_descriptor(a.dm);
  auto vg = mstp::parse_generator_descriptor(a.vg);
  default_seed(dm, a.seed);
  default_seed(vg, a.seed);
  if (dm.kind == mstp::DecisionKind::Remote || vg.kind == mstp::GeneratorKind::Remote) {
    throw mstp::Error(mstp::Errc::InvalidArgument, "the mock server needs local backends");
  }
  mstp::MockServer server(env.schema, mstp::make_decision_stack(dm, env), mstp::make_generator(vg, env), a.threads);
  server.start(host, port);
  std::cout << "listening on " << server.endpoint() << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  std::cout << "served " << server.request_count() << " requests" << std::endl;
  return 0;
}

// `run --config FILE`: the file's keys are flag names. Its entries are
// spliced in ahead of the command-line flags so the latter win.
std::vector<std::string> expand_run_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  if (args.size() < 2 || args[1] != "run") return args;
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty()) return args;
  std::vector<std::string> out{args[0], "run"};
  for (const auto& item : CLI::ConfigTOML().from_file(path)) {
    if (!item.parents.empty() || item.name == "++" || item.name == "--") continue;
    std::string name = item.name;
    std::replace(name.begin(), name.end(), '_', '-');
    for (const auto& value : item.inputs) out.push_back("--" + name + "=" + value);
    if (item.inputs.empty()) out.push_back("--" + name);
  }
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  mstp::log::init_from_env();
  CLI::App app{"Multi-scale temporal prediction toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mstp 0.1.0");

  BuildArgs build;
  auto* b = app.add_subcommand("build-dataset", "Cut annotated sequences into multi-horizon clips and split them");
  b->add_option("--annotations", build.annotations, "Sequence records (one JSON object per line)")->required();
  b->add_option("--schema", build.schema, "Level schema JSON")->required();
  b->add_option("--horizons", build.horizons, "Comma-separated horizons in seconds")->capture_default_str();
  b->add_option("--fps", build.fps, "Clip sampling rate")->capture_default_str();
  b->add_option("--stride", build.stride, "Seconds between window starts")->capture_default_str();
  b->add_option("--split", build.split, "train:test ratio")->capture_default_str();
  b->add_option("--split-unit", build.split_unit, "Split by clip or by source sequence")
      ->check(CLI::IsMember({"clip", "sequence"}))
      ->capture_default_str();
  b->add_option("--seed", build.seed, "Split seed")->capture_default_str();
  b->add_option("--workers", build.workers, "Worker threads")->capture_default_str();
  b->add_option("--out", build.out, "Output directory")->required();

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run the closed loop over a clip manifest and score it");
  r->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  r->add_option("--config", config_path, "Config file (TOML/INI, keys match flag names); flags override it");
  r->add_option("--schema", run.schema, "Level schema JSON")->required();
  r->add_option("--manifest", run.manifest, "Clip manifest")->required();
  r->add_option("--temporal-scale", run.temporal_scale, "Scoring interval in seconds")->capture_default_str();
  r->add_option("--incremental-scale", run.incremental_scale, "Loop step in seconds; must divide the temporal scale")
      ->capture_default_str();
  r->add_option("--dm", run.dm, "Decision backend descriptor")->capture_default_str();
  r->add_option("--vg", run.vg, "Generator descriptor")->capture_default_str();
  r->add_option("--gating", run.gating, "every-step or output-only")
      ->check(CLI::IsMember({"every-step", "output-only"}))
      ->capture_default_str();
  r->add_option("--seed", run.seed, "Seed for seeded backends without their own")->capture_default_str();
  r->add_option("--workers", run.workers, "Concurrent trajectories")->capture_default_str();
  r->add_option("--retries", run.retries, "Extra attempts for out-of-set agent answers")->capture_default_str();
  r->add_option("--split", run.split, "Which clips to run: all, train or test")
      ->check(CLI::IsMember({"all", "train", "test"}))
      ->capture_default_str();
  r->add_option("--image-root", run.image_root, "Base directory for relative image paths (default: manifest dir)");
  r->add_option("--placeholder-size", run.placeholder_size, "Side of the gray image used for frames without images")
      ->check(CLI::Range(1, 4096))
      ->capture_default_str();
  r->add_flag("--dump-images", run.dump_images, "Write every generated frame under OUT/images");
  r->add_option("--out", run.out, "Output directory")->required();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "State and joint metrics for predicted vs true states");
  e->add_option("--pred", eval.pred, "Predicted records (trajectory dump or state records)")->required();
  e->add_option("--truth", eval.truth, "True records")->required();
  e->add_option("--levels", eval.levels, "Levels to report (default: all)")->delimiter(',');
  e->add_flag("!--all-steps", eval.output_only, "Score every predicted record, not only output points");
  e->add_option("--out", eval.out, "Also write the table here");

  AugmentArgs aug;
  auto* g = app.add_subcommand("augment", "Oversample transition points with shifted, perturbed variants");
  g->add_option("--annotations", aug.annotations, "Sequence records")->required();
  g->add_option("--schema", aug.schema, "Level schema JSON")->required();
  g->add_option("--alpha", aug.alpha, "Variants per transition, or auto")->capture_default_str();
  g->add_option("--delta-tau", aug.delta_tau, "Max anchor shift in steps")->check(CLI::NonNegativeNumber)->capture_default_str();
  g->add_option("--eps-img", aug.eps_img, "Image noise amplitude in pixel units")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  g->add_option("--tau", aug.tau, "Step length in seconds")->capture_default_str();
  g->add_option("--seed", aug.seed, "Seed")->capture_default_str();
  g->add_option("--image-root", aug.image_root, "Base directory for relative image paths");
  g->add_option("--out", aug.out, "Output directory")->required();

  auto* an = app.add_subcommand("analyze", "Product bound and accuracy/FID regression");
  an->require_subcommand(1);
  std::string pb_in, fa_in, fa_plot;
  auto* pb = an->add_subcommand("product-bound", "Independence bound of marginal accuracies");
  pb->add_option("--in", pb_in, "Rows of marginals, optional 'label:' prefix and ';mc' suffix")->required();
  auto* fa = an->add_subcommand("fid-accuracy", "Fit FID = a - b * accuracy");
  fa->add_option("--in", fa_in, "accuracy,fid rows")->required();
  fa->add_option("--plot", fa_plot, "Write plot series CSV here");

  ServeArgs serve;
  auto* s = app.add_subcommand("serve-mock", "Serve oracle backends over the HTTP protocol");
  s->add_option("--bind", serve.bind, "HOST:PORT")->capture_default_str();
  s->add_option("--dm", serve.dm, "Decision backend descriptor")->capture_default_str();
  s->add_option("--vg", serve.vg, "Generator descriptor")->capture_default_str();
  s->add_option("--schema", serve.schema, "Level schema JSON")->required();
  s->add_option("--manifest", serve.manifest, "Clip manifest providing ground truth");
  s->add_option("--temporal-scale", serve.temporal_scale, "Must match the client run")->capture_default_str();
  s->add_option("--incremental-scale", serve.incremental_scale, "Must match the client run")->capture_default_str();
  s->add_option("--seed", serve.seed, "Seed for seeded backends")->capture_default_str();
  s->add_option("--threads", serve.threads, "Worker threads")->capture_default_str();
  s->add_option("--image-root", serve.image_root, "Base directory for relative image paths");

  try {
    auto args = expand_run_config(argc, argv);
    std::reverse(args.begin(), args.end());
    args.pop_back();  // program name
    app.parse(args);
  } catch (const CLI::FileError& err) {
    std::cerr << "mstp: " << err.what() << '\n';
    return kExitUsage;
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*b) return cmd_build_dataset(build);
    if (*r) return cmd_run(run);
    if (*e) return cmd_eval(eval);
    if (*g) return cmd_augment(aug);
    if (*pb) return cmd_product_bound(pb_in);
    if (*fa) return cmd_fid_accuracy(fa_in, fa_plot);
    if (*s) return cmd_serve_mock(serve);
  } catch (const mstp::Error& err) {
    std::cerr << "mstp: " << err.what() << '\n';
    return mstp::is_validation_error(err.code()) ? kExitUsage : kExitRuntime;
  } catch (const std::exception& err) {
    std::cerr << "mstp: " << err.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
