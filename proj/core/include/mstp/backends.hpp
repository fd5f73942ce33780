#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mstp/agents.hpp"
#include "mstp/descriptor.hpp"
#include "mstp/image.hpp"
#include "mstp/schema.hpp"
#include "mstp/truth.hpp"

namespace mstp {

/// Shared, read-only context the backend factories draw from. Oracle
/// backends that consult ground truth need `truth`; passthrough generation
/// needs `images`.
struct BackendEnvironment {
  std::shared_ptr<const LevelSchema> schema;
  std::shared_ptr<const TruthBook> truth;
  std::shared_ptr<const ImageSource> images;
};

// ---------------------------------------------------------------------------
// Ground-truth oracle

/// Decides from the annotation: the coarsest level whose label differs
/// between truth(k) and truth(k+1), or Continue. Level agents answer
/// truth(k+1).
class GroundTruthOracle : public TransitionController, public LevelAgent {
 public:
  explicit GroundTruthOracle(std::shared_ptr<const TruthBook> truth);

  TransitionDecision decide(const StepContext& ctx, const StateVector& state,
                            const ImageBuffer& image) override;
  std::string predict(const StepContext& ctx, std::size_t level, const StateVector& assembled,
                      std::span<const std::string> allowed, const ImageBuffer& image) override;

 private:
  const StateVector& next_truth(const StepContext& ctx) const;
  std::shared_ptr<const TruthBook> truth_;
};

// Coarsest level where `a` and `b` differ; Continue when equal.
TransitionDecision coarsest_change(const StateVector& a, const StateVector& b);

// ---------------------------------------------------------------------------
// Noisy oracle

struct NoisyOracleConfig {
  enum class Mode {
    // Gate on the annotation alone; errors persist until that level is
    // re-predicted. Per-level errors are independent draws.
    Independent,
    // Gate on the predicted state vs the next annotation, so the cascade
    // re-predicts wherever the trajectory has drifted.
    Corrective,
  };

  std::vector<double> level_error;  // p_l, one per level
  double stc_error = 0;             // probability of a wrong gate decision
  Mode mode = Mode::Independent;
  std::uint64_t seed = 0;

  static NoisyOracleConfig from_params(const nlohmann::json& params, std::size_t depth);
};

/// Ground truth corrupted at rate p_l per level. Every draw is keyed on
/// (seed, clip, step, level), so answers are a pure function of the request.
class NoisyOracle : public TransitionController, public LevelAgent {
 public:
  NoisyOracle(NoisyOracleConfig config, std::shared_ptr<const TruthBook> truth, std::size_t depth);

  TransitionDecision decide(const StepContext& ctx, const StateVector& state,
                            const ImageBuffer& image) override;
  std::string predict(const StepContext& ctx, std::size_t level, const StateVector& assembled,
                      std::span<const std::string> allowed, const ImageBuffer& image) override;

 private:
  NoisyOracleConfig config_;
  std::shared_ptr<const TruthBook> truth_;
  std::size_t depth_;
};

// ---------------------------------------------------------------------------
// Markov chain

/// Finite distribution in a fixed outcome order (sampling walks it in order).
struct Distribution {
  std::vector<std::pair<std::string, double>> outcomes;
};

/// Per level, a row-stochastic transition table over that level's labels,
/// keyed by (already-updated parent label, current label). Level 1 uses an
/// empty parent key. `initial` is keyed by parent label likewise.
struct MarkovModel {
  struct Level {
    std::map<std::string, Distribution> initial;
    std::map<std::pair<std::string, std::string>, Distribution> rows;
  };
  std::vector<Level> levels;

  // Rows sum to 1 within 1e-9, probabilities are non-negative and every
  // outcome is an allowed child of the row's parent. Throws InvalidArgument.
  void validate(const LevelSchema& schema) const;

  // Draws S_0 top-down from the initial distributions.
  StateVector sample_initial(std::uint64_t seed) const;
};

MarkovModel markov_from_json(const nlohmann::json& j);
nlohmann::json markov_to_json(const MarkovModel& model);
MarkovModel load_markov_model(const std::filesystem::path& path);

// Draws the next label at `level` from the row (parent_label, state[level]).
// Throws MissingRow when the model has no such row.
std::string markov_sample(const MarkovModel& model, const StateVector& state, std::size_t level,
                          const std::string& parent_label, std::uint64_t rng_seed);

/// Samples next labels coarse to fine; the controller reports the coarsest
/// level whose sample differs from the current label. Controller and agents
/// share per-(clip, step, level) seeds, so the cascade reproduces the
/// controller's draws.
class MarkovBackend : public TransitionController, public LevelAgent {
 public:
  MarkovBackend(std::shared_ptr<const MarkovModel> model, std::uint64_t seed);

  TransitionDecision decide(const StepContext& ctx, const StateVector& state,
                            const ImageBuffer& image) override;
  std::string predict(const StepContext& ctx, std::size_t level, const StateVector& assembled,
                      std::span<const std::string> allowed, const ImageBuffer& image) override;

 private:
  std::uint64_t seed_for(const StepContext& ctx, std::size_t level) const;
  std::shared_ptr<const MarkovModel> model_;
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Scripted table

/// Text table of deterministic answers, one rule per line:
///
///   # step  target  value
///   *       stc     transition 1
///   3       stc     continue
///   *       1       A -> B        (maps the agent's current label)
///   *       2       b1            (constant answer)
///
/// `step` is the source step k or `*`; rules are tried top to bottom and the
/// first applicable one wins. No applicable rule -> BackendUnavailable.
class ScriptedTable {
 public:
  struct Rule {
    std::optional<std::int64_t> step;  // nullopt = any
    std::size_t level = 0;             // 0 = controller
    std::optional<TransitionDecision> decision;
    std::optional<std::string> from;
    std::string label;
  };

  static ScriptedTable parse(const std::string& text);
  static ScriptedTable load(const std::filesystem::path& path);

  const std::vector<Rule>& rules() const noexcept { return rules_; }

 private:
  std::vector<Rule> rules_;
};

class ScriptedBackend : public TransitionController, public LevelAgent {
 public:
  explicit ScriptedBackend(std::shared_ptr<const ScriptedTable> table);

  TransitionDecision decide(const StepContext& ctx, const StateVector& state,
                            const ImageBuffer& image) override;
  std::string predict(const StepContext& ctx, std::size_t level, const StateVector& assembled,
                      std::span<const std::string> allowed, const ImageBuffer& image) override;

 private:
  std::shared_ptr<const ScriptedTable> table_;
};

// ---------------------------------------------------------------------------

// Builds a controller plus one agent per schema level for the descriptor.
DecisionStack make_decision_stack(const DecisionBackendDescriptor& desc, const BackendEnvironment& env,
                                  unsigned retries = 1);

}  // namespace mstp
