#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mstp/image.hpp"
#include "mstp/schema.hpp"

namespace mstp {

/// Where in the closed loop a backend call happens. `step` is the source
/// step k: the call contributes to S_{k+1} / I_{k+1}.
struct StepContext {
  std::string clip_id;
  std::int64_t step = 0;
};

/// Output of the state transition controller: keep the state, or
/// re-predict from `level` (1-based) down to the finest level.
class TransitionDecision {
 public:
  static TransitionDecision continue_() { return TransitionDecision(0); }
  static TransitionDecision at(std::size_t level) { return TransitionDecision(level); }

  bool is_continue() const noexcept { return level_ == 0; }
  std::size_t level() const noexcept { return level_; }

  friend bool operator==(const TransitionDecision&, const TransitionDecision&) = default;

 private:
  explicit TransitionDecision(std::size_t level) : level_(level) {}
  std::size_t level_ = 0;
};

// "continue" or "transition:<level>".
std::string to_string(const TransitionDecision& decision);
TransitionDecision decision_from_string(const std::string& text);

/// The gating agent. Implementations must be safe to call concurrently for
/// different trajectories.
class TransitionController {
 public:
  virtual ~TransitionController() = default;
  virtual TransitionDecision decide(const StepContext& ctx, const StateVector& state,
                                    const ImageBuffer& image) = 0;
};

/// A level agent v_i. `assembled` holds levels 1..i-1 already at k+1 and
/// levels i..L still at k; the answer must be one of `allowed`.
class LevelAgent {
 public:
  virtual ~LevelAgent() = default;
  virtual std::string predict(const StepContext& ctx, std::size_t level, const StateVector& assembled,
                              std::span<const std::string> allowed, const ImageBuffer& image) = 0;
};

/// The decision-making module: one controller plus one agent per level.
struct DecisionStack {
  std::shared_ptr<TransitionController> controller;
  std::vector<std::shared_ptr<LevelAgent>> agents;
  // Extra attempts granted to an agent whose answer falls outside its
  // allowed set.
  unsigned retries = 1;
};

// Asks the controller and checks the level against the schema depth;
// out-of-range levels throw InvalidAgentOutput.
TransitionDecision stc_decide(TransitionController& controller, const LevelSchema& schema,
                              const StepContext& ctx, const StateVector& state, const ImageBuffer& image);

/// Re-predicts levels `level`..L of `state` in order, coarse to fine. Levels
/// above `level` are inherited unchanged. Each agent sees the partially
/// assembled state and must answer from the children of the label just
/// chosen for its parent; after `retries` extra attempts an out-of-set answer
/// throws InvalidAgentOutput. The result always satisfies the schema.
StateVector cascade_predict(const LevelSchema& schema, std::size_t level, const StateVector& state,
                            const ImageBuffer& image, std::span<const std::shared_ptr<LevelAgent>> agents,
                            const StepContext& ctx, unsigned retries = 1);

// One full DM step: stc_decide, then cascade_predict unless Continue.
struct DecisionOutcome {
  TransitionDecision decision = TransitionDecision::continue_();
  StateVector state;
};
DecisionOutcome decide_next_state(const DecisionStack& stack, const LevelSchema& schema,
                                  const StepContext& ctx, const StateVector& state, const ImageBuffer& image);

}  // namespace mstp
