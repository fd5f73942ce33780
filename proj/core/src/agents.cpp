#include "mstp/agents.hpp"

#include <algorithm>

#include "mstp/error.hpp"

namespace mstp {

std::string to_string(const TransitionDecision& decision) {
  return decision.is_continue() ? "continue" : "transition:" + std::to_string(decision.level());
}

TransitionDecision decision_from_string(const std::string& text) {
  if (text == "continue") return TransitionDecision::continue_();
  const std::string prefix = "transition:";
  if (text.rfind(prefix, 0) == 0) {
    try {
      const auto level = std::stoul(text.substr(prefix.size()));
      if (level >= 1) return TransitionDecision::at(level);
    } catch (const std::exception&) {
    }
  }
  throw Error(Errc::ParseError, "bad decision '" + text + "'");
}

TransitionDecision stc_decide(TransitionController& controller, const LevelSchema& schema,
                              const StepContext& ctx, const StateVector& state, const ImageBuffer& image) {
  const auto decision = controller.decide(ctx, state, image);
  if (!decision.is_continue() && decision.level() > schema.depth()) {
    throw Error(Errc::InvalidAgentOutput, "controller chose level " + std::to_string(decision.level()) +
                                              " but the schema has " + std::to_string(schema.depth()));
  }
  return decision;
}

StateVector cascade_predict(const LevelSchema& schema, std::size_t level, const StateVector& state,
                            const ImageBuffer& image, std::span<const std::shared_ptr<LevelAgent>> agents,
                            const StepContext& ctx, unsigned retries) {
  const auto depth = schema.depth();
  if (level < 1 || level > depth) {
    throw Error(Errc::InvalidArgument, "cascade level " + std::to_string(level) + " outside 1.." +
                                           std::to_string(depth));
  }
  if (agents.size() < depth) {
    throw Error(Errc::BackendUnavailable, "need one agent per level, got " + std::to_string(agents.size()));
  }
  require_valid(schema, state, "cascade input");

  StateVector assembled = state;
  for (std::size_t i = level; i <= depth; ++i) {
    const auto allowed = schema.allowed_labels(i, i > 1 ? assembled.at(i - 1) : std::string{});
    if (allowed.empty()) {
      throw Error(Errc::InvalidAgentOutput, "no labels allowed at level " + std::to_string(i) + " under '" +
                                                assembled.at(i - 1) + "'");
    }
    auto& agent = agents[i - 1];
    if (!agent) throw Error(Errc::BackendUnavailable, "no agent for level " + std::to_string(i));
    std::string label;
    bool accepted = false;
    for (unsigned attempt = 0; attempt <= retries && !accepted; ++attempt) {
      label = agent->predict(ctx, i, assembled, allowed, image);
      accepted = std::find(allowed.begin(), allowed.end(), label) != allowed.end();
    }
    if (!accepted) {
      throw Error(Errc::InvalidAgentOutput, "level " + std::to_string(i) + " agent answered '" + label +
                                                "' outside its allowed set at step " +
                                                std::to_string(ctx.step));
    }
    assembled.at(i) = std::move(label);
  }
  return assembled;
}

DecisionOutcome decide_next_state(const DecisionStack& stack, const LevelSchema& schema,
                                  const StepContext& ctx, const StateVector& state, const ImageBuffer& image) {
  if (!stack.controller) throw Error(Errc::BackendUnavailable, "decision stack has no controller");
  DecisionOutcome out;
  out.decision = stc_decide(*stack.controller, schema, ctx, state, image);
  out.state = out.decision.is_continue()
                  ? state
                  : cascade_predict(schema, out.decision.level(), state, image, stack.agents, ctx, stack.retries);
  return out;
}

}  // namespace mstp
