#include "mstp/loop.hpp"

#include <chrono>
#include <ostream>

namespace mstp {

std::string to_string(GatingPolicy policy) {
  return policy == GatingPolicy::EveryStep ? "every-step" : "output-only";
}

GatingPolicy gating_from_string(const std::string& text) {
  if (text == "every-step") return GatingPolicy::EveryStep;
  if (text == "output-only") return GatingPolicy::OutputOnly;
  throw Error(Errc::InvalidArgument, "unknown gating policy '" + text + "' (every-step|output-only)");
}

const StateVector& Trajectory::state_at(std::int64_t k) const {
  const auto first = entries.empty() ? grid.steps : entries.front().k - 1;
  if (k == first) return initial_state;
  const auto idx = k - first - 1;
  if (idx < 0 || idx >= static_cast<std::int64_t>(entries.size())) {
    throw Error(Errc::InvalidArgument, "step " + std::to_string(k) + " is not in the trajectory");
  }
  return entries[static_cast<std::size_t>(idx)].state;
}

LoopRun run_closed_loop(const std::string& clip_id, const StateVector& initial_state,
                        std::shared_ptr<const ImageBuffer> initial_image, const TimeGrid& grid,
                        const DecisionStack& dm, Generator& vg, const LevelSchema& schema,
                        const LoopOptions& options) {
  if (!initial_image) throw Error(Errc::InvalidArgument, "initial image is null");
  if (options.first_step < 0 || options.first_step > grid.steps) {
    throw Error(Errc::InvalidArgument, "first_step outside 0..N");
  }
  require_valid(schema, initial_state, "initial state");

  LoopRun run;
  auto& traj = run.trajectory;
  traj.clip_id = clip_id;
  traj.grid = grid;
  traj.initial_state = initial_state;
  traj.initial_image = initial_image;
  traj.entries.reserve(static_cast<std::size_t>(grid.steps - options.first_step));

  StateVector state = initial_state;
  auto image = std::move(initial_image);
  for (std::int64_t k = options.first_step; k < grid.steps; ++k) {
    const StepContext ctx{clip_id, k};
    const auto started = std::chrono::steady_clock::now();
    TrajectoryEntry entry;
    entry.k = k + 1;
    entry.is_output = grid.is_output_point(k + 1);
    try {
      if (options.gating == GatingPolicy::OutputOnly && !entry.is_output) {
        entry.gated = true;
        entry.state = state;
      } else {
        auto outcome = decide_next_state(dm, schema, ctx, state, *image);
        entry.decision = outcome.decision;
        entry.state = std::move(outcome.state);
      }
      entry.image = generate_next(vg, ctx, entry.state, image);
    } catch (const Error& e) {
      run.failure = StepFailure{k, e.code(), e.what()};
      return run;
    }
    entry.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    state = entry.state;
    image = entry.image;
    traj.entries.push_back(std::move(entry));
  }
  return run;
}

ScoreReport score_trajectory(const Trajectory& trajectory, const TruthTrack& truth) {
  ScoreReport report;
  report.clip_id = trajectory.clip_id;
  for (const auto& e : trajectory.entries) {
    if (!e.is_output) continue;
    if (e.k >= static_cast<std::int64_t>(truth.states.size())) {
      throw Error(Errc::MissingTruth, trajectory.clip_id + ": no ground truth at step " + std::to_string(e.k));
    }
    report.points.push_back(e.k);
    report.predicted.push_back(e.state);
    report.truth.push_back(truth.states[static_cast<std::size_t>(e.k)]);
  }
  if (report.points.empty()) {
    throw Error(Errc::NoOutputPoints, trajectory.clip_id + ": trajectory has no output points");
  }
  const std::size_t depth = report.truth.front().depth();
  report.level_accuracy.assign(depth, 0.0);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    const bool ok = report.predicted[i] == report.truth[i];
    report.correct.push_back(ok);
    hits += ok ? 1 : 0;
    for (std::size_t l = 0; l < depth; ++l) {
      if (l < report.predicted[i].depth() && report.predicted[i].labels[l] == report.truth[i].labels[l]) {
        report.level_accuracy[l] += 1;
      }
    }
  }
  const auto n = static_cast<double>(report.points.size());
  report.objective = static_cast<double>(hits) / n;
  for (auto& a : report.level_accuracy) a /= n;
  return report;
}

nlohmann::json trajectory_record(const Trajectory& trajectory, std::size_t entry, const std::string& image_path) {
  const auto& e = trajectory.entries.at(entry);
  nlohmann::json j = {{"clip_id", trajectory.clip_id},
                      {"k", e.k},
                      {"state", e.state.labels},
                      {"image_path", image_path.empty() ? nlohmann::json(nullptr) : nlohmann::json(image_path)},
                      {"is_output", e.is_output},
                      {"dm_decision", e.gated ? std::string("gated") : to_string(e.decision)}};
  return j;
}

void append_trajectory(std::ostream& out, const Trajectory& trajectory, const std::vector<std::string>& image_paths) {
  for (std::size_t i = 0; i < trajectory.entries.size(); ++i) {
    out << trajectory_record(trajectory, i, i < image_paths.size() ? image_paths[i] : std::string()).dump() << '\n';
  }
}

}  // namespace mstp
