#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mstp/agents.hpp"
#include "mstp/error.hpp"
#include "mstp/generation.hpp"
#include "mstp/time_grid.hpp"
#include "mstp/truth.hpp"

namespace mstp {

enum class GatingPolicy {
  EveryStep,   // full STC + cascade at every incremental step
  OutputOnly,  // DM only runs when k+1 is an output point; otherwise Continue
};

std::string to_string(GatingPolicy policy);
GatingPolicy gating_from_string(const std::string& text);

struct LoopOptions {
  GatingPolicy gating = GatingPolicy::EveryStep;
  // Resume from (S_m, I_m): the first produced entry is first_step + 1.
  std::int64_t first_step = 0;
};

struct TrajectoryEntry {
  std::int64_t k = 0;
  StateVector state;
  std::shared_ptr<const ImageBuffer> image;
  bool is_output = false;
  TransitionDecision decision = TransitionDecision::continue_();
  bool gated = false;  // DM skipped under OutputOnly
  double wall_time = 0;  // seconds spent on this step
};

struct Trajectory {
  std::string clip_id;
  TimeGrid grid;
  StateVector initial_state;
  std::shared_ptr<const ImageBuffer> initial_image;
  std::vector<TrajectoryEntry> entries;

  // S_k for k = first_step..N; k == first_step yields the initial state.
  const StateVector& state_at(std::int64_t k) const;
};

struct StepFailure {
  std::int64_t step = 0;  // the k whose transition to k+1 failed
  Errc code = Errc::InvalidArgument;
  std::string message;
};

struct LoopRun {
  Trajectory trajectory;
  std::optional<StepFailure> failure;
};

/// Alternates S_{k+1} = DM(S_k, I_k) and I_{k+1} = VG(S_{k+1}, I_k) for
/// k = first_step..N-1. Backend errors stop the run; the entries produced
/// so far are returned together with the failing step.
LoopRun run_closed_loop(const std::string& clip_id, const StateVector& initial_state,
                        std::shared_ptr<const ImageBuffer> initial_image, const TimeGrid& grid,
                        const DecisionStack& dm, Generator& vg, const LevelSchema& schema,
                        const LoopOptions& options = {});

struct ScoreReport {
  std::string clip_id;
  std::vector<std::int64_t> points;
  std::vector<bool> correct;
  std::vector<StateVector> predicted;
  std::vector<StateVector> truth;
  double objective = 0;
  std::vector<double> level_accuracy;  // per level, fraction in [0,1]
};

// Throws NoOutputPoints or MissingTruth.
ScoreReport score_trajectory(const Trajectory& trajectory, const TruthTrack& truth);

// One record per entry: {clip_id, k, state, image_path, is_output,
// dm_decision}. `image_paths` is parallel to entries and may be empty.
nlohmann::json trajectory_record(const Trajectory& trajectory, std::size_t entry, const std::string& image_path);
void append_trajectory(std::ostream& out, const Trajectory& trajectory,
                       const std::vector<std::string>& image_paths = {});

}  // namespace mstp
