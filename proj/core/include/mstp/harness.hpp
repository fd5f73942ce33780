#pragma once

#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mstp/backends.hpp"
#include "mstp/dataset.hpp"
#include "mstp/descriptor.hpp"
#include "mstp/loop.hpp"

namespace mstp {

struct HarnessConfig {
  double temporal_scale = 1;
  double incremental_scale = 1;
  DecisionBackendDescriptor dm;
  GeneratorDescriptor vg;
  GatingPolicy gating = GatingPolicy::EveryStep;
  unsigned workers = 1;
  unsigned retries = 1;
  bool keep_trajectories = true;
};

struct ClipResult {
  std::string clip_id;
  double horizon = 0;
  std::optional<Trajectory> trajectory;
  std::optional<ScoreReport> score;
  std::optional<StepFailure> failure;  // loop or scoring failure
  bool skipped = false;                 // horizon shorter than the temporal scale
};

struct Aggregate {
  std::size_t clips = 0;
  std::size_t scored = 0;
  std::size_t skipped = 0;
  std::size_t points = 0;
  double objective = 0;  // mean of per-clip objectives over scored clips
  std::vector<double> level_accuracy;
};

struct HarnessResult {
  std::vector<ClipResult> clips;  // input order
  Aggregate overall;
  std::map<double, Aggregate> by_horizon;
};

/// Runs the closed loop on every clip (grid length = clip horizon) with up
/// to `workers` concurrent trajectories and scores each against its own
/// annotation. Backends are built once and shared. Clips whose grid has no
/// output point are skipped, not run.
HarnessResult evaluate_clips(const std::vector<Clip>& clips, std::shared_ptr<const LevelSchema> schema,
                             std::shared_ptr<const ImageSource> images, const HarnessConfig& config);

// Tab-separated: one row per clip, then per-horizon and overall mean rows.
void write_score_table(std::ostream& out, const HarnessResult& result, std::size_t depth);

}  // namespace mstp
