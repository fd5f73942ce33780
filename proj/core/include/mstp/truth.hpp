#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "mstp/dataset.hpp"
#include "mstp/schema.hpp"
#include "mstp/time_grid.hpp"

namespace mstp {

/// Ground truth resampled onto a grid: entry k (0..N) is the annotation at
/// wall-clock offset min(k * tau, T).
struct TruthTrack {
  TimeGrid grid;
  std::vector<StateVector> states;
  std::vector<std::string> frame_paths;
};

// T is the clip horizon. Throws MissingTruth when the clip's frames do not
// reach the needed offsets.
TruthTrack align_clip(const Clip& clip, double incremental_scale, double temporal_scale);

/// Read-only lookup of truth tracks by clip id, shared by oracle backends.
class TruthBook {
 public:
  void add(const std::string& clip_id, TruthTrack track);
  const TruthTrack* find(const std::string& clip_id) const;
  // Throws MissingGroundTruth.
  const TruthTrack& at(const std::string& clip_id) const;
  std::size_t size() const noexcept { return tracks_.size(); }

  static std::shared_ptr<TruthBook> from_clips(const std::vector<Clip>& clips, double incremental_scale,
                                               double temporal_scale);

 private:
  std::unordered_map<std::string, TruthTrack> tracks_;
};

}  // namespace mstp
