#include "mstp/truth.hpp"

#include <algorithm>
#include <cmath>

#include "mstp/error.hpp"

namespace mstp {

TruthTrack align_clip(const Clip& clip, double incremental_scale, double temporal_scale) {
  TruthTrack track;
  track.grid = make_time_grid(clip.horizon, incremental_scale, temporal_scale);
  track.states.reserve(static_cast<std::size_t>(track.grid.steps) + 1);
  for (std::int64_t k = 0; k <= track.grid.steps; ++k) {
    const double t = std::min(track.grid.time_of(k), clip.horizon);
    const auto pos = static_cast<std::size_t>(std::llround(t * clip.fps));
    if (pos >= clip.frames.size()) {
      throw Error(Errc::MissingTruth, clip.clip_id + ": no frame at " + std::to_string(t) + " s");
    }
    track.states.push_back(clip.frames[pos].state);
    track.frame_paths.push_back(clip.frames[pos].image_path);
  }
  return track;
}

void TruthBook::add(const std::string& clip_id, TruthTrack track) { tracks_[clip_id] = std::move(track); }

const TruthTrack* TruthBook::find(const std::string& clip_id) const {
  auto it = tracks_.find(clip_id);
  return it == tracks_.end() ? nullptr : &it->second;
}

const TruthTrack& TruthBook::at(const std::string& clip_id) const {
  if (const auto* t = find(clip_id)) return *t;
  throw Error(Errc::MissingGroundTruth, "no ground truth bound for clip '" + clip_id + "'");
}

std::shared_ptr<TruthBook> TruthBook::from_clips(const std::vector<Clip>& clips, double incremental_scale,
                                                 double temporal_scale) {
  auto book = std::make_shared<TruthBook>();
  for (const auto& clip : clips) book->add(clip.clip_id, align_clip(clip, incremental_scale, temporal_scale));
  return book;
}

}  // namespace mstp
