#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mstp/agents.hpp"
#include "mstp/image.hpp"
#include "mstp/sequence.hpp"

namespace mstp {

/// A sequence resampled to incremental steps k = 1..N (step k sits at
/// (k-1)*tau seconds).
struct SteppedSequence {
  std::string sequence_id;
  double incremental_scale = 1;
  std::vector<StateVector> states;        // states[k-1]
  std::vector<std::string> image_paths;  // image_paths[k-1]
  std::vector<std::int64_t> frame_indices;

  std::int64_t steps() const noexcept { return static_cast<std::int64_t>(states.size()); }
};

// Nearest annotated frame for every step that fits the sequence duration.
SteppedSequence resample(const AnnotatedSequence& seq, double incremental_scale);

struct TransitionIndex {
  std::string sequence_id;
  std::int64_t steps = 0;             // N
  std::vector<std::int64_t> transitions;  // k with S_k != S_{k+1}, ascending

  std::size_t count() const noexcept { return transitions.size(); }
};

TransitionIndex find_transitions(const SteppedSequence& seq);

// ceil((N - count) / count); NoTransitions when count == 0.
std::int64_t compute_alpha(std::int64_t steps, std::int64_t transitions);

// Synthetic transition samples per non-transition sample after
// augmentation: alpha * count / (N - count).
double class_balance(std::int64_t steps, std::int64_t transitions, std::int64_t alpha);

struct AugmentConfig {
  std::optional<std::int64_t> alpha;  // empty = auto
  std::int64_t max_shift = 1;         // in incremental steps
  double image_noise = 4;             // amplitude in pixel units
  std::uint64_t seed = 0;
};

struct AugmentSample {
  std::string sequence_id;
  std::int64_t source_k = 0;
  std::int64_t delta = 0;
  std::int64_t anchor_k = 0;  // source_k + delta
  std::int64_t variant = 0;
  std::uint64_t noise_seed = 0;
  StateVector state;  // annotated state at anchor_k
  TransitionDecision label = TransitionDecision::continue_();
  std::string source_image_path;
  std::int64_t frame_index = 0;
  std::shared_ptr<const ImageBuffer> image;  // null when the sequence has no images
};

/// `alpha` variants per transition. Shifts that leave 1..N-1 are redrawn.
/// Images are loaded through `images` when the frame has a path.
std::vector<AugmentSample> augment_transitions(const SteppedSequence& seq, const TransitionIndex& index,
                                               const AugmentConfig& config, const LevelSchema& schema,
                                               const ImageSource* images);

// Clip-format record plus {provenance:{source_k, delta, seed}} and the
// transition label.
nlohmann::json sample_record(const AugmentSample& sample, double incremental_scale, const std::string& image_path);

}  // namespace mstp
