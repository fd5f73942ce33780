#include "mstp/augment.hpp"

#include <cmath>

#include "mstp/backends.hpp"
#include "mstp/error.hpp"
#include "mstp/random.hpp"

namespace mstp {

SteppedSequence resample(const AnnotatedSequence& seq, double incremental_scale) {
  if (!(incremental_scale > 0)) throw Error(Errc::InvalidArgument, "incremental scale must be positive");
  SteppedSequence out;
  out.sequence_id = seq.sequence_id;
  out.incremental_scale = incremental_scale;
  if (seq.frames.empty()) return out;
  const auto n = static_cast<std::int64_t>(std::floor(seq.duration() / incremental_scale + 1e-9)) + 1;
  for (std::int64_t k = 1; k <= n; ++k) {
    auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(k - 1) * incremental_scale * seq.fps));
    idx = std::min(idx, seq.frames.size() - 1);
    const auto& f = seq.frames[idx];
    out.states.push_back(f.state);
    out.image_paths.push_back(f.image_path);
    out.frame_indices.push_back(f.index);
  }
  return out;
}

TransitionIndex find_transitions(const SteppedSequence& seq) {
  TransitionIndex index;
  index.sequence_id = seq.sequence_id;
  index.steps = seq.steps();
  for (std::int64_t k = 1; k < index.steps; ++k) {
    if (!(seq.states[static_cast<std::size_t>(k - 1)] == seq.states[static_cast<std::size_t>(k)])) {
      index.transitions.push_back(k);
    }
  }
  return index;
}

std::int64_t compute_alpha(std::int64_t steps, std::int64_t transitions) {
  if (transitions <= 0) throw Error(Errc::NoTransitions, "cannot rebalance a sequence without transitions");
  if (steps < transitions) throw Error(Errc::InvalidArgument, "more transitions than steps");
  return (steps - transitions + transitions - 1) / transitions;
}

double class_balance(std::int64_t steps, std::int64_t transitions, std::int64_t alpha) {
  const auto rest = steps - transitions;
  if (rest <= 0) throw Error(Errc::DegenerateInput, "no non-transition samples");
  return static_cast<double>(alpha) * static_cast<double>(transitions) / static_cast<double>(rest);
}

std::vector<AugmentSample> augment_transitions(const SteppedSequence& seq, const TransitionIndex& index,
                                               const AugmentConfig& config, const LevelSchema& schema,
                                               const ImageSource* images) {
  if (config.max_shift < 0) throw Error(Errc::InvalidArgument, "max shift must be >= 0");
  if (!(config.image_noise >= 0)) throw Error(Errc::InvalidArgument, "image noise amplitude must be >= 0");
  const std::int64_t alpha = config.alpha ? *config.alpha
                                          : compute_alpha(index.steps, static_cast<std::int64_t>(index.count()));
  if (alpha < 0) throw Error(Errc::InvalidArgument, "alpha must be >= 0");

  std::vector<AugmentSample> samples;
  samples.reserve(static_cast<std::size_t>(alpha) * index.count());
  const std::int64_t n = seq.steps();
  for (const auto k : index.transitions) {
    const auto label = coarsest_change(seq.states[static_cast<std::size_t>(k - 1)],
                                       seq.states[static_cast<std::size_t>(k)]);
    for (std::int64_t v = 0; v < alpha; ++v) {
      AugmentSample s;
      s.sequence_id = seq.sequence_id;
      s.source_k = k;
      s.variant = v;
      s.label = label;
      RandomStream rng(derive_seed(config.seed, seq.sequence_id, k, static_cast<std::uint64_t>(2 * v)));
      // Rejection keeps every variant inside 1..N-1; k itself always
      // qualifies, so this terminates.
      do {
        s.delta = config.max_shift == 0 ? 0 : rng.between(-config.max_shift, config.max_shift);
      } while (k + s.delta < 1 || k + s.delta > n - 1);
      s.anchor_k = k + s.delta;
      const auto at = static_cast<std::size_t>(s.anchor_k - 1);
      s.state = seq.states[at];
      require_valid(schema, s.state, "augmented anchor state");
      s.source_image_path = seq.image_paths[at];
      s.frame_index = seq.frame_indices[at];
      s.noise_seed = derive_seed(config.seed, seq.sequence_id, k, static_cast<std::uint64_t>(2 * v + 1));
      if (images && !s.source_image_path.empty()) {
        auto source = images->load(s.source_image_path);
        s.image = config.image_noise == 0
                      ? source
                      : std::make_shared<const ImageBuffer>(add_uniform_noise(*source, config.image_noise, s.noise_seed));
      }
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

nlohmann::json sample_record(const AugmentSample& sample, double incremental_scale, const std::string& image_path) {
  const std::string clip_id = sample.sequence_id + "_t" + std::to_string(sample.source_k) + "_v" +
                              std::to_string(sample.variant);
  return {{"clip_id", clip_id},
          {"sequence_id", sample.sequence_id},
          {"horizon", incremental_scale},
          {"fps", 1.0 / incremental_scale},
          {"start_index", sample.frame_index},
          {"frames", nlohmann::json::array({{{"idx", sample.frame_index},
                                             {"image_path", image_path},
                                             {"labels", sample.state.labels}}})},
          {"split", "train"},
          {"label", to_string(sample.label)},
          {"provenance", {{"source_k", sample.source_k}, {"delta", sample.delta}, {"seed", sample.noise_seed}}}};
}

}  // namespace mstp
