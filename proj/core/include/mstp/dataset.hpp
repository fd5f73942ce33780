#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mstp/schema.hpp"
#include "mstp/sequence.hpp"

namespace mstp {

/// One benchmark sample: the current frame and state plus the future frames
/// and states covering `horizon` seconds at `fps` frames per second.
struct Clip {
  std::string clip_id;
  std::string sequence_id;
  double horizon = 0;        // seconds
  double fps = 1;            // sampling rate of `frames`
  std::int64_t start_index = 0;
  std::vector<Frame> frames;  // frames[0] is the current frame
  std::string split;          // "train", "test" or empty
  nlohmann::json extra = nlohmann::json::object();

  const Frame& current() const { return frames.front(); }
  std::size_t state_count() const noexcept {
    return frames.empty() ? 0 : frames.size() * frames.front().state.depth();
  }

  friend bool operator==(const Clip&, const Clip&) = default;
};

struct ClipBuildOptions {
  std::vector<double> horizons{1, 5, 30, 60};
  double sample_fps = 1;
  double stride = 1;  // seconds between window starts
};

// Windows start every `stride` seconds and every start yields one clip per
// horizon that fits the sequence, all sharing the first frame. Horizons
// longer than the sequence are skipped with a warning; SequenceTooShort is
// thrown only when no clip at all can be produced.
std::vector<Clip> build_clips(const AnnotatedSequence& seq, const ClipBuildOptions& options);

// Same, over many sequences with up to `workers` threads; output order
// follows the input order.
std::vector<Clip> build_clips(const std::vector<AnnotatedSequence>& seqs,
                              const ClipBuildOptions& options, unsigned workers);

struct SplitSpec {
  enum class Unit { Clip, SourceSequence };

  std::uint32_t train_parts = 10;
  std::uint32_t test_parts = 1;
  std::uint64_t seed = 0;
  Unit unit = Unit::Clip;
};

// "10:1" -> {10, 1}; throws InvalidArgument.
SplitSpec parse_split_ratio(const std::string& text);

struct SplitResult {
  std::vector<Clip> train;
  std::vector<Clip> test;
};

// Seeded, deterministic; clips keep their relative order within each side
// and get their `split` field set.
SplitResult split_clips(const std::vector<Clip>& clips, const SplitSpec& spec);

nlohmann::json clip_to_json(const Clip& clip);
Clip clip_from_json(const nlohmann::json& j);

// Rejects records whose states violate the schema, naming the clip.
std::vector<Clip> read_manifest(const std::filesystem::path& path, const LevelSchema& schema);
void write_manifest(const std::vector<Clip>& clips, const std::filesystem::path& path);

}  // namespace mstp
