#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mstp/schema.hpp"

namespace mstp {

struct Frame {
  std::int64_t index = 0;
  std::string image_path;
  StateVector state;

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Annotated video: frames at a fixed rate, each with a hierarchical state.
struct AnnotatedSequence {
  std::string sequence_id;
  double fps = 1.0;
  std::vector<Frame> frames;
  // Fields not understood by this library, preserved on round-trip.
  nlohmann::json extra = nlohmann::json::object();

  double duration() const noexcept {
    return frames.empty() ? 0.0 : static_cast<double>(frames.size() - 1) / fps;
  }

  friend bool operator==(const AnnotatedSequence&, const AnnotatedSequence&) = default;
};

// Frame indices strictly increasing, fps positive, every state valid.
void validate_sequence(const LevelSchema& schema, const AnnotatedSequence& seq);

nlohmann::json frames_to_json(const std::vector<Frame>& frames);
std::vector<Frame> frames_from_json(const nlohmann::json& j);

nlohmann::json sequence_to_json(const AnnotatedSequence& seq);
AnnotatedSequence sequence_from_json(const nlohmann::json& j);

// Line-delimited record files: one JSON object per non-blank line. The
// callback receives the parsed record and its 1-based line number; parse
// failures throw ParseError naming the line.
void for_each_record(const std::filesystem::path& path,
                     const std::function<void(const nlohmann::json&, std::size_t line)>& fn);

std::vector<AnnotatedSequence> read_sequences(const std::filesystem::path& path,
                                              const LevelSchema& schema);
void write_sequences(const std::vector<AnnotatedSequence>& seqs, const std::filesystem::path& path);

}  // namespace mstp
