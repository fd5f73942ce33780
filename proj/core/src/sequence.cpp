#include "mstp/sequence.hpp"

#include <fstream>

#include "mstp/error.hpp"

namespace mstp {
namespace {

const char* const kSequenceFields[] = {"sequence_id", "fps", "frames"};

}  // namespace

void validate_sequence(const LevelSchema& schema, const AnnotatedSequence& seq) {
  if (!(seq.fps > 0)) throw Error(Errc::InvalidArgument, seq.sequence_id + ": fps must be positive");
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const auto& frame = seq.frames[i];
    if (i > 0 && frame.index <= seq.frames[i - 1].index) {
      throw Error(Errc::InvalidArgument, seq.sequence_id + ": frame indices must strictly increase");
    }
    require_valid(schema, frame.state,
                  seq.sequence_id + " frame " + std::to_string(frame.index));
  }
}

nlohmann::json frames_to_json(const std::vector<Frame>& frames) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : frames) {
    out.push_back({{"idx", f.index}, {"image_path", f.image_path}, {"labels", f.state.labels}});
  }
  return out;
}

std::vector<Frame> frames_from_json(const nlohmann::json& j) {
  std::vector<Frame> frames;
  frames.reserve(j.size());
  for (const auto& item : j) {
    Frame f;
    f.index = item.at("idx").get<std::int64_t>();
    f.image_path = item.value("image_path", "");
    f.state.labels = item.at("labels").get<std::vector<std::string>>();
    frames.push_back(std::move(f));
  }
  return frames;
}

nlohmann::json sequence_to_json(const AnnotatedSequence& seq) {
  nlohmann::json j = seq.extra.is_object() ? seq.extra : nlohmann::json::object();
  j["sequence_id"] = seq.sequence_id;
  j["fps"] = seq.fps;
  j["frames"] = frames_to_json(seq.frames);
  return j;
}

AnnotatedSequence sequence_from_json(const nlohmann::json& j) {
  AnnotatedSequence seq;
  seq.sequence_id = j.at("sequence_id").get<std::string>();
  seq.fps = j.at("fps").get<double>();
  seq.frames = frames_from_json(j.at("frames"));
  seq.extra = j;
  for (const char* field : kSequenceFields) seq.extra.erase(field);
  return seq;
}

void for_each_record(const std::filesystem::path& path,
                     const std::function<void(const nlohmann::json&, std::size_t line)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
    if (!record.is_object()) {
      throw Error(Errc::ParseError,
                  path.string() + ":" + std::to_string(line) + ": record is not an object");
    }
    try {
      fn(record, line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  }
}

std::vector<AnnotatedSequence> read_sequences(const std::filesystem::path& path,
                                              const LevelSchema& schema) {
  std::vector<AnnotatedSequence> out;
  for_each_record(path, [&](const nlohmann::json& record, std::size_t line) {
    auto seq = sequence_from_json(record);
    try {
      validate_sequence(schema, seq);
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
    out.push_back(std::move(seq));
  });
  return out;
}

void write_sequences(const std::vector<AnnotatedSequence>& seqs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  for (const auto& seq : seqs) out << sequence_to_json(seq).dump() << '\n';
}

}  // namespace mstp
