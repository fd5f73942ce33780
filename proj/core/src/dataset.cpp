#include "mstp/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include "mstp/error.hpp"
#include "mstp/log.hpp"
#include "mstp/random.hpp"

namespace mstp {
namespace {

constexpr double kTimeSlack = 1e-9;

const char* const kClipFields[] = {"clip_id", "sequence_id", "fps",  "frames",
                                   "horizon", "start_idx",   "split"};

std::string format_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", s);
  return buf;
}

std::int64_t frames_per_window(double horizon, double fps) {
  const double n = horizon * fps;
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-6) {
    throw Error(Errc::InvalidArgument, "horizon " + format_seconds(horizon) +
                                           " s is not a whole number of frames at " +
                                           format_seconds(fps) + " fps");
  }
  return static_cast<std::int64_t>(rounded);
}

}  // namespace

std::vector<Clip> build_clips(const AnnotatedSequence& seq, const ClipBuildOptions& options) {
  if (!(options.sample_fps > 0) || !(options.stride > 0)) {
    throw Error(Errc::InvalidArgument, "sample fps and stride must be positive");
  }
  if (options.sample_fps > seq.fps + kTimeSlack) {
    throw Error(Errc::InvalidArgument, "sample fps exceeds the sequence frame rate");
  }
  if (options.horizons.empty()) throw Error(Errc::InvalidArgument, "no horizons given");

  const double duration = seq.duration();
  std::vector<double> feasible;
  for (double h : options.horizons) {
    if (!(h > 0)) throw Error(Errc::InvalidArgument, "horizons must be positive");
    frames_per_window(h, options.sample_fps);
    if (h <= duration + kTimeSlack) {
      feasible.push_back(h);
    } else {
      log::warn(seq.sequence_id + ": " + format_seconds(duration) + " s is too short for the " +
                format_seconds(h) + " s horizon; skipped");
    }
  }
  if (feasible.empty()) {
    throw Error(Errc::SequenceTooShort, seq.sequence_id + " (" + format_seconds(duration) +
                                            " s) is shorter than every horizon");
  }
  const double longest = *std::max_element(feasible.begin(), feasible.end());

  std::vector<Clip> clips;
  for (std::int64_t m = 0;; ++m) {
    const double t0 = static_cast<double>(m) * options.stride;
    if (t0 + longest > duration + kTimeSlack) break;
    const auto first = static_cast<std::size_t>(std::llround(t0 * seq.fps));
    for (double h : feasible) {
      Clip clip;
      clip.sequence_id = seq.sequence_id;
      clip.horizon = h;
      clip.fps = options.sample_fps;
      clip.start_index = seq.frames[first].index;
      clip.clip_id = seq.sequence_id + "_s" + std::to_string(clip.start_index) + "_h" + format_seconds(h);
      const auto count = frames_per_window(h, options.sample_fps);
      clip.frames.reserve(static_cast<std::size_t>(count) + 1);
      for (std::int64_t j = 0; j <= count; ++j) {
        const double t = t0 + static_cast<double>(j) / options.sample_fps;
        const auto pos = static_cast<std::size_t>(std::llround(t * seq.fps));
        clip.frames.push_back(seq.frames.at(pos));
      }
      clips.push_back(std::move(clip));
    }
  }
  return clips;
}

std::vector<Clip> build_clips(const std::vector<AnnotatedSequence>& seqs,
                              const ClipBuildOptions& options, unsigned workers) {
  std::vector<std::vector<Clip>> per_seq(seqs.size());
  std::vector<std::string> too_short(seqs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < seqs.size();) {
      try {
        per_seq[i] = build_clips(seqs[i], options);
      } catch (const Error& e) {
        if (e.code() != Errc::SequenceTooShort) throw;
        too_short[i] = e.what();
      }
    }
  };
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(std::max<std::size_t>(seqs.size(), 1)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          work();
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::vector<Clip> all;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (!too_short[i].empty()) log::warn(too_short[i]);
    std::move(per_seq[i].begin(), per_seq[i].end(), std::back_inserter(all));
  }
  if (all.empty() && !seqs.empty()) {
    throw Error(Errc::SequenceTooShort, "no sequence is long enough for any horizon");
  }
  return all;
}

SplitSpec parse_split_ratio(const std::string& text) {
  const auto colon = text.find(':');
  SplitSpec spec;
  try {
    if (colon == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    const long train = std::stol(text.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument(text);
    const auto rest = text.substr(colon + 1);
    const long test = std::stol(rest, &used);
    if (used != rest.size() || train <= 0 || test <= 0) throw std::invalid_argument(text);
    spec.train_parts = static_cast<std::uint32_t>(train);
    spec.test_parts = static_cast<std::uint32_t>(test);
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, "split ratio must look like TRAIN:TEST with positive parts, got '" +
                                           text + "'");
  }
  return spec;
}

SplitResult split_clips(const std::vector<Clip>& clips, const SplitSpec& spec) {
  if (clips.empty()) throw Error(Errc::EmptyInput, "no clips to split");
  if (spec.train_parts == 0 || spec.test_parts == 0) {
    throw Error(Errc::InvalidArgument, "split ratio parts must be positive");
  }
  const double share = static_cast<double>(spec.test_parts) / (spec.train_parts + spec.test_parts);
  const auto target = static_cast<std::size_t>(std::floor(clips.size() * share + 0.5));

  RandomStream rng(spec.seed);
  auto shuffle = [&rng](auto& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.below(i)]);
  };

  std::vector<bool> in_test(clips.size(), false);
  if (spec.unit == SplitSpec::Unit::Clip) {
    std::vector<std::size_t> order(clips.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order);
    for (std::size_t i = 0; i < target; ++i) in_test[order[i]] = true;
  } else {
    std::vector<std::string> groups;
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      auto& m = members[clips[i].sequence_id];
      if (m.empty()) groups.push_back(clips[i].sequence_id);
      m.push_back(i);
    }
    shuffle(groups);
    std::size_t taken = 0;
    for (const auto& g : groups) {
      const auto size = members[g].size();
      const auto before = taken > target ? taken - target : target - taken;
      const auto after = taken + size > target ? taken + size - target : target - taken - size;
      // Never move everything to the test side.
      if (after < before && taken + size < clips.size()) {
        for (auto i : members[g]) in_test[i] = true;
        taken += size;
      }
    }
  }

  SplitResult result;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    Clip clip = clips[i];
    clip.split = in_test[i] ? "test" : "train";
    (in_test[i] ? result.test : result.train).push_back(std::move(clip));
  }
  return result;
}

nlohmann::json clip_to_json(const Clip& clip) {
  nlohmann::json j = clip.extra.is_object() ? clip.extra : nlohmann::json::object();
  j["clip_id"] = clip.clip_id;
  j["sequence_id"] = clip.sequence_id;
  j["fps"] = clip.fps;
  j["horizon"] = clip.horizon;
  j["start_idx"] = clip.start_index;
  j["split"] = clip.split;
  j["frames"] = frames_to_json(clip.frames);
  return j;
}

Clip clip_from_json(const nlohmann::json& j) {
  Clip clip;
  clip.clip_id = j.at("clip_id").get<std::string>();
  clip.sequence_id = j.value("sequence_id", "");
  clip.fps = j.at("fps").get<double>();
  clip.horizon = j.at("horizon").get<double>();
  clip.start_index = j.value("start_idx", std::int64_t{0});
  clip.split = j.value("split", "");
  clip.frames = frames_from_json(j.at("frames"));
  clip.extra = j;
  for (const char* field : kClipFields) clip.extra.erase(field);
  return clip;
}

std::vector<Clip> read_manifest(const std::filesystem::path& path, const LevelSchema& schema) {
  std::vector<Clip> clips;
  for_each_record(path, [&](const nlohmann::json& record, std::size_t line) {
    Clip clip = clip_from_json(record);
    if (clip.frames.empty()) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(line) + ": clip " +
                                        clip.clip_id + " has no frames");
    }
    for (const auto& frame : clip.frames) {
      if (auto v = validate_state(schema, frame.state); !v) {
        throw Error(Errc::InvalidState, path.string() + ":" + std::to_string(line) + ": clip " +
                                            clip.clip_id + ": " + v.message);
      }
    }
    clips.push_back(std::move(clip));
  });
  return clips;
}

void write_manifest(const std::vector<Clip>& clips, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  for (const auto& clip : clips) out << clip_to_json(clip).dump() << '\n';
}

}  // namespace mstp
