#include "mstp/harness.hpp"

#include <atomic>
#include <cstdio>
#include <thread>

#include "mstp/generation.hpp"
#include "mstp/log.hpp"
#include "mstp/truth.hpp"

namespace mstp {
namespace {

void accumulate(Aggregate& agg, const ClipResult& r) {
  ++agg.clips;
  if (r.skipped) ++agg.skipped;
  if (!r.score) return;
  ++agg.scored;
  agg.points += r.score->points.size();
  agg.objective += r.score->objective;
  if (agg.level_accuracy.size() < r.score->level_accuracy.size()) {
    agg.level_accuracy.resize(r.score->level_accuracy.size(), 0.0);
  }
  for (std::size_t l = 0; l < r.score->level_accuracy.size(); ++l) agg.level_accuracy[l] += r.score->level_accuracy[l];
}

void finish(Aggregate& agg) {
  if (agg.scored == 0) return;
  const auto n = static_cast<double>(agg.scored);
  agg.objective /= n;
  for (auto& a : agg.level_accuracy) a /= n;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

HarnessResult evaluate_clips(const std::vector<Clip>& clips, std::shared_ptr<const LevelSchema> schema,
                             std::shared_ptr<const ImageSource> images, const HarnessConfig& config) {
  if (!schema) throw Error(Errc::InvalidArgument, "schema is required");
  // Validate the scales once up front so a bad config fails before any work.
  make_time_grid(config.temporal_scale, config.incremental_scale, config.temporal_scale);

  BackendEnvironment env;
  env.schema = schema;
  env.truth = TruthBook::from_clips(clips, config.incremental_scale, config.temporal_scale);
  env.images = images;
  const auto stack = make_decision_stack(config.dm, env, config.retries);
  const auto generator = make_generator(config.vg, env);

  HarnessResult result;
  result.clips.resize(clips.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> skipped{0};

  auto work = [&] {
    for (std::size_t i = next++; i < clips.size(); i = next++) {
      const auto& clip = clips[i];
      auto& out = result.clips[i];
      out.clip_id = clip.clip_id;
      out.horizon = clip.horizon;
      try {
        const auto& track = env.truth->at(clip.clip_id);
        if (output_points(track.grid).empty()) {
          out.skipped = true;
          ++skipped;
          continue;
        }
        if (!images) throw Error(Errc::InvalidArgument, "no image source configured");
        auto image = images->load(clip.current().image_path);
        auto run = run_closed_loop(clip.clip_id, track.states.front(), image, track.grid, stack, *generator, *schema,
                                   {config.gating, 0});
        if (run.failure) {
          out.failure = run.failure;
          log::warn(clip.clip_id + ": step " + std::to_string(run.failure->step) + " failed: " + run.failure->message);
        } else {
          out.score = score_trajectory(run.trajectory, track);
        }
        if (config.keep_trajectories) out.trajectory = std::move(run.trajectory);
      } catch (const Error& e) {
        out.failure = StepFailure{-1, e.code(), e.what()};
        log::warn(clip.clip_id + ": " + e.what());
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(clips.size())));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  if (skipped > 0) {
    log::warn(std::to_string(skipped.load()) + " clip(s) shorter than the temporal scale were skipped");
  }
  for (const auto& r : result.clips) {
    accumulate(result.overall, r);
    accumulate(result.by_horizon[r.horizon], r);
  }
  finish(result.overall);
  for (auto& [h, agg] : result.by_horizon) finish(agg);
  return result;
}

void write_score_table(std::ostream& out, const HarnessResult& result, std::size_t depth) {
  out << "clip_id\thorizon\tsteps\toutput_points\tcorrect\tobjective";
  for (std::size_t l = 1; l <= depth; ++l) out << "\tlevel_" << l;
  out << "\tstatus\n";

  auto level_cols = [&](const std::vector<double>& acc) {
    for (std::size_t l = 0; l < depth; ++l) out << '\t' << (l < acc.size() ? fixed(acc[l]) : std::string("nan"));
  };

  for (const auto& r : result.clips) {
    const auto steps = r.trajectory ? std::to_string(r.trajectory->grid.steps) : std::string("-");
    out << r.clip_id << '\t' << r.horizon << '\t' << steps;
    if (r.score) {
      std::size_t correct = 0;
      for (bool c : r.score->correct) correct += c ? 1 : 0;
      out << '\t' << r.score->points.size() << '\t' << correct << '\t' << fixed(r.score->objective);
      level_cols(r.score->level_accuracy);
      out << "\tok\n";
    } else {
      out << "\t-\t-\tnan";
      level_cols({});
      out << '\t' << (r.skipped ? std::string("skipped") : r.failure ? to_string(r.failure->code) : std::string("error"))
          << '\n';
    }
  }

  auto agg_row = [&](const Aggregate& agg, const double* horizon) {
    out << "MEAN\t";
    if (horizon) {
      out << *horizon;
    } else {
      out << "all";
    }
    out << "\t-\t" << agg.points << "\t-\t" << (agg.scored ? fixed(agg.objective) : "nan");
    level_cols(agg.level_accuracy);
    out << '\t' << agg.scored << '/' << agg.clips << '\n';
  };
  for (const auto& [h, agg] : result.by_horizon) agg_row(agg, &h);
  agg_row(result.overall, nullptr);
}

}  // namespace mstp
