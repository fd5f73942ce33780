// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and runtime budgets are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "agents.hpp"
#include "mstp/analysis.hpp"
#include "mstp/augment.hpp"
#include "mstp/backends.hpp"
#include "mstp/dataset.hpp"
#include "mstp/error.hpp"
#include "mstp/feature_metrics.hpp"
#include "mstp/harness.hpp"
#include "mstp/image_metrics.hpp"
#include "mstp/log.hpp"
#include "mstp/loop.hpp"
#include "mstp/mock_server.hpp"
#include "mstp/remote.hpp"
#include "mstp/state_metrics.hpp"
#include "mstp/time_grid.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace mstp {
namespace {

// ---------------------------------------------------------------- tolerances
constexpr double kProductTolerance = 0.05;       // percentage points
constexpr double kSplitTolerance = 1.0;          // clips
constexpr double kObjectiveTolerance = 1e-12;
constexpr double kSigmas = 3.0;                  // binomial / standard-error bands
constexpr double kHandCheckTolerance = 1e-9;
constexpr double kFidSelfTolerance = 1e-6;
constexpr double kFidRelativeTolerance = 0.05;
constexpr double kLpipsTolerance = 1e-9;
constexpr double kBalanceLow = 0.9, kBalanceHigh = 1.1;
constexpr double kResidualTolerance = 1e-9;

// Runtime budgets in seconds.
constexpr double kBudget[11] = {0, 1, 5, 1, 30, 120, 10, 60, 30, 60, 1};

// ------------------------------------------------------------------ plumbing
struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool condition, const std::string& what) {
    if (!condition && ok) detail << "[failed: " << what << "] ";
    ok = ok && condition;
  }
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::shared_ptr<const ImageSource> placeholder_images(std::uint64_t seed) {
  return std::make_shared<PlaceholderImageSource>(nullptr, testing::random_image(8, 8, seed));
}

// Gives every frame of `seq` a unique image path backed by `images`.
void attach_images(AnnotatedSequence& seq, MemoryImageSource& images, int size, std::uint64_t seed) {
  for (auto& f : seq.frames) {
    f.image_path = seq.sequence_id + "/" + std::to_string(f.index);
    images.put(f.image_path, testing::random_image(size, size, seed * 100003 + static_cast<std::uint64_t>(f.index)));
  }
}

HarnessConfig harness_config(double tau, double tau_hat, const std::string& dm, const std::string& vg) {
  HarnessConfig c;
  c.incremental_scale = tau;
  c.temporal_scale = tau_hat;
  c.dm = parse_decision_descriptor(dm);
  c.vg = parse_generator_descriptor(vg);
  c.workers = workers();
  return c;
}

// ------------------------------------------------------------------ criteria

void product_bound_rows(Check& c) {
  struct Row {
    const char* label;
    std::vector<double> marginals;
    double mc;
    double pi;
    double gap;
  };
  const std::vector<Row> rows{{"5s", {57.1, 51.9, 49.9}, 44.8, 14.8, 30.0},
                              {"30s", {55.4, 43.8, 58.5}, 40.6, 14.2, 26.4},
                              {"60s", {54.9, 33.2, 58.8}, 36.2, 10.7, 25.5}};
  for (const auto& r : rows) {
    const double pi = product_bound(r.marginals);
    const double gap = round_to(mc_gap(r.mc, round_to(pi, 1)), 1);
    c.require(std::abs(pi - r.pi) <= kProductTolerance, std::string(r.label) + " product");
    c.require(gap == r.gap, std::string(r.label) + " gap");
    c.detail << r.label << " pi=" << fmt(pi, 3) << " gap=+" << fmt(gap, 1) << "  ";
  }
}

void dataset_table(Check& c) {
  const auto schema = testing::phase_step_schema();
  // 121 frames at 1 fps span 120 s.
  const auto seq = testing::random_sequence(schema, 121, 1, 42, 0.1, "synthetic120");
  ClipBuildOptions opts;
  opts.horizons = {1, 5, 30, 60};
  opts.sample_fps = 1;
  const auto clips = build_clips(seq, opts);

  const std::map<double, std::pair<std::size_t, std::size_t>> expected{
      {1, {2, 4}}, {5, {6, 12}}, {30, {31, 62}}, {60, {61, 122}}};
  std::map<double, std::size_t> seen;
  for (const auto& clip : clips) {
    const auto it = expected.find(clip.horizon);
    c.require(it != expected.end(), "unexpected horizon");
    if (it == expected.end()) continue;
    c.require(clip.frames.size() == it->second.first && clip.state_count() == it->second.second,
              "clip " + clip.clip_id + " shape");
    ++seen[clip.horizon];
  }
  c.require(seen.size() == 4, "all four horizons present");
  for (const auto& [h, shape] : expected)
    c.detail << h << "s=(" << shape.first << "," << shape.second << ")x" << seen[h] << " ";

  const auto split = split_clips(clips, parse_split_ratio("10:1"));
  const double total = static_cast<double>(clips.size());
  const double want_test = total / 11.0;
  c.require(split.train.size() + split.test.size() == clips.size(), "split covers all clips");
  c.require(std::abs(static_cast<double>(split.test.size()) - want_test) <= kSplitTolerance, "10:1 ratio");
  c.detail << " split " << split.train.size() << ":" << split.test.size() << " of " << clips.size();
}

std::set<std::int64_t> output_flags(const Trajectory& t) {
  std::set<std::int64_t> out;
  for (const auto& e : t.entries)
    if (e.is_output) out.insert(e.k);
  return out;
}

void indicator_gating(Check& c) {
  const auto schema = testing::phase_step_schema();
  DecisionStack stack;
  stack.controller = std::make_shared<testing::FnController>(
      [](const StepContext&, const StateVector&) { return TransitionDecision::continue_(); });
  stack.agents = {nullptr, nullptr};
  IdentityGenerator identity;
  const StateVector s0{{"P1", "s11"}};
  auto image = std::make_shared<const ImageBuffer>(testing::gray_image(2, 2, 7));

  const auto grid = make_time_grid(60, 5, 30);
  const auto run = run_closed_loop("worked", s0, image, grid, stack, identity, schema);
  c.require(grid.steps == 12 && run.trajectory.entries.size() == 12, "N = 12");
  c.require(output_flags(run.trajectory) == std::set<std::int64_t>{6, 12}, "outputs at 6 and 12");

  RandomStream rng(31);
  const double taus[] = {0.25, 0.5, 1, 2, 5};
  int grids = 0;
  for (; grids < 100; ++grids) {
    const double tau = taus[rng.below(5)];
    const auto r = static_cast<std::int64_t>(1 + rng.below(12));
    const auto m = static_cast<std::int64_t>(1 + rng.below(10));
    const double tau_hat = tau * static_cast<double>(r);
    const double total = tau_hat * static_cast<double>(m);
    const auto g = make_time_grid(total, tau, tau_hat);
    std::set<std::int64_t> want;
    for (std::int64_t k = r; k <= r * m; k += r) want.insert(k);
    const auto points = output_points(g);
    const auto loop = run_closed_loop("g" + std::to_string(grids), s0, image, g, stack, identity, schema);
    if (g.steps != r * m || std::set<std::int64_t>(points.begin(), points.end()) != want ||
        output_flags(loop.trajectory) != want || static_cast<std::int64_t>(points.size()) != m) {
      c.require(false, "grid tau=" + fmt(tau, 2) + " r=" + std::to_string(r) + " m=" + std::to_string(m));
      break;
    }
  }
  c.detail << "worked example {6,12}; " << grids << " random grids";
}

void oracle_closure(Check& c) {
  auto schema = std::make_shared<LevelSchema>(testing::phase_step_schema());
  auto images = std::make_shared<MemoryImageSource>();
  std::vector<Clip> clips;
  ClipBuildOptions opts;
  opts.horizons = {5, 30, 60};
  opts.stride = 3;
  for (int s = 0; clips.size() < 1000; ++s) {
    auto seq = testing::random_sequence(*schema, 200, 1, 500 + static_cast<std::uint64_t>(s), 0.08,
                                        "seq" + std::to_string(s));
    attach_images(seq, *images, 8, static_cast<std::uint64_t>(s));
    const auto built = build_clips(seq, opts);
    clips.insert(clips.end(), built.begin(), built.end());
  }
  clips.resize(1000);

  const auto gt = evaluate_clips(clips, schema, images, harness_config(1, 5, "oracle:gt", "passthrough"));
  std::size_t perfect = 0;
  for (const auto& r : gt.clips)
    if (r.score && r.score->objective == 1.0) ++perfect;
  c.require(perfect == clips.size(), "ground truth scores 1.0 on every clip");
  c.detail << "gt: " << perfect << "/" << clips.size() << " at 1.0; ";

  testing::TempDir dir;
  { std::ofstream(dir / "continue.txt") << "*\tstc\tcontinue\n"; }
  const auto cont = evaluate_clips(
      clips, schema, images, harness_config(1, 5, "scripted:table=" + (dir / "continue.txt").string(), "identity"));
  // Constant predictor: S_0 is correct exactly where the annotation at the
  // output point still equals the first frame's state.
  double worst = 0;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const auto& clip = clips[i];
    const auto n = static_cast<std::size_t>(std::llround(clip.horizon));
    std::size_t hits = 0, points = 0;
    for (std::size_t k = 5; k <= n; k += 5, ++points)
      if (clip.frames[k].state == clip.frames[0].state) ++hits;
    const double analytic = static_cast<double>(hits) / static_cast<double>(points);
    const auto& r = cont.clips[i];
    if (!r.score) {
      c.require(false, "continue run scored " + clip.clip_id);
      return;
    }
    worst = std::max(worst, std::abs(r.score->objective - analytic));
  }
  c.require(worst <= kObjectiveTolerance, "continue matches constant predictor");
  c.detail << "continue: max |objective - analytic| = " << worst << ", mean " << fmt(cont.overall.objective);
}

void independence_law(Check& c) {
  auto schema = std::make_shared<LevelSchema>(testing::full_product_schema({4, 5, 6}));
  std::vector<Clip> clips;
  RandomStream rng(8);
  for (int s = 0; s < 100; ++s) {
    AnnotatedSequence seq;
    seq.sequence_id = "ind" + std::to_string(s);
    for (std::int64_t i = 0; i <= 120; ++i) {
      // Level 1 changes at every frame so every step re-runs the full cascade.
      StateVector state{{"l1_" + std::to_string(i % 4), "l2_" + std::to_string(rng.below(5)),
                         "l3_" + std::to_string(rng.below(6))}};
      seq.frames.push_back({i, "", state});
    }
    clips.push_back(testing::whole_clip(seq, seq.sequence_id));
  }
  const auto result =
      evaluate_clips(clips, schema, placeholder_images(3),
                     harness_config(1, 1, "noisy:p=0.3/0.4/0.5,mode=independent,seed=17", "identity"));
  std::size_t points = 0, correct = 0;
  for (const auto& r : result.clips) {
    if (!r.score) {
      c.require(false, "clip " + r.clip_id + " not scored");
      return;
    }
    points += r.score->correct.size();
    correct += static_cast<std::size_t>(std::count(r.score->correct.begin(), r.score->correct.end(), true));
  }
  const double q = 0.7 * 0.6 * 0.5;
  const double measured = static_cast<double>(correct) / static_cast<double>(points);
  const double sigma = std::sqrt(q * (1 - q) / static_cast<double>(points));
  c.require(points >= 10000, "at least 1e4 scored points");
  c.require(std::abs(measured - q) <= kSigmas * sigma, "joint accuracy within 3 sigma of 21.0%");
  const auto& lv = result.overall.level_accuracy;
  c.detail << "points=" << points << " joint=" << fmt(100 * measured, 2) << "% (expect 21.00 +/- "
           << fmt(100 * kSigmas * sigma, 2) << ")";
  if (lv.size() == 3) {
    const double pi = 100 * lv[0] * lv[1] * lv[2];
    c.detail << " marginals=" << fmt(100 * lv[0], 1) << "/" << fmt(100 * lv[1], 1) << "/" << fmt(100 * lv[2], 1)
             << " product=" << fmt(pi, 2);
  }
}

void metrics_oracle(Check& c) {
  RandomStream rng(2025);
  int single = 0, joint = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    const std::size_t classes = 1 + rng.below(8);
    std::vector<std::string> truth, pred;
    for (std::size_t i = 0; i < n; ++i) {
      truth.push_back("c" + std::to_string(rng.below(classes)));
      pred.push_back(rng.uniform() < 0.5 ? truth.back() : "c" + std::to_string(rng.below(classes + 2)));
    }
    if (state_metrics(pred, truth) == testing::confusion_matrix_metrics(pred, truth)) ++single;

    std::vector<StateVector> tv, pv;
    std::vector<std::string> ts, ps;
    for (std::size_t i = 0; i < n; ++i) {
      tv.push_back(StateVector{{"a" + std::to_string(rng.below(3)), "b" + std::to_string(rng.below(4))}});
      pv.push_back(rng.uniform() < 0.4 ? tv.back()
                                       : StateVector{{"a" + std::to_string(rng.below(3)),
                                                      "b" + std::to_string(rng.below(4))}});
      ts.push_back(tv.back().labels[0] + "|" + tv.back().labels[1]);
      ps.push_back(pv.back().labels[0] + "|" + pv.back().labels[1]);
    }
    if (joint_state_metrics(pv, tv) == testing::confusion_matrix_metrics(ps, ts)) ++joint;
  }
  c.require(single == 1000, "state_metrics equals oracle");
  c.require(joint == 1000, "joint_state_metrics equals oracle");

  const std::vector<std::string> truth{"A", "A", "B", "B"}, pred{"A", "B", "B", "B"};
  const auto r = state_metrics(pred, truth);
  const double f1 = (200.0 / 3 + 80) / 2, ja = (50 + 200.0 / 3) / 2;
  c.require(std::abs(r.accuracy - 75) <= kHandCheckTolerance, "4-frame accuracy");
  c.require(std::abs(r.macro_f1 - f1) <= kHandCheckTolerance, "4-frame macro F1");
  c.require(std::abs(r.macro_jaccard - ja) <= kHandCheckTolerance, "4-frame macro JA");
  c.detail << "exact matches " << single << "/1000 single, " << joint << "/1000 joint; 4-frame F1="
           << fmt(r.macro_f1, 4) << " JA=" << fmt(r.macro_jaccard, 4);
}

void visual_metrics(Check& c) {
  const auto a = testing::random_image(64, 64, 5, 3);
  const double p = psnr(a, a);
  const double s = ssim(a, a);
  c.require(std::isinf(p) && p > 0, "PSNR(a,a) = inf");
  c.require(s == 1.0, "SSIM(a,a) = 1");

  const auto self = testing::gaussian_features(2000, std::vector<double>(8, 0.0), 1);
  const double fid_self = fid(self, self);
  c.require(fid_self <= kFidSelfTolerance, "FID(A,A) <= 1e-6");

  const std::vector<double> mu{1, -0.5, 0.75, 0, 0.25, 1.5, -1, 0.5};
  double norm2 = 0;
  for (double m : mu) norm2 += m * m;
  const double fid_shift = fid(testing::gaussian_features(10000, std::vector<double>(8, 0.0), 2),
                               testing::gaussian_features(10000, mu, 3));
  c.require(std::abs(fid_shift - norm2) <= kFidRelativeTolerance * norm2, "FID within 5% of |mu|^2");

  // Independent halves of fresh N(0, I) pools; the spread of the estimates
  // gives the standard error of their mean.
  std::vector<double> kids;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto pool = testing::gaussian_features(400, std::vector<double>(8, 0.0), 7000 + t);
    std::vector<double> first(pool.values.begin(), pool.values.begin() + 200 * 8);
    std::vector<double> second(pool.values.begin() + 200 * 8, pool.values.end());
    kids.push_back(kid(FeatureSet(200, 8, first), FeatureSet(200, 8, second)));
  }
  double mean = 0, var = 0;
  for (double k : kids) mean += k;
  mean /= static_cast<double>(kids.size());
  for (double k : kids) var += (k - mean) * (k - mean);
  const double se = std::sqrt(var / static_cast<double>(kids.size() - 1) / static_cast<double>(kids.size()));
  c.require(std::abs(mean) <= kSigmas * se, "KID self-split within 3 SE of 0");

  RandomStream rng(9);
  double worst_lpips = 0;
  for (int t = 0; t < 50; ++t) {
    auto acts = [&] {
      Activations out;
      for (auto [ch, h, w] : {std::tuple{3, 8, 8}, std::tuple{16, 4, 4}, std::tuple{32, 2, 2}}) {
        std::vector<double> v(static_cast<std::size_t>(ch * h * w));
        for (auto& x : v) x = rng.normal();
        out.push_back({"l" + std::to_string(ch), static_cast<std::size_t>(ch), static_cast<std::size_t>(h),
                       static_cast<std::size_t>(w), v});
      }
      return out;
    };
    const auto x = acts(), y = acts();
    worst_lpips = std::max(worst_lpips, std::abs(lpips(x, y) - testing::double_loop_lpips(x, y)));
  }
  c.require(worst_lpips <= kLpipsTolerance, "LPIPS matches double-loop oracle");

  c.detail << "psnr=" << p << " ssim=" << s << " fid_self=" << fid_self << " fid_shift=" << fmt(fid_shift)
           << " (|mu|^2=" << fmt(norm2) << ") kid_mean=" << mean << " se=" << se << " lpips_err=" << worst_lpips;
}

// Sequence of `frames` steps with exactly `transitions` state changes at
// random positions.
AnnotatedSequence sparse_sequence(const LevelSchema& schema, std::size_t frames, std::size_t transitions,
                                  RandomStream& rng, const std::string& id) {
  std::set<std::size_t> at;
  while (at.size() < transitions) at.insert(1 + rng.below(frames - 1));
  std::vector<StateVector> pool;
  for (const auto& phase : schema.level(1).labels)
    for (const auto& step : schema.allowed_labels(2, phase)) pool.push_back(StateVector{{phase, step}});
  AnnotatedSequence seq;
  seq.sequence_id = id;
  std::size_t current = rng.below(pool.size());
  for (std::size_t i = 0; i < frames; ++i) {
    if (at.count(i)) current = (current + 1 + rng.below(pool.size() - 1)) % pool.size();
    seq.frames.push_back({static_cast<std::int64_t>(i), "", pool[current]});
  }
  return seq;
}

void augmentation_balance(Check& c) {
  const auto schema = testing::phase_step_schema();
  RandomStream rng(404);
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  double sparsest = 0, densest = std::numeric_limits<double>::infinity();
  std::size_t compared = 0, identical = 0;
  for (int s = 0; s < 20; ++s) {
    const double target = rng.uniform(55, 495);
    const std::size_t frames = 6000;
    const auto eps = static_cast<std::size_t>(std::llround(static_cast<double>(frames) / (target + 1)));
    auto raw = sparse_sequence(schema, frames, eps, rng, "aug" + std::to_string(s));
    MemoryImageSource images;
    const bool with_images = s < 5;
    if (with_images) attach_images(raw, images, 8, static_cast<std::uint64_t>(s));

    const auto seq = resample(raw, 1);
    const auto idx = find_transitions(seq);
    const auto n = seq.steps();
    const auto e = static_cast<std::int64_t>(idx.count());
    const double sparsity = static_cast<double>(n - e) / static_cast<double>(e);
    c.require(sparsity >= 50 && sparsity <= 500, "sparsity in [50, 500]");
    sparsest = std::max(sparsest, sparsity);
    densest = std::min(densest, sparsity);

    AugmentConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    const auto samples = augment_transitions(seq, idx, cfg, schema, with_images ? &images : nullptr);
    const double balance = static_cast<double>(samples.size()) / static_cast<double>(n - e);
    lo = std::min(lo, balance);
    hi = std::max(hi, balance);

    if (!with_images) continue;
    cfg.max_shift = 0;
    cfg.image_noise = 0;
    for (const auto& v : augment_transitions(seq, idx, cfg, schema, &images)) {
      const auto src = static_cast<std::size_t>(v.source_k - 1);
      ++compared;
      if (v.delta == 0 && v.anchor_k == v.source_k && v.state == seq.states[src] && v.image &&
          *v.image == *images.load(seq.image_paths[src]))
        ++identical;
    }
  }
  c.require(lo >= kBalanceLow && hi <= kBalanceHigh, "balance in [0.9, 1.1]");
  c.require(compared > 0 && identical == compared, "degenerate variants equal their sources");
  c.detail << "sparsity " << fmt(densest, 1) << ".." << fmt(sparsest, 1) << ":1, balance " << fmt(lo) << ".."
           << fmt(hi) << "; " << identical << "/" << compared << " degenerate variants identical";
}

std::string dump(const Trajectory& t) {
  std::ostringstream out;
  append_trajectory(out, t);
  return out.str();
}

bool same_images(const Trajectory& a, const Trajectory& b) {
  if (a.entries.size() != b.entries.size()) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    if (!a.entries[i].image || !b.entries[i].image || *a.entries[i].image != *b.entries[i].image) return false;
  return true;
}

Errc error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected an error");
}

void protocol_transparency(Check& c) {
  auto schema = std::make_shared<LevelSchema>(testing::phase_step_schema());
  auto images = std::make_shared<MemoryImageSource>();
  std::vector<Clip> clips;
  ClipBuildOptions opts;
  opts.horizons = {5, 30};
  opts.stride = 7;
  for (int s = 0; clips.size() < 50; ++s) {
    auto seq = testing::random_sequence(*schema, 120, 1, 900 + static_cast<std::uint64_t>(s), 0.15,
                                        "rseq" + std::to_string(s));
    attach_images(seq, *images, 16, 50 + static_cast<std::uint64_t>(s));
    const auto built = build_clips(seq, opts);
    clips.insert(clips.end(), built.begin(), built.end());
  }
  clips.resize(50);

  const std::string dm = "noisy:p=0.2/0.3,mode=corrective,p_stc=0.1,seed=3";
  const std::string vg = "noise:sigma=5,seed=2";
  const auto local = evaluate_clips(clips, schema, images, harness_config(1, 5, dm, vg));

  BackendEnvironment env{schema, TruthBook::from_clips(clips, 1, 5), images};
  MockServer server(schema, make_decision_stack(parse_decision_descriptor(dm), env),
                    make_generator(parse_generator_descriptor(vg), env));
  server.start();
  const auto remote = evaluate_clips(
      clips, schema, images,
      harness_config(1, 5, "remote:endpoint=" + server.endpoint(), "remote:endpoint=" + server.endpoint()));
  const auto served = server.request_count();
  server.stop();

  std::size_t equal = 0;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const auto& a = local.clips[i];
    const auto& b = remote.clips[i];
    if (a.trajectory && b.trajectory && !a.failure && !b.failure && dump(*a.trajectory) == dump(*b.trajectory) &&
        same_images(*a.trajectory, *b.trajectory) && a.score && b.score &&
        a.score->objective == b.score->objective)
      ++equal;
  }
  std::ostringstream ta, tb;
  write_score_table(ta, local, schema->depth());
  write_score_table(tb, remote, schema->depth());
  c.require(equal == clips.size(), "remote trajectories identical to in-process");
  c.require(ta.str() == tb.str(), "score tables identical");
  c.detail << equal << "/" << clips.size() << " clips identical over " << served << " requests; ";

  // Invariant violations: an out-of-set label and an out-of-range level.
  auto liar = std::make_shared<testing::FnAgent>(
      [](const StepContext&, std::size_t, const StateVector&, std::span<const std::string>) { return "P9"; });
  DecisionStack lying;
  lying.controller = std::make_shared<testing::FnController>(
      [](const StepContext& ctx, const StateVector&) {
        return ctx.step == 1 ? TransitionDecision::at(7) : TransitionDecision::at(1);
      });
  lying.agents = {liar, liar};
  MockServer bad(schema, lying, std::make_shared<IdentityGenerator>());
  bad.start();
  auto backend = std::make_shared<RemoteDecisionBackend>(std::make_shared<RemoteClient>(bad.endpoint()), schema);
  DecisionStack stack{backend, {backend, backend}, 1};
  const StateVector s0{{"P1", "s11"}};
  const auto img = testing::gray_image(4, 4, 0);

  auto before = bad.request_count();
  const auto label_code = error_code([&] { decide_next_state(stack, *schema, {"c", 0}, s0, img); });
  const auto label_requests = bad.request_count() - before;
  before = bad.request_count();
  const auto level_code = error_code([&] { decide_next_state(stack, *schema, {"c", 1}, s0, img); });
  const auto level_requests = bad.request_count() - before;
  bad.stop();

  c.require(label_code == Errc::InvalidAgentOutput && label_requests == 2 && liar->calls == 1,
            "out-of-set label rejected without retry");
  c.require(level_code == Errc::InvalidAgentOutput && level_requests == 1, "out-of-range level rejected");
  c.detail << "out-of-set label: " << to_string(label_code) << " after " << label_requests
           << " requests; bad level: " << to_string(level_code) << " after " << level_requests << " request";
}

void regression_fit(Check& c) {
  std::vector<std::pair<double, double>> planted;
  for (double acc : {12.0, 25.5, 33.0, 47.25, 56.0, 68.5, 81.0, 95.0}) planted.emplace_back(acc, 100 - 2 * acc);
  const auto fit = fit_accuracy_fid(planted);
  c.require(fit.r == -1.0, "r = -1");
  c.require(fit.max_residual < kResidualTolerance, "residual < 1e-9");
  c.require(std::abs(fit.slope - 2) < kResidualTolerance && std::abs(fit.intercept - 100) < kResidualTolerance,
            "slope 2, intercept 100");
  const std::vector<std::pair<double, double>> pair{{43.3, 70.63}, {40.58, 94.82}};
  const auto two = fit_accuracy_fid(pair);
  c.require(two.r < 0, "two-point pattern has r < 0");
  c.detail << "planted: slope=" << fit.slope << " intercept=" << fit.intercept << " r=" << fit.r
           << " residual=" << fit.max_residual << "; two-point r=" << two.r << " slope=" << fmt(two.slope, 3);
}

}  // namespace
}  // namespace mstp

int main() {
  using namespace mstp;
  struct Criterion {
    int id;
    const char* name;
    void (*run)(Check&);
  };
  const Criterion criteria[] = {
      {1, "product-bound", product_bound_rows},      {2, "dataset-table", dataset_table},
      {3, "indicator-gating", indicator_gating},     {4, "oracle-closure", oracle_closure},
      {5, "independence-law", independence_law},     {6, "metrics-oracle", metrics_oracle},
      {7, "visual-metrics", visual_metrics},         {8, "augmentation-balance", augmentation_balance},
      {9, "protocol-transparency", protocol_transparency}, {10, "regression-fit", regression_fit},
  };
  log::init_from_env();

  int failures = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    check.require(secs <= kBudget[cr.id], "runtime budget " + fmt(kBudget[cr.id], 0) + " s");
    if (!check.ok) ++failures;
    std::cout << (check.ok ? "PASS" : "FAIL") << "  " << std::setw(2) << cr.id << "  " << std::left << std::setw(22)
              << cr.name << std::right << " " << std::fixed << std::setprecision(3) << secs << "s  "
              << check.detail.str() << std::defaultfloat << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
