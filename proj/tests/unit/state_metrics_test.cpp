#include <map>
#include <set>

#include <gtest/gtest.h>

#include "mstp/error.hpp"
#include "mstp/random.hpp"
#include "mstp/state_metrics.hpp"
#include "oracles.hpp"

namespace mstp {
namespace {

using Labels = std::vector<std::string>;

const ClassMetrics& find_class(const StateMetricsReport& r, const std::string& label) {
  for (const auto& c : r.classes)
    if (c.label == label) return c;
  throw std::runtime_error("class " + label + " missing");
}

TEST(StateMetrics, FourFrameExample) {
  const Labels truth{"A", "A", "B", "B"}, pred{"A", "B", "B", "B"};
  const auto r = state_metrics(pred, truth);
  EXPECT_NEAR(r.accuracy, 75, 1e-9);
  const auto& a = find_class(r, "A");
  EXPECT_NEAR(a.precision, 100, 1e-9);
  EXPECT_NEAR(a.recall, 50, 1e-9);
  EXPECT_NEAR(a.jaccard, 50, 1e-9);
  EXPECT_NEAR(a.f1, 200.0 / 3, 1e-9);
  const auto& b = find_class(r, "B");
  EXPECT_NEAR(b.precision, 200.0 / 3, 1e-9);
  EXPECT_NEAR(b.recall, 100, 1e-9);
  EXPECT_NEAR(b.jaccard, 200.0 / 3, 1e-9);
  EXPECT_NEAR(b.f1, 80, 1e-9);
  EXPECT_NEAR(r.macro_f1, (200.0 / 3 + 80) / 2, 1e-9);
  EXPECT_NEAR(r.macro_jaccard, (50 + 200.0 / 3) / 2, 1e-9);
  EXPECT_EQ(r.frame_count, 4u);
}

TEST(StateMetrics, PerfectAndDisjoint) {
  const Labels t{"x", "y", "y", "z"};
  const auto perfect = state_metrics(t, t);
  EXPECT_EQ(perfect.accuracy, 100);
  EXPECT_EQ(perfect.macro_precision, 100);
  EXPECT_EQ(perfect.macro_recall, 100);
  EXPECT_EQ(perfect.macro_f1, 100);
  EXPECT_EQ(perfect.macro_jaccard, 100);

  const auto disjoint = state_metrics(Labels{"p", "q", "p", "q"}, t);
  EXPECT_EQ(disjoint.accuracy, 0);
  for (const auto& c : disjoint.classes) EXPECT_EQ(c.jaccard, 0);
  EXPECT_EQ(disjoint.classes.size(), 5u);
  EXPECT_EQ(find_class(disjoint, "x").precision, 0);  // never predicted
}

TEST(StateMetrics, Errors) {
  try {
    state_metrics(Labels{"a"}, Labels{"a", "b"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::LengthMismatch);
  }
  try {
    state_metrics(Labels{}, Labels{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyInput);
  }
}

Labels random_labels(RandomStream& rng, std::size_t n, std::size_t classes) {
  Labels out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("c" + std::to_string(rng.below(classes)));
  return out;
}

TEST(StateMetrics, MatchesConfusionMatrixOracle) {
  RandomStream rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = 1 + rng.below(60);
    const auto classes = 1 + rng.below(8);
    const auto truth = random_labels(rng, n, classes);
    auto pred = truth;
    for (auto& p : pred)
      if (rng.uniform() < 0.4) p = "c" + std::to_string(rng.below(classes + 2));
    ASSERT_EQ(state_metrics(pred, truth), testing::confusion_matrix_metrics(pred, truth)) << "trial " << trial;
  }
}

TEST(StateMetrics, PrecisionRecallSwap) {
  RandomStream rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto truth = random_labels(rng, 40, 5);
    const auto pred = random_labels(rng, 40, 5);
    const auto forward = state_metrics(pred, truth);
    const auto backward = state_metrics(truth, pred);
    ASSERT_EQ(forward.classes.size(), backward.classes.size());
    for (std::size_t c = 0; c < forward.classes.size(); ++c) {
      EXPECT_EQ(forward.classes[c].precision, backward.classes[c].recall);
      EXPECT_EQ(forward.classes[c].recall, backward.classes[c].precision);
      EXPECT_EQ(forward.classes[c].jaccard, backward.classes[c].jaccard);
    }
  }
}

TEST(JointMetrics, TupleEquality) {
  const std::vector<StateVector> truth{{{"P1", "s11"}}, {{"P1", "s12"}}, {{"P2", "s21"}}};
  const std::vector<StateVector> pred{{{"P1", "s12"}}, {{"P1", "s11"}}, {{"P2", "s22"}}};
  EXPECT_EQ(joint_state_metrics(pred, truth).accuracy, 0);
  EXPECT_EQ(level_state_metrics(pred, truth, 1).accuracy, 100);
  EXPECT_EQ(joint_state_metrics(truth, truth).accuracy, 100);
}

TEST(JointMetrics, EqualsStringifiedTuples) {
  RandomStream rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<StateVector> pred, truth;
    Labels ps, ts;
    for (int i = 0; i < 6; ++i) {
      truth.push_back(StateVector{{"a" + std::to_string(rng.below(2)), "b" + std::to_string(rng.below(3))}});
      pred.push_back(StateVector{{"a" + std::to_string(rng.below(2)), "b" + std::to_string(rng.below(3))}});
      ts.push_back(truth.back().labels[0] + "|" + truth.back().labels[1]);
      ps.push_back(pred.back().labels[0] + "|" + pred.back().labels[1]);
    }
    ASSERT_EQ(joint_state_metrics(pred, truth), state_metrics(ps, ts));
    ASSERT_EQ(joint_state_metrics(pred, truth), testing::confusion_matrix_metrics(ps, ts));
  }
}

TEST(StateMetrics, JsonRoundTripAndTable) {
  const auto r = state_metrics(Labels{"A", "B", "B", "B"}, Labels{"A", "A", "B", "B"});
  const nlohmann::json j = r;
  EXPECT_EQ(nlohmann::json::parse(j.dump()).get<StateMetricsReport>(), r);
  const auto table = metrics_table(r, "phase");
  EXPECT_NE(table.find("phase.accuracy\tall\t"), std::string::npos);
  EXPECT_NE(table.find("phase.f1\tmacro\t"), std::string::npos);
  EXPECT_NE(table.find("\tA\t"), std::string::npos);
}

}  // namespace
}  // namespace mstp
