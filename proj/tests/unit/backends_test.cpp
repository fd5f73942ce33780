#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "mstp/backends.hpp"
#include "mstp/descriptor.hpp"
#include "mstp/error.hpp"
#include "synthetic.hpp"

namespace mstp {
namespace {

const ImageBuffer kImage = testing::gray_image(2, 2, 0);

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::InvalidArgument;
}

// Three frames: (P1,s11) -> (P1,s12) -> (P1,s12).
AnnotatedSequence three_step_sequence() {
  AnnotatedSequence seq;
  seq.sequence_id = "three";
  seq.frames = {{0, "", StateVector{{"P1", "s11"}}},
                {1, "", StateVector{{"P1", "s12"}}},
                {2, "", StateVector{{"P1", "s12"}}}};
  return seq;
}

TEST(GroundTruthOracle, FineChangeGivesLevelTwo) {
  auto truth = testing::whole_truth(three_step_sequence(), "c");
  GroundTruthOracle oracle(truth);
  EXPECT_EQ(oracle.decide({"c", 0}, StateVector{{"P1", "s11"}}, kImage), TransitionDecision::at(2));
  EXPECT_TRUE(oracle.decide({"c", 1}, StateVector{{"P1", "s12"}}, kImage).is_continue());
}

TEST(GroundTruthOracle, MissingClipOrStep) {
  auto truth = testing::whole_truth(three_step_sequence(), "c");
  GroundTruthOracle oracle(truth);
  EXPECT_EQ(code_of([&] { oracle.decide({"other", 0}, StateVector{{"P1", "s11"}}, kImage); }),
            Errc::MissingGroundTruth);
  EXPECT_EQ(code_of([&] { oracle.decide({"c", 2}, StateVector{{"P1", "s12"}}, kImage); }),
            Errc::MissingGroundTruth);
  EXPECT_EQ(code_of([] { GroundTruthOracle(nullptr); }), Errc::BackendUnavailable);
}

TEST(GroundTruthOracle, ClosureOnRandomSequences) {
  const auto schema = testing::phase_step_schema();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto seq = testing::random_sequence(schema, 200, 1, seed, 0.2);
    DecisionBackendDescriptor desc;
    const auto stack = make_decision_stack(
        desc, {std::make_shared<LevelSchema>(schema), testing::whole_truth(seq, "c"), nullptr});
    for (std::size_t k = 0; k + 1 < seq.frames.size(); ++k) {
      const auto out =
          decide_next_state(stack, schema, {"c", static_cast<std::int64_t>(k)}, seq.frames[k].state, kImage);
      ASSERT_EQ(out.state, seq.frames[k + 1].state) << "seed " << seed << " k " << k;
      EXPECT_EQ(out.decision, coarsest_change(seq.frames[k].state, seq.frames[k + 1].state));
    }
  }
}

TEST(CoarsestChange, ScansCoarseToFine) {
  EXPECT_TRUE(coarsest_change(StateVector{{"a", "b", "c"}}, StateVector{{"a", "b", "c"}}).is_continue());
  EXPECT_EQ(coarsest_change(StateVector{{"a", "b", "c"}}, StateVector{{"a", "x", "y"}}), TransitionDecision::at(2));
  EXPECT_EQ(coarsest_change(StateVector{{"a", "b", "c"}}, StateVector{{"z", "b", "y"}}), TransitionDecision::at(1));
}

TEST(NoisyOracle, ZeroNoiseMatchesGroundTruth) {
  const auto schema = testing::phase_step_schema();
  const auto seq = testing::random_sequence(schema, 300, 1, 5, 0.3);
  auto truth = testing::whole_truth(seq, "c");
  GroundTruthOracle gt(truth);
  for (const auto* mode : {"independent", "corrective"}) {
    NoisyOracle noisy(NoisyOracleConfig::from_params({{"p", 0.0}, {"mode", mode}, {"seed", 9}}, 2), truth, 2);
    for (std::size_t k = 0; k + 1 < seq.frames.size(); ++k) {
      const StepContext ctx{"c", static_cast<std::int64_t>(k)};
      const auto& s = seq.frames[k].state;
      ASSERT_EQ(noisy.decide(ctx, s, kImage), gt.decide(ctx, s, kImage));
      for (std::size_t l = 1; l <= 2; ++l) {
        const auto allowed = schema.allowed_labels(l, l == 1 ? "" : seq.frames[k + 1].state.at(1));
        ASSERT_EQ(noisy.predict(ctx, l, s, allowed, kImage), gt.predict(ctx, l, s, allowed, kImage));
      }
    }
  }
}

TEST(NoisyOracle, MarginalAccuracyIsOneMinusP) {
  const auto schema = testing::full_product_schema({4, 4, 4});
  const auto seq = testing::random_sequence(schema, 20001, 1, 3, 0.5);
  auto truth = testing::whole_truth(seq, "c");
  const std::vector<double> p{0.3, 0.4, 0.5};
  NoisyOracle noisy(NoisyOracleConfig::from_params({{"p", p}, {"seed", 1}}, 3), truth, 3);
  const double n = 20000;
  std::vector<double> hits(3, 0);
  double joint = 0;
  for (std::int64_t k = 0; k < 20000; ++k) {
    const auto& next = seq.frames[static_cast<std::size_t>(k) + 1].state;
    bool all = true;
    for (std::size_t l = 1; l <= 3; ++l) {
      const auto allowed = schema.allowed_labels(l, l == 1 ? "" : next.at(l - 1));
      const bool ok = noisy.predict({"c", k}, l, next, allowed, kImage) == next.at(l);
      hits[l - 1] += ok;
      all = all && ok;
    }
    joint += all;
  }
  for (std::size_t l = 0; l < 3; ++l) {
    const double q = 1 - p[l];
    EXPECT_NEAR(hits[l] / n, q, 3 * std::sqrt(q * (1 - q) / n)) << "level " << l + 1;
  }
  const double q = 0.7 * 0.6 * 0.5;
  EXPECT_NEAR(joint / n, q, 3 * std::sqrt(q * (1 - q) / n));
}

TEST(NoisyOracle, DeterministicPerRequest) {
  const auto schema = testing::phase_step_schema();
  const auto seq = testing::random_sequence(schema, 50, 1, 8, 0.3);
  auto truth = testing::whole_truth(seq, "c");
  const auto cfg = NoisyOracleConfig::from_params({{"p", 0.5}, {"p_stc", 0.5}, {"seed", 4}}, 2);
  NoisyOracle a(cfg, truth, 2), b(cfg, truth, 2);
  for (std::int64_t k = 48; k >= 0; --k) {
    const auto& s = seq.frames[static_cast<std::size_t>(k)].state;
    EXPECT_EQ(a.decide({"c", k}, s, kImage), b.decide({"c", k}, s, kImage));
    const auto allowed = schema.allowed_labels(1, "");
    EXPECT_EQ(a.predict({"c", k}, 1, s, allowed, kImage), b.predict({"c", k}, 1, s, allowed, kImage));
  }
}

TEST(NoisyOracle, ConfigValidation) {
  EXPECT_EQ(code_of([] { NoisyOracleConfig::from_params({{"p", {0.1, 0.2}}}, 3); }), Errc::InvalidArgument);
  EXPECT_EQ(code_of([] { NoisyOracleConfig::from_params({{"p", 0.1}, {"mode", "weird"}}, 2); }),
            Errc::InvalidArgument);
  auto truth = testing::whole_truth(three_step_sequence(), "c");
  NoisyOracleConfig bad;
  bad.level_error = {0.1, 1.5};
  EXPECT_EQ(code_of([&] { NoisyOracle(bad, truth, 2); }), Errc::InvalidArgument);
  const auto cfg = NoisyOracleConfig::from_params({{"p", {0.1, 0.2}}, {"mode", "corrective"}, {"seed", 3}}, 2);
  EXPECT_EQ(cfg.mode, NoisyOracleConfig::Mode::Corrective);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_DOUBLE_EQ(cfg.level_error[1], 0.2);
}

// Two-level chain over a product schema; level 1 ignores the parent key.
MarkovModel two_level_model(const LevelSchema& schema) {
  nlohmann::json rows1 = nlohmann::json::array();
  for (const auto& from : schema.level(1).labels) {
    rows1.push_back({{"from", from}, {"to", {{"l1_0", 0.25}, {"l1_1", 0.75}}}});
  }
  nlohmann::json rows2 = nlohmann::json::array();
  for (const auto& parent : schema.level(1).labels) {
    for (const auto& from : schema.level(2).labels) {
      rows2.push_back({{"parent", parent}, {"from", from}, {"to", {{"l2_0", 1.0}}}});
    }
  }
  nlohmann::json j = {{"levels",
                       {{{"initial", {{"", {{"l1_0", 1.0}}}}}, {"rows", rows1}},
                        {{"initial", {{"l1_0", {{"l2_1", 1.0}}}, {"l1_1", {{"l2_1", 1.0}}}}}, {"rows", rows2}}}}};
  return markov_from_json(j);
}

TEST(Markov, DegenerateRowAlwaysWins) {
  const auto schema = testing::full_product_schema({2, 2});
  const auto model = two_level_model(schema);
  model.validate(schema);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    EXPECT_EQ(markov_sample(model, StateVector{{"l1_1", "l2_1"}}, 2, "l1_0", seed), "l2_0");
  }
  EXPECT_EQ(model.sample_initial(5), (StateVector{{"l1_0", "l2_1"}}));
}

TEST(Markov, ReproducibleForFixedSeed) {
  const auto schema = testing::full_product_schema({2, 2});
  const auto model = two_level_model(schema);
  const StateVector s{{"l1_0", "l2_0"}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    EXPECT_EQ(markov_sample(model, s, 1, "", seed), markov_sample(model, s, 1, "", seed));
  }
}

TEST(Markov, FrequenciesMatchRow) {
  const auto schema = testing::full_product_schema({2, 2});
  const auto model = two_level_model(schema);
  const StateVector s{{"l1_0", "l2_0"}};
  const int n = 100000;
  int ones = 0;
  for (int i = 0; i < n; ++i) ones += markov_sample(model, s, 1, "", derive_seed(42, "draw", i, 0)) == "l1_1";
  const double p = 0.75;
  EXPECT_NEAR(static_cast<double>(ones) / n, p, 3 * std::sqrt(p * (1 - p) / n));
}

TEST(Markov, MissingRowAndValidation) {
  const auto schema = testing::full_product_schema({2, 2});
  auto model = two_level_model(schema);
  EXPECT_EQ(code_of([&] { markov_sample(model, StateVector{{"l1_0", "l2_0"}}, 2, "nope", 1); }), Errc::MissingRow);
  EXPECT_EQ(code_of([&] { markov_sample(model, StateVector{{"l1_0", "l2_0"}}, 3, "", 1); }), Errc::MissingRow);

  model.levels[0].rows.begin()->second.outcomes[0].second = 0.5;  // row sums to 1.25
  EXPECT_EQ(code_of([&] { model.validate(schema); }), Errc::InvalidArgument);
}

TEST(Markov, RoundTripsThroughJson) {
  const auto schema = testing::full_product_schema({2, 2});
  const auto model = two_level_model(schema);
  const auto again = markov_from_json(markov_to_json(model));
  EXPECT_EQ(markov_to_json(again), markov_to_json(model));
}

TEST(Markov, ControllerAgreesWithCascade) {
  const auto schema = testing::full_product_schema({3, 3});
  nlohmann::json rows1 = nlohmann::json::array(), rows2 = nlohmann::json::array();
  for (const auto& a : schema.level(1).labels) {
    rows1.push_back({{"from", a}, {"to", {{"l1_0", 0.2}, {"l1_1", 0.3}, {"l1_2", 0.5}}}});
    for (const auto& b : schema.level(2).labels) {
      rows2.push_back({{"parent", a}, {"from", b}, {"to", {{"l2_0", 0.6}, {"l2_1", 0.2}, {"l2_2", 0.2}}}});
    }
  }
  auto model = std::make_shared<MarkovModel>(
      markov_from_json({{"levels", {{{"rows", rows1}}, {{"rows", rows2}}}}}));
  MarkovBackend backend(model, 17);
  std::vector<std::shared_ptr<LevelAgent>> agents(2, std::make_shared<MarkovBackend>(model, 17));
  StateVector s{{"l1_0", "l2_0"}};
  for (std::int64_t k = 0; k < 500; ++k) {
    const auto d = backend.decide({"c", k}, s, kImage);
    if (d.is_continue()) continue;
    const auto next = cascade_predict(schema, d.level(), s, kImage, agents, {"c", k});
    EXPECT_EQ(coarsest_change(s, next), d) << "k " << k;
    s = next;
  }
}

TEST(Scripted, ParsesAllRuleKinds) {
  const auto table = ScriptedTable::parse(
      "# step target value\n"
      "3 stc continue\n"
      "*  stc transition 2   # trailing comment\n"
      "\n"
      "* 1 A -> B\n"
      "5 2 b1\n");
  ASSERT_EQ(table.rules().size(), 4u);
  EXPECT_EQ(*table.rules()[0].step, 3);
  EXPECT_TRUE(table.rules()[0].decision->is_continue());
  EXPECT_FALSE(table.rules()[1].step);
  EXPECT_EQ(*table.rules()[1].decision, TransitionDecision::at(2));
  EXPECT_EQ(table.rules()[2].level, 1u);
  EXPECT_EQ(*table.rules()[2].from, "A");
  EXPECT_EQ(table.rules()[2].label, "B");
  EXPECT_EQ(table.rules()[3].label, "b1");
}

TEST(Scripted, FirstMatchingRuleWins) {
  auto table = std::make_shared<ScriptedTable>(ScriptedTable::parse("3 stc continue\n* stc transition 1\n"
                                                                     "* 1 A -> B\n* 1 B\n"));
  ScriptedBackend backend(table);
  EXPECT_TRUE(backend.decide({"c", 3}, StateVector{{"A", "a1"}}, kImage).is_continue());
  EXPECT_EQ(backend.decide({"c", 4}, StateVector{{"A", "a1"}}, kImage), TransitionDecision::at(1));
  const std::vector<std::string> allowed{"A", "B"};
  EXPECT_EQ(backend.predict({"c", 0}, 1, StateVector{{"A", "a1"}}, allowed, kImage), "B");
  EXPECT_EQ(backend.predict({"c", 0}, 1, StateVector{{"C", "a1"}}, allowed, kImage), "B");
  EXPECT_EQ(code_of([&] { backend.predict({"c", 0}, 2, StateVector{{"A", "a1"}}, allowed, kImage); }),
            Errc::BackendUnavailable);
}

TEST(Scripted, RejectsMalformedLines) {
  for (const char* text : {"* stc\n", "x stc continue\n", "* stc transition 0\n", "* stc jump\n",
                           "* 0 A\n", "* 1 A -> \n", "* foo A\n"}) {
    EXPECT_EQ(code_of([&] { ScriptedTable::parse(text); }), Errc::ParseError) << text;
  }
}

TEST(Descriptor, ParsesTextForms) {
  auto noisy = parse_decision_descriptor("noisy:p=0.3/0.4/0.5,mode=independent,seed=7");
  EXPECT_EQ(noisy.kind, DecisionKind::Noisy);
  EXPECT_EQ(noisy.params["p"], nlohmann::json({0.3, 0.4, 0.5}));
  EXPECT_EQ(noisy.params["seed"], 7);
  EXPECT_EQ(parse_decision_descriptor("oracle:gt").kind, DecisionKind::GroundTruth);
  EXPECT_EQ(parse_decision_descriptor("markov:chain.json").params["model"], "chain.json");
  EXPECT_EQ(parse_decision_descriptor("scripted:table=/tmp/run/t.txt").params["table"], "/tmp/run/t.txt");
  EXPECT_EQ(parse_decision_descriptor("markov:model=data/2/chain.json").params["model"], "data/2/chain.json");
  const auto remote = parse_decision_descriptor("remote:endpoint=http://h:1,timeout_ms=500");
  EXPECT_EQ(remote.params["endpoint"], "http://h:1");
  EXPECT_EQ(parse_decision_descriptor("remote:http://h:1/x").params["endpoint"], "http://h:1/x");
  EXPECT_EQ(parse_generator_descriptor("noise:sigma=10,seed=1").params["sigma"], 10);
  EXPECT_EQ(parse_generator_descriptor("passthrough").kind, GeneratorKind::Passthrough);
}

TEST(Descriptor, RejectsIncompleteOrOutOfRange) {
  for (const char* text : {"noisy", "noisy:p=1.5", "noisy:p=0.1,mode=weird", "markov", "scripted", "remote",
                           "remote:endpoint=x,retries=-1", "bogus", ":x", "oracle:other"}) {
    EXPECT_EQ(code_of([&] { parse_decision_descriptor(text); }), Errc::InvalidArgument) << text;
  }
  for (const char* text : {"noise", "noise:sigma=-1", "remote", "blur"}) {
    EXPECT_EQ(code_of([&] { parse_generator_descriptor(text); }), Errc::InvalidArgument) << text;
  }
}

TEST(DecisionStackFactory, OneAgentPerLevel) {
  auto schema = std::make_shared<LevelSchema>(testing::phase_step_schema());
  DecisionBackendDescriptor desc;
  desc.kind = DecisionKind::Scripted;
  desc.params = {{"table_text", "* stc continue\n"}};
  const auto stack = make_decision_stack(desc, {schema, nullptr, nullptr}, 3);
  EXPECT_EQ(stack.agents.size(), 2u);
  EXPECT_EQ(stack.retries, 3u);
  EXPECT_TRUE(stack.controller);
  DecisionBackendDescriptor gt;
  EXPECT_EQ(code_of([&] { make_decision_stack(gt, {schema, nullptr, nullptr}); }), Errc::BackendUnavailable);
}

}  // namespace
}  // namespace mstp
