#include <cmath>

#include <gtest/gtest.h>

#include "mstp/error.hpp"
#include "mstp/generation.hpp"
#include "mstp/image_metrics.hpp"
#include "synthetic.hpp"

namespace mstp {
namespace {

const StateVector kState{{"P1", "s11"}};

TEST(Identity, ReturnsInputUnchanged) {
  IdentityGenerator gen;
  auto in = std::make_shared<const ImageBuffer>(testing::random_image(16, 8, 1, 3));
  const auto out = generate_next(gen, {"c", 0}, kState, in);
  EXPECT_EQ(*out, *in);
}

TEST(Passthrough, ReturnsNextAnnotatedFrame) {
  auto seq = testing::random_sequence(testing::phase_step_schema(), 5, 1, 2);
  auto images = std::make_shared<MemoryImageSource>();
  for (auto& f : seq.frames) {
    f.image_path = "f" + std::to_string(f.index) + ".png";
    images->put(f.image_path, testing::random_image(8, 8, static_cast<std::uint64_t>(f.index) + 100));
  }
  auto truth = testing::whole_truth(seq, "c");
  PassthroughGenerator gen(truth, images);
  auto current = images->load("f0.png");
  for (std::int64_t k = 0; k < 4; ++k) {
    const auto out = generate_next(gen, {"c", k}, kState, current);
    EXPECT_EQ(*out, *images->load("f" + std::to_string(k + 1) + ".png"));
    current = out;
  }
  EXPECT_THROW(generate_next(gen, {"c", 4}, kState, current), Error);
}

TEST(Passthrough, UnboundIsMissingGroundTruth) {
  PassthroughGenerator gen(nullptr, nullptr);
  auto in = std::make_shared<const ImageBuffer>(testing::gray_image(4, 4, 9));
  try {
    generate_next(gen, {"c", 0}, kState, in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingGroundTruth);
  }
}

TEST(Noise, PsnrAboveUniformNoiseBound) {
  NoiseGenerator gen(10, 3);
  auto in = std::make_shared<const ImageBuffer>(testing::gray_image(64, 64, 128));
  const double bound = 10 * std::log10(255.0 * 255.0 / (100.0 / 3.0)) - 0.5;
  for (std::int64_t k = 0; k < 20; ++k) {
    const auto out = generate_next(gen, {"c", k}, kState, in);
    EXPECT_GE(psnr(*out, *in), bound);
    for (std::size_t i = 0; i < in->data().size(); ++i) {
      EXPECT_LE(std::abs(int(out->data()[i]) - int(in->data()[i])), 10);
    }
  }
}

TEST(Noise, ClampsToRange) {
  NoiseGenerator gen(50, 1);
  auto black = std::make_shared<const ImageBuffer>(testing::gray_image(32, 32, 0));
  auto white = std::make_shared<const ImageBuffer>(testing::gray_image(32, 32, 255));
  const auto dark = generate_next(gen, {"c", 0}, kState, black);
  const auto bright = generate_next(gen, {"c", 0}, kState, white);
  for (auto v : dark->data()) EXPECT_LE(v, 50);
  for (auto v : bright->data()) {
    EXPECT_LE(v, 255);
    EXPECT_GE(v, 205);
  }
}

TEST(Noise, DeterministicAndShapePreserving) {
  NoiseGenerator a(10, 7), b(10, 7), c(10, 8);
  auto in = std::make_shared<const ImageBuffer>(testing::random_image(20, 10, 4, 3, 12));
  const auto x = a.generate({"clip", 5}, kState, in);
  EXPECT_EQ(*x, *b.generate({"clip", 5}, kState, in));
  EXPECT_NE(*x, *c.generate({"clip", 5}, kState, in));
  EXPECT_NE(*x, *a.generate({"clip", 6}, kState, in));
  EXPECT_TRUE(x->same_shape(*in));
}

class ShrinkingGenerator : public Generator {
 public:
  std::shared_ptr<const ImageBuffer> generate(const StepContext&, const StateVector&,
                                              std::shared_ptr<const ImageBuffer>) override {
    return std::make_shared<const ImageBuffer>(testing::gray_image(2, 2, 0));
  }
};

TEST(GenerateNext, RejectsShapeChange) {
  ShrinkingGenerator gen;
  auto in = std::make_shared<const ImageBuffer>(testing::gray_image(4, 4, 0));
  try {
    generate_next(gen, {"c", 0}, kState, in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(Factory, BuildsEachLocalKind) {
  BackendEnvironment env;
  EXPECT_TRUE(dynamic_cast<IdentityGenerator*>(make_generator(parse_generator_descriptor("identity"), env).get()));
  EXPECT_TRUE(dynamic_cast<NoiseGenerator*>(make_generator(parse_generator_descriptor("noise:sigma=2"), env).get()));
  EXPECT_TRUE(
      dynamic_cast<PassthroughGenerator*>(make_generator(parse_generator_descriptor("passthrough"), env).get()));
}

}  // namespace
}  // namespace mstp
