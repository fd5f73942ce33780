#include "mstp/generation.hpp"

#include "mstp/error.hpp"
#include "mstp/random.hpp"
#include "mstp/remote.hpp"

namespace mstp {

PassthroughGenerator::PassthroughGenerator(std::shared_ptr<const TruthBook> truth,
                                           std::shared_ptr<const ImageSource> images)
    : truth_(std::move(truth)), images_(std::move(images)) {}

std::shared_ptr<const ImageBuffer> PassthroughGenerator::generate(const StepContext& ctx, const StateVector&,
                                                                  std::shared_ptr<const ImageBuffer>) {
  if (!truth_ || !images_) {
    throw Error(Errc::MissingGroundTruth, "passthrough generation needs an annotated sequence binding");
  }
  const auto* track = truth_->find(ctx.clip_id);
  const auto next = static_cast<std::size_t>(ctx.step) + 1;
  if (!track || ctx.step < 0 || next >= track->frame_paths.size()) {
    throw Error(Errc::MissingGroundTruth, "no ground-truth frame for clip '" + ctx.clip_id + "' at step " +
                                              std::to_string(next));
  }
  return images_->load(track->frame_paths[next]);
}

NoiseGenerator::NoiseGenerator(double sigma, std::uint64_t seed) : sigma_(sigma), seed_(seed) {
  if (!(sigma >= 0)) throw Error(Errc::InvalidArgument, "noise amplitude must be >= 0");
}

std::shared_ptr<const ImageBuffer> NoiseGenerator::generate(const StepContext& ctx, const StateVector&,
                                                            std::shared_ptr<const ImageBuffer> image) {
  return std::make_shared<const ImageBuffer>(
      add_uniform_noise(*image, sigma_, derive_seed(seed_, ctx.clip_id, ctx.step, 0)));
}

std::shared_ptr<Generator> make_generator(const GeneratorDescriptor& desc, const BackendEnvironment& env) {
  validate(desc);
  const auto& p = desc.params;
  switch (desc.kind) {
    case GeneratorKind::Identity:
      return std::make_shared<IdentityGenerator>();
    case GeneratorKind::Passthrough:
      return std::make_shared<PassthroughGenerator>(env.truth, env.images);
    case GeneratorKind::Noise:
      return std::make_shared<NoiseGenerator>(p.at("sigma").get<double>(), p.value("seed", std::uint64_t{0}));
    case GeneratorKind::Remote:
      return std::make_shared<RemoteGenerator>(
          std::make_shared<RemoteClient>(p.at("endpoint").get<std::string>(), CallPolicy::from_params(p)),
          env.schema);
  }
  throw Error(Errc::InvalidArgument, "unhandled generator kind");
}

std::shared_ptr<const ImageBuffer> generate_next(Generator& generator, const StepContext& ctx,
                                                 const StateVector& next_state,
                                                 std::shared_ptr<const ImageBuffer> image) {
  if (!image) throw Error(Errc::InvalidArgument, "generation needs an input image");
  auto out = generator.generate(ctx, next_state, image);
  if (!out) throw Error(Errc::BackendUnavailable, "generator returned no image");
  require_same_shape(*image, *out, "generated image");
  return out;
}

}  // namespace mstp
