#pragma once

#include <memory>

#include "mstp/agents.hpp"
#include "mstp/backends.hpp"
#include "mstp/descriptor.hpp"
#include "mstp/image.hpp"

namespace mstp {

/// Visual generation: I_{k+1} = VG(S_{k+1}, I_k). Output dimensions, channel
/// count and bit depth always equal the input's. Implementations must be
/// safe to call concurrently for different trajectories.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::shared_ptr<const ImageBuffer> generate(const StepContext& ctx, const StateVector& next_state,
                                                      std::shared_ptr<const ImageBuffer> image) = 0;
};

/// Returns I_k unchanged (the frozen-image baseline).
class IdentityGenerator : public Generator {
 public:
  std::shared_ptr<const ImageBuffer> generate(const StepContext&, const StateVector&,
                                              std::shared_ptr<const ImageBuffer> image) override {
    return image;
  }
};

/// Returns the annotated frame at step k+1 of the bound clip.
class PassthroughGenerator : public Generator {
 public:
  PassthroughGenerator(std::shared_ptr<const TruthBook> truth, std::shared_ptr<const ImageSource> images);
  std::shared_ptr<const ImageBuffer> generate(const StepContext& ctx, const StateVector& next_state,
                                              std::shared_ptr<const ImageBuffer> image) override;

 private:
  std::shared_ptr<const TruthBook> truth_;
  std::shared_ptr<const ImageSource> images_;
};

/// I_k plus uniform noise in [-sigma, sigma], clamped to [0, MAX_I]; the
/// noise stream is keyed on (seed, clip, step).
class NoiseGenerator : public Generator {
 public:
  NoiseGenerator(double sigma, std::uint64_t seed);
  std::shared_ptr<const ImageBuffer> generate(const StepContext& ctx, const StateVector& next_state,
                                              std::shared_ptr<const ImageBuffer> image) override;

 private:
  double sigma_;
  std::uint64_t seed_;
};

std::shared_ptr<Generator> make_generator(const GeneratorDescriptor& desc, const BackendEnvironment& env);

// Runs the generator and enforces the shape contract (DimensionMismatch).
std::shared_ptr<const ImageBuffer> generate_next(Generator& generator, const StepContext& ctx,
                                                 const StateVector& next_state,
                                                 std::shared_ptr<const ImageBuffer> image);

}  // namespace mstp
