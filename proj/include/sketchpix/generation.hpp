#pragma once
// Conditional sampling: encode an input to z, then run the decoder
// autoregressively with temperature.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "sketchpix/model.hpp"

namespace sketchpix {

using LatentVector = std::vector<double>;

struct SampleConfig {
    double temperature = 0.25;
    std::size_t max_points = 250;  // terminal included
    std::uint64_t seed = 0;
};

class SamplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Categorical logits are divided by the temperature; Gaussian variances are
// multiplied by it. Output is in the model's (normalized) units and always
// ends with exactly one terminal point.
SketchSequence generate(const SketchModel& model, const LatentVector& z, const SampleConfig& cfg);

struct EncodeOptions {
    bool stochastic = false;  // false: z = mu
    std::uint64_t seed = 0;
};

// Sequence offsets in model units.
LatentVector encode_for_generation(const SketchModel& model, const SketchSequence& seq,
                                   const EncodeOptions& opts = {});
// Unfiltered bitmap; filtered here. RNN variants reject it.
LatentVector encode_for_generation(const SketchModel& model, const RasterBitmap& raw,
                                   const EncodeOptions& opts = {});

// A trained model plus the data scale, working in raw drawing units.
class Generator {
public:
    Generator(std::unique_ptr<SketchModel> model, double data_scale);
    static Generator load(const std::filesystem::path& checkpoint);

    const SketchModel& model() const { return *model_; }
    double data_scale() const { return scale_; }

    LatentVector encode(const SketchSequence& raw, const EncodeOptions& opts = {}) const;
    LatentVector encode(const RasterBitmap& raw, const EncodeOptions& opts = {}) const;
    SketchSequence generate(const LatentVector& z, const SampleConfig& cfg) const;

private:
    std::unique_ptr<SketchModel> model_;
    double scale_;
};

}  // namespace sketchpix
