#pragma once
// The four compared variants share one model class: encoder kind and whether
// the KL term enters the objective are the only differences.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sketchpix/archive.hpp"
#include "sketchpix/decoder.hpp"
#include "sketchpix/encoder.hpp"
#include "sketchpix/loss.hpp"

namespace sketchpix {

enum class Variant { RnnKl, RnnNoKl, CnnKl, CnnNoKl };

std::string variant_name(Variant v);  // "RNN+KL", "RNN-KL", "CNN+KL", "CNN-KL"
// Case-insensitive; accepts '-' or the unicode minus sign.
Variant parse_variant(const std::string& text);
const std::vector<Variant>& all_variants();
EncoderKind encoder_kind(Variant v);
Objective objective(Variant v);

struct ModelConfig {
    Variant variant = Variant::CnnNoKl;
    EncoderConfig encoder;  // encoder.kind always follows the variant
    DecoderConfig decoder;
    std::size_t latent_dim() const { return encoder.latent_dim; }
    bool operator==(const ModelConfig&) const = default;
};

std::map<std::string, std::string> model_config_to_meta(const ModelConfig& cfg);
ModelConfig model_config_from_meta(const std::map<std::string, std::string>& meta);

// Inputs for one forward pass. images is only filled for CNN variants and
// holds filtered bitmaps, (batch, 1, 48, 48).
struct ModelBatch {
    SequenceBatch sequences;
    Tensor images;
};

class SketchModel {
public:
    SketchModel(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    Variant variant() const { return cfg_.variant; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }
    const Decoder& decoder() const { return *decoder_; }

    // filtered may be null, in which case CNN variants rasterize here.
    ModelBatch make_batch(const std::vector<SketchSequence>& seqs,
                          const std::vector<RasterBitmap>* filtered = nullptr) const;

    GaussianPosterior encode(const ModelBatch& batch) const;
    // CNN variants only; bitmaps must already be filtered.
    GaussianPosterior encode_images(const Tensor& images) const;

    // Full objective for one batch with the given noise draw (batch, latent).
    LossTerms loss(const ModelBatch& batch, const Tensor& eps, double kl_weight) const;

    void save_to(TensorArchive& archive) const;
    static std::unique_ptr<SketchModel> from_archive(const TensorArchive& archive);

private:
    ModelConfig cfg_;
    ParameterStore params_;
    std::unique_ptr<CnnEncoder> cnn_;
    std::unique_ptr<BrnnEncoder> brnn_;
    std::unique_ptr<Decoder> decoder_;
};

}  // namespace sketchpix
