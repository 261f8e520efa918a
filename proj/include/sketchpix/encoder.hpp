#pragma once
// Posterior encoders: a conv stack over the filtered 48x48 bitmap and a
// bidirectional LSTM over the stroke-5 sequence.

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "sketchpix/lstm.hpp"
#include "sketchpix/ops.hpp"
#include "sketchpix/params.hpp"
#include "sketchpix/stroke.hpp"

namespace sketchpix {

enum class EncoderKind { Cnn, Brnn };
enum class Activation { Relu, Tanh, Linear };

// One conv layer, written h x w @ depth / stride, e.g. "3x3@8/2".
// An optional ":tanh" or ":linear" suffix overrides the relu default.
struct ConvLayerSpec {
    std::size_t kernel_h = 3;
    std::size_t kernel_w = 3;
    std::size_t depth = 8;
    std::size_t stride = 2;
    Activation activation = Activation::Relu;

    std::string str() const;
    static ConvLayerSpec parse(const std::string& text);
    bool operator==(const ConvLayerSpec&) const = default;
};

std::vector<ConvLayerSpec> parse_conv_stack(const std::string& text);  // comma separated
std::string conv_stack_str(const std::vector<ConvLayerSpec>& layers);
std::vector<ConvLayerSpec> default_conv_stack();

struct EncoderConfig {
    EncoderKind kind = EncoderKind::Cnn;
    std::vector<ConvLayerSpec> conv = default_conv_stack();
    Padding padding = Padding::Same;
    std::size_t brnn_hidden = 256;
    std::size_t latent_dim = 128;
    bool operator==(const EncoderConfig&) const = default;
};

struct GaussianPosterior {
    Tensor mu;         // (batch, latent)
    Tensor sigma_hat;  // (batch, latent); sigma = exp(sigma_hat / 2)
    Tensor sigma() const;
    std::size_t batch() const { return mu.dim(0); }
    std::size_t latent_dim() const { return mu.dim(1); }
};

// z = mu + sigma * eps. eps is treated as a constant.
Tensor reparameterize(const GaussianPosterior& post, const Tensor& eps);
Tensor standard_normal(Shape shape, std::mt19937_64& rng);

// (N, 1, 48, 48) from already filtered bitmaps.
Tensor bitmaps_to_tensor(const std::vector<RasterBitmap>& images);
// rasterize + high-pass, the CNN encoder's view of a sketch.
RasterBitmap encoder_view(const SketchSequence& seq);
RasterBitmap encoder_view(const RasterBitmap& raw);

class CnnEncoder {
public:
    // Throws std::invalid_argument if the stack collapses a spatial dim.
    CnnEncoder(ParameterStore& params, const EncoderConfig& cfg, std::mt19937_64& rng);
    GaussianPosterior encode(const Tensor& images) const;
    GaussianPosterior encode(const std::vector<RasterBitmap>& filtered) const;
    std::size_t flat_size() const { return flat_; }

private:
    EncoderConfig cfg_;
    std::vector<Tensor> weights_;
    std::vector<Tensor> biases_;
    std::size_t flat_ = 0;
    Tensor w_mu_;
    Tensor b_mu_;
    Tensor w_sigma_;
    Tensor b_sigma_;
};

class BrnnEncoder {
public:
    BrnnEncoder(ParameterStore& params, const EncoderConfig& cfg, std::mt19937_64& rng);
    // Reads each row only up to its length. Throws on a zero-length row.
    GaussianPosterior encode(const SequenceBatch& batch) const;

private:
    EncoderConfig cfg_;
    LstmCell forward_;
    LstmCell backward_;
    Tensor w_mu_;
    Tensor b_mu_;
    Tensor w_sigma_;
    Tensor b_sigma_;
};

}  // namespace sketchpix
