#include "sketchpix/encoder.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace sketchpix {
namespace {

Tensor activate(const Tensor& x, Activation a) {
    switch (a) {
        case Activation::Relu: return relu(x);
        case Activation::Tanh: return tanh(x);
        case Activation::Linear: return x;
    }
    return x;
}

std::size_t parse_count(const std::string& text, const std::string& whole) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
        v = std::stoul(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != text.size() || v == 0)
        throw std::invalid_argument("bad conv layer spec '" + whole + "'");
    return v;
}

}  // namespace

std::string ConvLayerSpec::str() const {
    std::ostringstream os;
    os << kernel_h << 'x' << kernel_w << '@' << depth << '/' << stride;
    if (activation == Activation::Tanh) os << ":tanh";
    if (activation == Activation::Linear) os << ":linear";
    return os.str();
}

ConvLayerSpec ConvLayerSpec::parse(const std::string& text) {
    ConvLayerSpec s;
    std::string body = text;
    if (const auto colon = body.find(':'); colon != std::string::npos) {
        const std::string act = body.substr(colon + 1);
        body = body.substr(0, colon);
        if (act == "relu") s.activation = Activation::Relu;
        else if (act == "tanh") s.activation = Activation::Tanh;
        else if (act == "linear") s.activation = Activation::Linear;
        else throw std::invalid_argument("unknown activation '" + act + "' in '" + text + "'");
    }
    const auto x = body.find('x'), at = body.find('@'), slash = body.find('/');
    if (x == std::string::npos || at == std::string::npos || slash == std::string::npos ||
        !(x < at && at < slash))
        throw std::invalid_argument("bad conv layer spec '" + text + "', expected like 3x3@8/2");
    s.kernel_h = parse_count(body.substr(0, x), text);
    s.kernel_w = parse_count(body.substr(x + 1, at - x - 1), text);
    s.depth = parse_count(body.substr(at + 1, slash - at - 1), text);
    s.stride = parse_count(body.substr(slash + 1), text);
    return s;
}

std::vector<ConvLayerSpec> parse_conv_stack(const std::string& text) {
    std::vector<ConvLayerSpec> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
        if (!item.empty()) out.push_back(ConvLayerSpec::parse(item));
    }
    if (out.empty()) throw std::invalid_argument("empty conv stack");
    return out;
}

std::string conv_stack_str(const std::vector<ConvLayerSpec>& layers) {
    std::string s;
    for (const auto& l : layers) s += (s.empty() ? "" : ",") + l.str();
    return s;
}

std::vector<ConvLayerSpec> default_conv_stack() {
    return {{3, 3, 8, 2}, {3, 3, 16, 2}, {3, 3, 32, 2}, {3, 3, 64, 2}};
}

Tensor GaussianPosterior::sigma() const { return exp(scale(sigma_hat, 0.5)); }

Tensor reparameterize(const GaussianPosterior& post, const Tensor& eps) {
    if (eps.shape() != post.mu.shape()) throw ShapeError("reparameterize", post.mu.shape(), eps.shape());
    return post.mu + post.sigma() * eps.detach();
}

Tensor standard_normal(Shape shape, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = n(rng);
    return Tensor(std::move(shape), std::move(v));
}

Tensor bitmaps_to_tensor(const std::vector<RasterBitmap>& images) {
    constexpr std::size_t S = RasterBitmap::kSize;
    std::vector<double> v;
    v.reserve(images.size() * S * S);
    for (const auto& img : images) {
        if (img.width != S || img.height != S)
            throw std::invalid_argument("encoder expects 48x48 bitmaps");
        v.insert(v.end(), img.pixels.begin(), img.pixels.end());
    }
    return Tensor({images.size(), 1, S, S}, std::move(v));
}

RasterBitmap encoder_view(const SketchSequence& seq) { return highpass_filter(rasterize(seq)); }
RasterBitmap encoder_view(const RasterBitmap& raw) { return highpass_filter(raw); }

CnnEncoder::CnnEncoder(ParameterStore& params, const EncoderConfig& cfg, std::mt19937_64& rng)
    : cfg_(cfg) {
    if (cfg.latent_dim == 0) throw std::invalid_argument("latent dim must be positive");
    if (cfg.conv.empty()) throw std::invalid_argument("CNN encoder needs at least one conv layer");
    std::size_t h = RasterBitmap::kSize, w = RasterBitmap::kSize, c = 1;
    for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
        const auto& l = cfg.conv[i];
        const std::size_t nh = conv_output_size(h, l.kernel_h, l.stride, cfg.padding);
        const std::size_t nw = conv_output_size(w, l.kernel_w, l.stride, cfg.padding);
        if (nh == 0 || nw == 0)
            throw std::invalid_argument("conv layer " + std::to_string(i) + " (" + l.str() +
                                        ") reduces a " + std::to_string(h) + "x" +
                                        std::to_string(w) + " map to nothing");
        const std::string p = "cnn.conv" + std::to_string(i);
        weights_.push_back(params.add(p + ".w", {l.depth, c, l.kernel_h, l.kernel_w}, Init::Glorot, rng));
        biases_.push_back(params.add(p + ".b", {l.depth}, Init::Zeros, rng));
        h = nh;
        w = nw;
        c = l.depth;
    }
    flat_ = h * w * c;
    w_mu_ = params.add("cnn.mu.w", {flat_, cfg.latent_dim}, Init::Glorot, rng);
    b_mu_ = params.add("cnn.mu.b", {cfg.latent_dim}, Init::Zeros, rng);
    w_sigma_ = params.add("cnn.sigma.w", {flat_, cfg.latent_dim}, Init::Glorot, rng);
    b_sigma_ = params.add("cnn.sigma.b", {cfg.latent_dim}, Init::Zeros, rng);
}

GaussianPosterior CnnEncoder::encode(const Tensor& images) const {
    if (images.rank() != 4 || images.dim(1) != 1 || images.dim(2) != RasterBitmap::kSize ||
        images.dim(3) != RasterBitmap::kSize)
        throw ShapeError("cnn_encode", images.shape(), {0, 1, RasterBitmap::kSize, RasterBitmap::kSize});
    Tensor x = images;
    for (std::size_t i = 0; i < cfg_.conv.size(); ++i) {
        x = conv2d(x, weights_[i], biases_[i], {cfg_.conv[i].stride, cfg_.padding});
        x = activate(x, cfg_.conv[i].activation);
    }
    const Tensor flat = reshape(x, {images.dim(0), flat_});
    return {matmul(flat, w_mu_) + b_mu_, matmul(flat, w_sigma_) + b_sigma_};
}

GaussianPosterior CnnEncoder::encode(const std::vector<RasterBitmap>& filtered) const {
    return encode(bitmaps_to_tensor(filtered));
}

BrnnEncoder::BrnnEncoder(ParameterStore& params, const EncoderConfig& cfg, std::mt19937_64& rng)
    : cfg_(cfg),
      forward_(params, "brnn.fwd", 5, cfg.brnn_hidden, rng),
      backward_(params, "brnn.bwd", 5, cfg.brnn_hidden, rng) {
    if (cfg.latent_dim == 0) throw std::invalid_argument("latent dim must be positive");
    const std::size_t in = 2 * cfg.brnn_hidden;
    w_mu_ = params.add("brnn.mu.w", {in, cfg.latent_dim}, Init::Glorot, rng);
    b_mu_ = params.add("brnn.mu.b", {cfg.latent_dim}, Init::Zeros, rng);
    w_sigma_ = params.add("brnn.sigma.w", {in, cfg.latent_dim}, Init::Glorot, rng);
    b_sigma_ = params.add("brnn.sigma.b", {cfg.latent_dim}, Init::Zeros, rng);
}

GaussianPosterior BrnnEncoder::encode(const SequenceBatch& batch) const {
    const std::size_t B = batch.size();
    if (B == 0) throw std::invalid_argument("brnn_encode: empty batch");
    std::size_t T = 0;
    for (std::size_t b = 0; b < B; ++b) {
        if (batch.lengths[b] == 0)
            throw std::invalid_argument("brnn_encode: sequence " + std::to_string(b) + " has length 0");
        T = std::max(T, batch.lengths[b]);
    }
    const std::size_t L = batch.points.dim(1);
    // Time-major copy of the real window: row t*B + b.
    std::vector<double> xs(T * B * 5);
    const auto src = batch.points.data();
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t b = 0; b < B; ++b)
            std::copy_n(src.begin() + (b * L + t) * 5, 5, xs.begin() + (t * B + b) * 5);
    const Tensor inputs({T * B, 5}, std::move(xs));
    const Tensor gf = forward_.project_input(inputs);
    const Tensor gb = backward_.project_input(inputs);

    auto mask_at = [&](std::size_t t) {
        std::vector<double> m(B);
        for (std::size_t b = 0; b < B; ++b) m[b] = t < batch.lengths[b] ? 1.0 : 0.0;
        return Tensor({B, 1}, std::move(m));
    };
    auto masked = [](const Tensor& mask, const Tensor& next, const Tensor& prev) {
        return mask * next + add_scalar(neg(mask), 1.0) * prev;
    };

    LstmState fs = forward_.zero_state(B);
    for (std::size_t t = 0; t < T; ++t) {
        const Tensor m = mask_at(t);
        const LstmState n = forward_.step_from_gates(slice(gf, 0, t * B, (t + 1) * B), fs);
        fs = {masked(m, n.h, fs.h), masked(m, n.c, fs.c)};
    }
    LstmState bs = backward_.zero_state(B);
    for (std::size_t t = T; t-- > 0;) {
        const Tensor m = mask_at(t);
        const LstmState n = backward_.step_from_gates(slice(gb, 0, t * B, (t + 1) * B), bs);
        bs = {masked(m, n.h, bs.h), masked(m, n.c, bs.c)};
    }
    const Tensor h = concat({fs.h, bs.h}, 1);
    return {matmul(h, w_mu_) + b_mu_, matmul(h, w_sigma_) + b_sigma_};
}

}  // namespace sketchpix
