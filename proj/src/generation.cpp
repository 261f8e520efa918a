#include "sketchpix/generation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sketchpix/dataset.hpp"
#include "sketchpix/ops.hpp"

namespace sketchpix {
namespace {

std::size_t sample_logits(std::span<const double> logits, double tau, std::mt19937_64& rng) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> w(logits.size());
    double total = 0;
    for (std::size_t i = 0; i < w.size(); ++i) total += (w[i] = std::exp((logits[i] - mx) / tau));
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (u < w[i]) return i;
        u -= w[i];
    }
    return static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
}

LatentVector posterior_to_z(const GaussianPosterior& post, const EncodeOptions& opts) {
    LatentVector z(post.mu.data().begin(), post.mu.data().end());
    if (opts.stochastic) {
        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> n(0, 1);
        const auto sh = post.sigma_hat.data();
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += std::exp(sh[i] / 2) * n(rng);
    }
    return z;
}

}  // namespace

SketchSequence generate(const SketchModel& model, const LatentVector& z, const SampleConfig& cfg) {
    if (!(cfg.temperature > 0)) throw std::invalid_argument("temperature must be positive");
    if (cfg.max_points == 0) throw std::invalid_argument("max_points must be at least 1");
    if (z.size() != model.config().latent_dim())
        throw std::invalid_argument("latent vector has " + std::to_string(z.size()) +
                                    " entries, model expects " +
                                    std::to_string(model.config().latent_dim()));
    NoGradGuard guard;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0, 1);
    const Decoder& dec = model.decoder();
    const Tensor zt({1, z.size()}, z);
    LstmState state = dec.init_state(zt);
    Stroke5Point prev = Stroke5Point::start_token();
    SketchSequence out;
    const double tau = cfg.temperature;
    try {
        while (out.points.size() + 1 < cfg.max_points) {
            auto [p, next] = dec.step(state, prev, zt);
            state = std::move(next);
            const std::size_t m = sample_logits(p.pi_logits.data(), tau, rng);
            const double mx = p.mu_x.data()[m], my = p.mu_y.data()[m];
            const double sx = std::exp(p.log_sigma_x.data()[m]) * std::sqrt(tau);
            const double sy = std::exp(p.log_sigma_y.data()[m]) * std::sqrt(tau);
            const double r = p.rho.data()[m];
            const double n1 = normal(rng), n2 = normal(rng);
            Stroke5Point pt{mx + sx * n1, my + sy * (r * n1 + std::sqrt(1 - r * r) * n2),
                            static_cast<Pen>(sample_logits(p.pen_logits.data(), tau, rng))};
            if (!std::isfinite(pt.dx) || !std::isfinite(pt.dy))
                throw SamplingError("sampled a non-finite offset at point " +
                                    std::to_string(out.points.size()));
            if (pt.pen == Pen::End) break;
            out.points.push_back(pt);
            prev = pt;
        }
    } catch (const NonFiniteError& e) {
        throw SamplingError(std::string("non-finite decoder output while sampling: ") + e.what());
    }
    out.points.push_back(Stroke5Point::terminal());
    return out;
}

LatentVector encode_for_generation(const SketchModel& model, const SketchSequence& seq,
                                   const EncodeOptions& opts) {
    if (seq.points.empty()) throw std::invalid_argument("cannot encode an empty sequence");
    if (const auto why = validate_sequence(seq); !why.empty())
        throw std::invalid_argument("input is not a valid stroke-5 sequence: " + why);
    NoGradGuard guard;
    if (encoder_kind(model.variant()) == EncoderKind::Cnn)
        return posterior_to_z(model.encode_images(bitmaps_to_tensor({encoder_view(seq)})), opts);
    const ModelBatch b{pad_and_batch({seq}, seq.length()), {}};
    return posterior_to_z(model.encode(b), opts);
}

LatentVector encode_for_generation(const SketchModel& model, const RasterBitmap& raw,
                                   const EncodeOptions& opts) {
    NoGradGuard guard;
    return posterior_to_z(model.encode_images(bitmaps_to_tensor({encoder_view(raw)})), opts);
}

Generator::Generator(std::unique_ptr<SketchModel> model, double data_scale)
    : model_(std::move(model)), scale_(data_scale) {
    if (!(scale_ > 0)) throw std::invalid_argument("data scale must be positive");
}

Generator Generator::load(const std::filesystem::path& checkpoint) {
    const TensorArchive ar = read_archive(checkpoint);
    double scale = 1.0;
    if (const auto it = ar.meta.find("data.scale"); it != ar.meta.end()) scale = std::stod(it->second);
    return Generator(SketchModel::from_archive(ar), scale);
}

LatentVector Generator::encode(const SketchSequence& raw, const EncodeOptions& opts) const {
    return encode_for_generation(*model_, scale_offsets(raw, 1.0 / scale_), opts);
}

LatentVector Generator::encode(const RasterBitmap& raw, const EncodeOptions& opts) const {
    return encode_for_generation(*model_, raw, opts);
}

SketchSequence Generator::generate(const LatentVector& z, const SampleConfig& cfg) const {
    return scale_offsets(sketchpix::generate(*model_, z, cfg), scale_);
}

}  // namespace sketchpix
