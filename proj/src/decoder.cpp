#include "sketchpix/decoder.hpp"

#include <stdexcept>

#include "sketchpix/ops.hpp"

namespace sketchpix {

Tensor MixtureParams::pi() const { return softmax(pi_logits); }
Tensor MixtureParams::pen_probs() const { return softmax(pen_logits); }
Tensor MixtureParams::sigma_x() const { return exp(log_sigma_x); }
Tensor MixtureParams::sigma_y() const { return exp(log_sigma_y); }

MixtureParams split_mixture_output(const Tensor& raw, std::size_t M) {
    if (raw.rank() != 2 || raw.dim(1) != 6 * M + 3)
        throw ShapeError("split_mixture_output", raw.shape(), {0, 6 * M + 3});
    auto part = [&](std::size_t k) { return slice(raw, 1, k * M, (k + 1) * M); };
    return {part(0),
            part(1),
            part(2),
            part(3),
            part(4),
            scale(tanh(part(5)), kRhoBound),
            slice(raw, 1, 6 * M, 6 * M + 3)};
}

Decoder::Decoder(ParameterStore& params, const DecoderConfig& cfg, std::size_t latent_dim,
                 std::mt19937_64& rng)
    : cfg_(cfg),
      latent_(latent_dim),
      w_init_(params.add("dec.init.w", {latent_dim, 2 * cfg.hidden}, Init::Glorot, rng)),
      b_init_(params.add("dec.init.b", {2 * cfg.hidden}, Init::Zeros, rng)),
      cell_(params, "dec.lstm", latent_dim + 5, cfg.hidden, rng) {
    if (cfg.mixtures == 0) throw std::invalid_argument("decoder needs at least one mixture");
    if (cfg.hidden == 0) throw std::invalid_argument("decoder hidden size must be positive");
    w_out_ = params.add("dec.out.w", {cfg.hidden, output_size()}, Init::Glorot, rng);
    b_out_ = params.add("dec.out.b", {output_size()}, Init::Zeros, rng);
}

LstmState Decoder::init_state(const Tensor& z) const {
    if (z.rank() != 2 || z.dim(1) != latent_) throw ShapeError("init_state", z.shape(), {0, latent_});
    const Tensor s = tanh(matmul(z, w_init_) + b_init_);
    return {slice(s, 1, 0, cfg_.hidden), slice(s, 1, cfg_.hidden, 2 * cfg_.hidden)};
}

std::pair<MixtureParams, LstmState> Decoder::step(const LstmState& state, const Tensor& prev,
                                                  const Tensor& z) const {
    if (prev.rank() != 2 || prev.dim(1) != 5 || prev.dim(0) != z.dim(0))
        throw ShapeError("decode_step", prev.shape(), z.shape());
    LstmState next = cell_.step(concat({z, prev}, 1), state);
    MixtureParams out = split_mixture_output(matmul(next.h, w_out_) + b_out_, cfg_.mixtures);
    return {std::move(out), std::move(next)};
}

std::pair<MixtureParams, LstmState> Decoder::step(const LstmState& state, const Stroke5Point& prev,
                                                  const Tensor& z) const {
    const auto a = prev.to_array();
    std::vector<double> rows;
    for (std::size_t b = 0; b < z.dim(0); ++b) rows.insert(rows.end(), a.begin(), a.end());
    return step(state, Tensor({z.dim(0), 5}, std::move(rows)), z);
}

MixtureParams Decoder::rollout(const Tensor& z, const SequenceBatch& targets) const {
    const std::size_t B = targets.size();
    const std::size_t T = targets.max_seq_len;
    if (z.rank() != 2 || z.dim(0) != B || z.dim(1) != latent_)
        throw ShapeError("teacher_forced_rollout", z.shape(), {B, latent_});
    if (targets.points.shape() != Shape{B, T, 5})
        throw ShapeError("teacher_forced_rollout", targets.points.shape(), {B, T, 5});

    // Previous point per step, time-major.
    std::vector<double> prev(T * B * 5, 0.0);
    const auto src = targets.points.data();
    for (std::size_t b = 0; b < B; ++b) {
        prev[b * 5 + 2] = 1.0;
        for (std::size_t t = 1; t < T; ++t)
            std::copy_n(src.begin() + (b * T + t - 1) * 5, 5, prev.begin() + (t * B + b) * 5);
    }
    // concat(z, x) W = z W_z + x W_x, so project both halves once.
    const Tensor& w = cell_.input_weight();
    const Tensor zproj = matmul(z, slice(w, 0, 0, latent_)) + cell_.bias();
    const Tensor xproj = matmul(Tensor({T * B, 5}, std::move(prev)), slice(w, 0, latent_, latent_ + 5));

    LstmState state = init_state(z);
    std::vector<Tensor> hs;
    hs.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
        state = cell_.step_from_gates(slice(xproj, 0, t * B, (t + 1) * B) + zproj, state);
        hs.push_back(state.h);
    }
    return split_mixture_output(matmul(concat(hs, 0), w_out_) + b_out_, cfg_.mixtures);
}

}  // namespace sketchpix
