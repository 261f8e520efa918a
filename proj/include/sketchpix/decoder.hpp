#pragma once
// Autoregressive LSTM decoder emitting a bivariate Gaussian mixture over the
// next offset plus pen-state logits, conditioned on z at every step.

#include <random>

#include "sketchpix/lstm.hpp"
#include "sketchpix/params.hpp"
#include "sketchpix/stroke.hpp"

namespace sketchpix {

struct DecoderConfig {
    std::size_t hidden = 512;
    std::size_t mixtures = 20;
    std::size_t max_seq_len = 250;
    bool operator==(const DecoderConfig&) const = default;
};

// Keeps |rho| < 1 in floating point; tanh alone saturates to exactly 1.
inline constexpr double kRhoBound = 1.0 - 1e-6;

// Each field has one row per (step, example); rows are time-major in a
// rollout (row = t * batch + b).
struct MixtureParams {
    Tensor pi_logits;    // (rows, M)
    Tensor mu_x;         // (rows, M)
    Tensor mu_y;         // (rows, M)
    Tensor log_sigma_x;  // (rows, M)
    Tensor log_sigma_y;  // (rows, M)
    Tensor rho;          // (rows, M), already squashed
    Tensor pen_logits;   // (rows, 3)

    std::size_t rows() const { return pi_logits.dim(0); }
    std::size_t mixtures() const { return pi_logits.dim(1); }
    Tensor pi() const;
    Tensor pen_probs() const;
    Tensor sigma_x() const;
    Tensor sigma_y() const;
};

// Splits a raw (rows, 6M + 3) output into constrained parameters.
MixtureParams split_mixture_output(const Tensor& raw, std::size_t mixtures);

class Decoder {
public:
    Decoder(ParameterStore& params, const DecoderConfig& cfg, std::size_t latent_dim,
            std::mt19937_64& rng);

    const DecoderConfig& config() const { return cfg_; }
    std::size_t latent_dim() const { return latent_; }
    std::size_t output_size() const { return 6 * cfg_.mixtures + 3; }

    // (h0, c0) = split(tanh(z W + b)); z is (batch, latent).
    LstmState init_state(const Tensor& z) const;

    // prev is (batch, 5). Input is concat(z, prev).
    std::pair<MixtureParams, LstmState> step(const LstmState& state, const Tensor& prev,
                                             const Tensor& z) const;
    std::pair<MixtureParams, LstmState> step(const LstmState& state, const Stroke5Point& prev,
                                             const Tensor& z) const;

    // Teacher forcing over all batch.max_seq_len steps: step t sees targets < t,
    // step 0 sees the start token (0, 0, 1, 0, 0).
    MixtureParams rollout(const Tensor& z, const SequenceBatch& targets) const;

private:
    DecoderConfig cfg_;
    std::size_t latent_;
    Tensor w_init_;
    Tensor b_init_;
    LstmCell cell_;
    Tensor w_out_;
    Tensor b_out_;
};

}  // namespace sketchpix
