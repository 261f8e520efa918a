#include "sketchpix/loss.hpp"

#include <cmath>
#include <numbers>

#include "sketchpix/ops.hpp"

namespace sketchpix {

DensityError::DensityError(std::size_t step, std::size_t example, const std::string& what)
    : std::runtime_error("non-finite offset density at step " + std::to_string(step) +
                         ", example " + std::to_string(example) + ": " + what),
      step_(step),
      example_(example) {}

Tensor bivariate_log_density(const MixtureParams& p, const Tensor& dx, const Tensor& dy) {
    const Tensor zx = (dx - p.mu_x) * exp(neg(p.log_sigma_x));
    const Tensor zy = (dy - p.mu_y) * exp(neg(p.log_sigma_y));
    const Tensor one_minus_r2 = add_scalar(neg(square(p.rho)), 1.0);
    const Tensor q = square(zx) + square(zy) - scale(p.rho * zx * zy, 2.0);
    return add_scalar(neg(p.log_sigma_x + p.log_sigma_y + scale(log(one_minus_r2), 0.5) +
                          scale(div(q, one_minus_r2), 0.5)),
                      -std::log(2.0 * std::numbers::pi));
}

namespace {

// Finds the first row whose density is not finite, evaluated row by row
// outside the graph, so the error can name a step.
[[noreturn]] void report_bad_density(const MixtureParams& p, const Tensor& dx, const Tensor& dy,
                                     std::size_t batch, const std::string& what) {
    NoGradGuard guard;
    for (std::size_t r = 0; r < p.rows(); ++r) {
        try {
            MixtureParams row{slice(p.pi_logits, 0, r, r + 1),   slice(p.mu_x, 0, r, r + 1),
                              slice(p.mu_y, 0, r, r + 1),        slice(p.log_sigma_x, 0, r, r + 1),
                              slice(p.log_sigma_y, 0, r, r + 1), slice(p.rho, 0, r, r + 1),
                              slice(p.pen_logits, 0, r, r + 1)};
            logsumexp(log_softmax(row.pi_logits) +
                      bivariate_log_density(row, slice(dx, 0, r, r + 1), slice(dy, 0, r, r + 1)));
        } catch (const NonFiniteError& e) {
            throw DensityError(r / batch, r % batch, e.what());
        }
    }
    throw DensityError(0, 0, what);
}

}  // namespace

ReconTerms recon_nll(const MixtureParams& params, const SequenceBatch& targets) {
    const std::size_t B = targets.size();
    const std::size_t T = targets.max_seq_len;
    const std::size_t N = B * T;
    if (params.rows() != N)
        throw ShapeError("recon_nll", {params.rows(), params.mixtures()}, targets.points.shape());
    std::vector<double> dx(N), dy(N), mask(N), pen(N * 3);
    std::size_t real = 0;
    const auto src = targets.points.data();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t) {
            const std::size_t r = t * B + b;
            const double* x = src.data() + (b * T + t) * 5;
            dx[r] = x[0];
            dy[r] = x[1];
            std::copy_n(x + 2, 3, pen.begin() + r * 3);
            if (t < targets.lengths[b]) {
                mask[r] = 1.0;
                ++real;
            }
        }
    const Tensor tdx({N, 1}, std::move(dx)), tdy({N, 1}, std::move(dy));
    Tensor log_mix;
    try {
        log_mix = logsumexp(log_softmax(params.pi_logits) + bivariate_log_density(params, tdx, tdy));
    } catch (const NonFiniteError& e) {
        report_bad_density(params, tdx, tdy, B, e.what());
    }
    ReconTerms out;
    out.offset = scale(sum(log_mix * Tensor({N}, std::move(mask))), -1.0 / double(real));
    out.pen = scale(sum(log_softmax(params.pen_logits) * Tensor({N, 3}, std::move(pen))),
                    -1.0 / double(N));
    out.total = out.offset + out.pen;
    return out;
}

Tensor kl_to_standard_normal(const GaussianPosterior& post) {
    const Tensor& s = post.sigma_hat;
    const Tensor per = square(post.mu) + exp(s) - add_scalar(s, 1.0);
    return scale(sum(per), 0.5 / double(post.batch()));
}

double KlSchedule::weight(std::uint64_t step) const {
    return max - (max - start) * std::pow(decay, double(step));
}

LossTerms total_loss(const ReconTerms& recon, const Tensor& kl, Objective objective,
                     double kl_weight) {
    LossTerms out;
    out.recon = recon.total;
    out.kl = kl;
    out.values.recon = recon.total.item();
    out.values.offset = recon.offset.item();
    out.values.pen = recon.pen.item();
    out.values.kl = kl.item();
    if (objective == Objective::WithoutKl) {
        out.total = recon.total;
        out.values.kl_weight = 0.0;
    } else {
        out.total = recon.total + scale(kl, kl_weight);
        out.values.kl_weight = kl_weight;
    }
    out.values.total = out.total.item();
    return out;
}

}  // namespace sketchpix
