#pragma once
// Reconstruction NLL, KL to the standard normal prior, and the variant-aware
// combination of the two.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "sketchpix/decoder.hpp"
#include "sketchpix/encoder.hpp"

namespace sketchpix {

class DensityError : public std::runtime_error {
public:
    DensityError(std::size_t step, std::size_t example, const std::string& what);
    std::size_t step() const { return step_; }
    std::size_t example() const { return example_; }

private:
    std::size_t step_;
    std::size_t example_;
};

struct ReconTerms {
    Tensor offset;  // -log mixture density, mean over real steps
    Tensor pen;     // pen cross-entropy, mean over all steps
    Tensor total;   // offset + pen
};

// Log density of each mixture component at each row's target, (rows, M).
Tensor bivariate_log_density(const MixtureParams& p, const Tensor& dx, const Tensor& dy);

// params rows are time-major over targets (row = t * batch + b).
ReconTerms recon_nll(const MixtureParams& params, const SequenceBatch& targets);

// 0.5 * sum_i (mu^2 + sigma^2 - 1 - log sigma^2), averaged over the batch.
Tensor kl_to_standard_normal(const GaussianPosterior& post);

enum class Objective { WithKl, WithoutKl };

struct KlSchedule {
    double start = 0.01;
    double decay = 0.99995;
    double max = 1.0;
    // max - (max - start) * decay^step
    double weight(std::uint64_t step) const;
};

struct LossBreakdown {
    double recon = 0;
    double offset = 0;
    double pen = 0;
    double kl = 0;
    double kl_weight = 0;
    double total = 0;
};

struct LossTerms {
    Tensor total;
    Tensor recon;
    Tensor kl;
    LossBreakdown values;
};

// WithKl: total = recon + kl_weight * kl. WithoutKl: total is recon itself,
// the KL node is left out of the graph and kl_weight is reported as 0.
LossTerms total_loss(const ReconTerms& recon, const Tensor& kl, Objective objective,
                     double kl_weight);

}  // namespace sketchpix
