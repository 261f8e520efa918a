#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "sketchpix/loss.hpp"

namespace sketchpix::testing {

// KL(N(mu, s^2) || N(0, 1)) by Simpson's rule over mu +- 14 s.
inline double kl_by_integration(double mu, double s) {
    const int n = 40000;
    const double a = mu - 14 * s, b = mu + 14 * s, h = (b - a) / n;
    auto f = [&](double x) {
        const double lq = -0.5 * std::log(2 * std::numbers::pi) - std::log(s) -
                          0.5 * (x - mu) * (x - mu) / (s * s);
        const double lp = -0.5 * std::log(2 * std::numbers::pi) - 0.5 * x * x;
        return std::exp(lq) * (lq - lp);
    };
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4 : 2);
    return acc * h / 3;
}

inline double kl_of(const std::vector<double>& mu, const std::vector<double>& sigma) {
    std::vector<double> sh;
    for (double s : sigma) sh.push_back(2 * std::log(s));
    const std::size_t d = mu.size();
    return kl_to_standard_normal({Tensor({1, d}, mu), Tensor({1, d}, sh)}).item();
}

}  // namespace sketchpix::testing
