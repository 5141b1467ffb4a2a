#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "siamq/tensor.hpp"

namespace siamq::ad {

// Central finite differences against reverse-mode gradients at 64-bit.
// `forward` evaluates the scalar loss from scratch for the given parameter
// values; `analytic` returns the reverse-mode gradient for each parameter.
// The forward path is the only thing the two sides share.
struct GradCheck {
    double step = 1e-5;
    // rel err denominator floor; keeps near-zero gradients from dividing by 0
    double floor = 1e-6;

    double max_relative_error(
        std::vector<TensorD> params,
        const std::function<double(const std::vector<TensorD>&)>& forward,
        const std::function<std::vector<TensorD>(const std::vector<TensorD>&)>&
            analytic) const {
        const std::vector<TensorD> grads = analytic(params);
        double worst = 0.0;
        for (std::size_t p = 0; p < params.size(); ++p) {
            for (std::size_t i = 0; i < params[p].size(); ++i) {
                const double orig = params[p].data[i];
                params[p].data[i] = orig + step;
                const double f_plus = forward(params);
                params[p].data[i] = orig - step;
                const double f_minus = forward(params);
                params[p].data[i] = orig;
                const double fd = (f_plus - f_minus) / (2.0 * step);
                const double an = grads[p].data[i];
                const double denom = std::max({std::abs(fd), std::abs(an), floor});
                worst = std::max(worst, std::abs(fd - an) / denom);
            }
        }
        return worst;
    }
};

struct GradCheckCase {
    std::string name;
    double max_rel_err = 0.0;
    bool passed = false;
};

// Runs the full seeded suite over every differentiable operation plus the
// composed pair-loss graph. `cases_per_op` seeded random instances each.
std::vector<GradCheckCase> run_gradcheck_suite(std::size_t cases_per_op,
                                               std::uint64_t seed,
                                               double tolerance = 1e-4);

}  // namespace siamq::ad
