#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "kinn/graph.hpp"
#include "kinn/param_store.hpp"

namespace kinn::testutil {

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1e-4, std::abs(a), std::abs(b)});
}

// Max relative error between reverse-mode gradients and central finite
// differences over every parameter element. The scalar graph output is
// re-evaluated with each element nudged by +-eps.
inline double max_gradient_error(const ad::Graph& graph, const ad::Inputs& inputs,
                                 ad::ParamStore& params, double eps = 1e-6) {
    const auto analytic = ad::backward(graph, inputs, params);
    double worst = 0.0;
    for (std::uint32_t id = 0; id < params.count(); ++id) {
        ad::Tensor& value = params.value(id);
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double saved = value.v[i];
            value.v[i] = saved + eps;
            const double up = ad::evaluate(graph, inputs, params).v[0];
            value.v[i] = saved - eps;
            const double down = ad::evaluate(graph, inputs, params).v[0];
            value.v[i] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            worst = std::max(worst, rel_err(analytic.grads_by_id[id].v[i], numeric));
        }
    }
    return worst;
}

inline ad::Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                                double hi = 1.0) {
    ad::Tensor t(rows, cols);
    for (double& x : t.v) x = rng.uniform(lo, hi);
    return t;
}

}  // namespace kinn::testutil
