#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "bsg/matrix.hpp"

namespace bsg {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First/second moment buffers for one parameter block. Moments are kept in
// single precision; the update itself is computed in double.
struct AdamMoments {
    std::vector<float> m, v;

    AdamMoments() = default;
    explicit AdamMoments(std::size_t n) : m(n, 0.0f), v(n, 0.0f) {}
};

namespace detail {
template <typename Real>
inline void adam_update(Real& param, double g, float& m, float& v, const AdamConfig& c, double bc1, double bc2) {
    const double mt = c.beta1 * m + (1.0 - c.beta1) * g;
    const double vt = c.beta2 * v + (1.0 - c.beta2) * g * g;
    m = static_cast<float>(mt);
    v = static_cast<float>(vt);
    const double step = c.learning_rate * (mt / bc1) / (std::sqrt(vt / bc2) + c.epsilon);
    param = static_cast<Real>(static_cast<double>(param) - step);
}
} // namespace detail

// Dense step over every entry. `step` counts from 1.
template <typename Real>
void adam_dense(std::span<Real> params, std::span<const double> grads, AdamMoments& st, const AdamConfig& c,
                std::size_t step) {
    if (st.m.size() != params.size()) st = AdamMoments(params.size());
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) detail::adam_update(params[i], grads[i], st.m[i], st.v[i], c, bc1, bc2);
}

// Lazy step: only rows present in `grads` are touched, in ascending id order.
// Bias correction uses the global step.
template <typename Real>
void adam_rows(Matrix<Real>& table, const SparseRows& grads, AdamMoments& st, const AdamConfig& c, std::size_t step) {
    if (st.m.size() != table.size()) st = AdamMoments(table.size());
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
    const std::size_t cols = table.cols();
    for (WordId id : grads.sorted_ids()) {
        auto g = grads.find(id);
        auto row = table.row(id);
        const std::size_t base = static_cast<std::size_t>(id) * cols;
        for (std::size_t k = 0; k < cols; ++k) detail::adam_update(row[k], g[k], st.m[base + k], st.v[base + k], c, bc1, bc2);
    }
}

} // namespace bsg
