#pragma once

#include <cmath>
#include <vector>

#include "holoforge/errors.hpp"

namespace holoforge {

/// Adam with bias correction; betas default to the training setting (0.9, 0.99).
class Adam {
public:
    explicit Adam(size_t n, double beta1 = 0.9, double beta2 = 0.99, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

    /// Folds a gradient into the moments and writes the unscaled descent step
    /// (already multiplied by lr) into `step`.
    void compute_step(const double* grad, double lr, double* step) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, t_);
        const double c2 = 1.0 - std::pow(beta2_, t_);
        for (size_t i = 0; i < m_.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
            const double mhat = m_[i] / c1;
            const double vhat = v_[i] / c2;
            step[i] = -lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }

    size_t size() const { return m_.size(); }

private:
    double beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

}  // namespace holoforge
