#pragma once

#include <functional>
#include <limits>

#include "holoforge/autodiff/ops.hpp"

namespace holoforge::ad {

/// A scalar-valued function of one tensor, rebuilt on a caller-provided tape.
using ScalarFn = std::function<Tensor(Tape&, const Tensor&)>;

/// Compares reverse-mode gradients of f at x against central finite
/// differences, element by element (real and imaginary planes separately),
/// and returns the worst relative error.
inline double grad_check(const ScalarFn& f, const Storage& x0, double h = 1e-5) {
    if (!(h > 0.0)) throw DomainError("grad_check: step must be positive");

    Storage analytic(x0.shape, x0.is_complex());
    {
        Tape tape;
        Tensor x = tape.leaf(std::make_shared<Storage>(x0));
        Tensor y = f(tape, x);
        if (y.numel() != 1 || y.is_complex()) throw ShapeError("grad_check: f must return a real scalar");
        tape.backward(y);
        analytic = grad_of(x);
    }

    const auto eval = [&](const Storage& xs) {
        Tape tape;
        Tensor x = tape.leaf(std::make_shared<Storage>(xs));
        return f(tape, x).scalar();
    };

    // Elements whose analytic gradient is ~0 still see finite-difference
    // cancellation noise of order eps*|f|/h; the error floor combines the
    // gradient scale with that FD resolution limit instead of sitting at a
    // fixed constant.
    double gmax = 0.0;
    for (double v : analytic.re) gmax = std::max(gmax, std::abs(v));
    for (double v : analytic.im) gmax = std::max(gmax, std::abs(v));
    const double f0 = std::abs(eval(x0));
    const double fd_resolution = std::numeric_limits<double>::epsilon() * (1.0 + f0) / (2.0 * h);
    const double floor = std::max({1e-2 * gmax, 1e4 * fd_resolution, 1e-12});

    double worst = 0.0;
    const auto probe = [&](std::vector<double> Storage::* plane, size_t i, double g) {
        Storage xp = x0;
        (xp.*plane)[i] = (x0.*plane)[i] + h;
        const double fp = eval(xp);
        (xp.*plane)[i] = (x0.*plane)[i] - h;
        const double fm = eval(xp);
        const double fd = (fp - fm) / (2.0 * h);
        const double denom = std::max({floor, std::abs(fd), std::abs(g)});
        worst = std::max(worst, std::abs(fd - g) / denom);
    };
    for (size_t i = 0; i < x0.size(); ++i) probe(&Storage::re, i, analytic.re[i]);
    if (x0.is_complex())
        for (size_t i = 0; i < x0.size(); ++i) probe(&Storage::im, i, analytic.im[i]);
    return worst;
}

}  // namespace holoforge::ad
