#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

#include "holoforge/autodiff/tensor.hpp"
#include "holoforge/fft.hpp"

namespace holoforge::ad {

// ---------------------------------------------------------------------------
// bookkeeping helpers

namespace detail {

inline Tape* common_tape(const Tensor& a, const Tensor& b) {
    Tape* ta = a.on_tape() ? a.tape() : nullptr;
    Tape* tb = b.on_tape() ? b.tape() : nullptr;
    if (ta && tb && ta != tb) throw GraphError("operands live on different tapes");
    return ta ? ta : tb;
}

inline Tensor emit(Tape* tape, std::shared_ptr<Storage> out, std::vector<int> parents,
                   std::function<void(Tape&, int)> backward) {
    if (!tape) return Tensor::constant(std::move(out));
    return tape->record(std::move(out), std::move(parents), std::move(backward));
}

inline int pid(const Tensor& t) { return t.on_tape() ? t.id() : -1; }

/// Accumulate helper: adds src into the parent's grad buffer if tracked.
inline Storage* grad_slot(Tape& tape, int id) { return id >= 0 ? &tape.grad_buffer(id) : nullptr; }

}  // namespace detail

inline Tensor constant_scalar(double v) {
    auto st = std::make_shared<Storage>(Shape{1});
    st->re[0] = v;
    return Tensor::constant(st);
}

inline Tensor constant_from(const Storage& s) {
    return Tensor::constant(std::make_shared<Storage>(s));
}

// ---------------------------------------------------------------------------
// elementwise arithmetic

inline Tensor add(const Tensor& a, const Tensor& b) {
    if (!same_shape(a.shape(), b.shape())) throw ShapeError("add: shape mismatch");
    if (a.is_complex() != b.is_complex()) throw ShapeError("add: mixed real/complex operands");
    Tape* tape = detail::common_tape(a, b);
    auto out = std::make_shared<Storage>(a.shape(), a.is_complex());
    const Storage& va = a.value();
    const Storage& vb = b.value();
    for (size_t i = 0; i < out->size(); ++i) out->re[i] = va.re[i] + vb.re[i];
    if (out->is_complex())
        for (size_t i = 0; i < out->size(); ++i) out->im[i] = va.im[i] + vb.im[i];
    const int ia = detail::pid(a), ib = detail::pid(b);
    return detail::emit(tape, out, {ia, ib}, [ia, ib](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        for (int parent : {ia, ib}) {
            if (Storage* gp = detail::grad_slot(t, parent)) {
                for (size_t i = 0; i < g.size(); ++i) gp->re[i] += g.re[i];
                if (g.is_complex())
                    for (size_t i = 0; i < g.size(); ++i) gp->im[i] += g.im[i];
            }
        }
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    if (!same_shape(a.shape(), b.shape())) throw ShapeError("sub: shape mismatch");
    if (a.is_complex() != b.is_complex()) throw ShapeError("sub: mixed real/complex operands");
    Tape* tape = detail::common_tape(a, b);
    auto out = std::make_shared<Storage>(a.shape(), a.is_complex());
    const Storage& va = a.value();
    const Storage& vb = b.value();
    for (size_t i = 0; i < out->size(); ++i) out->re[i] = va.re[i] - vb.re[i];
    if (out->is_complex())
        for (size_t i = 0; i < out->size(); ++i) out->im[i] = va.im[i] - vb.im[i];
    const int ia = detail::pid(a), ib = detail::pid(b);
    return detail::emit(tape, out, {ia, ib}, [ia, ib](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            for (size_t i = 0; i < g.size(); ++i) ga->re[i] += g.re[i];
            if (g.is_complex())
                for (size_t i = 0; i < g.size(); ++i) ga->im[i] += g.im[i];
        }
        if (Storage* gb = detail::grad_slot(t, ib)) {
            for (size_t i = 0; i < g.size(); ++i) gb->re[i] -= g.re[i];
            if (g.is_complex())
                for (size_t i = 0; i < g.size(); ++i) gb->im[i] -= g.im[i];
        }
    });
}

/// Elementwise product. Real*real or complex*complex (conjugate rule).
inline Tensor mul(const Tensor& a, const Tensor& b) {
    if (!same_shape(a.shape(), b.shape())) throw ShapeError("mul: shape mismatch");
    if (a.is_complex() != b.is_complex()) throw ShapeError("mul: mixed real/complex operands");
    Tape* tape = detail::common_tape(a, b);
    auto out = std::make_shared<Storage>(a.shape(), a.is_complex());
    auto sa = a.storage();
    auto sb = b.storage();
    if (!out->is_complex()) {
        for (size_t i = 0; i < out->size(); ++i) out->re[i] = sa->re[i] * sb->re[i];
    } else {
        for (size_t i = 0; i < out->size(); ++i) {
            out->re[i] = sa->re[i] * sb->re[i] - sa->im[i] * sb->im[i];
            out->im[i] = sa->re[i] * sb->im[i] + sa->im[i] * sb->re[i];
        }
    }
    const int ia = detail::pid(a), ib = detail::pid(b);
    return detail::emit(tape, out, {ia, ib}, [ia, ib, sa, sb](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (!g.is_complex()) {
            if (Storage* ga = detail::grad_slot(t, ia))
                for (size_t i = 0; i < g.size(); ++i) ga->re[i] += g.re[i] * sb->re[i];
            if (Storage* gb = detail::grad_slot(t, ib))
                for (size_t i = 0; i < g.size(); ++i) gb->re[i] += g.re[i] * sa->re[i];
        } else {
            // c_a = c * conj(b), c_b = c * conj(a)
            if (Storage* ga = detail::grad_slot(t, ia)) {
                for (size_t i = 0; i < g.size(); ++i) {
                    ga->re[i] += g.re[i] * sb->re[i] + g.im[i] * sb->im[i];
                    ga->im[i] += g.im[i] * sb->re[i] - g.re[i] * sb->im[i];
                }
            }
            if (Storage* gb = detail::grad_slot(t, ib)) {
                for (size_t i = 0; i < g.size(); ++i) {
                    gb->re[i] += g.re[i] * sa->re[i] + g.im[i] * sa->im[i];
                    gb->im[i] += g.im[i] * sa->re[i] - g.re[i] * sa->im[i];
                }
            }
        }
    });
}

/// Multiply by a compile-time-known real constant.
inline Tensor scale(const Tensor& a, double s) {
    auto out = std::make_shared<Storage>(a.shape(), a.is_complex());
    const Storage& va = a.value();
    for (size_t i = 0; i < out->size(); ++i) out->re[i] = va.re[i] * s;
    if (out->is_complex())
        for (size_t i = 0; i < out->size(); ++i) out->im[i] = va.im[i] * s;
    const int ia = detail::pid(a);
    return detail::emit(a.tape(), out, {ia}, [ia, s](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            for (size_t i = 0; i < g.size(); ++i) ga->re[i] += g.re[i] * s;
            if (g.is_complex())
                for (size_t i = 0; i < g.size(); ++i) ga->im[i] += g.im[i] * s;
        }
    });
}

/// Add a real constant elementwise.
inline Tensor add_constant(const Tensor& a, double c) {
    if (a.is_complex()) throw ShapeError("add_constant: real tensors only");
    auto out = std::make_shared<Storage>(a.shape());
    const Storage& va = a.value();
    for (size_t i = 0; i < out->size(); ++i) out->re[i] = va.re[i] + c;
    const int ia = detail::pid(a);
    return detail::emit(a.tape(), out, {ia}, [ia](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia))
            for (size_t i = 0; i < g.size(); ++i) ga->re[i] += g.re[i];
    });
}

/// Multiply a real tensor elementwise by a single-element real tensor.
inline Tensor mul_scalar_tensor(const Tensor& a, const Tensor& s) {
    if (s.numel() != 1 || s.is_complex()) throw ShapeError("mul_scalar_tensor: scalar must be a real 1-element tensor");
    if (a.is_complex()) throw ShapeError("mul_scalar_tensor: real tensors only");
    Tape* tape = detail::common_tape(a, s);
    auto out = std::make_shared<Storage>(a.shape());
    auto sa = a.storage();
    auto ss = s.storage();
    const double sv = ss->re[0];
    for (size_t i = 0; i < out->size(); ++i) out->re[i] = sa->re[i] * sv;
    const int ia = detail::pid(a), is = detail::pid(s);
    return detail::emit(tape, out, {ia, is}, [ia, is, sa, ss](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia))
            for (size_t i = 0; i < g.size(); ++i) ga->re[i] += g.re[i] * ss->re[0];
        if (Storage* gs = detail::grad_slot(t, is)) {
            double acc = 0.0;
            for (size_t i = 0; i < g.size(); ++i) acc += g.re[i] * sa->re[i];
            gs->re[0] += acc;
        }
    });
}

// ---------------------------------------------------------------------------
// complex structure

/// Builds a complex tensor from real and imaginary parts.
inline Tensor make_complex(const Tensor& re, const Tensor& im) {
    if (!same_shape(re.shape(), im.shape())) throw ShapeError("make_complex: shape mismatch");
    if (re.is_complex() || im.is_complex()) throw ShapeError("make_complex: parts must be real");
    Tape* tape = detail::common_tape(re, im);
    auto out = std::make_shared<Storage>(re.shape(), true);
    out->re = re.value().re;
    out->im = im.value().re;
    const int ir = detail::pid(re), ii = detail::pid(im);
    return detail::emit(tape, out, {ir, ii}, [ir, ii](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* gr = detail::grad_slot(t, ir))
            for (size_t i = 0; i < g.size(); ++i) gr->re[i] += g.re[i];
        if (Storage* gi = detail::grad_slot(t, ii))
            for (size_t i = 0; i < g.size(); ++i) gi->re[i] += g.im[i];
    });
}

/// exp(i * theta) for a real phase tensor.
inline Tensor complex_exp(const Tensor& theta) {
    if (theta.is_complex()) throw ShapeError("complex_exp: phase must be real");
    auto out = std::make_shared<Storage>(theta.shape(), true);
    auto sv = theta.storage();
    for (size_t i = 0; i < out->size(); ++i) {
        out->re[i] = std::cos(sv->re[i]);
        out->im[i] = std::sin(sv->re[i]);
    }
    const int ia = detail::pid(theta);
    auto so = out;
    return detail::emit(theta.tape(), out, {ia}, [ia, so](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia))
            for (size_t i = 0; i < g.size(); ++i)
                ga->re[i] += so->re[i] * g.im[i] - so->im[i] * g.re[i];
    });
}

/// |z|^2, complex -> real.
inline Tensor modulus_squared(const Tensor& z) {
    if (!z.is_complex()) throw ShapeError("modulus_squared: complex input required");
    auto out = std::make_shared<Storage>(z.shape());
    auto sz = z.storage();
    for (size_t i = 0; i < out->size(); ++i)
        out->re[i] = sz->re[i] * sz->re[i] + sz->im[i] * sz->im[i];
    const int ia = detail::pid(z);
    return detail::emit(z.tape(), out, {ia}, [ia, sz](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            for (size_t i = 0; i < g.size(); ++i) {
                ga->re[i] += 2.0 * g.re[i] * sz->re[i];
                ga->im[i] += 2.0 * g.re[i] * sz->im[i];
            }
        }
    });
}

/// arg(z) = atan2(im, re), complex -> real in [-pi, pi].
inline Tensor complex_arg(const Tensor& z) {
    if (!z.is_complex()) throw ShapeError("complex_arg: complex input required");
    auto out = std::make_shared<Storage>(z.shape());
    auto sz = z.storage();
    for (size_t i = 0; i < out->size(); ++i) out->re[i] = std::atan2(sz->im[i], sz->re[i]);
    const int ia = detail::pid(z);
    return detail::emit(z.tape(), out, {ia}, [ia, sz](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            for (size_t i = 0; i < g.size(); ++i) {
                const double n = sz->re[i] * sz->re[i] + sz->im[i] * sz->im[i];
                if (n == 0.0) continue;  // undefined at the origin; subgradient 0
                ga->re[i] += g.re[i] * (-sz->im[i] / n);
                ga->im[i] += g.re[i] * (sz->re[i] / n);
            }
        }
    });
}

inline Tensor real_part(const Tensor& z) {
    if (!z.is_complex()) throw ShapeError("real_part: complex input required");
    auto out = std::make_shared<Storage>(z.shape());
    out->re = z.value().re;
    const int ia = detail::pid(z);
    return detail::emit(z.tape(), out, {ia}, [ia](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia))
            for (size_t i = 0; i < g.size(); ++i) ga->re[i] += g.re[i];
    });
}

// ---------------------------------------------------------------------------
// spectral ops

namespace detail {

inline Shape hw_shape(const Tensor& z, const char* who) {
    if (z.shape().size() != 2) throw ShapeError(std::string(who) + ": expected an H x W tensor");
    return z.shape();
}

/// Shared body of fft2/ifft2. The adjoint of the unnormalized forward DFT is
/// the unnormalized inverse, and the adjoint of the normalized inverse is the
/// normalized-forward; both are again FFTs.
inline Tensor fft_like(const Tensor& z, bool inverse) {
    if (!z.is_complex()) throw ShapeError("fft2: complex input required");
    Shape s = hw_shape(z, inverse ? "ifft2" : "fft2");
    const int h = s[0], w = s[1];
    auto out = std::make_shared<Storage>(s, true);
    {
        const Storage& v = z.value();
        std::vector<cdouble> buf(v.size());
        for (size_t i = 0; i < v.size(); ++i) buf[i] = cdouble(v.re[i], v.im[i]);
        fft2_inplace(buf.data(), h, w, inverse);
        for (size_t i = 0; i < buf.size(); ++i) {
            out->re[i] = buf[i].real();
            out->im[i] = buf[i].imag();
        }
    }
    const int ia = detail::pid(z);
    return detail::emit(z.tape(), out, {ia}, [ia, h, w, inverse](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            std::vector<cdouble> buf(g.size());
            for (size_t i = 0; i < g.size(); ++i) buf[i] = cdouble(g.re[i], g.im[i]);
            const double n = static_cast<double>(h) * static_cast<double>(w);
            // adjoint: F^H = n * ifft for the forward, (1/n) * fft for the inverse
            fft2_inplace(buf.data(), h, w, !inverse);
            const double k = inverse ? 1.0 / n : n;
            for (size_t i = 0; i < g.size(); ++i) {
                ga->re[i] += k * buf[i].real();
                ga->im[i] += k * buf[i].imag();
            }
        }
    });
}

}  // namespace detail

inline Tensor fft2(const Tensor& z) { return detail::fft_like(z, false); }
inline Tensor ifft2(const Tensor& z) { return detail::fft_like(z, true); }

// ---------------------------------------------------------------------------
// pointwise nonlinearities

inline Tensor relu(const Tensor& x) {
    if (x.is_complex()) throw ShapeError("relu: real input required");
    auto out = std::make_shared<Storage>(x.shape());
    auto sx = x.storage();
    for (size_t i = 0; i < out->size(); ++i) out->re[i] = sx->re[i] > 0.0 ? sx->re[i] : 0.0;
    const int ia = detail::pid(x);
    return detail::emit(x.tape(), out, {ia}, [ia, sx](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia))
            for (size_t i = 0; i < g.size(); ++i)
                if (sx->re[i] > 0.0) ga->re[i] += g.re[i];
    });
}

inline Tensor sigmoid(const Tensor& x) {
    if (x.is_complex()) throw ShapeError("sigmoid: real input required");
    auto out = std::make_shared<Storage>(x.shape());
    auto sx = x.storage();
    for (size_t i = 0; i < out->size(); ++i) out->re[i] = 1.0 / (1.0 + std::exp(-sx->re[i]));
    const int ia = detail::pid(x);
    auto so = out;
    return detail::emit(x.tape(), out, {ia}, [ia, so](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia))
            for (size_t i = 0; i < g.size(); ++i)
                ga->re[i] += g.re[i] * so->re[i] * (1.0 - so->re[i]);
    });
}

inline Tensor log(const Tensor& x) {
    if (x.is_complex()) throw ShapeError("log: real input required");
    auto out = std::make_shared<Storage>(x.shape());
    auto sx = x.storage();
    for (size_t i = 0; i < out->size(); ++i) {
        if (!(sx->re[i] > 0.0)) throw DomainError("log: nonpositive input");
        out->re[i] = std::log(sx->re[i]);
    }
    const int ia = detail::pid(x);
    return detail::emit(x.tape(), out, {ia}, [ia, sx](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia))
            for (size_t i = 0; i < g.size(); ++i) ga->re[i] += g.re[i] / sx->re[i];
    });
}

inline Tensor sqrt(const Tensor& x) {
    if (x.is_complex()) throw ShapeError("sqrt: real input required");
    auto out = std::make_shared<Storage>(x.shape());
    auto sx = x.storage();
    for (size_t i = 0; i < out->size(); ++i) {
        if (sx->re[i] < 0.0) throw DomainError("sqrt: negative input");
        out->re[i] = std::sqrt(sx->re[i]);
    }
    const int ia = detail::pid(x);
    auto so = out;
    return detail::emit(x.tape(), out, {ia}, [ia, so](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia))
            for (size_t i = 0; i < g.size(); ++i)
                if (so->re[i] > 0.0) ga->re[i] += g.re[i] * 0.5 / so->re[i];  // subgradient 0 at 0
    });
}

inline Tensor abs(const Tensor& x) {
    if (x.is_complex()) throw ShapeError("abs: real input required");
    auto out = std::make_shared<Storage>(x.shape());
    auto sx = x.storage();
    for (size_t i = 0; i < out->size(); ++i) out->re[i] = std::abs(sx->re[i]);
    const int ia = detail::pid(x);
    return detail::emit(x.tape(), out, {ia}, [ia, sx](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia))
            for (size_t i = 0; i < g.size(); ++i) {
                if (sx->re[i] > 0.0) ga->re[i] += g.re[i];
                else if (sx->re[i] < 0.0) ga->re[i] -= g.re[i];
            }
    });
}

inline Tensor max_with_constant(const Tensor& x, double c) {
    if (x.is_complex()) throw ShapeError("max_with_constant: real input required");
    auto out = std::make_shared<Storage>(x.shape());
    auto sx = x.storage();
    for (size_t i = 0; i < out->size(); ++i) out->re[i] = sx->re[i] > c ? sx->re[i] : c;
    const int ia = detail::pid(x);
    return detail::emit(x.tape(), out, {ia}, [ia, sx, c](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia))
            for (size_t i = 0; i < g.size(); ++i)
                if (sx->re[i] > c) ga->re[i] += g.re[i];
    });
}

// ---------------------------------------------------------------------------
// reductions and reshaping

inline Tensor sum(const Tensor& x) {
    if (x.is_complex()) throw ShapeError("sum: real input required");
    auto out = std::make_shared<Storage>(Shape{1});
    auto sx = x.storage();
    double acc = 0.0;
    for (size_t i = 0; i < sx->size(); ++i) acc += sx->re[i];
    out->re[0] = acc;
    const int ia = detail::pid(x);
    const size_t n = sx->size();
    return detail::emit(x.tape(), out, {ia}, [ia, n](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia))
            for (size_t i = 0; i < n; ++i) ga->re[i] += g.re[0];
    });
}

inline Tensor mean(const Tensor& x) {
    return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

inline Tensor reshape(const Tensor& x, Shape s) {
    if (shape_numel(s) != x.numel()) throw ShapeError("reshape: element count mismatch");
    auto out = std::make_shared<Storage>(s, x.is_complex());
    out->re = x.value().re;
    out->im = x.value().im;
    const int ia = detail::pid(x);
    return detail::emit(x.tape(), out, {ia}, [ia](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            for (size_t i = 0; i < g.size(); ++i) ga->re[i] += g.re[i];
            if (g.is_complex())
                for (size_t i = 0; i < g.size(); ++i) ga->im[i] += g.im[i];
        }
    });
}

/// Softmax over one axis of a real tensor, numerically stabilized.
inline Tensor softmax(const Tensor& x, int axis) {
    if (x.is_complex()) throw ShapeError("softmax: real input required");
    const Shape& s = x.shape();
    if (axis < 0 || axis >= static_cast<int>(s.size())) throw ShapeError("softmax: axis out of range");
    size_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= static_cast<size_t>(s[static_cast<size_t>(d)]);
    for (size_t d = static_cast<size_t>(axis) + 1; d < s.size(); ++d) inner *= static_cast<size_t>(s[d]);
    const size_t n = static_cast<size_t>(s[static_cast<size_t>(axis)]);

    auto out = std::make_shared<Storage>(s);
    auto sx = x.storage();
    for (size_t o = 0; o < outer; ++o) {
        for (size_t in = 0; in < inner; ++in) {
            const size_t base = o * n * inner + in;
            double mx = -std::numeric_limits<double>::infinity();
            for (size_t k = 0; k < n; ++k) mx = std::max(mx, sx->re[base + k * inner]);
            double denom = 0.0;
            for (size_t k = 0; k < n; ++k) {
                double e = std::exp(sx->re[base + k * inner] - mx);
                out->re[base + k * inner] = e;
                denom += e;
            }
            for (size_t k = 0; k < n; ++k) out->re[base + k * inner] /= denom;
        }
    }
    const int ia = detail::pid(x);
    auto so = out;
    return detail::emit(x.tape(), out, {ia}, [ia, so, outer, inner, n](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            for (size_t o = 0; o < outer; ++o) {
                for (size_t in = 0; in < inner; ++in) {
                    const size_t base = o * n * inner + in;
                    double dot = 0.0;
                    for (size_t k = 0; k < n; ++k) dot += g.re[base + k * inner] * so->re[base + k * inner];
                    for (size_t k = 0; k < n; ++k) {
                        const size_t i = base + k * inner;
                        ga->re[i] += so->re[i] * (g.re[i] - dot);
                    }
                }
            }
        }
    });
}

/// Forward difference along x: out[y][j] = in[y][j+1] - in[y][j], {H, W-1}.
inline Tensor diff_x(const Tensor& x) {
    if (x.is_complex() || x.shape().size() != 2) throw ShapeError("diff_x: real H x W tensor required");
    const int h = x.shape()[0], w = x.shape()[1];
    if (w < 2) throw ShapeError("diff_x: width must be >= 2");
    auto out = std::make_shared<Storage>(Shape{h, w - 1});
    auto sx = x.storage();
    for (int y = 0; y < h; ++y)
        for (int j = 0; j + 1 < w; ++j)
            out->re[static_cast<size_t>(y) * (w - 1) + j] =
                sx->re[static_cast<size_t>(y) * w + j + 1] - sx->re[static_cast<size_t>(y) * w + j];
    const int ia = detail::pid(x);
    return detail::emit(x.tape(), out, {ia}, [ia, h, w](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            for (int y = 0; y < h; ++y)
                for (int j = 0; j + 1 < w; ++j) {
                    const double gv = g.re[static_cast<size_t>(y) * (w - 1) + j];
                    ga->re[static_cast<size_t>(y) * w + j + 1] += gv;
                    ga->re[static_cast<size_t>(y) * w + j] -= gv;
                }
        }
    });
}

/// Forward difference along y: out[i][x] = in[i+1][x] - in[i][x], {H-1, W}.
inline Tensor diff_y(const Tensor& x) {
    if (x.is_complex() || x.shape().size() != 2) throw ShapeError("diff_y: real H x W tensor required");
    const int h = x.shape()[0], w = x.shape()[1];
    if (h < 2) throw ShapeError("diff_y: height must be >= 2");
    auto out = std::make_shared<Storage>(Shape{h - 1, w});
    auto sx = x.storage();
    for (int i = 0; i + 1 < h; ++i)
        for (int j = 0; j < w; ++j)
            out->re[static_cast<size_t>(i) * w + j] =
                sx->re[static_cast<size_t>(i + 1) * w + j] - sx->re[static_cast<size_t>(i) * w + j];
    const int ia = detail::pid(x);
    return detail::emit(x.tape(), out, {ia}, [ia, h, w](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            for (int i = 0; i + 1 < h; ++i)
                for (int j = 0; j < w; ++j) {
                    const double gv = g.re[static_cast<size_t>(i) * w + j];
                    ga->re[static_cast<size_t>(i + 1) * w + j] += gv;
                    ga->re[static_cast<size_t>(i) * w + j] -= gv;
                }
        }
    });
}

/// Per-channel scale and shift: y[c, ...] = x[c, ...] * scale[c] + shift[c].
inline Tensor affine(const Tensor& x, const Tensor& scale_t, const Tensor& shift_t) {
    if (x.is_complex() || scale_t.is_complex() || shift_t.is_complex())
        throw ShapeError("affine: real tensors only");
    const Shape& s = x.shape();
    if (s.empty()) throw ShapeError("affine: input needs a channel axis");
    const int channels = s[0];
    if (scale_t.shape() != Shape{channels} || shift_t.shape() != Shape{channels})
        throw ShapeError("affine: scale/shift must have shape {C}");
    size_t per = x.numel() / static_cast<size_t>(channels);

    Tape* tape = detail::common_tape(x, scale_t);
    if (Tape* t2 = detail::common_tape(scale_t, shift_t); t2 && tape && t2 != tape)
        throw GraphError("affine operands live on different tapes");
    if (!tape) tape = shift_t.on_tape() ? shift_t.tape() : nullptr;

    auto out = std::make_shared<Storage>(s);
    auto sx = x.storage();
    auto ss = scale_t.storage();
    auto sh = shift_t.storage();
    for (int c = 0; c < channels; ++c) {
        const size_t base = static_cast<size_t>(c) * per;
        const double sc = ss->re[static_cast<size_t>(c)];
        const double of = sh->re[static_cast<size_t>(c)];
        for (size_t i = 0; i < per; ++i) out->re[base + i] = sx->re[base + i] * sc + of;
    }
    const int ix = detail::pid(x), is = detail::pid(scale_t), ih = detail::pid(shift_t);
    return detail::emit(tape, out, {ix, is, ih}, [ix, is, ih, sx, ss, channels, per](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* gx = detail::grad_slot(t, ix)) {
            for (int c = 0; c < channels; ++c) {
                const size_t base = static_cast<size_t>(c) * per;
                const double sc = ss->re[static_cast<size_t>(c)];
                for (size_t i = 0; i < per; ++i) gx->re[base + i] += g.re[base + i] * sc;
            }
        }
        if (Storage* gs = detail::grad_slot(t, is)) {
            for (int c = 0; c < channels; ++c) {
                const size_t base = static_cast<size_t>(c) * per;
                double acc = 0.0;
                for (size_t i = 0; i < per; ++i) acc += g.re[base + i] * sx->re[base + i];
                gs->re[static_cast<size_t>(c)] += acc;
            }
        }
        if (Storage* gh = detail::grad_slot(t, ih)) {
            for (int c = 0; c < channels; ++c) {
                const size_t base = static_cast<size_t>(c) * per;
                double acc = 0.0;
                for (size_t i = 0; i < per; ++i) acc += g.re[base + i];
                gh->re[static_cast<size_t>(c)] += acc;
            }
        }
    });
}

}  // namespace holoforge::ad
