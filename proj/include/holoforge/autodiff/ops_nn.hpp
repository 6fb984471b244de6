#pragma once

#include "holoforge/autodiff/ops.hpp"

namespace holoforge::ad {

namespace detail {

// Axpy-style direct convolution kernels. The inner loops run over contiguous
// x so the compiler can vectorize them; all bounds are hoisted.

/// out[y][x] += wv * in[y + oy][x + ox] over the intersection of valid rows.
inline void shifted_axpy(double* out, const double* in, int h, int w, int oy, int ox, double wv) {
    const int y0 = std::max(0, -oy);
    const int y1 = std::min(h, h - oy);
    const int x0 = std::max(0, -ox);
    const int x1 = std::min(w, w - ox);
    if (x1 <= x0) return;
    for (int y = y0; y < y1; ++y) {
        double* orow = out + static_cast<size_t>(y) * w;
        const double* irow = in + static_cast<size_t>(y + oy) * w + ox;
        for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
    }
}

/// sum over the valid region of a[y][x] * b[y + oy][x + ox].
inline double shifted_dot(const double* a, const double* b, int h, int w, int oy, int ox) {
    const int y0 = std::max(0, -oy);
    const int y1 = std::min(h, h - oy);
    const int x0 = std::max(0, -ox);
    const int x1 = std::min(w, w - ox);
    double acc = 0.0;
    for (int y = y0; y < y1; ++y) {
        const double* ar = a + static_cast<size_t>(y) * w;
        const double* br = b + static_cast<size_t>(y + oy) * w + ox;
        for (int x = x0; x < x1; ++x) acc += ar[x] * br[x];
    }
    return acc;
}

/// 2D linear cross-correlation via FFT for kernels above the direct-loop cut.
/// out[y][x] = sum_{ky,kx} w[ky][kx] * in[y+ky-ph][x+kx-pw], zero padded.
inline void fft_correlate_same(double* out, const double* in, const double* w_tap, int h, int w,
                               int kh, int kw, int ph, int pw, bool accumulate) {
    const int fh = h + kh - 1;
    const int fw = w + kw - 1;
    std::vector<cdouble> fx(static_cast<size_t>(fh) * fw, cdouble(0, 0));
    std::vector<cdouble> fk(static_cast<size_t>(fh) * fw, cdouble(0, 0));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) fx[static_cast<size_t>(y) * fw + x] = in[static_cast<size_t>(y) * w + x];
    // flipped kernel turns correlation into convolution
    for (int ky = 0; ky < kh; ++ky)
        for (int kx = 0; kx < kw; ++kx)
            fk[static_cast<size_t>(kh - 1 - ky) * fw + (kw - 1 - kx)] = w_tap[static_cast<size_t>(ky) * kw + kx];
    fft2_inplace(fx.data(), fh, fw, false);
    fft2_inplace(fk.data(), fh, fw, false);
    for (size_t i = 0; i < fx.size(); ++i) fx[i] *= fk[i];
    fft2_inplace(fx.data(), fh, fw, true);
    const int sy = kh - 1 - ph;
    const int sx = kw - 1 - pw;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = fx[static_cast<size_t>(y + sy) * fw + (x + sx)].real();
            double& o = out[static_cast<size_t>(y) * w + x];
            o = accumulate ? o + v : v;
        }
}

constexpr int kDirectConvMaxKernel = 7;

}  // namespace detail

/// 2D cross-correlation, stride 1, symmetric zero padding that preserves H x W.
/// x: {Cin, H, W}; w: {Cout, Cin, kh, kw} with odd kh, kw; bias: {Cout} or empty.
/// Kernels up to 7x7 run direct loops; larger kernels go through FFT, and the
/// gradients mirror whichever forward path ran.
inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias = Tensor()) {
    if (x.shape().size() != 3 || w.shape().size() != 4) throw ShapeError("conv2d: x is {C,H,W}, w is {Co,Ci,kh,kw}");
    const int cin = x.shape()[0], h = x.shape()[1], wid = x.shape()[2];
    const int cout = w.shape()[0], kh = w.shape()[2], kw = w.shape()[3];
    if (w.shape()[1] != cin) throw ShapeError("conv2d: input channel mismatch");
    if (kh % 2 == 0 || kw % 2 == 0) throw ShapeError("conv2d: kernels must be odd-sized");
    const bool has_bias = bias.storage() != nullptr;
    if (has_bias && bias.shape() != Shape{cout}) throw ShapeError("conv2d: bias must be {Cout}");
    const int ph = kh / 2, pw = kw / 2;
    const bool use_fft = kh > detail::kDirectConvMaxKernel || kw > detail::kDirectConvMaxKernel;

    Tape* tape = detail::common_tape(x, w);
    if (has_bias) {
        Tape* tb = bias.on_tape() ? bias.tape() : nullptr;
        if (tb && tape && tb != tape) throw GraphError("conv2d operands live on different tapes");
        if (!tape) tape = tb;
    }

    auto sx = x.storage();
    auto sw = w.storage();
    auto sb = has_bias ? bias.storage() : nullptr;
    auto out = std::make_shared<Storage>(Shape{cout, h, wid});
    const size_t plane = static_cast<size_t>(h) * wid;

    for (int oc = 0; oc < cout; ++oc) {
        double* op = out->re.data() + static_cast<size_t>(oc) * plane;
        if (has_bias) {
            const double b = sb->re[static_cast<size_t>(oc)];
            for (size_t i = 0; i < plane; ++i) op[i] = b;
        }
        for (int ic = 0; ic < cin; ++ic) {
            const double* ip = sx->re.data() + static_cast<size_t>(ic) * plane;
            const double* wp = sw->re.data() + (static_cast<size_t>(oc) * cin + ic) * kh * kw;
            if (use_fft) {
                std::vector<double> tmp(plane);
                detail::fft_correlate_same(tmp.data(), ip, wp, h, wid, kh, kw, ph, pw, false);
                for (size_t i = 0; i < plane; ++i) op[i] += tmp[i];
            } else {
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx)
                        detail::shifted_axpy(op, ip, h, wid, ky - ph, kx - pw,
                                             wp[static_cast<size_t>(ky) * kw + kx]);
            }
        }
    }

    const int ix = detail::pid(x), iw = detail::pid(w), ib = has_bias ? detail::pid(bias) : -1;
    return detail::emit(tape, out, {ix, iw, ib},
                        [=](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* gx = detail::grad_slot(t, ix)) {
            for (int ic = 0; ic < cin; ++ic) {
                double* gp = gx->re.data() + static_cast<size_t>(ic) * plane;
                for (int oc = 0; oc < cout; ++oc) {
                    const double* gop = g.re.data() + static_cast<size_t>(oc) * plane;
                    const double* wp = sw->re.data() + (static_cast<size_t>(oc) * cin + ic) * kh * kw;
                    if (use_fft) {
                        // gx = w (*) g, a true convolution; reuse the correlator
                        // with a flipped kernel.
                        std::vector<double> wf(static_cast<size_t>(kh) * kw);
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx)
                                wf[static_cast<size_t>(ky) * kw + kx] =
                                    wp[static_cast<size_t>(kh - 1 - ky) * kw + (kw - 1 - kx)];
                        std::vector<double> tmp(plane);
                        detail::fft_correlate_same(tmp.data(), gop, wf.data(), h, wid, kh, kw,
                                                   kh - 1 - ph, kw - 1 - pw, false);
                        for (size_t i = 0; i < plane; ++i) gp[i] += tmp[i];
                    } else {
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx)
                                detail::shifted_axpy(gp, gop, h, wid, ph - ky, pw - kx,
                                                     wp[static_cast<size_t>(ky) * kw + kx]);
                    }
                }
            }
        }
        if (Storage* gw = detail::grad_slot(t, iw)) {
            for (int oc = 0; oc < cout; ++oc) {
                const double* gop = g.re.data() + static_cast<size_t>(oc) * plane;
                for (int ic = 0; ic < cin; ++ic) {
                    const double* ip = sx->re.data() + static_cast<size_t>(ic) * plane;
                    double* gwp = gw->re.data() + (static_cast<size_t>(oc) * cin + ic) * kh * kw;
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx)
                            gwp[static_cast<size_t>(ky) * kw + kx] +=
                                detail::shifted_dot(gop, ip, h, wid, ky - ph, kx - pw);
                }
            }
        }
        if (ib >= 0) {
            if (Storage* gb = detail::grad_slot(t, ib)) {
                for (int oc = 0; oc < cout; ++oc) {
                    const double* gop = g.re.data() + static_cast<size_t>(oc) * plane;
                    double acc = 0.0;
                    for (size_t i = 0; i < plane; ++i) acc += gop[i];
                    gb->re[static_cast<size_t>(oc)] += acc;
                }
            }
        }
    });
}

/// Depthwise 3x3-style correlation: one kernel per channel, stride 1, same pad.
/// x: {C, H, W}; w: {C, kh, kw}; bias: {C} or empty.
inline Tensor depthwise_conv2d(const Tensor& x, const Tensor& w, const Tensor& bias = Tensor()) {
    if (x.shape().size() != 3 || w.shape().size() != 3) throw ShapeError("depthwise_conv2d: x {C,H,W}, w {C,kh,kw}");
    const int c = x.shape()[0], h = x.shape()[1], wid = x.shape()[2];
    const int kh = w.shape()[1], kw = w.shape()[2];
    if (w.shape()[0] != c) throw ShapeError("depthwise_conv2d: channel mismatch");
    if (kh % 2 == 0 || kw % 2 == 0) throw ShapeError("depthwise_conv2d: kernels must be odd-sized");
    const bool has_bias = bias.storage() != nullptr;
    if (has_bias && bias.shape() != Shape{c}) throw ShapeError("depthwise_conv2d: bias must be {C}");
    const int ph = kh / 2, pw = kw / 2;

    Tape* tape = detail::common_tape(x, w);
    auto sx = x.storage();
    auto sw = w.storage();
    auto sb = has_bias ? bias.storage() : nullptr;
    auto out = std::make_shared<Storage>(Shape{c, h, wid});
    const size_t plane = static_cast<size_t>(h) * wid;
    for (int ch = 0; ch < c; ++ch) {
        double* op = out->re.data() + static_cast<size_t>(ch) * plane;
        if (has_bias) {
            const double b = sb->re[static_cast<size_t>(ch)];
            for (size_t i = 0; i < plane; ++i) op[i] = b;
        }
        const double* ip = sx->re.data() + static_cast<size_t>(ch) * plane;
        const double* wp = sw->re.data() + static_cast<size_t>(ch) * kh * kw;
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx)
                detail::shifted_axpy(op, ip, h, wid, ky - ph, kx - pw, wp[static_cast<size_t>(ky) * kw + kx]);
    }
    const int ix = detail::pid(x), iw = detail::pid(w), ib = has_bias ? detail::pid(bias) : -1;
    return detail::emit(tape, out, {ix, iw, ib}, [=](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        for (int ch = 0; ch < c; ++ch) {
            const double* gop = g.re.data() + static_cast<size_t>(ch) * plane;
            const double* ip = sx->re.data() + static_cast<size_t>(ch) * plane;
            const double* wp = sw->re.data() + static_cast<size_t>(ch) * kh * kw;
            if (Storage* gx = detail::grad_slot(t, ix)) {
                double* gp = gx->re.data() + static_cast<size_t>(ch) * plane;
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx)
                        detail::shifted_axpy(gp, gop, h, wid, ph - ky, pw - kx,
                                             wp[static_cast<size_t>(ky) * kw + kx]);
            }
            if (Storage* gw = detail::grad_slot(t, iw)) {
                double* gwp = gw->re.data() + static_cast<size_t>(ch) * kh * kw;
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx)
                        gwp[static_cast<size_t>(ky) * kw + kx] +=
                            detail::shifted_dot(gop, ip, h, wid, ky - ph, kx - pw);
            }
            if (ib >= 0) {
                if (Storage* gb = detail::grad_slot(t, ib)) {
                    double acc = 0.0;
                    for (size_t i = 0; i < plane; ++i) acc += gop[i];
                    gb->re[static_cast<size_t>(ch)] += acc;
                }
            }
        }
    });
}

/// Transposed convolution that scales resolution by `stride`.
/// x: {Cin, H, W}; w: {Cin, Cout, kh, kw} (odd); out: {Cout, stride*H, stride*W}.
inline Tensor transpose_conv2d(const Tensor& x, const Tensor& w, const Tensor& bias = Tensor(),
                               int stride = 2) {
    if (x.shape().size() != 3 || w.shape().size() != 4)
        throw ShapeError("transpose_conv2d: x {Ci,H,W}, w {Ci,Co,kh,kw}");
    if (stride < 1) throw ShapeError("transpose_conv2d: stride must be >= 1");
    const int cin = x.shape()[0], h = x.shape()[1], wid = x.shape()[2];
    const int cout = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
    if (w.shape()[0] != cin) throw ShapeError("transpose_conv2d: input channel mismatch");
    if (kh % 2 == 0 || kw % 2 == 0) throw ShapeError("transpose_conv2d: kernels must be odd-sized");
    const bool has_bias = bias.storage() != nullptr;
    if (has_bias && bias.shape() != Shape{cout}) throw ShapeError("transpose_conv2d: bias must be {Cout}");
    const int ph = kh / 2, pw = kw / 2;
    const int oh = h * stride, ow = wid * stride;

    Tape* tape = detail::common_tape(x, w);
    auto sx = x.storage();
    auto sw = w.storage();
    auto sb = has_bias ? bias.storage() : nullptr;
    auto out = std::make_shared<Storage>(Shape{cout, oh, ow});
    const size_t iplane = static_cast<size_t>(h) * wid;
    const size_t oplane = static_cast<size_t>(oh) * ow;

    if (has_bias) {
        for (int oc = 0; oc < cout; ++oc) {
            double* op = out->re.data() + static_cast<size_t>(oc) * oplane;
            const double b = sb->re[static_cast<size_t>(oc)];
            for (size_t i = 0; i < oplane; ++i) op[i] = b;
        }
    }
    for (int ic = 0; ic < cin; ++ic) {
        const double* ip = sx->re.data() + static_cast<size_t>(ic) * iplane;
        for (int oc = 0; oc < cout; ++oc) {
            double* op = out->re.data() + static_cast<size_t>(oc) * oplane;
            const double* wp = sw->re.data() + (static_cast<size_t>(ic) * cout + oc) * kh * kw;
            for (int y = 0; y < h; ++y) {
                for (int ky = 0; ky < kh; ++ky) {
                    const int oy = stride * y + ky - ph;
                    if (oy < 0 || oy >= oh) continue;
                    double* orow = op + static_cast<size_t>(oy) * ow;
                    const double* irow = ip + static_cast<size_t>(y) * wid;
                    for (int kx = 0; kx < kw; ++kx) {
                        const double wv = wp[static_cast<size_t>(ky) * kw + kx];
                        const int off = kx - pw;
                        int x0 = 0, x1 = wid;
                        while (x0 < wid && stride * x0 + off < 0) ++x0;
                        while (x1 > x0 && stride * (x1 - 1) + off >= ow) --x1;
                        for (int x = x0; x < x1; ++x) orow[stride * x + off] += wv * irow[x];
                    }
                }
            }
        }
    }

    const int ix = detail::pid(x), iw = detail::pid(w), ib = has_bias ? detail::pid(bias) : -1;
    return detail::emit(tape, out, {ix, iw, ib}, [=](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        Storage* gx = detail::grad_slot(t, ix);
        Storage* gw = detail::grad_slot(t, iw);
        for (int ic = 0; ic < cin; ++ic) {
            const double* ip = sx->re.data() + static_cast<size_t>(ic) * iplane;
            double* gxp = gx ? gx->re.data() + static_cast<size_t>(ic) * iplane : nullptr;
            for (int oc = 0; oc < cout; ++oc) {
                const double* gop = g.re.data() + static_cast<size_t>(oc) * oplane;
                const double* wp = sw->re.data() + (static_cast<size_t>(ic) * cout + oc) * kh * kw;
                double* gwp = gw ? gw->re.data() + (static_cast<size_t>(ic) * cout + oc) * kh * kw : nullptr;
                for (int y = 0; y < h; ++y) {
                    for (int ky = 0; ky < kh; ++ky) {
                        const int oy = stride * y + ky - ph;
                        if (oy < 0 || oy >= oh) continue;
                        const double* grow = gop + static_cast<size_t>(oy) * ow;
                        const double* irow = ip + static_cast<size_t>(y) * wid;
                        double* gxrow = gxp ? gxp + static_cast<size_t>(y) * wid : nullptr;
                        for (int kx = 0; kx < kw; ++kx) {
                            const double wv = wp[static_cast<size_t>(ky) * kw + kx];
                            const int off = kx - pw;
                            int x0 = 0, x1 = wid;
                            while (x0 < wid && stride * x0 + off < 0) ++x0;
                            while (x1 > x0 && stride * (x1 - 1) + off >= ow) --x1;
                            if (gxrow)
                                for (int x = x0; x < x1; ++x) gxrow[x] += wv * grow[stride * x + off];
                            if (gwp) {
                                double acc = 0.0;
                                for (int x = x0; x < x1; ++x) acc += irow[x] * grow[stride * x + off];
                                gwp[static_cast<size_t>(ky) * kw + kx] += acc;
                            }
                        }
                    }
                }
            }
        }
        if (ib >= 0) {
            if (Storage* gb = detail::grad_slot(t, ib)) {
                for (int oc = 0; oc < cout; ++oc) {
                    const double* gop = g.re.data() + static_cast<size_t>(oc) * oplane;
                    double acc = 0.0;
                    for (size_t i = 0; i < oplane; ++i) acc += gop[i];
                    gb->re[static_cast<size_t>(oc)] += acc;
                }
            }
        }
    });
}

/// 2x2 mean pooling, stride 2. Requires even H and W.
inline Tensor avg_pool2(const Tensor& x) {
    if (x.shape().size() != 3) throw ShapeError("avg_pool2: input must be {C,H,W}");
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    if (h % 2 != 0 || w % 2 != 0) throw ShapeError("avg_pool2: H and W must be even");
    const int oh = h / 2, ow = w / 2;
    auto sx = x.storage();
    auto out = std::make_shared<Storage>(Shape{c, oh, ow});
    for (int ch = 0; ch < c; ++ch) {
        const double* ip = sx->re.data() + static_cast<size_t>(ch) * h * w;
        double* op = out->re.data() + static_cast<size_t>(ch) * oh * ow;
        for (int y = 0; y < oh; ++y)
            for (int x2 = 0; x2 < ow; ++x2) {
                const double* r0 = ip + static_cast<size_t>(2 * y) * w + 2 * x2;
                const double* r1 = r0 + w;
                op[static_cast<size_t>(y) * ow + x2] = 0.25 * (r0[0] + r0[1] + r1[0] + r1[1]);
            }
    }
    const int ia = detail::pid(x);
    return detail::emit(x.tape(), out, {ia}, [ia, c, h, w, oh, ow](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            for (int ch = 0; ch < c; ++ch) {
                const double* gp = g.re.data() + static_cast<size_t>(ch) * oh * ow;
                double* xp = ga->re.data() + static_cast<size_t>(ch) * h * w;
                for (int y = 0; y < oh; ++y)
                    for (int x2 = 0; x2 < ow; ++x2) {
                        const double v = 0.25 * gp[static_cast<size_t>(y) * ow + x2];
                        double* r0 = xp + static_cast<size_t>(2 * y) * w + 2 * x2;
                        double* r1 = r0 + w;
                        r0[0] += v;
                        r0[1] += v;
                        r1[0] += v;
                        r1[1] += v;
                    }
            }
        }
    });
}

/// Nearest-neighbour upsampling by an integer factor.
inline Tensor upsample_nearest(const Tensor& x, int factor) {
    if (x.shape().size() != 3) throw ShapeError("upsample_nearest: input must be {C,H,W}");
    if (factor < 1) throw ShapeError("upsample_nearest: factor must be >= 1");
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    const int oh = h * factor, ow = w * factor;
    auto sx = x.storage();
    auto out = std::make_shared<Storage>(Shape{c, oh, ow});
    for (int ch = 0; ch < c; ++ch) {
        const double* ip = sx->re.data() + static_cast<size_t>(ch) * h * w;
        double* op = out->re.data() + static_cast<size_t>(ch) * oh * ow;
        for (int y = 0; y < oh; ++y) {
            const double* irow = ip + static_cast<size_t>(y / factor) * w;
            double* orow = op + static_cast<size_t>(y) * ow;
            for (int x2 = 0; x2 < ow; ++x2) orow[x2] = irow[x2 / factor];
        }
    }
    const int ia = detail::pid(x);
    return detail::emit(x.tape(), out, {ia}, [ia, c, h, w, oh, ow, factor](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            for (int ch = 0; ch < c; ++ch) {
                const double* gp = g.re.data() + static_cast<size_t>(ch) * oh * ow;
                double* xp = ga->re.data() + static_cast<size_t>(ch) * h * w;
                for (int y = 0; y < oh; ++y) {
                    double* xrow = xp + static_cast<size_t>(y / factor) * w;
                    const double* grow = gp + static_cast<size_t>(y) * ow;
                    for (int x2 = 0; x2 < ow; ++x2) xrow[x2 / factor] += grow[x2];
                }
            }
        }
    });
}

/// {C, H, W} -> {C} channel means.
inline Tensor global_avg_pool(const Tensor& x) {
    if (x.shape().size() != 3) throw ShapeError("global_avg_pool: input must be {C,H,W}");
    const int c = x.shape()[0];
    const size_t plane = static_cast<size_t>(x.shape()[1]) * x.shape()[2];
    auto sx = x.storage();
    auto out = std::make_shared<Storage>(Shape{c});
    for (int ch = 0; ch < c; ++ch) {
        const double* ip = sx->re.data() + static_cast<size_t>(ch) * plane;
        double acc = 0.0;
        for (size_t i = 0; i < plane; ++i) acc += ip[i];
        out->re[static_cast<size_t>(ch)] = acc / static_cast<double>(plane);
    }
    const int ia = detail::pid(x);
    return detail::emit(x.tape(), out, {ia}, [ia, c, plane](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            for (int ch = 0; ch < c; ++ch) {
                const double v = g.re[static_cast<size_t>(ch)] / static_cast<double>(plane);
                double* xp = ga->re.data() + static_cast<size_t>(ch) * plane;
                for (size_t i = 0; i < plane; ++i) xp[i] += v;
            }
        }
    });
}

/// {m, k} x {k, n} -> {m, n}.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2) throw ShapeError("matmul: 2D tensors required");
    if (a.is_complex() || b.is_complex()) throw ShapeError("matmul: real tensors only");
    const int m = a.shape()[0], k = a.shape()[1];
    const int k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2) throw ShapeError("matmul: inner dimensions differ");
    Tape* tape = detail::common_tape(a, b);
    auto sa = a.storage();
    auto sb = b.storage();
    auto out = std::make_shared<Storage>(Shape{m, n});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) {
            const double av = sa->re[static_cast<size_t>(i) * k + j];
            const double* brow = sb->re.data() + static_cast<size_t>(j) * n;
            double* orow = out->re.data() + static_cast<size_t>(i) * n;
            for (int l = 0; l < n; ++l) orow[l] += av * brow[l];
        }
    const int ia = detail::pid(a), ib = detail::pid(b);
    return detail::emit(tape, out, {ia, ib}, [=](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < k; ++j) {
                    const double* grow = g.re.data() + static_cast<size_t>(i) * n;
                    const double* brow = sb->re.data() + static_cast<size_t>(j) * n;
                    double acc = 0.0;
                    for (int l = 0; l < n; ++l) acc += grow[l] * brow[l];
                    ga->re[static_cast<size_t>(i) * k + j] += acc;
                }
        }
        if (Storage* gb = detail::grad_slot(t, ib)) {
            for (int j = 0; j < k; ++j)
                for (int i = 0; i < m; ++i) {
                    const double av = sa->re[static_cast<size_t>(i) * k + j];
                    const double* grow = g.re.data() + static_cast<size_t>(i) * n;
                    double* gbrow = gb->re.data() + static_cast<size_t>(j) * n;
                    for (int l = 0; l < n; ++l) gbrow[l] += av * grow[l];
                }
        }
    });
}

/// Embeds an {H, W} tensor into a zero {H2, W2} grid at offset (oy, ox).
inline Tensor pad_embed(const Tensor& x, int h2, int w2, int oy, int ox) {
    if (x.shape().size() != 2) throw ShapeError("pad_embed: H x W tensor required");
    const int h = x.shape()[0], w = x.shape()[1];
    if (oy < 0 || ox < 0 || oy + h > h2 || ox + w > w2) throw ShapeError("pad_embed: region out of bounds");
    auto out = std::make_shared<Storage>(Shape{h2, w2}, x.is_complex());
    auto sx = x.storage();
    for (int y = 0; y < h; ++y) {
        const size_t src = static_cast<size_t>(y) * w;
        const size_t dst = static_cast<size_t>(y + oy) * w2 + ox;
        std::copy_n(sx->re.begin() + static_cast<long>(src), w, out->re.begin() + static_cast<long>(dst));
        if (x.is_complex())
            std::copy_n(sx->im.begin() + static_cast<long>(src), w, out->im.begin() + static_cast<long>(dst));
    }
    const int ia = detail::pid(x);
    return detail::emit(x.tape(), out, {ia}, [ia, h, w, w2, oy, ox](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            for (int y = 0; y < h; ++y) {
                const size_t src = static_cast<size_t>(y + oy) * w2 + ox;
                const size_t dst = static_cast<size_t>(y) * w;
                for (int x2 = 0; x2 < w; ++x2) ga->re[dst + x2] += g.re[src + x2];
                if (g.is_complex())
                    for (int x2 = 0; x2 < w; ++x2) ga->im[dst + x2] += g.im[src + x2];
            }
        }
    });
}

/// Extracts the {h, w} window at offset (oy, ox) of an {H, W} tensor.
inline Tensor crop_window(const Tensor& x, int h, int w, int oy, int ox) {
    if (x.shape().size() != 2) throw ShapeError("crop_window: H x W tensor required");
    const int h2 = x.shape()[0], w2 = x.shape()[1];
    if (oy < 0 || ox < 0 || oy + h > h2 || ox + w > w2) throw ShapeError("crop_window: region out of bounds");
    auto out = std::make_shared<Storage>(Shape{h, w}, x.is_complex());
    auto sx = x.storage();
    for (int y = 0; y < h; ++y) {
        const size_t src = static_cast<size_t>(y + oy) * w2 + ox;
        const size_t dst = static_cast<size_t>(y) * w;
        std::copy_n(sx->re.begin() + static_cast<long>(src), w, out->re.begin() + static_cast<long>(dst));
        if (x.is_complex())
            std::copy_n(sx->im.begin() + static_cast<long>(src), w, out->im.begin() + static_cast<long>(dst));
    }
    const int ia = detail::pid(x);
    return detail::emit(x.tape(), out, {ia}, [ia, h, w, w2, oy, ox](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            for (int y = 0; y < h; ++y) {
                const size_t dst = static_cast<size_t>(y + oy) * w2 + ox;
                const size_t src = static_cast<size_t>(y) * w;
                for (int x2 = 0; x2 < w; ++x2) ga->re[dst + x2] += g.re[src + x2];
                if (g.is_complex())
                    for (int x2 = 0; x2 < w; ++x2) ga->im[dst + x2] += g.im[src + x2];
            }
        }
    });
}

/// Copies channels [c0, c1) of a {C, H, W} tensor.
inline Tensor slice_channels(const Tensor& x, int c0, int c1) {
    if (x.shape().size() != 3) throw ShapeError("slice_channels: input must be {C,H,W}");
    const int c = x.shape()[0];
    if (c0 < 0 || c1 > c || c0 >= c1) throw ShapeError("slice_channels: bad channel range");
    const int h = x.shape()[1], w = x.shape()[2];
    const size_t plane = static_cast<size_t>(h) * w;
    auto sx = x.storage();
    auto out = std::make_shared<Storage>(Shape{c1 - c0, h, w}, x.is_complex());
    std::copy_n(sx->re.begin() + static_cast<long>(c0 * plane), (c1 - c0) * plane, out->re.begin());
    if (x.is_complex())
        std::copy_n(sx->im.begin() + static_cast<long>(c0 * plane), (c1 - c0) * plane, out->im.begin());
    const int ia = detail::pid(x);
    return detail::emit(x.tape(), out, {ia}, [ia, c0, plane](Tape& t, int self) {
        const Storage& g = *t.grad(self);
        if (Storage* ga = detail::grad_slot(t, ia)) {
            const size_t off = static_cast<size_t>(c0) * plane;
            for (size_t i = 0; i < g.size(); ++i) ga->re[off + i] += g.re[i];
            if (g.is_complex())
                for (size_t i = 0; i < g.size(); ++i) ga->im[off + i] += g.im[i];
        }
    });
}

}  // namespace holoforge::ad
