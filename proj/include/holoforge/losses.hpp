#pragma once

#include <map>
#include <string>

#include "holoforge/autodiff.hpp"
#include "holoforge/field.hpp"

namespace holoforge {

/// Scalar loss breakdown. total always equals the declared weighted
/// combination of the present components.
struct LossReport {
    double total = 0.0;
    std::map<std::string, double> components;
};

namespace losses {

using ad::Tensor;

// silog constants: the standard values from the depth-estimation lineage the
// method builds on.
constexpr double kSilogLambda = 0.85;
constexpr double kSilogScale = 10.0;
constexpr double kColorConsistencyWeight = 0.1;
constexpr double kCharbonnierEps = 1e-3;
constexpr double kDefaultKdTemperature = 4.0;

/// Reconstruction stack handle: K*P in-focus intensity maps, [k*P + p].
struct ReconStack {
    int planes = 0;
    int primaries = 0;
    std::vector<Tensor> maps;

    const Tensor& at(int k, int p) const { return maps[static_cast<size_t>(k) * primaries + p]; }
};

inline Tensor constant_map(const double* data, int h, int w) {
    auto st = std::make_shared<ad::Storage>(ad::Shape{h, w});
    std::copy_n(data, static_cast<size_t>(h) * w, st->re.begin());
    return Tensor::constant(st);
}

/// Squared error against s-scaled targets on in-focus pixels, normalized by
/// (masked pixel count x P), plus a small L2 pull between per-primary masked
/// means of reconstruction and target (the color-consistency surrogate).
inline Tensor image_loss(const ReconStack& recon, const MultiplaneTarget& target, double s) {
    if (!(s >= 0.0)) throw DomainError("image_loss: s must be >= 0");
    if (recon.planes != target.planes_count || recon.primaries != target.primaries)
        throw ShapeError("image_loss: reconstruction and target disagree in K or P");
    const int h = target.height, w = target.width;
    const int K = target.planes_count, P = target.primaries;

    double masked_px = 0.0;
    for (int k = 0; k < K; ++k) {
        const double* m = target.mask(k);
        for (size_t i = 0; i < static_cast<size_t>(h) * w; ++i) masked_px += m[i];
    }
    if (masked_px <= 0.0) throw DomainError("image_loss: masks select no pixels");

    Tensor sq_acc;
    std::vector<Tensor> mu_recon(static_cast<size_t>(P));
    std::vector<Tensor> mu_target(static_cast<size_t>(P));
    for (int k = 0; k < K; ++k) {
        Tensor mask = constant_map(target.mask(k), h, w);
        for (int p = 0; p < P; ++p) {
            const Tensor& r = recon.at(k, p);
            if (r.shape() != ad::Shape{h, w}) throw ShapeError("image_loss: reconstruction map shape mismatch");
            // s * I_p as a constant
            auto ts = std::make_shared<ad::Storage>(ad::Shape{h, w});
            const double* ip = target.intensity(k, p);
            for (size_t i = 0; i < ts->size(); ++i) ts->re[i] = s * ip[i];
            Tensor starget = Tensor::constant(ts);

            Tensor diff = ad::sub(r, starget);
            Tensor masked_diff = ad::mul(mask, diff);
            Tensor term = ad::sum(ad::mul(masked_diff, diff));  // mask is binary: mask^2 = mask
            sq_acc = sq_acc.storage() ? ad::add(sq_acc, term) : term;

            Tensor mr = ad::sum(ad::mul(mask, r));
            Tensor mt = ad::sum(ad::mul(mask, starget));
            mu_recon[static_cast<size_t>(p)] =
                mu_recon[static_cast<size_t>(p)].storage() ? ad::add(mu_recon[static_cast<size_t>(p)], mr) : mr;
            mu_target[static_cast<size_t>(p)] =
                mu_target[static_cast<size_t>(p)].storage() ? ad::add(mu_target[static_cast<size_t>(p)], mt) : mt;
        }
    }
    Tensor mse = ad::scale(sq_acc, 1.0 / (masked_px * P));

    Tensor color;
    for (int p = 0; p < P; ++p) {
        Tensor d = ad::scale(ad::sub(mu_recon[static_cast<size_t>(p)], mu_target[static_cast<size_t>(p)]),
                             1.0 / masked_px);
        Tensor d2 = ad::mul(d, d);
        color = color.storage() ? ad::add(color, d2) : d2;
    }
    color = ad::scale(color, kColorConsistencyWeight / P);
    return ad::add(mse, color);
}

/// Mean squared laser power: differentiable pressure toward minimal usage.
inline Tensor light_loss(const Tensor& powers) {
    return ad::mean(ad::mul(powers, powers));
}

/// Scale-invariant log loss: sqrt(mean(d^2) - lambda * mean(d)^2) * c with
/// d = log(pred) - log(gt).
inline Tensor silog_loss(const Tensor& pred, const Tensor& gt,
                         double lambda_si = kSilogLambda, double scale_si = kSilogScale) {
    if (pred.shape() != gt.shape()) throw ShapeError("silog_loss: shape mismatch");
    for (double v : pred.value().re)
        if (!(v > 0.0)) throw DomainError("silog_loss: nonpositive predicted depth");
    for (double v : gt.value().re)
        if (!(v > 0.0)) throw DomainError("silog_loss: nonpositive ground-truth depth");
    Tensor d = ad::sub(ad::log(pred), ad::log(gt));
    Tensor m2 = ad::mean(ad::mul(d, d));
    Tensor m1 = ad::mean(d);
    Tensor v = ad::sub(m2, ad::scale(ad::mul(m1, m1), lambda_si));
    // Cauchy-Schwarz keeps v >= 0 for lambda <= 1; the clamp only absorbs roundoff
    return ad::scale(ad::sqrt(ad::max_with_constant(v, 0.0)), scale_si);
}

namespace detail {

/// mean over the union of both forward-difference sets:
/// (sum|dx(e)| + sum|dy(e)|) / (H*(W-1) + (H-1)*W).
inline Tensor combined_difference_mean(const Tensor& e) {
    const int h = e.shape()[0], w = e.shape()[1];
    Tensor tx = ad::sum(ad::abs(ad::diff_x(e)));
    Tensor ty = ad::sum(ad::abs(ad::diff_y(e)));
    const double count = static_cast<double>(h) * (w - 1) + static_cast<double>(h - 1) * w;
    return ad::scale(ad::add(tx, ty), 1.0 / count);
}

}  // namespace detail

/// Compares the edges of the estimated depth with the reference.
inline Tensor gradient_matching_loss(const Tensor& pred, const Tensor& gt) {
    if (pred.shape() != gt.shape()) throw ShapeError("gradient_matching_loss: shape mismatch");
    if (pred.shape().size() != 2) throw ShapeError("gradient_matching_loss: H x W maps required");
    return detail::combined_difference_mean(ad::sub(pred, gt));
}

/// Anisotropic total variation of the prediction.
inline Tensor tv_loss(const Tensor& pred) {
    if (pred.shape().size() != 2) throw ShapeError("tv_loss: H x W map required");
    return detail::combined_difference_mean(pred);
}

/// silog + gradient matching + total variation, unweighted.
inline Tensor depth_loss(const Tensor& pred, const Tensor& gt) {
    return ad::add(ad::add(silog_loss(pred, gt), gradient_matching_loss(pred, gt)), tv_loss(pred));
}

/// Temperature-scaled KL divergence over the flattened maps, student
/// distribution in the first slot as printed; `teacher_first` swaps the
/// arguments for the conventional ordering.
inline Tensor kd_loss(const Tensor& y_student, const Tensor& y_teacher, double temperature,
                      bool teacher_first = false) {
    if (!(temperature > 0.0)) throw DomainError("kd_loss: temperature must be positive");
    if (y_student.shape() != y_teacher.shape()) throw ShapeError("kd_loss: shape mismatch");
    const int n = static_cast<int>(y_student.numel());
    Tensor p = ad::softmax(ad::scale(ad::reshape(y_student, {n}), 1.0 / temperature), 0);
    Tensor q = ad::softmax(ad::scale(ad::reshape(y_teacher, {n}), 1.0 / temperature), 0);
    if (teacher_first) std::swap(p, q);
    Tensor kl = ad::sum(ad::mul(p, ad::sub(ad::log(p), ad::log(q))));
    return ad::scale(kl, temperature * temperature);
}

/// mean(sqrt(d^2 + eps^2)) - eps; the offset makes identical inputs score 0.
inline Tensor charbonnier_loss(const Tensor& y_student, const Tensor& y_teacher,
                               double eps = kCharbonnierEps) {
    if (y_student.shape() != y_teacher.shape()) throw ShapeError("charbonnier_loss: shape mismatch");
    Tensor d = ad::sub(y_student, y_teacher);
    Tensor m = ad::mean(ad::sqrt(ad::add_constant(ad::mul(d, d), eps * eps)));
    return ad::add_constant(m, -eps);
}

/// Combined multi-task training objective (alpha defaults: 1, 1, 30).
struct TrainLossResult {
    Tensor total;
    LossReport report;
};

inline TrainLossResult train_loss(const ReconStack& recon, const MultiplaneTarget& target,
                                  const Tensor& powers, const Tensor& pred_depth,
                                  const Tensor& gt_depth, double s,
                                  double alpha0 = 1.0, double alpha1 = 1.0, double alpha2 = 30.0) {
    Tensor li = image_loss(recon, target, s);
    Tensor ll = light_loss(powers);
    Tensor ld = depth_loss(pred_depth, gt_depth);
    Tensor total = ad::add(ad::add(ad::scale(li, alpha0), ad::scale(ll, alpha1)), ad::scale(ld, alpha2));
    TrainLossResult r;
    r.total = total;
    r.report.total = total.scalar();
    r.report.components["recon"] = li.scalar();
    r.report.components["light"] = ll.scalar();
    r.report.components["depth"] = ld.scalar();
    return r;
}

/// Head outputs that distillation matches between the two models.
struct DistillHeads {
    std::vector<Tensor> phases;  // T maps of H x W (unwrapped predictions)
    Tensor depth;                // H x W in (0, 1)
};

/// L_distill = L_KD_phase + L_charbonnier + L_KD_depth + L_depth, with the
/// depth term targeting the teacher's prediction instead of ground truth.
inline TrainLossResult distill_loss(const DistillHeads& student, const DistillHeads& teacher,
                                    double temperature, bool teacher_first = false) {
    if (!(temperature > 0.0)) throw DomainError("distill_loss: temperature must be positive");
    if (student.phases.size() != teacher.phases.size())
        throw ShapeError("distill_loss: subframe count mismatch");
    const double inv_t = 1.0 / static_cast<double>(student.phases.size());
    Tensor kd_phase, charb;
    for (size_t t = 0; t < student.phases.size(); ++t) {
        Tensor k = kd_loss(student.phases[t], teacher.phases[t], temperature, teacher_first);
        Tensor c = charbonnier_loss(student.phases[t], teacher.phases[t]);
        kd_phase = kd_phase.storage() ? ad::add(kd_phase, k) : k;
        charb = charb.storage() ? ad::add(charb, c) : c;
    }
    kd_phase = ad::scale(kd_phase, inv_t);
    charb = ad::scale(charb, inv_t);
    Tensor kd_depth = kd_loss(student.depth, teacher.depth, temperature, teacher_first);
    Tensor ld = depth_loss(student.depth, teacher.depth);
    Tensor total = ad::add(ad::add(kd_phase, charb), ad::add(kd_depth, ld));
    TrainLossResult r;
    r.total = total;
    r.report.total = total.scalar();
    r.report.components["kd_phase"] = kd_phase.scalar();
    r.report.components["charbonnier"] = charb.scalar();
    r.report.components["kd_depth"] = kd_depth.scalar();
    r.report.components["depth"] = ld.scalar();
    return r;
}

}  // namespace losses
}  // namespace holoforge
