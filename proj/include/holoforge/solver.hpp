#pragma once

#include <cmath>
#include <set>

#include "holoforge/adam.hpp"
#include "holoforge/datagen.hpp"
#include "holoforge/evaluate.hpp"
#include "holoforge/parallel.hpp"
#include "holoforge/recon_graph.hpp"

namespace holoforge {

enum class PowerMode {
    identity,  // single-color: fixed identity coupling, never optimized
    free_powers,  // multi-color: T x P powers optimized through a sigmoid
};

struct SolveSettings {
    int iterations = 500;
    double step_size = 0.02;        // Adam lr for phases
    double power_step_size = 0.01;  // Adam lr for power logits
    PowerMode power_mode = PowerMode::identity;
    uint64_t seed = 0;
    bool quantize_each_eval = false;
    bool backtracking = true;

    void check() const {
        if (iterations < 1) throw ConfigError("iterations must be >= 1");
        if (!(step_size > 0.0)) throw ConfigError("step_size must be positive");
        if (!(power_step_size > 0.0)) throw ConfigError("power_step_size must be positive");
    }
};

struct SolveResult {
    PhaseHologram hologram;
    LaserPowers powers;
    std::vector<LossReport> trace;  // entry 0 is the initial loss
};

// ---------------------------------------------------------------------------
// 8-bit quantization of [-pi, pi)

/// Uniform 256-level quantization; phase 0 maps to level 128.
inline std::vector<std::vector<uint8_t>> quantize_phase(const PhaseHologram& h) {
    std::vector<std::vector<uint8_t>> maps(static_cast<size_t>(h.subframes));
    const double step = kTwoPi / 256.0;
    for (int t = 0; t < h.subframes; ++t) {
        auto& out = maps[static_cast<size_t>(t)];
        out.resize(static_cast<size_t>(h.height) * h.width);
        const double* src = h.map(t);
        for (size_t i = 0; i < out.size(); ++i) {
            const double w = wrap_phase(src[i]);
            int level = static_cast<int>(std::floor((w + kPi) / step));
            out[i] = static_cast<uint8_t>(std::clamp(level, 0, 255));
        }
    }
    return maps;
}

inline PhaseHologram dequantize_phase(const std::vector<std::vector<uint8_t>>& maps, int h, int w) {
    if (maps.empty()) throw ShapeError("dequantize_phase: no maps");
    PhaseHologram out(static_cast<int>(maps.size()), h, w);
    const double step = kTwoPi / 256.0;
    for (size_t t = 0; t < maps.size(); ++t) {
        if (maps[t].size() != static_cast<size_t>(h) * w) throw ShapeError("dequantize_phase: size mismatch");
        double* dst = out.map(static_cast<int>(t));
        for (size_t i = 0; i < maps[t].size(); ++i)
            dst[i] = -kPi + (static_cast<double>(maps[t][i]) + 0.5) * step;
    }
    return out;
}

/// Round-trip through the 8-bit grid (applied per evaluation when the solver
/// runs quantization-aware).
inline double quantize_round_trip(double phi) {
    const double step = kTwoPi / 256.0;
    const double w = wrap_phase(phi);
    int level = static_cast<int>(std::floor((w + kPi) / step));
    level = std::clamp(level, 0, 255);
    return -kPi + (level + 0.5) * step;
}

namespace ad_ext {

/// Forward wraps to [-pi, pi); the wrap is a piecewise shift by multiples of
/// 2*pi, so the identity backward is the exact gradient almost everywhere.
/// Keeping the wrap inside the forward model matters: exp(i * r_p * phi) is
/// not 2*pi-periodic in phi for non-anchor primaries, so the stored (wrapped)
/// hologram must be what the objective sees.
inline ad::Tensor phase_wrap_st(const ad::Tensor& x) {
    auto out = std::make_shared<ad::Storage>(x.shape());
    const auto& sx = x.value();
    for (size_t i = 0; i < out->size(); ++i) out->re[i] = wrap_phase(sx.re[i]);
    const int ia = x.on_tape() ? x.id() : -1;
    return ad::detail::emit(x.tape(), out, {ia}, [ia](ad::Tape& t, int self) {
        const ad::Storage& g = *t.grad(self);
        if (ad::Storage* ga = ad::detail::grad_slot(t, ia))
            for (size_t i = 0; i < g.size(); ++i) ga->re[i] += g.re[i];
    });
}

/// Forward quantizes to the 8-bit phase grid; the gradient passes through
/// unchanged (straight-through estimator).
inline ad::Tensor phase_quantize_st(const ad::Tensor& x) {
    auto out = std::make_shared<ad::Storage>(x.shape());
    const auto& sx = x.value();
    for (size_t i = 0; i < out->size(); ++i) out->re[i] = quantize_round_trip(sx.re[i]);
    const int ia = x.on_tape() ? x.id() : -1;
    return ad::detail::emit(x.tape(), out, {ia}, [ia](ad::Tape& t, int self) {
        const ad::Storage& g = *t.grad(self);
        if (ad::Storage* ga = ad::detail::grad_slot(t, ia))
            for (size_t i = 0; i < g.size(); ++i) ga->re[i] += g.re[i];
    });
}

}  // namespace ad_ext

// ---------------------------------------------------------------------------
// Eq.-style iterative synthesis

namespace solver_detail {

struct Variables {
    int T = 0, P = 0, H = 0, W = 0;
    std::vector<std::vector<double>> phases;  // T maps
    std::vector<double> power_logits;         // T*P, free mode only
};

/// Builds the image loss; phases and logits enter as leaves when a tape is
/// given, as constants otherwise.
inline ad::Tensor build_loss(ad::Tape* tape, const Variables& vars, const MultiplaneTarget& target,
                             const OpticalConfig& config, const TransferBank& bank,
                             const SolveSettings& settings,
                             std::vector<ad::Tensor>* phase_leaves = nullptr,
                             ad::Tensor* logit_leaf = nullptr) {
    std::vector<ad::Tensor> phases;
    for (int t = 0; t < vars.T; ++t) {
        auto st = std::make_shared<ad::Storage>(ad::Shape{vars.H, vars.W});
        st->re = vars.phases[static_cast<size_t>(t)];
        ad::Tensor leaf = tape ? tape->leaf(st) : ad::Tensor::constant(st);
        if (phase_leaves) phase_leaves->push_back(leaf);
        phases.push_back(settings.quantize_each_eval ? ad_ext::phase_quantize_st(leaf)
                                                     : ad_ext::phase_wrap_st(leaf));
    }
    std::vector<ad::Tensor> powers_tp;
    if (settings.power_mode == PowerMode::free_powers) {
        auto st = std::make_shared<ad::Storage>(ad::Shape{vars.T * vars.P});
        st->re = vars.power_logits;
        ad::Tensor logits = tape ? tape->leaf(st) : ad::Tensor::constant(st);
        if (logit_leaf) *logit_leaf = logits;
        ad::Tensor sig = ad::sigmoid(logits);
        for (int i = 0; i < vars.T * vars.P; ++i) {
            powers_tp.push_back(ad::reshape(ad::slice_channels(ad::reshape(sig, {vars.T * vars.P, 1, 1}), i, i + 1), {1}));
        }
    }
    auto recon = reconstruct_graph(phases, powers_tp, config, bank);
    return losses::image_loss(recon, target, config.brightness_scale);
}

}  // namespace solver_detail

/// Minimizes the reconstruction objective over the phase maps (and, in
/// multi-color mode, the laser powers, box-constrained through a sigmoid)
/// with Adam. With backtracking enabled the recorded trace never increases.
inline SolveResult optimize_hologram(const MultiplaneTarget& target, const OpticalConfig& config,
                                     const SolveSettings& settings) {
    validate_config(config);
    settings.check();
    if (target.height != config.height || target.width != config.width)
        throw ShapeError("optimize_hologram: target resolution does not match config");
    if (target.planes_count != config.plane_count)
        throw ShapeError("optimize_hologram: target plane count does not match config");
    if (target.primaries != config.primary_count)
        throw ShapeError("optimize_hologram: target primary count does not match config");
    if (settings.power_mode == PowerMode::identity && config.subframe_count != config.primary_count)
        throw ShapeError("optimize_hologram: single-color mode requires T == P");

    solver_detail::Variables vars;
    vars.T = config.subframe_count;
    vars.P = config.primary_count;
    vars.H = config.height;
    vars.W = config.width;
    const size_t npix = static_cast<size_t>(vars.H) * vars.W;

    Rng rng(settings.seed);
    vars.phases.assign(static_cast<size_t>(vars.T), std::vector<double>(npix));
    for (auto& map : vars.phases)
        for (auto& v : map) v = rng.uniform(-kPi, kPi);
    const bool free_mode = settings.power_mode == PowerMode::free_powers;
    if (free_mode) {
        // logit(0.9): starts near full power so bright targets are reachable
        vars.power_logits.assign(static_cast<size_t>(vars.T) * vars.P, std::log(0.9 / 0.1));
    }

    TransferBank bank = make_transfer_bank(config);

    const size_t phase_dim = static_cast<size_t>(vars.T) * npix;
    Adam adam_phase(phase_dim);
    Adam adam_power(free_mode ? vars.power_logits.size() : 0);
    std::vector<double> phase_step(phase_dim), power_step(vars.power_logits.size());

    const auto eval_only = [&](const solver_detail::Variables& v) {
        return solver_detail::build_loss(nullptr, v, target, config, bank, settings).scalar();
    };

    SolveResult result;
    double current = 0.0;
    {
        current = eval_only(vars);
        if (!std::isfinite(current)) throw DivergenceError("initial loss is not finite");
        LossReport r;
        r.total = current;
        r.components["recon"] = current;
        result.trace.push_back(r);
    }

    for (int iter = 0; iter < settings.iterations; ++iter) {
        ad::Tape tape;
        std::vector<ad::Tensor> phase_leaves;
        ad::Tensor logit_leaf;
        ad::Tensor loss = solver_detail::build_loss(&tape, vars, target, config, bank, settings,
                                                    &phase_leaves, &logit_leaf);
        if (!std::isfinite(loss.scalar())) throw DivergenceError("loss became non-finite");
        tape.backward(loss);

        std::vector<double> phase_grad(phase_dim, 0.0);
        for (int t = 0; t < vars.T; ++t) {
            const ad::Storage* g = tape.grad(phase_leaves[static_cast<size_t>(t)]);
            if (g) std::copy(g->re.begin(), g->re.end(), phase_grad.begin() + static_cast<long>(t) * npix);
        }
        adam_phase.compute_step(phase_grad.data(), settings.step_size, phase_step.data());
        if (free_mode) {
            const ad::Storage* g = tape.grad(logit_leaf);
            std::vector<double> lg(vars.power_logits.size(), 0.0);
            if (g) lg = g->re;
            adam_power.compute_step(lg.data(), settings.power_step_size, power_step.data());
        }

        const auto apply = [&](double alpha) {
            solver_detail::Variables trial = vars;
            for (int t = 0; t < vars.T; ++t)
                for (size_t i = 0; i < npix; ++i)
                    trial.phases[static_cast<size_t>(t)][i] += alpha * phase_step[static_cast<size_t>(t) * npix + i];
            if (free_mode)
                for (size_t i = 0; i < trial.power_logits.size(); ++i)
                    trial.power_logits[i] += alpha * power_step[i];
            return trial;
        };

        double accepted = current;
        if (settings.backtracking) {
            double alpha = 1.0;
            bool moved = false;
            for (int halving = 0; halving < 12; ++halving, alpha *= 0.5) {
                auto trial = apply(alpha);
                const double trial_loss = eval_only(trial);
                if (!std::isfinite(trial_loss)) throw DivergenceError("loss became non-finite");
                if (trial_loss <= current) {
                    vars = std::move(trial);
                    accepted = trial_loss;
                    moved = true;
                    break;
                }
            }
            (void)moved;  // no acceptable step: keep the iterate, trace stays flat
        } else {
            vars = apply(1.0);
            accepted = eval_only(vars);
            if (!std::isfinite(accepted)) throw DivergenceError("loss became non-finite");
        }
        current = accepted;
        LossReport r;
        r.total = current;
        r.components["recon"] = current;
        result.trace.push_back(r);
    }

    result.hologram = PhaseHologram(vars.T, vars.H, vars.W);
    for (int t = 0; t < vars.T; ++t)
        std::copy(vars.phases[static_cast<size_t>(t)].begin(), vars.phases[static_cast<size_t>(t)].end(),
                  result.hologram.map(t));
    result.hologram.wrap();

    if (free_mode) {
        result.powers = LaserPowers(vars.T, vars.P);
        for (int t = 0; t < vars.T; ++t)
            for (int p = 0; p < vars.P; ++p)
                result.powers.at(t, p) =
                    1.0 / (1.0 + std::exp(-vars.power_logits[static_cast<size_t>(t) * vars.P + p]));
    } else {
        result.powers = LaserPowers::identity(vars.T);
    }
    return result;
}

// ---------------------------------------------------------------------------
// configuration sweep

/// One axis set of the training lattice. Expanded as a cartesian product.
struct VariableSet {
    std::vector<std::vector<double>> wavelength_triples = {{639e-9, 515e-9, 473e-9}};
    std::vector<double> brightness_scales = {1.0, 1.4, 1.8};
    std::vector<double> volume_depths = {4e-3};
    std::vector<double> location_offsets = {2e-3, 10e-3};
    std::vector<double> pixel_pitches = {3.74e-6};
};

/// Cartesian permutations with duplicates removed (set semantics, first
/// occurrence wins).
inline std::vector<OpticalConfig> expand_variable_set(const VariableSet& set, OpticalConfig base) {
    std::vector<OpticalConfig> configs;
    std::set<std::string> seen;
    for (const auto& wl : set.wavelength_triples)
        for (double s : set.brightness_scales)
            for (double vd : set.volume_depths)
                for (double z : set.location_offsets)
                    for (double dx : set.pixel_pitches) {
                        OpticalConfig c = base;
                        c.wavelengths = wl;
                        c.primary_count = static_cast<int>(wl.size());
                        c.brightness_scale = s;
                        c.volume_depth = vd;
                        c.location_offset = z;
                        c.pixel_pitch = dx;
                        validate_config(c);
                        if (seen.insert(config_hash(c)).second) configs.push_back(c);
                    }
    return configs;
}

struct SweepRow {
    OpticalConfig config;
    std::string hash;
    double final_loss = 0.0;
    double psnr_mean = 0.0, psnr_std = 0.0;
    double ssim_mean = 0.0, ssim_std = 0.0;
};

/// Runs the solver once per configuration over the given scene seeds and
/// reports the per-config quality statistics. Entries run in parallel.
inline std::vector<SweepRow> sweep_configs(const std::vector<OpticalConfig>& configs,
                                           const std::vector<uint64_t>& scene_seeds,
                                           int object_count, const SolveSettings& settings) {
    std::vector<SweepRow> rows(configs.size());
    parallel_for(static_cast<int>(configs.size()), [&](int idx) {
        const OpticalConfig& c = configs[static_cast<size_t>(idx)];
        SweepRow row;
        row.config = c;
        row.hash = config_hash(c);
        std::vector<double> psnrs, ssims;
        double loss_acc = 0.0;
        for (uint64_t seed : scene_seeds) {
            auto scene = synth_scene(seed, c.height, c.width, object_count);
            auto target = slice_multiplane(scene, c);
            SolveSettings local = settings;
            local.seed = seed * 7919 + 17;
            auto solved = optimize_hologram(target, c, local);
            auto recon = reconstruct_volume(solved.hologram, solved.powers, c);
            auto q = evaluate_reconstruction(recon, target, c.brightness_scale);
            psnrs.push_back(q.psnr);
            ssims.push_back(q.ssim);
            loss_acc += solved.trace.back().total;
        }
        auto ps = mean_std(psnrs);
        auto ss = mean_std(ssims);
        row.psnr_mean = ps.mean;
        row.psnr_std = ps.stddev;
        row.ssim_mean = ss.mean;
        row.ssim_std = ss.stddev;
        row.final_loss = loss_acc / static_cast<double>(scene_seeds.size());
        rows[static_cast<size_t>(idx)] = std::move(row);
    });
    return rows;
}

}  // namespace holoforge
