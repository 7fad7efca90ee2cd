#pragma once

// Two-rate run loop for one scenario.
//
// Fast loop (dt_fast): phase drift, unlocked-segment drift, photodiode
// readout, phase lock and stretcher, per-step click probability at D1.
// Polarisation loop (pol.period): birefringence drift of both arms and one
// controller iteration per arm. Counts are sampled once per bin from the
// bin-averaged click probability.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mzi/channel_dynamics.hpp"
#include "mzi/config.hpp"
#include "mzi/control.hpp"
#include "mzi/detection.hpp"
#include "mzi/interferometer.hpp"
#include "mzi/polarization.hpp"

namespace mzi {

// Independent engine per noise source so that, for example, detector noise
// does not perturb the drift realisation.
inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
    return std::mt19937_64(seq);
}

struct DiagnosticsRow {
    double time_s = 0.0;
    double overlap_q_mean = 0.0;   // |<j1|j2>| of the quantum channel at the output coupler
    double overlap_q_min = 0.0;
    double overlap_ph_mean = 0.0;
    double lock_error_rms = 0.0;   // phase-reference fringe error from the lock point, rad
    double drift_phase = 0.0;      // common phase drift at bin end, rad
    double unlocked_phase = 0.0;   // quantum-channel residual at bin end, rad
    double stretcher_offset = 0.0; // rad at bin end
    double feedback_arm1 = 0.0;    // p1 + p2 at bin end
    double feedback_arm2 = 0.0;
    double expected_counts = 0.0;  // gates_per_bin * bin-averaged click probability
    long lock_resets = 0;
};

struct PdSample {
    double time_s = 0.0;
    double intensity = 0.0;
};

struct ScenarioResult {
    ScenarioConfig config;
    CountSeries counts;
    std::vector<PdSample> pd_trace;
    std::vector<DiagnosticsRow> diagnostics;
};

// Everything the run loop carries between steps. Exposed so tests can drive
// the same plant without the loop.
class Plant {
public:
    explicit Plant(const ScenarioConfig& cfg)
        : cfg_(cfg),
          dyn_rng_(make_engine(cfg.seed, 1)),
          det_rng_(make_engine(cfg.seed, 2)),
          pd_rng_(make_engine(cfg.seed, 3)) {
        validate(cfg_);
        for (std::size_t k = 0; k < 2; ++k) {
            const ArmConfig& ac = cfg_.arms[k];
            ArmState& arm = arms_[k];
            arm.length_km = ac.length_km;
            arm.loss_db = ac.loss_db;
            arm.sigma_pol = ac.sigma_pol;
            arm.kappa_per_nm = ac.kappa_per_nm;
            arm.lambda0_nm = ac.lambda0_nm;
            arm.birefringence = ac.random_initial ? haar_random_su2(dyn_rng_) : JonesMatrix::identity();

            PolControllerState& ctrl = pol_[k];
            ctrl.dither = cfg_.pol.dither;
            ctrl.step_gain = cfg_.pol.step_gain;
            ctrl.references = {JonesVector::linear(cfg_.pol.ref1_angle), JonesVector::linear(cfg_.pol.ref2_angle)};
            ctrl.analyzers = ctrl.references;
            ctrl.enabled = true;
        }
        // The stretcher and the unlocked segment sit on arm 2.
        arms_[1].unlocked_lambda_nm = cfg_.plan.lambda_q_nm;

        phase_.diffusion = cfg_.phase.diffusion;
        phase_.fast_amplitude = cfg_.phase.fast_amplitude;
        phase_.fast_frequency_hz = cfg_.phase.fast_frequency_hz;
        unlocked_.ramp_rate = kTwoPi / cfg_.unlocked.ramp_period_s;
        unlocked_.diffusion = cfg_.unlocked.diffusion;
        unlocked_.residual = cfg_.unlocked.initial_phase;

        stretcher_.gain = cfg_.stretcher.gain;
        stretcher_.stroke = cfg_.stretcher.stroke;
        stretcher_.slew_limit = cfg_.stretcher.slew;

        lock_.kp = cfg_.lock.kp;
        lock_.ki = cfg_.lock.ki;
        lock_.enabled = cfg_.lock.enabled;

        q_in_ = {cfg_.plan.lambda_q_nm, JonesVector::linear(cfg_.source.q_pol_angle), cfg_.source.mu_q, 0.0};
        ph_in_ = {cfg_.plan.lambda_ph_nm, JonesVector::linear(cfg_.source.ph_pol_angle), cfg_.source.ph_power, 0.0};
        out_transmission_ = db_to_transmission(cfg_.interferometer.output_loss_db);

        refresh_fibre();
        // Controllers start converged on the initial plant; pol_off freezes them afterwards.
        for (int i = 0; i < cfg_.pol.initial_iterations; ++i) {
            step_controllers();
        }
        for (auto& ctrl : pol_) ctrl.enabled = cfg_.pol.enabled;
        refresh_fringes();
    }

    const ScenarioConfig& config() const { return cfg_; }
    const std::array<ArmState, 2>& arms() const { return arms_; }
    const std::array<PolControllerState, 2>& controllers() const { return pol_; }
    const FringeTerms& quantum_terms() const { return q_terms_; }
    const FringeTerms& reference_terms() const { return ph_terms_; }
    const PhaseLockState& lock() const { return lock_; }
    const Stretcher& stretcher() const { return stretcher_; }
    double drift_phase() const { return drift_; }
    double unlocked_phase() const { return unlocked_.residual; }
    std::mt19937_64& detection_rng() { return det_rng_; }

    // Whole-arm unitary (fibre then controller stack) at a plan wavelength.
    JonesMatrix arm_unitary(std::size_t k, double lambda_nm) const {
        return pol_[k].stack() * arm_unitary_at(arms_[k], lambda_nm, cfg_.plan);
    }

    FeedbackPowers feedback(std::size_t k) const {
        return pol_feedback_signals(pol_[k].stack() * fibre_[k].p1, pol_[k].stack() * fibre_[k].p2, pol_[k]);
    }

    // Side-of-fringe calibration: sweep the stretcher over the configured span
    // with all drifts frozen and read the photodiode.
    void calibrate_lock() {
        std::vector<CalibrationSample> sweep;
        const int n = cfg_.lock.sweep_samples;
        sweep.reserve(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            const double offset = cfg_.lock.sweep_span * j / (n - 1);
            const double power = std::max(0.0, port_power(ph_terms_, drift_ + offset, Port::One));
            sweep.push_back({offset, pin_intensity(power, cfg_.pd.noise_sigma, pd_rng_)});
        }
        lock_.calibrate(lock_calibration(sweep));
    }

    // Advances polarisation dynamics by one controller period.
    void step_polarisation() {
        for (auto& arm : arms_) {
            arm = advance_birefringence(arm, cfg_.pol.period_s, dyn_rng_);
        }
        if (++pol_steps_ % kReunitarizeEvery == 0) {
            for (auto& arm : arms_) arm.birefringence = reunitarize(arm.birefringence);
        }
        refresh_fibre();
        step_controllers();
        refresh_fringes();
    }

    struct FastStep {
        double pd = 0.0;
        double click_probability = 0.0;
        double lock_error = 0.0;
    };

    // One fast step ending at time t.
    FastStep step_fast(double t) {
        const double dt = cfg_.dt_fast_s;
        drift_ = advance_phase(phase_, t, dt, dyn_rng_);
        advance_unlocked(unlocked_, dt, dyn_rng_);

        FastStep out;
        const double dphi = drift_ + stretcher_.offset();
        const double ph_power = std::max(0.0, port_power(ph_terms_, dphi, Port::One));
        out.pd = pin_intensity(ph_power, cfg_.pd.noise_sigma, pd_rng_);
        // Port 1 is mean - |z| sin(dphi + arg z); the stable lock point has sin = 0 on the falling side.
        out.lock_error = wrap_pi(dphi + std::arg(ph_terms_.cross) - kPi);

        const double mu = std::max(0.0, port_power(q_terms_, dphi + unlocked_.residual, Port::One,
                                                   cfg_.interferometer.v_path)) *
                          out_transmission_;
        out.click_probability = gate_detection_prob(mu, cfg_.spcm);

        if (lock_.enabled) {
            const double command = phase_lock_step(lock_, out.pd, dt, stretcher_);
            stretcher_ = apply_stretcher(stretcher_, command, dt).stretcher;
        }
        return out;
    }

private:
    struct FibreCache {
        JonesMatrix p1, p2, q, ph;
    };

    void refresh_fibre() {
        const auto& plan = cfg_.plan;
        for (std::size_t k = 0; k < 2; ++k) {
            fibre_[k] = {arm_unitary_at(arms_[k], plan.lambda_p1_nm, plan), arm_unitary_at(arms_[k], plan.lambda_p2_nm, plan),
                         arm_unitary_at(arms_[k], plan.lambda_q_nm, plan), arm_unitary_at(arms_[k], plan.lambda_ph_nm, plan)};
        }
    }

    void step_controllers() {
        for (std::size_t k = 0; k < 2; ++k) {
            const FibreCache& fc = fibre_[k];
            auto source = [&](const std::array<double, kStackSize>& r) {
                const JonesMatrix stack = pol_[k].stack_for(r);
                return pol_feedback_signals(stack * fc.p1, stack * fc.p2, pol_[k]);
            };
            pol_[k] = pol_control_step(pol_[k], source);
        }
    }

    // Arm outputs with scalar phases zeroed; the fast loop adds them back.
    void refresh_fringes() {
        for (std::size_t k = 0; k < 2; ++k) {
            arms_[k].compensator = pol_[k].stack();
        }
        auto terms = [&](const ChannelField& in) {
            auto [a1, a2] = split_input(in);
            ArmState s1 = arms_[0];
            ArmState s2 = arms_[1];
            for (ArmState* s : {&s1, &s2}) {
                s->phase = 0.0;
                s->stretcher_offset = 0.0;
                s->unlocked_phase = 0.0;
            }
            return fringe_terms(propagate(a1, s1, cfg_.plan), propagate(a2, s2, cfg_.plan));
        };
        q_terms_ = terms(q_in_);
        ph_terms_ = terms(ph_in_);
    }

    ScenarioConfig cfg_;
    std::mt19937_64 dyn_rng_;
    std::mt19937_64 det_rng_;
    std::mt19937_64 pd_rng_;
    std::array<ArmState, 2> arms_{};
    std::array<PolControllerState, 2> pol_{};
    std::array<FibreCache, 2> fibre_{};
    PhaseDriftState phase_;
    UnlockedSegmentState unlocked_;
    Stretcher stretcher_;
    PhaseLockState lock_;
    ChannelField q_in_;
    ChannelField ph_in_;
    FringeTerms q_terms_;
    FringeTerms ph_terms_;
    double out_transmission_ = 1.0;
    double drift_ = 0.0;
    std::int64_t pol_steps_ = 0;
};

inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    Plant plant(cfg);
    if (cfg.lock.enabled) {
        plant.calibrate_lock();
    }

    ScenarioResult result;
    result.config = cfg;
    result.counts.bin_s = cfg.bin_s;
    const std::int64_t bins = cfg.bin_count();
    const std::int64_t steps_per_bin = cfg.steps_per_bin();
    const std::int64_t steps_per_pol = cfg.steps_per_pol();
    const std::int64_t gates = cfg.gates_per_bin();
    const auto trace_every = std::max<std::int64_t>(1, std::llround(cfg.pd.trace_interval_s / cfg.dt_fast_s));
    const auto trace_steps = std::llround(cfg.pd.trace_duration_s / cfg.dt_fast_s);

    result.counts.raw.reserve(static_cast<std::size_t>(bins));
    result.counts.net.reserve(static_cast<std::size_t>(bins));
    result.diagnostics.reserve(static_cast<std::size_t>(bins));

    std::int64_t step = 0;
    for (std::int64_t b = 0; b < bins; ++b) {
        double p_sum = 0.0;
        double err_sq = 0.0;
        double ovl_sum = 0.0;
        double ovl_min = 1.0;
        double ovl_ph_sum = 0.0;
        std::int64_t ovl_n = 0;
        for (std::int64_t s = 0; s < steps_per_bin; ++s) {
            ++step;
            const double t = static_cast<double>(step) * cfg.dt_fast_s;
            if (step % steps_per_pol == 0) {
                plant.step_polarisation();
            }
            if (s == 0 || step % steps_per_pol == 0) {
                const double o = plant.quantum_terms().overlap_magnitude();
                ovl_sum += o;
                ovl_min = std::min(ovl_min, o);
                ovl_ph_sum += plant.reference_terms().overlap_magnitude();
                ++ovl_n;
            }
            const auto fs = plant.step_fast(t);
            p_sum += fs.click_probability;
            err_sq += fs.lock_error * fs.lock_error;
            if (step <= trace_steps && step % trace_every == 0) {
                result.pd_trace.push_back({t, fs.pd});
            }
        }
        const double p_avg = std::clamp(p_sum / static_cast<double>(steps_per_bin), 0.0, 1.0);
        const std::int64_t raw = sample_counts(p_avg, gates, plant.detection_rng());
        result.counts.raw.push_back(raw);
        result.counts.net.push_back(net_counts(raw, cfg.spcm, cfg.bin_s));

        DiagnosticsRow d;
        d.time_s = static_cast<double>(b + 1) * cfg.bin_s;
        d.overlap_q_mean = ovl_sum / static_cast<double>(ovl_n);
        d.overlap_q_min = ovl_min;
        d.overlap_ph_mean = ovl_ph_sum / static_cast<double>(ovl_n);
        d.lock_error_rms = std::sqrt(err_sq / static_cast<double>(steps_per_bin));
        d.drift_phase = plant.drift_phase();
        d.unlocked_phase = plant.unlocked_phase();
        d.stretcher_offset = plant.stretcher().offset();
        d.feedback_arm1 = plant.feedback(0).first + plant.feedback(0).second;
        d.feedback_arm2 = plant.feedback(1).first + plant.feedback(1).second;
        d.expected_counts = p_avg * static_cast<double>(gates);
        d.lock_resets = plant.lock().resets;
        result.diagnostics.push_back(d);
    }
    return result;
}

} // namespace mzi
