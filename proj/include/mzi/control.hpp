#pragma once

// Feedback loops: per-arm polarisation stabilisation from two
// wavelength-multiplexed reference states, and the side-of-fringe phase lock
// that drives the fibre stretcher.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <utility>

#include "mzi/errors.hpp"
#include "mzi/interferometer.hpp"
#include "mzi/polarization.hpp"

namespace mzi {

inline double wrap_two_pi(double x) {
    double r = std::fmod(x, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    return r >= kTwoPi ? 0.0 : r;
}

// Wraps to (-pi, pi].
inline double wrap_pi(double x) {
    double r = wrap_two_pi(x + kPi) - kPi;
    return r == -kPi ? kPi : r;
}

inline constexpr std::size_t kStackSize = 4;

struct PolControllerState {
    std::array<double, kStackSize> axes{0.0, 0.25 * kPi, 0.0, 0.25 * kPi};
    std::array<double, kStackSize> retardances{};
    double dither = 0.05;
    double step_gain = 1.5;
    std::array<double, 2> setpoints{1.0, 1.0};
    std::array<JonesVector, 2> references{JonesVector::linear(0.0), JonesVector::linear(0.25 * kPi)};
    std::array<JonesVector, 2> analyzers{JonesVector::linear(0.0), JonesVector::linear(0.25 * kPi)};
    std::size_t next_coordinate = 0;
    bool enabled = true;

    JonesMatrix stack() const { return stack_for(retardances); }

    // Retarder k acts after retarder k-1.
    JonesMatrix stack_for(const std::array<double, kStackSize>& r) const {
        JonesMatrix m = JonesMatrix::identity();
        for (std::size_t k = 0; k < kStackSize; ++k) {
            m = make_retarder(axes[k], r[k]) * m;
        }
        return m;
    }

    void validate() const {
        for (std::size_t k = 0; k < 2; ++k) {
            if (!references[k].is_normalized() || !analyzers[k].is_normalized()) {
                throw InvalidArgument("polarisation controller: reference and analyzer states must be normalized");
            }
        }
        const double m = std::abs(overlap(references[0], references[1]));
        if (!(m > 1e-9 && m < 1.0 - 1e-9)) {
            throw InvalidArgument("polarisation controller: reference states must be non-orthogonal and distinct");
        }
        if (!(dither >= 0.0) || !(step_gain >= 0.0)) {
            throw InvalidArgument("polarisation controller: dither and step gain must be >= 0");
        }
    }
};

using FeedbackPowers = std::pair<double, double>;

// Malus-law projections |<analyzer_k| U(lambda_Pk) ref_k>|^2 where U is the
// whole arm (fibre and controller stack) at each feedback wavelength.
inline FeedbackPowers pol_feedback_signals(const JonesMatrix& u_p1, const JonesMatrix& u_p2,
                                           const PolControllerState& ctrl) {
    const double p1 = std::norm(overlap(ctrl.analyzers[0], apply(u_p1, ctrl.references[0])));
    const double p2 = std::norm(overlap(ctrl.analyzers[1], apply(u_p2, ctrl.references[1])));
    return {std::min(p1, 1.0), std::min(p2, 1.0)};
}

// One coordinate of dither-gradient ascent on p1 + p2. `source` maps a
// candidate retardance vector to the feedback powers it would produce. The
// move is kept only if it does not lower the objective.
template <class SignalSource>
PolControllerState pol_control_step(PolControllerState ctrl, SignalSource&& source) {
    if (!ctrl.enabled || ctrl.step_gain == 0.0 || ctrl.dither == 0.0) {
        return ctrl;
    }
    auto objective = [&](const std::array<double, kStackSize>& r) {
        const FeedbackPowers p = source(r);
        return p.first + p.second;
    };
    const std::size_t k = ctrl.next_coordinate % kStackSize;
    ctrl.next_coordinate = (k + 1) % kStackSize;

    auto probe = ctrl.retardances;
    const double f0 = objective(probe);
    probe[k] = ctrl.retardances[k] + ctrl.dither;
    const double f_plus = objective(probe);
    probe[k] = ctrl.retardances[k] - ctrl.dither;
    const double f_minus = objective(probe);

    const double gradient = (f_plus - f_minus) / (2.0 * ctrl.dither);
    probe[k] = wrap_two_pi(ctrl.retardances[k] + ctrl.step_gain * gradient);
    if (objective(probe) >= f0) {
        ctrl.retardances[k] = probe[k];
    }
    return ctrl;
}

struct LockCalibration {
    double i_max = 0.0;
    double i_min = 0.0;
    double setpoint = 0.0;
};

struct CalibrationSample {
    double stretcher_phase = 0.0; // rad
    double intensity = 0.0;
};

// Extremes of an intensity sweep spanning at least one fringe.
inline LockCalibration lock_calibration(std::span<const CalibrationSample> samples) {
    if (samples.size() < 3) {
        throw CalibrationFailed("lock calibration: sweep needs at least 3 samples");
    }
    auto [lo_phase, hi_phase] = std::minmax_element(samples.begin(), samples.end(), [](const auto& a, const auto& b) {
        return a.stretcher_phase < b.stretcher_phase;
    });
    if (hi_phase->stretcher_phase - lo_phase->stretcher_phase < kTwoPi) {
        throw CalibrationFailed("lock calibration: sweep spans less than 2 pi of stretcher phase");
    }
    auto [lo, hi] = std::minmax_element(samples.begin(), samples.end(), [](const auto& a, const auto& b) {
        return a.intensity < b.intensity;
    });
    const double i_max = hi->intensity;
    const double i_min = lo->intensity;
    // No fringe contrast means the phase cannot be inferred from intensity.
    if (!(i_max - i_min > 1e-6 * std::max(std::abs(i_max), 1e-300))) {
        throw CalibrationFailed("lock calibration: no fringe visible in sweep");
    }
    return {i_max, i_min, 0.5 * (i_max + i_min)};
}

struct PhaseLockState {
    double kp = 0.8;   // command units per unit normalized error
    double ki = 50.0;  // 1/s
    double integrator = 0.0;
    double command = 0.0;
    double setpoint = 0.0;
    double i_max = 0.0;
    double i_min = 0.0;
    bool calibrated = false;
    bool enabled = true;
    long resets = 0;

    void calibrate(const LockCalibration& cal) {
        i_max = cal.i_max;
        i_min = cal.i_min;
        setpoint = cal.setpoint;
        calibrated = i_max > i_min;
    }
};

// Side-of-fringe PI update; returns the new stretcher command. When the
// stretcher reports out-of-range, the command first jumps by the 2 pi multiple
// that brings the offset nearest the centre and the integrator is cleared.
inline double phase_lock_step(PhaseLockState& ctrl, double measured, double dt, const Stretcher& stretcher) {
    if (!ctrl.calibrated || !(ctrl.i_max > ctrl.i_min)) {
        throw ContractViolation("phase_lock_step: lock is not calibrated");
    }
    if (!(dt > 0.0)) {
        throw InvalidArgument("phase_lock_step: dt must be > 0");
    }
    if (!ctrl.enabled) {
        return ctrl.command;
    }
    if (stretcher.out_of_range) {
        const double turns = std::round(stretcher.offset() / kTwoPi);
        ctrl.command = stretcher.command - turns * kTwoPi / stretcher.gain;
        ctrl.integrator = 0.0;
        ++ctrl.resets;
    }
    const double error = (measured - ctrl.setpoint) / (ctrl.i_max - ctrl.i_min);
    ctrl.command -= ctrl.kp * error + ctrl.ki * ctrl.integrator;
    ctrl.integrator += error * dt;
    return ctrl.command;
}

} // namespace mzi
