#pragma once

// Stochastic evolution of the two interferometer arms: birefringence drift,
// its wavelength dependence across the DWDM grid, the common phase drift, and
// the residual phase of the short unlocked quantum-channel segment.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <string>

#include "mzi/errors.hpp"
#include "mzi/polarization.hpp"

namespace mzi {

enum class ChannelRole { PolFeedback1, PolFeedback2, Quantum, PhaseReference };

inline const char* to_string(ChannelRole role) {
    switch (role) {
        case ChannelRole::PolFeedback1: return "pol_feedback_1";
        case ChannelRole::PolFeedback2: return "pol_feedback_2";
        case ChannelRole::Quantum: return "quantum";
        case ChannelRole::PhaseReference: return "phase_reference";
    }
    return "unknown";
}

inline constexpr double kSpeedOfLight = 299792458.0; // m/s

// Wavelength (nm) -> optical frequency (GHz).
inline double frequency_ghz(double lambda_nm) { return kSpeedOfLight / lambda_nm; }

struct ChannelPlan {
    double lambda_p1_nm = 1545.32;
    double lambda_p2_nm = 1546.92;
    double lambda_q_nm = 1546.12;
    double lambda_ph_nm = 1547.72;
    double grid_spacing_ghz = 100.0;
    // Margin around the plan inside which per-wavelength arm unitaries are defined.
    double span_margin_nm = 5.0;

    double wavelength(ChannelRole role) const {
        switch (role) {
            case ChannelRole::PolFeedback1: return lambda_p1_nm;
            case ChannelRole::PolFeedback2: return lambda_p2_nm;
            case ChannelRole::Quantum: return lambda_q_nm;
            case ChannelRole::PhaseReference: return lambda_ph_nm;
        }
        return lambda_q_nm;
    }

    std::array<double, 4> sorted_wavelengths() const {
        std::array<double, 4> w{lambda_p1_nm, lambda_p2_nm, lambda_q_nm, lambda_ph_nm};
        std::sort(w.begin(), w.end());
        return w;
    }

    double min_nm() const { return sorted_wavelengths().front(); }
    double max_nm() const { return sorted_wavelengths().back(); }

    bool in_span(double lambda_nm) const {
        return lambda_nm >= min_nm() - span_margin_nm && lambda_nm <= max_nm() + span_margin_nm;
    }

    // Checks distinctness and that neighbouring channels sit one grid step
    // apart (within 1 GHz) in frequency.
    void validate() const {
        const auto w = sorted_wavelengths();
        for (double l : w) {
            if (!(l > 0.0) || !std::isfinite(l)) {
                throw InvalidArgument("channel plan: wavelengths must be positive and finite");
            }
        }
        if (!(grid_spacing_ghz > 0.0)) {
            throw InvalidArgument("channel plan: grid spacing must be positive");
        }
        for (std::size_t k = 1; k < w.size(); ++k) {
            if (w[k] == w[k - 1]) {
                throw InvalidArgument("channel plan: wavelengths must be distinct");
            }
            const double spacing = frequency_ghz(w[k - 1]) - frequency_ghz(w[k]);
            if (std::abs(spacing - grid_spacing_ghz) > 1.0) {
                throw InvalidArgument("channel plan: adjacent spacing " + std::to_string(spacing) +
                                      " GHz does not match grid spacing " + std::to_string(grid_spacing_ghz) +
                                      " GHz");
            }
        }
    }
};

struct ArmState {
    double length_km = 8.0;
    double loss_db = 0.0;
    // Fibre birefringence at the reference wavelength.
    JonesMatrix birefringence = JonesMatrix::identity();
    double lambda0_nm = 1546.12;
    // Relative change of the birefringence rotation angle per nm.
    double kappa_per_nm = 0.0;
    double phase = 0.0;
    double sigma_pol = 0.0; // rad / sqrt(s)
    double stretcher_offset = 0.0;
    // Current polarisation-controller retarder stack (applied after the fibre).
    JonesMatrix compensator = JonesMatrix::identity();
    // Set on the arm hosting the unlocked segment: wavelength it acts on and
    // the residual phase it currently adds.
    std::optional<double> unlocked_lambda_nm;
    double unlocked_phase = 0.0;

    void validate() const {
        if (!(length_km > 0.0)) throw InvalidArgument("arm: length must be > 0");
        if (!(loss_db >= 0.0)) throw InvalidArgument("arm: loss must be >= 0 dB");
        if (!(sigma_pol >= 0.0)) throw InvalidArgument("arm: sigma_pol must be >= 0");
        if (!std::isfinite(kappa_per_nm)) throw InvalidArgument("arm: kappa must be finite");
        if (unitarity_error(birefringence) > 1e-9) throw InvalidArgument("arm: birefringence is not unitary");
    }
};

struct PhaseDriftState {
    double walk = 0.0;       // rad
    double diffusion = 0.0;  // D, rad^2/s
    double fast_amplitude = 0.0;    // rad
    double fast_frequency_hz = 0.0; // Hz
};

struct UnlockedSegmentState {
    double residual = 0.0;   // rad, quantum channel only
    double ramp_rate = 0.0;  // rad/s
    double diffusion = 0.0;  // rad^2/s
};

// Interval after which drifted matrices are re-projected onto U(2).
inline constexpr int kReunitarizeEvery = 4096;

template <class URBG>
ArmState advance_birefringence(ArmState arm, double dt, URBG& rng) {
    if (!(dt >= 0.0) || !std::isfinite(dt)) {
        throw InvalidArgument("advance_birefringence: dt must be finite and >= 0");
    }
    if (dt == 0.0 || arm.sigma_pol == 0.0) {
        return arm;
    }
    arm.birefringence = random_unitary_step(rng, arm.sigma_pol * std::sqrt(dt)) * arm.birefringence;
    return arm;
}

// Base birefringence with its rotation angle scaled by 1 + kappa (lambda - lambda0).
inline JonesMatrix arm_unitary_at(const ArmState& arm, double lambda_nm, const ChannelPlan& plan) {
    if (!plan.in_span(lambda_nm)) {
        throw InvalidArgument("arm_unitary_at: wavelength " + std::to_string(lambda_nm) +
                              " nm outside the channel plan span");
    }
    const double delta = lambda_nm - arm.lambda0_nm;
    if (arm.kappa_per_nm == 0.0 || delta == 0.0) {
        return arm.birefringence;
    }
    RotationForm r = decompose(arm.birefringence);
    r.angle *= 1.0 + arm.kappa_per_nm * delta;
    return compose(r);
}

// Advances the slow random walk by dt and returns walk + A sin(2 pi f t).
template <class URBG>
double advance_phase(PhaseDriftState& state, double t, double dt, URBG& rng) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw InvalidArgument("advance_phase: dt must be finite and > 0");
    }
    if (state.diffusion > 0.0) {
        std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 * state.diffusion * dt));
        state.walk += gauss(rng);
    }
    double fast = 0.0;
    if (state.fast_amplitude != 0.0) {
        fast = state.fast_amplitude * std::sin(kTwoPi * state.fast_frequency_hz * t);
    }
    return state.walk + fast;
}

template <class URBG>
double advance_unlocked(UnlockedSegmentState& state, double dt, URBG& rng) {
    if (!(dt >= 0.0) || !std::isfinite(dt)) {
        throw InvalidArgument("advance_unlocked: dt must be finite and >= 0");
    }
    if (dt == 0.0) {
        return state.residual;
    }
    state.residual += state.ramp_rate * dt;
    if (state.diffusion > 0.0) {
        std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 * state.diffusion * dt));
        state.residual += gauss(rng);
    }
    return state.residual;
}

} // namespace mzi
