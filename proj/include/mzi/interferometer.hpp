#pragma once

// Field propagation through the Mach-Zehnder topology.
//
// Coupler convention (both couplers): E_out1 = (E1 + i E2)/sqrt(2),
// E_out2 = (i E1 + E2)/sqrt(2). A field E_k carries amplitude
// sqrt(power) e^{i phase} jones.

#include <algorithm>
#include <cmath>
#include <utility>

#include "mzi/channel_dynamics.hpp"
#include "mzi/errors.hpp"
#include "mzi/polarization.hpp"

namespace mzi {

struct ChannelField {
    double wavelength_nm = 1546.12;
    JonesVector jones = JonesVector::horizontal();
    // Mean photons per gate (quantum channel) or optical power (classical).
    double power = 0.0;
    double phase = 0.0;
};

enum class Port { One = 1, Two = 2 };

inline double db_to_transmission(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

// Single-port input on the first coupler: each output takes half the power
// and the cross port (arm 2) picks up +pi/2.
inline std::pair<ChannelField, ChannelField> split_input(const ChannelField& field) {
    ChannelField arm1 = field;
    ChannelField arm2 = field;
    arm1.power = 0.5 * field.power;
    arm2.power = 0.5 * field.power;
    arm2.phase += 0.5 * kPi;
    return {arm1, arm2};
}

// Fibre (wavelength dependent) then controller stack; scalar loss and phase.
inline ChannelField propagate(ChannelField field, const ArmState& arm, const ChannelPlan& plan) {
    const JonesMatrix u = arm.compensator * arm_unitary_at(arm, field.wavelength_nm, plan);
    field.jones = apply(u, field.jones);
    field.power *= db_to_transmission(arm.loss_db);
    field.phase += arm.phase + arm.stretcher_offset;
    if (arm.unlocked_lambda_nm && *arm.unlocked_lambda_nm == field.wavelength_nm) {
        field.phase += arm.unlocked_phase;
    }
    return field;
}

namespace detail {

struct FieldVector {
    cplx x;
    cplx y;
};

inline FieldVector amplitude(const ChannelField& f) {
    const cplx s = std::polar(std::sqrt(std::max(f.power, 0.0)), f.phase);
    return {s * f.jones.ex, s * f.jones.ey};
}

inline ChannelField from_amplitude(double wavelength_nm, const FieldVector& e) {
    ChannelField out;
    out.wavelength_nm = wavelength_nm;
    out.power = std::norm(e.x) + std::norm(e.y);
    if (out.power > 0.0) {
        const double n = std::sqrt(out.power);
        out.jones = {e.x / n, e.y / n};
    }
    return out;
}

inline void require_same_wavelength(const ChannelField& a, const ChannelField& b) {
    if (a.wavelength_nm != b.wavelength_nm) {
        throw InvalidArgument("coupler inputs must share one wavelength");
    }
}

} // namespace detail

// Vector-field recombination; the output global phase is folded into `jones`
// (phase is reported as 0).
inline std::pair<ChannelField, ChannelField> combine_coupler(const ChannelField& in1, const ChannelField& in2) {
    detail::require_same_wavelength(in1, in2);
    const auto e1 = detail::amplitude(in1);
    const auto e2 = detail::amplitude(in2);
    const cplx i{0.0, 1.0};
    const double r = std::sqrt(0.5);
    const detail::FieldVector o1{r * (e1.x + i * e2.x), r * (e1.y + i * e2.y)};
    const detail::FieldVector o2{r * (i * e1.x + e2.x), r * (i * e1.y + e2.y)};
    return {detail::from_amplitude(in1.wavelength_nm, o1), detail::from_amplitude(in1.wavelength_nm, o2)};
}

// The phase-independent pieces of a two-arm fringe: arm powers and the complex
// cross term z = sqrt(P1 P2) <j1|j2> e^{i (phi2 - phi1)}.
struct FringeTerms {
    double p1 = 0.0;
    double p2 = 0.0;
    cplx cross{0.0, 0.0};

    double overlap_magnitude() const {
        const double denom = std::sqrt(p1 * p2);
        return denom > 0.0 ? std::abs(cross) / denom : 0.0;
    }
};

inline FringeTerms fringe_terms(const ChannelField& in1, const ChannelField& in2) {
    detail::require_same_wavelength(in1, in2);
    FringeTerms t;
    t.p1 = in1.power;
    t.p2 = in2.power;
    t.cross = std::sqrt(std::max(in1.power, 0.0) * std::max(in2.power, 0.0)) * overlap(in1.jones, in2.jones) *
              std::polar(1.0, in2.phase - in1.phase);
    return t;
}

// Output power at `port` with an extra differential phase added to arm 2 and
// a coherence factor in [0, 1] scaling the interference term:
//   port 1: (P1 + P2)/2 + g sqrt(P1 P2)|c| cos(dphi + arg c + pi/2)
//   port 2: (P1 + P2)/2 - g sqrt(P1 P2)|c| cos(dphi + arg c + pi/2)
inline double port_power(const FringeTerms& t, double extra_phase, Port port, double coherence = 1.0) {
    const double mean = 0.5 * (t.p1 + t.p2);
    const double s = (t.cross * std::polar(1.0, extra_phase)).imag();
    return port == Port::One ? mean - coherence * s : mean + coherence * s;
}

inline double output_mean_photons(const ChannelField& in1, const ChannelField& in2, Port port, double coherence = 1.0) {
    return port_power(fringe_terms(in1, in2), 0.0, port, coherence);
}

struct Stretcher {
    double gain = 2.5;          // rad per command unit
    double stroke = 5000.0;     // rad, total range
    double slew_limit = 2.0e6;  // rad/s
    double command = 0.0;
    bool out_of_range = false;

    double offset() const { return gain * command; }
};

struct StretcherUpdate {
    Stretcher stretcher;
    double offset = 0.0;
};

// Slew-limited move toward `command`, clamped to +-stroke/2. Clamping sets
// `out_of_range` so the lock can re-centre by a multiple of 2 pi.
inline StretcherUpdate apply_stretcher(Stretcher s, double command, double dt) {
    if (!(dt > 0.0)) {
        throw InvalidArgument("apply_stretcher: dt must be > 0");
    }
    const double max_move = std::abs(s.slew_limit * dt / s.gain);
    double target = std::clamp(command, s.command - max_move, s.command + max_move);
    const double limit = 0.5 * s.stroke / std::abs(s.gain);
    s.out_of_range = std::abs(target) > limit;
    if (s.out_of_range) {
        target = std::copysign(limit, target);
    }
    s.command = target;
    return {s, s.offset()};
}

} // namespace mzi
