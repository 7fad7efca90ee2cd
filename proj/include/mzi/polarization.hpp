#pragma once

// Jones/Stokes algebra for fully polarised fields.
//
// Stokes axes map onto Pauli matrices as
//   s1 <-> sigma_z,  s2 <-> sigma_x,  s3 <-> -sigma_y
// so that (1, -i)/sqrt(2) sits at s3 = +1. A rotation of the Stokes vector by
// `angle` about unit axis n is the SU(2) element
//   exp(-i angle/2 n.Sigma) = cos(angle/2) I - i sin(angle/2) n.Sigma.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "mzi/errors.hpp"

namespace mzi {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct JonesVector {
    cplx ex{1.0, 0.0};
    cplx ey{0.0, 0.0};

    double norm_sq() const { return std::norm(ex) + std::norm(ey); }
    double norm() const { return std::sqrt(norm_sq()); }
    bool is_normalized(double tol = 1e-6) const { return std::abs(norm() - 1.0) <= tol; }

    JonesVector normalized() const {
        const double n = norm();
        if (!(n > 0.0) || !std::isfinite(n)) {
            throw InvalidArgument("cannot normalize a zero or non-finite Jones vector");
        }
        return {ex / n, ey / n};
    }

    static JonesVector horizontal() { return {1.0, 0.0}; }
    static JonesVector vertical() { return {0.0, 1.0}; }
    static JonesVector diagonal() { return {std::sqrt(0.5), std::sqrt(0.5)}; }
    // Linear polarisation at `angle` from horizontal.
    static JonesVector linear(double angle) { return {std::cos(angle), std::sin(angle)}; }
};

inline JonesVector operator*(cplx s, const JonesVector& v) { return {s * v.ex, s * v.ey}; }

// Row-major 2x2 complex matrix [[a, b], [c, d]].
struct JonesMatrix {
    cplx a{1.0, 0.0};
    cplx b{0.0, 0.0};
    cplx c{0.0, 0.0};
    cplx d{1.0, 0.0};

    static JonesMatrix identity() { return {}; }
    static JonesMatrix diag(cplx d0, cplx d1) { return {d0, 0.0, 0.0, d1}; }

    JonesMatrix adjoint() const { return {std::conj(a), std::conj(c), std::conj(b), std::conj(d)}; }
    cplx det() const { return a * d - b * c; }
    cplx trace() const { return a + d; }

    friend JonesMatrix operator*(const JonesMatrix& x, const JonesMatrix& y) {
        return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
                x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
    }
    friend JonesMatrix operator*(cplx s, const JonesMatrix& m) { return {s * m.a, s * m.b, s * m.c, s * m.d}; }
    friend JonesMatrix operator-(const JonesMatrix& x, const JonesMatrix& y) {
        return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
    }

    double frobenius_norm() const {
        return std::sqrt(std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d));
    }
};

inline double frobenius_distance(const JonesMatrix& x, const JonesMatrix& y) { return (x - y).frobenius_norm(); }

// ||U^dagger U - I||_F
inline double unitarity_error(const JonesMatrix& u) {
    return frobenius_distance(u.adjoint() * u, JonesMatrix::identity());
}

struct StokesVector {
    double s0 = 1.0;
    double s1 = 0.0;
    double s2 = 0.0;
    double s3 = 0.0;

    double polarized_norm() const { return std::sqrt(s1 * s1 + s2 * s2 + s3 * s3); }
};

using Axis3 = std::array<double, 3>;

inline JonesVector apply(const JonesMatrix& j, const JonesVector& v) {
    return {j.a * v.ex + j.b * v.ey, j.c * v.ex + j.d * v.ey};
}

// Linear retarder with fast axis at `axis_angle` and retardance `retardance`:
// R(theta) diag(e^{-i delta/2}, e^{+i delta/2}) R(-theta).
inline JonesMatrix make_retarder(double axis_angle, double retardance) {
    if (!std::isfinite(axis_angle) || !std::isfinite(retardance)) {
        throw InvalidArgument("make_retarder: non-finite argument");
    }
    const double c = std::cos(axis_angle);
    const double s = std::sin(axis_angle);
    const cplx em = std::polar(1.0, -retardance / 2.0);
    const cplx ep = std::polar(1.0, retardance / 2.0);
    return {c * c * em + s * s * ep, c * s * (em - ep),
            c * s * (em - ep), s * s * em + c * c * ep};
}

// <a|b>. Both inputs must be normalized to within 1e-6.
inline cplx overlap(const JonesVector& a, const JonesVector& b) {
    if (!a.is_normalized() || !b.is_normalized()) {
        throw ContractViolation("overlap: inputs must be normalized Jones vectors");
    }
    return std::conj(a.ex) * b.ex + std::conj(a.ey) * b.ey;
}

inline StokesVector to_stokes(const JonesVector& v) {
    if (!v.is_normalized()) {
        throw ContractViolation("to_stokes: input must be a normalized Jones vector");
    }
    const cplx cross = std::conj(v.ex) * v.ey;
    return {1.0, std::norm(v.ex) - std::norm(v.ey), 2.0 * cross.real(), -2.0 * cross.imag()};
}

// Angle between two pure states on the Poincare sphere, in [0, pi].
inline double poincare_angle(const JonesVector& a, const JonesVector& b) {
    const double m = std::min(1.0, std::abs(overlap(a, b)));
    return 2.0 * std::acos(m);
}

// exp(-i angle/2 n.Sigma) for unit axis n.
inline JonesMatrix rotation(const Axis3& n, double angle) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    // n.Sigma = n1 sz + n2 sx - n3 sy = [[n1, n2 + i n3], [n2 - i n3, -n1]]
    const cplx mi_s{0.0, -s};
    return {cplx{c, 0.0} + mi_s * n[0], mi_s * cplx{n[1], n[2]},
            mi_s * cplx{n[1], -n[2]}, cplx{c, 0.0} - mi_s * n[0]};
}

// Axis/angle form of a unitary, U = e^{i phase} exp(-i angle/2 n.Sigma) with
// angle in [0, 2pi]. When angle is 0 or 2pi the axis is arbitrary (s1).
struct RotationForm {
    Axis3 axis{1.0, 0.0, 0.0};
    double angle = 0.0;
    double global_phase = 0.0;
};

inline RotationForm decompose(const JonesMatrix& u) {
    RotationForm r;
    r.global_phase = std::arg(u.det()) / 2.0;
    const JonesMatrix v = std::polar(1.0, -r.global_phase) * u;
    // For SU(2): tr V = 2 cos(angle/2), and (i/2) tr(Sigma_k V) = n_k sin(angle/2).
    const double half_cos = std::clamp(0.5 * v.trace().real(), -1.0, 1.0);
    const cplx i{0.0, 1.0};
    const Axis3 ns{(0.5 * i * (v.a - v.d)).real(),
                   (0.5 * i * (v.b + v.c)).real(),
                   (0.5 * (v.b - v.c)).real()};
    const double half_sin = std::sqrt(ns[0] * ns[0] + ns[1] * ns[1] + ns[2] * ns[2]);
    r.angle = 2.0 * std::atan2(half_sin, half_cos);
    if (half_sin > 1e-300) {
        r.axis = {ns[0] / half_sin, ns[1] / half_sin, ns[2] / half_sin};
    }
    return r;
}

inline JonesMatrix compose(const RotationForm& r) {
    return std::polar(1.0, r.global_phase) * rotation(r.axis, r.angle);
}

template <class URBG>
Axis3 random_axis(URBG& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (;;) {
        Axis3 n{gauss(rng), gauss(rng), gauss(rng)};
        const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
        if (len > 1e-12) {
            return {n[0] / len, n[1] / len, n[2] / len};
        }
    }
}

// Drift increment: rotation by |N(0, sigma)| about an isotropic Poincare axis.
template <class URBG>
JonesMatrix random_unitary_step(URBG& rng, double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw InvalidArgument("random_unitary_step: sigma must be finite and >= 0");
    }
    if (sigma == 0.0) {
        return JonesMatrix::identity();
    }
    const Axis3 n = random_axis(rng);
    std::normal_distribution<double> gauss(0.0, sigma);
    return rotation(n, std::abs(gauss(rng)));
}

// Haar-random element of SU(2) from a uniformly distributed unit quaternion.
template <class URBG>
JonesMatrix haar_random_su2(URBG& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    double q[4];
    double len = 0.0;
    do {
        for (double& x : q) x = gauss(rng);
        len = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    } while (len < 1e-12);
    for (double& x : q) x /= len;
    const cplx alpha{q[0], q[1]};
    const cplx beta{q[2], q[3]};
    return {alpha, -std::conj(beta), beta, std::conj(alpha)};
}

// Re-projects a numerically drifted unitary onto U(2) (polar factor via one
// Newton step). Long products of rotations accumulate rounding error.
inline JonesMatrix reunitarize(const JonesMatrix& u) {
    const JonesMatrix inv_adj = [&] {
        const cplx det = u.det();
        // (U^dagger)^{-1} = (U^{-1})^dagger
        const JonesMatrix inv{u.d / det, -u.b / det, -u.c / det, u.a / det};
        return inv.adjoint();
    }();
    return {0.5 * (u.a + inv_adj.a), 0.5 * (u.b + inv_adj.b), 0.5 * (u.c + inv_adj.c), 0.5 * (u.d + inv_adj.d)};
}

} // namespace mzi
