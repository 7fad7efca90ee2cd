#pragma once

// Gated single-photon counting and p-i-n photodiode readout.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mzi/errors.hpp"

namespace mzi {

struct SpcmConfig {
    double efficiency = 0.15;
    double gate_rate_hz = 1.0e5;
    double gate_width_ns = 2.5;
    double dark_probability = 3.2e-5;       // per gate
    double background_probability = 0.0;   // per gate (Raman / crosstalk residual)

    double dark_counts_per_second() const { return gate_rate_hz * dark_probability; }

    void validate() const {
        auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!in_unit(efficiency)) throw InvalidArgument("spcm: efficiency must lie in [0, 1]");
        if (!in_unit(dark_probability)) throw InvalidArgument("spcm: dark probability must lie in [0, 1]");
        if (!in_unit(background_probability)) throw InvalidArgument("spcm: background probability must lie in [0, 1]");
        if (!(gate_rate_hz > 0.0)) throw InvalidArgument("spcm: gate rate must be > 0");
        if (!(gate_width_ns > 0.0)) throw InvalidArgument("spcm: gate width must be > 0");
    }
};

struct CountSeries {
    double bin_s = 1.0;
    std::vector<std::int64_t> raw;
    std::vector<double> net;

    std::size_t size() const { return raw.size(); }
    double time_of(std::size_t i) const { return (static_cast<double>(i) + 1.0) * bin_s; }
};

// Click probability for one gate with Poissonian input of mean mu_out.
inline double gate_detection_prob(double mu_out, const SpcmConfig& cfg) {
    if (!(mu_out >= 0.0)) {
        throw InvalidArgument("gate_detection_prob: mean photon number must be >= 0");
    }
    const double p = -std::expm1(-mu_out * cfg.efficiency) + cfg.dark_probability + cfg.background_probability;
    return std::clamp(p, 0.0, 1.0);
}

template <class URBG>
std::int64_t sample_counts(double p, std::int64_t n_gates, URBG& rng) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidArgument("sample_counts: probability must lie in [0, 1]");
    }
    if (n_gates < 0) {
        throw InvalidArgument("sample_counts: gate count must be >= 0");
    }
    if (n_gates == 0 || p == 0.0) return 0;
    if (p == 1.0) return n_gates;
    std::binomial_distribution<std::int64_t> dist(n_gates, p);
    return dist(rng);
}

// Dark-count subtraction only. Left unclamped so the estimator stays unbiased.
inline double net_counts(std::int64_t raw, const SpcmConfig& cfg, double bin_s) {
    if (!(bin_s > 0.0)) {
        throw InvalidArgument("net_counts: bin must be > 0");
    }
    return static_cast<double>(raw) - cfg.gate_rate_hz * bin_s * cfg.dark_probability;
}

template <class URBG>
double pin_intensity(double power, double noise_sigma, URBG& rng) {
    if (!(power >= 0.0)) {
        throw InvalidArgument("pin_intensity: power must be >= 0");
    }
    if (noise_sigma <= 0.0) return power;
    std::normal_distribution<double> gauss(0.0, noise_sigma);
    return std::max(0.0, power + gauss(rng));
}

} // namespace mzi
