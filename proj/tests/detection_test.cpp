#include "mzi/detection.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"

using namespace mzi;

namespace {

double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

} // namespace

TEST(GateDetectionProb, DarkOnly) {
    SpcmConfig cfg;
    EXPECT_DOUBLE_EQ(gate_detection_prob(0.0, cfg), 3.2e-5);
}

TEST(GateDetectionProb, PoissonClosedForm) {
    SpcmConfig cfg;
    // 1 - e^{-x} by series, to stay independent of expm1.
    const double x = 0.5 * 0.15;
    double term = 1.0, series = 0.0;
    for (int k = 1; k < 30; ++k) {
        term *= x / k;
        series += (k % 2 == 1 ? term : -term);
    }
    const double expected = series + 3.2e-5;
    EXPECT_NEAR(gate_detection_prob(0.5, cfg), expected, 1e-12);
    EXPECT_NEAR(expected, 0.072289, 1e-6);
}

TEST(GateDetectionProb, ZeroEfficiencyAndNoiseGivesZero) {
    SpcmConfig cfg;
    cfg.efficiency = 0.0;
    cfg.dark_probability = 0.0;
    EXPECT_EQ(gate_detection_prob(3.0, cfg), 0.0);
}

TEST(GateDetectionProb, ClampedAndRejectsNegative) {
    SpcmConfig cfg;
    cfg.dark_probability = 0.6;
    cfg.background_probability = 0.6;
    EXPECT_EQ(gate_detection_prob(100.0, cfg), 1.0);
    EXPECT_THROW(gate_detection_prob(-0.1, SpcmConfig{}), InvalidArgument);
}

TEST(GateDetectionProb, MonotoneInMuAndEta) {
    SpcmConfig cfg;
    double prev = -1.0;
    for (int k = 0; k <= 200; ++k) {
        const double p = gate_detection_prob(0.05 * k, cfg);
        EXPECT_GE(p, prev);
        prev = p;
    }
    prev = -1.0;
    for (int k = 0; k <= 100; ++k) {
        cfg.efficiency = 0.01 * k;
        const double p = gate_detection_prob(0.5, cfg);
        EXPECT_GE(p, prev);
        prev = p;
    }
}

TEST(SampleCounts, Extremes) {
    std::mt19937_64 rng(1);
    EXPECT_EQ(sample_counts(0.0, 100000, rng), 0);
    EXPECT_EQ(sample_counts(1.0, 100000, rng), 100000);
    EXPECT_EQ(sample_counts(0.3, 0, rng), 0);
    EXPECT_THROW(sample_counts(1.5, 10, rng), InvalidArgument);
    EXPECT_THROW(sample_counts(0.5, -1, rng), InvalidArgument);
}

TEST(SampleCounts, BinomialMoments) {
    std::mt19937_64 rng(2);
    const double p = 0.05;
    const std::int64_t n = 100000;
    std::vector<double> v(1000);
    for (auto& x : v) x = static_cast<double>(sample_counts(p, n, rng));
    EXPECT_NEAR(sample_mean(v), 5000.0, 50.0);
    const double var = n * p * (1 - p);
    EXPECT_NEAR(sample_var(v), var, 0.1 * var);
}

TEST(SampleCounts, DeterministicPerSeed) {
    std::mt19937_64 a(77), b(77);
    for (int k = 0; k < 100; ++k) EXPECT_EQ(sample_counts(0.07, 100000, a), sample_counts(0.07, 100000, b));
}

TEST(NetCounts, DarkSubtraction) {
    SpcmConfig cfg;
    EXPECT_NEAR(net_counts(3, cfg, 1.0), -0.2, 1e-12);
    EXPECT_NEAR(net_counts(1003, cfg, 1.0), 999.8, 1e-12);
    cfg.dark_probability = 0.0;
    EXPECT_EQ(net_counts(17, cfg, 1.0), 17.0);
    EXPECT_THROW(net_counts(1, cfg, 0.0), InvalidArgument);
}

TEST(NetCounts, DarkRateAndEmpiricalMean) {
    SpcmConfig cfg;
    EXPECT_NEAR(cfg.dark_counts_per_second(), 3.2, 1e-12);
    std::mt19937_64 rng(3);
    const double p = gate_detection_prob(0.0, cfg);
    double sum = 0.0;
    const int bins = 1000;
    for (int k = 0; k < bins; ++k) sum += static_cast<double>(sample_counts(p, 100000, rng));
    EXPECT_NEAR(sum / bins, 3.2, 0.05 * 3.2);
}

TEST(PinIntensity, NoiselessAndZero) {
    std::mt19937_64 rng(4);
    EXPECT_EQ(pin_intensity(0.42, 0.0, rng), 0.42);
    EXPECT_EQ(pin_intensity(0.0, 0.0, rng), 0.0);
    EXPECT_THROW(pin_intensity(-1.0, 0.0, rng), InvalidArgument);
}

TEST(PinIntensity, GaussianStd) {
    std::mt19937_64 rng(5);
    std::vector<double> v(10000);
    for (auto& x : v) x = pin_intensity(0.5, 0.01, rng);
    EXPECT_NEAR(std::sqrt(sample_var(v)), 0.01, 0.001);
    EXPECT_NEAR(sample_mean(v), 0.5, 0.001);
}

TEST(PinIntensity, FlooredAtZero) {
    std::mt19937_64 rng(6);
    for (int k = 0; k < 1000; ++k) EXPECT_GE(pin_intensity(0.0, 0.1, rng), 0.0);
}

TEST(SpcmConfig, Validation) {
    SpcmConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.efficiency = 1.2;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = SpcmConfig{};
    cfg.gate_rate_hz = 0.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}
