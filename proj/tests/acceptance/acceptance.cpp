// Acceptance checks: one PASS/FAIL line per criterion. Exit status is non-zero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "mzi/mzi.hpp"

using namespace mzi;

namespace {

// Tolerances.
constexpr double kPolOnLow = 0.91;
constexpr double kPolOnHigh = 0.94;
constexpr double kPolOnMaxStd = 0.01;
constexpr double kPolOffMaxMean = 0.85;
constexpr double kPolOffMinStd = 0.04;
constexpr double kSpreadRatio = 4.0;
constexpr double kWashoutMaxV = 0.1;
constexpr double kWashoutMinOverlap = 0.9;
constexpr double kDarkRel = 0.05;
constexpr double kDetectTol = 1e-12;
constexpr double kUnitarityTol = 1e-9;
constexpr double kEnergyTol = 1e-9;
constexpr double kVisibilityTol = 1e-6;
constexpr double kStepResidual = 0.05;
constexpr double kConvergedPower = 0.99;
constexpr int kConvergedSeeds = 95;
constexpr double kAggregationRel = 0.01;

constexpr int kSeeds = 5;
constexpr double kRunSeconds = 5100.0;

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct RunStats {
    SummaryStats v;
    std::vector<double> values;
    double min_overlap = 1.0;
};

RunStats run(ScenarioId id, std::uint64_t seed) {
    ScenarioConfig cfg = load_config_text("", id);
    cfg.seed = seed;
    cfg.duration_s = kRunSeconds;
    const auto res = run_scenario(cfg);
    const auto stats = analyze_counts(res.counts.net, cfg.bin_s, cfg.analysis.envelope_window_s, cfg.analysis.hist_bin);
    RunStats out;
    out.v = stats.summary;
    out.values = stats.visibility.valid_values();
    for (const auto& d : res.diagnostics) out.min_overlap = std::min(out.min_overlap, d.overlap_q_min);
    return out;
}

// Pooled over runs: every valid visibility sample of every seed.
SummaryStats pooled(const std::vector<RunStats>& runs) {
    std::vector<double> all;
    for (const auto& r : runs) all.insert(all.end(), r.values.begin(), r.values.end());
    return summarize(all);
}

std::vector<RunStats> pol_on_runs;

void control_on() {
    bool ok = true;
    std::string detail;
    for (int s = 1; s <= kSeeds; ++s) {
        auto r = run(ScenarioId::PolOn, static_cast<std::uint64_t>(s));
        ok = ok && r.v.mean >= kPolOnLow && r.v.mean <= kPolOnHigh && r.v.stddev <= kPolOnMaxStd;
        detail += fmt("seed %d V=%.4f sd=%.4f; ", s, r.v.mean, r.v.stddev);
        pol_on_runs.push_back(std::move(r));
    }
    detail += fmt("need mean in [%.2f, %.2f], sd <= %.2f", kPolOnLow, kPolOnHigh, kPolOnMaxStd);
    report(1, "control-on visibility (pol_on, 5100 s, 5 seeds)", ok, detail);
}

void control_off() {
    std::vector<RunStats> runs;
    std::string detail;
    for (int s = 1; s <= kSeeds; ++s) {
        runs.push_back(run(ScenarioId::PolOff, static_cast<std::uint64_t>(s)));
        detail += fmt("seed %d V=%.3f sd=%.3f; ", s, runs.back().v.mean, runs.back().v.stddev);
    }
    const auto off = pooled(runs);
    const auto on = pooled(pol_on_runs);
    const double ratio = on.stddev > 0.0 ? off.stddev / on.stddev : INFINITY;
    const bool ok = off.mean <= kPolOffMaxMean && off.stddev >= kPolOffMinStd && ratio >= kSpreadRatio;
    detail += fmt("pooled V=%.3f sd=%.3f (need <= %.2f, >= %.2f); spread ratio %.1f (need >= %.0f)", off.mean,
                  off.stddev, kPolOffMaxMean, kPolOffMinStd, ratio, kSpreadRatio);
    report(2, "control-off visibility (pol_off, 5100 s, 5 seeds)", ok, detail);
}

void washout() {
    bool ok = true;
    std::string detail;
    for (int s = 1; s <= 3; ++s) {
        const auto r = run(ScenarioId::PhaseOff, static_cast<std::uint64_t>(s));
        ok = ok && r.v.mean <= kWashoutMaxV && r.min_overlap >= kWashoutMinOverlap;
        detail += fmt("seed %d V=%.4f min|c|=%.4f; ", s, r.v.mean, r.min_overlap);
    }
    detail += fmt("need V <= %.2f with |c| >= %.1f", kWashoutMaxV, kWashoutMinOverlap);
    report(3, "phase-control-off washout (phase_off)", ok, detail);
}

void dark_counts() {
    SpcmConfig cfg;
    const double expected = cfg.gate_rate_hz * cfg.dark_probability;
    std::mt19937_64 rng(2024);
    const double p = gate_detection_prob(0.0, cfg);
    const auto gates = static_cast<std::int64_t>(cfg.gate_rate_hz);
    double sum = 0.0;
    double worst_net = 0.0;
    for (int b = 0; b < 1000; ++b) {
        const auto raw = sample_counts(p, gates, rng);
        sum += static_cast<double>(raw);
        worst_net = std::max(worst_net, std::abs(net_counts(raw, cfg, 1.0) - (static_cast<double>(raw) - 3.2)));
    }
    const double mean = sum / 1000.0;
    const bool ok = std::abs(expected - 3.2) < 1e-12 && std::abs(mean - 3.2) <= kDarkRel * 3.2 && worst_net < 1e-12;
    report(4, "dark-count arithmetic", ok,
           fmt("expected %.6f/s, empirical %.4f/s over 1000 bins (need 3.2 +- 5%%), net offset error %.1e", expected,
               mean, worst_net));
}

void detection_formula() {
    SpcmConfig cfg;
    const double got = gate_detection_prob(0.5, cfg);
    const double oracle = 1.0 - std::exp(-0.075) + 3.2e-5;
    report(5, "detection formula", std::abs(got - oracle) <= kDetectTol,
           fmt("p=%.15f oracle=%.15f |diff|=%.1e (need <= 1e-12)", got, oracle, std::abs(got - oracle)));
}

// Criterion 6 pieces.

double unitarity_over_drift() {
    std::mt19937_64 rng(6);
    ArmState arm;
    arm.sigma_pol = 0.04;
    arm.birefringence = haar_random_su2(rng);
    double worst = 0.0;
    for (int i = 1; i <= 1'000'000; ++i) {
        arm = advance_birefringence(arm, 0.01, rng);
        if (i % kReunitarizeEvery == 0) arm.birefringence = reunitarize(arm.birefringence);
        worst = std::max(worst, unitarity_error(arm.birefringence));
    }
    return worst;
}

JonesVector random_state(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    return JonesVector{{g(rng), g(rng)}, {g(rng), g(rng)}}.normalized();
}

double coupler_energy() {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        ChannelField a{1546.12, random_state(rng), 2.0 * u(rng), kTwoPi * u(rng)};
        ChannelField b{1546.12, random_state(rng), 2.0 * u(rng), kTwoPi * u(rng)};
        const auto [o1, o2] = combine_coupler(a, b);
        worst = std::max(worst, std::abs(o1.power + o2.power - a.power - b.power));
    }
    return worst;
}

double visibility_oracle() {
    std::mt19937_64 rng(62);
    double worst = 0.0;
    const cplx i{0.0, 1.0};
    for (int k = 0; k < 100; ++k) {
        const JonesVector ja = random_state(rng);
        const JonesVector jb = random_state(rng);
        double lo = 1e300, hi = -1e300;
        for (int s = 0; s < 20000; ++s) {
            const double phi = kTwoPi * s / 20000.0;
            // Port 1 of (E1 + i E2)/sqrt2 with equal unit amplitudes.
            const cplx x = (ja.ex + i * std::exp(i * phi) * jb.ex) / std::sqrt(2.0);
            const cplx y = (ja.ey + i * std::exp(i * phi) * jb.ey) / std::sqrt(2.0);
            const double p = std::norm(x) + std::norm(y);
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
        ChannelField a{1546.12, ja, 1.0, 0.0};
        ChannelField b{1546.12, jb, 1.0, 0.0};
        const double c = fringe_terms(a, b).overlap_magnitude();
        worst = std::max(worst, std::abs((hi - lo) / (hi + lo) - c));
    }
    return worst;
}

double step_rejection() {
    // Port-1 side of fringe: I = 0.5 - 0.5 sin(phi), lock point phi = pi.
    PhaseLockState lock;
    lock.calibrate({1.0, 0.0, 0.5});
    Stretcher st;
    st.command = kPi / st.gain;
    lock.command = st.command;
    const double dt = 1e-4;
    auto step = [&](double d) {
        const double phi = d + st.offset();
        st = apply_stretcher(st, phase_lock_step(lock, 0.5 - 0.5 * std::sin(phi), dt, st), dt).stretcher;
    };
    for (int k = 0; k < 1000; ++k) step(0.0);
    for (int k = 0; k < 500; ++k) step(0.5);
    return std::abs(wrap_pi(0.5 + st.offset() - kPi));
}

int converged_seeds() {
    int ok = 0;
    for (int seed = 1; seed <= 100; ++seed) {
        std::mt19937_64 rng(seed);
        const JonesMatrix fibre = haar_random_su2(rng);
        PolControllerState c;
        auto src = [&](const std::array<double, kStackSize>& r) {
            const JonesMatrix u = c.stack_for(r) * fibre;
            return pol_feedback_signals(u, u, c);
        };
        for (int i = 0; i < 1000; ++i) c = pol_control_step(c, src);
        const auto p = src(c.retardances);
        if (p.first >= kConvergedPower && p.second >= kConvergedPower) ++ok;
    }
    return ok;
}

// Two-rate loop with dt_fast equal to the gate period against a per-gate
// evaluation of the closed-form click probability.
double aggregation_error() {
    ScenarioConfig cfg = load_config_text("scenario = custom");
    cfg.duration_s = 10.0;
    cfg.dt_fast_s = 1.0 / cfg.spcm.gate_rate_hz;
    for (auto& a : cfg.arms) {
        a.sigma_pol = 0.0;
        a.random_initial = false;
    }
    cfg.phase.diffusion = 0.0;
    cfg.phase.fast_amplitude = 5.5;
    cfg.phase.fast_frequency_hz = 20.0;
    cfg.unlocked.diffusion = 0.0;
    cfg.unlocked.ramp_period_s = 3.0;
    cfg.pol.enabled = false;
    cfg.pol.initial_iterations = 0;
    cfg.lock.enabled = false;
    const auto res = run_scenario(cfg);

    const double p1 = 0.5 * cfg.source.mu_q * std::pow(10.0, -cfg.arms[0].loss_db / 10.0);
    const double p2 = 0.5 * cfg.source.mu_q * std::pow(10.0, -cfg.arms[1].loss_db / 10.0);
    const double v = cfg.interferometer.v_path;
    const auto gates = cfg.gates_per_bin();
    double worst = 0.0;
    for (std::size_t b = 0; b < res.counts.size(); ++b) {
        double sum = 0.0;
        for (std::int64_t g = 1; g <= gates; ++g) {
            const double t = static_cast<double>(b) * cfg.bin_s + static_cast<double>(g) / cfg.spcm.gate_rate_hz;
            const double phi = 5.5 * std::sin(kTwoPi * 20.0 * t) + kTwoPi * t / 3.0;
            const double mu = 0.5 * (p1 + p2) - v * std::sqrt(p1 * p2) * std::cos(phi);
            sum += 1.0 - std::exp(-mu * cfg.spcm.efficiency) + cfg.spcm.dark_probability;
        }
        worst = std::max(worst, std::abs(res.diagnostics[b].expected_counts - sum) / sum);
    }
    return worst;
}

bool reproducible() {
    ScenarioConfig cfg = load_config_text("scenario = pol_off\nduration_s = 60\nseed = 77");
    const auto a = run_scenario(cfg);
    const auto b = run_scenario(cfg);
    if (a.counts.raw != b.counts.raw || a.counts.net != b.counts.net) return false;
    if (a.pd_trace.size() != b.pd_trace.size()) return false;
    for (std::size_t i = 0; i < a.pd_trace.size(); ++i) {
        if (a.pd_trace[i].intensity != b.pd_trace[i].intensity) return false;
    }
    for (std::size_t i = 0; i < a.diagnostics.size(); ++i) {
        if (a.diagnostics[i].overlap_q_mean != b.diagnostics[i].overlap_q_mean ||
            a.diagnostics[i].expected_counts != b.diagnostics[i].expected_counts) {
            return false;
        }
    }
    return true;
}

void properties() {
    const double u = unitarity_over_drift();
    const double e = coupler_energy();
    const double vis = visibility_oracle();
    const double step = step_rejection();
    const int conv = converged_seeds();
    const double agg = aggregation_error();
    const bool rep = reproducible();
    const bool ok = u <= kUnitarityTol && e <= kEnergyTol && vis <= kVisibilityTol && step < kStepResidual &&
                    conv >= kConvergedSeeds && agg <= kAggregationRel && rep;
    report(6, "property suites", ok,
           fmt("unitarity %.1e (<=1e-9); energy %.1e (<=1e-9); visibility-overlap %.1e (<=1e-6); "
               "0.5 rad step residual after 50 ms %.1e (<0.05); controller converged %d/100 (>=95); "
               "aggregation rel err %.1e (<=1e-2); reproducible %s",
               u, e, vis, step, conv, agg, rep ? "yes" : "no"));
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    detection_formula();
    dark_counts();
    properties();
    control_on();
    control_off();
    washout();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s (%d failed, %.0f s)\n", failures == 0 ? "ALL PASS" : "FAILURES", failures, secs);
    return failures == 0 ? 0 : 1;
}
