#pragma once

// Scenario configuration: defaults, scenario presets, and a flat
// `key = value` text format used both for input configs and run manifests.
//
// Format: one `section.key = value` per line, `#` starts a comment, blank
// lines ignored. Booleans are true/false. A manifest produced by
// manifest_text() re-ingests to an identical configuration.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mzi/channel_dynamics.hpp"
#include "mzi/detection.hpp"
#include "mzi/errors.hpp"
#include "mzi/polarization.hpp"

namespace mzi {

enum class ScenarioId { PolOn, PolOff, PhaseOff, Custom };

inline const char* to_string(ScenarioId id) {
    switch (id) {
        case ScenarioId::PolOn: return "pol_on";
        case ScenarioId::PolOff: return "pol_off";
        case ScenarioId::PhaseOff: return "phase_off";
        case ScenarioId::Custom: return "custom";
    }
    return "custom";
}

inline std::optional<ScenarioId> parse_scenario_id(std::string_view s) {
    if (s == "pol_on") return ScenarioId::PolOn;
    if (s == "pol_off") return ScenarioId::PolOff;
    if (s == "phase_off") return ScenarioId::PhaseOff;
    if (s == "custom") return ScenarioId::Custom;
    return std::nullopt;
}

struct ArmConfig {
    double length_km = 8.0;
    double loss_db = 0.0;
    double sigma_pol = 0.02;     // rad / sqrt(s)
    double kappa_per_nm = 0.0;
    double lambda0_nm = 1546.12;
    bool random_initial = true;  // Haar-random initial birefringence
};

struct SourceConfig {
    double mu_q = 0.5;            // mean photons per gate into the interferometer
    double q_pol_angle = 0.3;     // rad, linear input polarisation of the quantum channel
    double ph_power = 1.0;        // arbitrary units
    double ph_pol_angle = 0.3;
};

struct PhaseConfig {
    double diffusion = 20.0;        // rad^2/s
    double fast_amplitude = 5.5;    // rad
    double fast_frequency_hz = 20.0;
};

struct UnlockedConfig {
    double ramp_period_s = 300.0;
    double diffusion = 5e-4;        // rad^2/s
    double initial_phase = 0.0;     // rad
};

struct StretcherConfig {
    double gain = 2.5;
    double stroke = 5000.0;
    double slew = 2.0e6;
};

struct InterferometerConfig {
    double v_path = 0.995;
    double output_loss_db = 0.0;
};

struct PdConfig {
    double noise_sigma = 0.002;
    double trace_interval_s = 1e-3;
    double trace_duration_s = 10.0;
};

struct PolConfig {
    bool enabled = true;
    double period_s = 0.01;
    double dither = 0.05;
    double step_gain = 1.5;
    double ref1_angle = 0.0;
    double ref2_angle = 0.25 * kPi;
    int initial_iterations = 4000;
};

struct LockConfig {
    bool enabled = true;
    double kp = 0.8;
    double ki = 50.0;
    double sweep_span = 4.0 * kPi;
    int sweep_samples = 400;
};

struct AnalysisConfig {
    double envelope_window_s = 600.0;
    double hist_bin = 0.01;
};

struct ScenarioConfig {
    ScenarioId scenario = ScenarioId::PolOn;
    std::uint64_t seed = 1;
    double duration_s = 5100.0;
    double dt_fast_s = 1e-4;
    double bin_s = 1.0;
    std::string output_dir = "out";

    ChannelPlan plan;
    SourceConfig source;
    std::array<ArmConfig, 2> arms{};
    PhaseConfig phase;
    UnlockedConfig unlocked;
    StretcherConfig stretcher;
    InterferometerConfig interferometer;
    SpcmConfig spcm;
    PdConfig pd;
    PolConfig pol;
    LockConfig lock;
    AnalysisConfig analysis;

    ScenarioConfig() {
        // Loss budget: 8 km of fibre, DWDM and controller insertion on each arm,
        // the free-space delay line on arm 1 and the unlocked-segment DWDM pair
        // plus stretcher on arm 2. The imbalance caps control-on visibility near
        // 0.93; peak counts land near 4e3/s.
        arms[0].loss_db = 4.3;
        arms[1].loss_db = 0.85;
        for (auto& arm : arms) {
            arm.kappa_per_nm = 0.02;
            arm.sigma_pol = 0.04;
        }
    }

    std::int64_t steps_per_bin() const { return std::llround(bin_s / dt_fast_s); }
    std::int64_t steps_per_pol() const { return std::llround(pol.period_s / dt_fast_s); }
    std::int64_t bin_count() const { return std::llround(duration_s / bin_s); }
    std::int64_t gates_per_bin() const { return std::llround(spcm.gate_rate_hz * bin_s); }
};

// Scenario overrides applied on top of defaults, before file/CLI values.
inline void apply_preset(ScenarioConfig& cfg, ScenarioId id) {
    cfg.scenario = id;
    switch (id) {
        case ScenarioId::PolOn:
            cfg.pol.enabled = true;
            cfg.lock.enabled = true;
            break;
        case ScenarioId::PolOff:
            cfg.pol.enabled = false;
            cfg.lock.enabled = true;
            break;
        case ScenarioId::PhaseOff:
            cfg.pol.enabled = true;
            cfg.lock.enabled = false;
            for (auto& arm : cfg.arms) {
                arm.sigma_pol = 0.0;
                arm.random_initial = false;
            }
            break;
        case ScenarioId::Custom:
            break;
    }
}

namespace config_detail {

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& key, std::string_view s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ConfigError(key, "expected a number, got '" + std::string(s) + "'");
    }
    if (!std::isfinite(v)) {
        throw ConfigError(key, "value must be finite");
    }
    return v;
}

inline std::int64_t parse_int(const std::string& key, std::string_view s) {
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ConfigError(key, "expected an integer, got '" + std::string(s) + "'");
    }
    return v;
}

inline bool parse_bool(const std::string& key, std::string_view s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError(key, "expected true or false, got '" + std::string(s) + "'");
}

struct Field {
    std::string key;
    std::function<std::string(const ScenarioConfig&)> get;
    std::function<void(ScenarioConfig&, const std::string&)> set;
};

inline Field real(std::string key, double ScenarioConfig::*outer) {
    return {key, [outer](const ScenarioConfig& c) { return format_double(c.*outer); },
            [outer, key](ScenarioConfig& c, const std::string& v) { c.*outer = parse_double(key, v); }};
}

template <class Section>
Field real(std::string key, Section ScenarioConfig::*section, double Section::*member) {
    return {key, [=](const ScenarioConfig& c) { return format_double((c.*section).*member); },
            [=](ScenarioConfig& c, const std::string& v) { (c.*section).*member = parse_double(key, v); }};
}

template <class Section>
Field boolean(std::string key, Section ScenarioConfig::*section, bool Section::*member) {
    return {key, [=](const ScenarioConfig& c) { return std::string((c.*section).*member ? "true" : "false"); },
            [=](ScenarioConfig& c, const std::string& v) { (c.*section).*member = parse_bool(key, v); }};
}

template <class Section>
Field integer(std::string key, Section ScenarioConfig::*section, int Section::*member) {
    return {key, [=](const ScenarioConfig& c) { return std::to_string((c.*section).*member); },
            [=](ScenarioConfig& c, const std::string& v) {
                (c.*section).*member = static_cast<int>(parse_int(key, v));
            }};
}

inline Field arm_real(std::size_t index, std::string name, double ArmConfig::*member) {
    std::string key = "arm" + std::to_string(index + 1) + "." + name;
    return {key, [=](const ScenarioConfig& c) { return format_double(c.arms[index].*member); },
            [=](ScenarioConfig& c, const std::string& v) { c.arms[index].*member = parse_double(key, v); }};
}

inline Field arm_bool(std::size_t index, std::string name, bool ArmConfig::*member) {
    std::string key = "arm" + std::to_string(index + 1) + "." + name;
    return {key, [=](const ScenarioConfig& c) { return std::string(c.arms[index].*member ? "true" : "false"); },
            [=](ScenarioConfig& c, const std::string& v) { c.arms[index].*member = parse_bool(key, v); }};
}

inline const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        using C = ScenarioConfig;
        std::vector<Field> f;
        f.push_back({"scenario", [](const C& c) { return std::string(to_string(c.scenario)); },
                     [](C& c, const std::string& v) {
                         auto id = parse_scenario_id(v);
                         if (!id) throw ConfigError("scenario", "unknown scenario '" + v + "'");
                         c.scenario = *id;
                     }});
        f.push_back({"seed", [](const C& c) { return std::to_string(c.seed); },
                     [](C& c, const std::string& v) {
                         std::uint64_t s = 0;
                         auto res = std::from_chars(v.data(), v.data() + v.size(), s);
                         if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
                             throw ConfigError("seed", "expected a non-negative integer, got '" + v + "'");
                         }
                         c.seed = s;
                     }});
        f.push_back(real("duration_s", &C::duration_s));
        f.push_back(real("dt_fast_s", &C::dt_fast_s));
        f.push_back(real("bin_s", &C::bin_s));
        f.push_back({"output_dir", [](const C& c) { return c.output_dir; },
                     [](C& c, const std::string& v) { c.output_dir = v; }});

        f.push_back(real("plan.lambda_p1_nm", &C::plan, &ChannelPlan::lambda_p1_nm));
        f.push_back(real("plan.lambda_p2_nm", &C::plan, &ChannelPlan::lambda_p2_nm));
        f.push_back(real("plan.lambda_q_nm", &C::plan, &ChannelPlan::lambda_q_nm));
        f.push_back(real("plan.lambda_ph_nm", &C::plan, &ChannelPlan::lambda_ph_nm));
        f.push_back(real("plan.grid_spacing_ghz", &C::plan, &ChannelPlan::grid_spacing_ghz));

        f.push_back(real("source.mu_q", &C::source, &SourceConfig::mu_q));
        f.push_back(real("source.q_pol_angle_rad", &C::source, &SourceConfig::q_pol_angle));
        f.push_back(real("source.ph_power", &C::source, &SourceConfig::ph_power));
        f.push_back(real("source.ph_pol_angle_rad", &C::source, &SourceConfig::ph_pol_angle));

        for (std::size_t k = 0; k < 2; ++k) {
            f.push_back(arm_real(k, "length_km", &ArmConfig::length_km));
            f.push_back(arm_real(k, "loss_db", &ArmConfig::loss_db));
            f.push_back(arm_real(k, "sigma_pol", &ArmConfig::sigma_pol));
            f.push_back(arm_real(k, "kappa_per_nm", &ArmConfig::kappa_per_nm));
            f.push_back(arm_real(k, "lambda0_nm", &ArmConfig::lambda0_nm));
            f.push_back(arm_bool(k, "random_initial", &ArmConfig::random_initial));
        }

        f.push_back(real("phase.diffusion", &C::phase, &PhaseConfig::diffusion));
        f.push_back(real("phase.fast_amplitude_rad", &C::phase, &PhaseConfig::fast_amplitude));
        f.push_back(real("phase.fast_frequency_hz", &C::phase, &PhaseConfig::fast_frequency_hz));

        f.push_back(real("unlocked.ramp_period_s", &C::unlocked, &UnlockedConfig::ramp_period_s));
        f.push_back(real("unlocked.diffusion", &C::unlocked, &UnlockedConfig::diffusion));
        f.push_back(real("unlocked.initial_phase_rad", &C::unlocked, &UnlockedConfig::initial_phase));

        f.push_back(real("stretcher.gain", &C::stretcher, &StretcherConfig::gain));
        f.push_back(real("stretcher.stroke_rad", &C::stretcher, &StretcherConfig::stroke));
        f.push_back(real("stretcher.slew_rad_per_s", &C::stretcher, &StretcherConfig::slew));

        f.push_back(real("interferometer.v_path", &C::interferometer, &InterferometerConfig::v_path));
        f.push_back(real("interferometer.output_loss_db", &C::interferometer, &InterferometerConfig::output_loss_db));

        f.push_back(real("spcm.efficiency", &C::spcm, &SpcmConfig::efficiency));
        f.push_back(real("spcm.gate_rate_hz", &C::spcm, &SpcmConfig::gate_rate_hz));
        f.push_back(real("spcm.gate_width_ns", &C::spcm, &SpcmConfig::gate_width_ns));
        f.push_back(real("spcm.dark_probability", &C::spcm, &SpcmConfig::dark_probability));
        f.push_back(real("spcm.background_probability", &C::spcm, &SpcmConfig::background_probability));

        f.push_back(real("pd.noise_sigma", &C::pd, &PdConfig::noise_sigma));
        f.push_back(real("pd.trace_interval_s", &C::pd, &PdConfig::trace_interval_s));
        f.push_back(real("pd.trace_duration_s", &C::pd, &PdConfig::trace_duration_s));

        f.push_back(boolean("pol.enabled", &C::pol, &PolConfig::enabled));
        f.push_back(real("pol.period_s", &C::pol, &PolConfig::period_s));
        f.push_back(real("pol.dither_rad", &C::pol, &PolConfig::dither));
        f.push_back(real("pol.step_gain", &C::pol, &PolConfig::step_gain));
        f.push_back(real("pol.ref1_angle_rad", &C::pol, &PolConfig::ref1_angle));
        f.push_back(real("pol.ref2_angle_rad", &C::pol, &PolConfig::ref2_angle));
        f.push_back(integer("pol.initial_iterations", &C::pol, &PolConfig::initial_iterations));

        f.push_back(boolean("lock.enabled", &C::lock, &LockConfig::enabled));
        f.push_back(real("lock.kp", &C::lock, &LockConfig::kp));
        f.push_back(real("lock.ki", &C::lock, &LockConfig::ki));
        f.push_back(real("lock.sweep_span_rad", &C::lock, &LockConfig::sweep_span));
        f.push_back(integer("lock.sweep_samples", &C::lock, &LockConfig::sweep_samples));

        f.push_back(real("analysis.envelope_window_s", &C::analysis, &AnalysisConfig::envelope_window_s));
        f.push_back(real("analysis.hist_bin", &C::analysis, &AnalysisConfig::hist_bin));
        return f;
    }();
    return table;
}

inline const Field* find_field(std::string_view key) {
    for (const auto& f : fields()) {
        if (f.key == key) return &f;
    }
    return nullptr;
}

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

} // namespace config_detail

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

inline ConfigEntries parse_config_text(std::string_view text) {
    ConfigEntries entries;
    std::map<std::string, int> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = config_detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key(config_detail::trim(line.substr(0, eq)));
        std::string value(config_detail::trim(line.substr(eq + 1)));
        if (!config_detail::find_field(key)) {
            throw ConfigError(key, "unknown key (line " + std::to_string(line_no) + ")");
        }
        if (seen.count(key)) {
            throw ConfigError(key, "duplicate key (line " + std::to_string(line_no) + ")");
        }
        seen[key] = line_no;
        entries.emplace_back(std::move(key), std::move(value));
    }
    return entries;
}

inline void set_value(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
    const auto* f = config_detail::find_field(key);
    if (!f) throw ConfigError(key, "unknown key");
    f->set(cfg, value);
}

inline std::string get_value(const ScenarioConfig& cfg, const std::string& key) {
    const auto* f = config_detail::find_field(key);
    if (!f) throw ConfigError(key, "unknown key");
    return f->get(cfg);
}

inline void validate(const ScenarioConfig& cfg) {
    auto require = [](bool ok, const char* key, const char* what) {
        if (!ok) throw ConfigError(key, what);
    };
    require(cfg.duration_s > 0.0, "duration_s", "must be > 0");
    require(cfg.dt_fast_s > 0.0, "dt_fast_s", "must be > 0");
    require(cfg.bin_s > 0.0, "bin_s", "must be > 0");
    require(cfg.dt_fast_s <= cfg.bin_s, "dt_fast_s", "must not exceed bin_s");
    auto divisible = [](double whole, double part) {
        const double r = whole / part;
        return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
    };
    require(divisible(cfg.bin_s, cfg.dt_fast_s), "bin_s", "must be an integer multiple of dt_fast_s");
    require(divisible(cfg.duration_s, cfg.bin_s), "duration_s", "must be an integer multiple of bin_s");
    require(cfg.pol.period_s >= cfg.dt_fast_s && divisible(cfg.pol.period_s, cfg.dt_fast_s), "pol.period_s",
            "must be a positive integer multiple of dt_fast_s");
    require(divisible(cfg.spcm.gate_rate_hz * cfg.bin_s, 1.0), "spcm.gate_rate_hz",
            "gate_rate_hz * bin_s must be an integer number of gates");
    try {
        cfg.plan.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError("plan", e.what());
    }
    try {
        cfg.spcm.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError("spcm", e.what());
    }
    require(cfg.source.mu_q >= 0.0, "source.mu_q", "must be >= 0");
    require(cfg.source.ph_power > 0.0, "source.ph_power", "must be > 0");
    for (std::size_t k = 0; k < 2; ++k) {
        const auto& a = cfg.arms[k];
        const char* prefix[] = {"arm1", "arm2"};
        if (!(a.length_km > 0.0)) throw ConfigError(std::string(prefix[k]) + ".length_km", "must be > 0");
        if (!(a.loss_db >= 0.0)) throw ConfigError(std::string(prefix[k]) + ".loss_db", "must be >= 0");
        if (!(a.sigma_pol >= 0.0)) throw ConfigError(std::string(prefix[k]) + ".sigma_pol", "must be >= 0");
        if (!cfg.plan.in_span(a.lambda0_nm)) {
            throw ConfigError(std::string(prefix[k]) + ".lambda0_nm", "must lie within the channel plan span");
        }
    }
    require(cfg.phase.diffusion >= 0.0, "phase.diffusion", "must be >= 0");
    require(cfg.phase.fast_frequency_hz >= 0.0, "phase.fast_frequency_hz", "must be >= 0");
    require(cfg.unlocked.ramp_period_s != 0.0, "unlocked.ramp_period_s", "must be non-zero");
    require(cfg.unlocked.diffusion >= 0.0, "unlocked.diffusion", "must be >= 0");
    require(cfg.stretcher.gain != 0.0, "stretcher.gain", "must be non-zero");
    require(cfg.stretcher.stroke > 0.0, "stretcher.stroke_rad", "must be > 0");
    require(cfg.stretcher.slew > 0.0, "stretcher.slew_rad_per_s", "must be > 0");
    require(cfg.interferometer.v_path >= 0.0 && cfg.interferometer.v_path <= 1.0, "interferometer.v_path",
            "must lie in [0, 1]");
    require(cfg.interferometer.output_loss_db >= 0.0, "interferometer.output_loss_db", "must be >= 0");
    require(cfg.pd.noise_sigma >= 0.0, "pd.noise_sigma", "must be >= 0");
    require(cfg.pd.trace_interval_s > 0.0, "pd.trace_interval_s", "must be > 0");
    require(cfg.pd.trace_duration_s >= 0.0, "pd.trace_duration_s", "must be >= 0");
    require(cfg.pol.dither >= 0.0, "pol.dither_rad", "must be >= 0");
    require(cfg.pol.step_gain >= 0.0, "pol.step_gain", "must be >= 0");
    require(cfg.pol.initial_iterations >= 0, "pol.initial_iterations", "must be >= 0");
    {
        const double m = std::abs(std::cos(cfg.pol.ref1_angle - cfg.pol.ref2_angle));
        require(m > 1e-9 && m < 1.0 - 1e-9, "pol.ref2_angle_rad", "reference states must be non-orthogonal and distinct");
    }
    require(cfg.lock.sweep_span >= kTwoPi, "lock.sweep_span_rad", "must cover at least 2 pi");
    require(cfg.lock.sweep_samples >= 3, "lock.sweep_samples", "must be >= 3");
    require(cfg.analysis.hist_bin > 0.0, "analysis.hist_bin", "must be > 0");
    require(std::llround(cfg.analysis.envelope_window_s / cfg.bin_s) >= 3, "analysis.envelope_window_s",
            "must span at least 3 bins");
}

// Defaults, then the scenario preset (from `scenario_override` if given,
// otherwise from the text), then every other entry in the text.
inline ScenarioConfig load_config_text(std::string_view text, std::optional<ScenarioId> scenario_override = {}) {
    const ConfigEntries entries = parse_config_text(text);
    ScenarioConfig cfg;
    std::optional<ScenarioId> id = scenario_override;
    if (!id) {
        for (const auto& [k, v] : entries) {
            if (k == "scenario") {
                id = parse_scenario_id(v);
                if (!id) throw ConfigError("scenario", "unknown scenario '" + v + "'");
            }
        }
    }
    apply_preset(cfg, id.value_or(ScenarioId::PolOn));
    for (const auto& [k, v] : entries) {
        if (k == "scenario") continue;
        set_value(cfg, k, v);
    }
    validate(cfg);
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path, std::optional<ScenarioId> scenario_override = {}) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("", "cannot read config file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config_text(ss.str(), scenario_override);
}

inline std::string manifest_text(const ScenarioConfig& cfg) {
    std::string out = "# mzi-sim run manifest: every effective parameter of the run\n";
    for (const auto& f : config_detail::fields()) {
        out += f.key + " = " + f.get(cfg) + "\n";
    }
    return out;
}

} // namespace mzi
