#pragma once

// CSV and manifest output for a scenario run, plus the counts.csv reader used
// by offline re-analysis.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mzi/analysis.hpp"
#include "mzi/config.hpp"
#include "mzi/errors.hpp"
#include "mzi/scenario.hpp"

namespace mzi {

namespace output_detail {

inline std::string num(double v) { return config_detail::format_double(v); }

inline std::ofstream open(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

} // namespace output_detail

inline void write_visibility_files(const std::filesystem::path& dir, const VisibilityStats& stats, double bin_s) {
    using output_detail::num;
    std::filesystem::create_directories(dir);
    {
        auto out = output_detail::open(dir / "visibility.csv");
        out << "time_s,upper,lower,V,valid\n";
        for (std::size_t i = 0; i < stats.visibility.values.size(); ++i) {
            out << num((static_cast<double>(i) + 1.0) * bin_s) << ',' << num(stats.envelope.upper[i]) << ','
                << num(stats.envelope.lower[i]) << ',' << num(stats.visibility.values[i]) << ','
                << (stats.visibility.valid[i] ? 1 : 0) << '\n';
        }
    }
    {
        auto out = output_detail::open(dir / "histogram.csv");
        out << "bin_lo,bin_hi,freq\n";
        for (std::size_t k = 0; k < stats.hist.counts.size(); ++k) {
            out << num(stats.hist.edges[k]) << ',' << num(stats.hist.edges[k + 1]) << ',' << stats.hist.counts[k]
                << '\n';
        }
    }
    {
        auto out = output_detail::open(dir / "summary.csv");
        out << "n_valid,mean_V,std_V\n";
        out << stats.summary.n << ',' << num(stats.summary.mean) << ',' << num(stats.summary.stddev) << '\n';
    }
}

// counts.csv, pd.csv, diagnostics.csv, manifest.cfg plus the visibility files.
inline void write_outputs(const ScenarioResult& result, const VisibilityStats& stats,
                          const std::filesystem::path& dir) {
    using output_detail::num;
    std::filesystem::create_directories(dir);
    {
        auto out = output_detail::open(dir / "counts.csv");
        out << "time_s,raw,net\n";
        for (std::size_t i = 0; i < result.counts.size(); ++i) {
            out << num(result.counts.time_of(i)) << ',' << result.counts.raw[i] << ',' << num(result.counts.net[i])
                << '\n';
        }
    }
    {
        auto out = output_detail::open(dir / "pd.csv");
        out << "time_s,intensity\n";
        for (const auto& s : result.pd_trace) {
            out << num(s.time_s) << ',' << num(s.intensity) << '\n';
        }
    }
    {
        auto out = output_detail::open(dir / "diagnostics.csv");
        out << "time_s,overlap_q_mean,overlap_q_min,overlap_ph_mean,lock_error_rms,drift_phase,unlocked_phase,"
               "stretcher_offset,feedback_arm1,feedback_arm2,expected_counts,lock_resets\n";
        for (const auto& d : result.diagnostics) {
            out << num(d.time_s) << ',' << num(d.overlap_q_mean) << ',' << num(d.overlap_q_min) << ','
                << num(d.overlap_ph_mean) << ',' << num(d.lock_error_rms) << ',' << num(d.drift_phase) << ','
                << num(d.unlocked_phase) << ',' << num(d.stretcher_offset) << ',' << num(d.feedback_arm1) << ','
                << num(d.feedback_arm2) << ',' << num(d.expected_counts) << ',' << d.lock_resets << '\n';
        }
    }
    {
        auto out = output_detail::open(dir / "manifest.cfg");
        out << manifest_text(result.config);
    }
    write_visibility_files(dir, stats, result.config.bin_s);
}

// Reads a counts.csv written by write_outputs (header time_s,raw,net).
// The bin width is taken from the first time stamp.
inline CountSeries read_counts_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "time_s,raw,net") {
        throw std::runtime_error("'" + path.string() + "': expected header 'time_s,raw,net'");
    }
    CountSeries series;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string t, raw, net;
        if (!std::getline(ss, t, ',') || !std::getline(ss, raw, ',') || !std::getline(ss, net)) {
            throw std::runtime_error("'" + path.string() + "' line " + std::to_string(line_no) + ": malformed row");
        }
        try {
            const double time = config_detail::parse_double("time_s", t);
            if (series.raw.empty()) series.bin_s = time;
            series.raw.push_back(config_detail::parse_int("raw", raw));
            series.net.push_back(config_detail::parse_double("net", net));
        } catch (const ConfigError& e) {
            throw std::runtime_error("'" + path.string() + "' line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return series;
}

} // namespace mzi
