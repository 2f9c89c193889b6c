#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "gridguard/bytes.hpp"
#include "gridguard/datafactory.hpp"  // GridParameters
#include "gridguard/errors.hpp"

namespace gridguard {

// ---------------------------------------------------------------------------
// Quasi-steady-state grid frequency model: the frequency deviation is an
// algebraic function of the instantaneous power imbalance,
//
//     delta_f = -imbalance / (2 * H * f0),
//
// not an ODE integration. Two regulation regimes:
//
//   healthy  -- the AI control loop is ideal: it zeroes any carried imbalance
//               within one step, so only fresh injections are visible for a
//               single tick;
//   fallback -- the AI loop has been cut out by the circuit breaker and
//               deterministic droop control applies a power correction
//               proportional to the frequency deviation, opposing it:
//               correction_mw = droop_gain * |delta_f| toward zero imbalance.
//
// Under fallback with no new injection the imbalance follows a geometric
// decay, imbalance' = imbalance * (1 - droop_gain * dt / (2 * H * f0)), which
// is stable whenever that ratio lies in (0, 1). The droop term enters with
// the sign that opposes the deviation; written with the raw signed deviation
// it would feed the imbalance instead of damping it.
// ---------------------------------------------------------------------------

struct GridState {
    std::int64_t t = 0;  // epoch ms
    double delta_f_hz = 0.0;
    double imbalance_mw = 0.0;  // load minus generation
    bool fallback_engaged = false;
};

inline GridState grid_step(const GridState& s, double injected_imbalance_mw,
                           const GridParameters& gp, std::int64_t dt_ms) {
    if (dt_ms <= 0) throw Error(ErrorCode::ConfigError, "dt_ms must be positive");
    gp.validate();
    double dt_s = static_cast<double>(dt_ms) / 1000.0;

    double carried = s.fallback_engaged ? s.imbalance_mw : 0.0;
    double droop_correction = s.fallback_engaged ? gp.droop_gain * (-s.delta_f_hz) * dt_s : 0.0;

    GridState next;
    next.t = s.t + dt_ms;
    next.fallback_engaged = s.fallback_engaged;
    next.imbalance_mw = carried + injected_imbalance_mw - droop_correction;
    next.delta_f_hz = -next.imbalance_mw / (2.0 * gp.inertia_h * gp.nominal_freq_f0);
    return next;
}

inline GridState engage_fallback(GridState s) {
    s.fallback_engaged = true;  // idempotent; there is no disengage
    return s;
}

// --- Trace (CSV: t_ms, delta_f_hz, imbalance_mw, fallback) ---------------

struct GridTraceRow {
    std::int64_t t_ms = 0;
    double delta_f_hz = 0.0;
    double imbalance_mw = 0.0;
    bool fallback = false;
};

inline std::string grid_trace_to_csv(const std::vector<GridTraceRow>& rows) {
    std::string out = "t_ms,delta_f_hz,imbalance_mw,fallback\n";
    for (const auto& r : rows) {
        out += std::to_string(r.t_ms);
        out += ',';
        out += fmt_double(r.delta_f_hz);
        out += ',';
        out += fmt_double(r.imbalance_mw);
        out += ',';
        out += r.fallback ? '1' : '0';
        out += '\n';
    }
    return out;
}

inline std::vector<GridTraceRow> grid_trace_from_csv(const std::string& text) {
    std::vector<GridTraceRow> rows;
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        GridTraceRow r;
        std::size_t c1 = line.find(','), c2 = line.find(',', c1 + 1), c3 = line.find(',', c2 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos || c3 == std::string::npos)
            throw Error(ErrorCode::ParseError, "malformed grid trace row");
        r.t_ms = std::stoll(line.substr(0, c1));
        r.delta_f_hz = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        r.imbalance_mw = std::stod(line.substr(c2 + 1, c3 - c2 - 1));
        r.fallback = line.substr(c3 + 1) == "1";
        rows.push_back(r);
    }
    return rows;
}

inline void write_grid_trace(const std::vector<GridTraceRow>& rows, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot open grid trace for writing: " + path);
    f << grid_trace_to_csv(rows);
}

inline std::vector<GridTraceRow> read_grid_trace(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open grid trace: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return grid_trace_from_csv(text);
}

}  // namespace gridguard
