#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridguard/audit.hpp"
#include "gridguard/compliance.hpp"
#include "gridguard/config.hpp"
#include "gridguard/crypto.hpp"
#include "gridguard/datafactory.hpp"
#include "gridguard/governance.hpp"
#include "gridguard/gridsim.hpp"
#include "gridguard/identity.hpp"

namespace gridguard {

// ---------------------------------------------------------------------------
// Scenario engine: builds the three attack phases, drives the defense layers
// through a single-threaded, tick-ordered loop, correlates the audit trail
// into multi-vector signatures, and derives the machine-readable report from
// the evidence (audit log + grid trace) alone.
// ---------------------------------------------------------------------------

// Deterministic Gaussian source: mt19937_64 (fully specified by the standard)
// plus an explicit Box-Muller transform. std::normal_distribution is
// implementation-defined and would break byte-identical replays across
// standard libraries.
class GaussianSource {
  public:
    explicit GaussianSource(std::uint64_t seed) : eng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

  private:
    // 53-bit mantissa draw in [0, 1).
    double uniform01() {
        return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);
    }

    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Hostile stimuli carry this marker in their batch id; the report derives
// containment from how the pipeline disposed of marked ids, so the flag
// never bypasses the evidence trail.
inline constexpr const char* kPoisonedIdSuffix = "-poisoned";

inline bool is_poisoned_batch_id(const std::string& id) {
    const std::string suffix = kPoisonedIdSuffix;
    return id.size() >= suffix.size() &&
           id.compare(id.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// --- Phase A: poisoned telemetry ------------------------------------------

enum class PhaseAVariant {
    RevokedIdentity,  // A1: poisoned batch signed for a revoked subject
    PhysicsOnly,      // A2: valid identity, rejection must come from physics
    Control,          // clean batch proving the gate, not the generator, rejects
};

// Independent reference observations (PMUs at healthy nodes). The poisoned
// deviation is uncorroborated against these.
inline std::vector<ReferenceObservation> reference_observations(std::int64_t ts_ms) {
    return {
        {"pmu-1", -0.004, ts_ms},
        {"pmu-2", 0.002, ts_ms},
        {"pmu-3", 0.001, ts_ms},
    };
}

// Gaussian noise recentered to mean zero, so the batch mean equals the target
// exactly: the drift stage sees healthy noise shape while the mean shift is
// left for the physics stage to judge.
inline TelemetryBatch build_phase_a(const ScenarioConfig& cfg, PhaseAVariant variant,
                                    const Bytes& trust_root_secret, GaussianSource& gauss) {
    const PhaseAConfig& pa = cfg.scenario.phase_a;
    TelemetryBatch b;
    std::int64_t t = 0;
    double delta = pa.delta_f_hz;
    std::string subject;
    switch (variant) {
        case PhaseAVariant::RevokedIdentity:
            t = pa.t_a1_ms;
            subject = pa.revoked_subject;
            b.batch_id = std::string("batch-a1") + kPoisonedIdSuffix;
            break;
        case PhaseAVariant::PhysicsOnly:
            t = pa.t_a2_ms;
            subject = pa.valid_subject;
            b.batch_id = std::string("batch-a2") + kPoisonedIdSuffix;
            break;
        case PhaseAVariant::Control:
            t = pa.t_control_ms;
            subject = pa.valid_subject;
            delta = pa.control_delta_f_hz;
            b.batch_id = "batch-a2-control";
            break;
    }
    b.tenant_id = cfg.scenario.tenant_id;
    b.source_id = subject;
    b.schema_version = cfg.ingest.expected_schema_version;
    b.credential = issue_credential(subject, b.tenant_id, t - 5000,
                                    cfg.identity.credential_validity_ms, trust_root_secret);

    const std::size_t n = pa.records_per_batch;
    std::vector<double> noise(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        noise[i] = cfg.baseline.sigma_hz * gauss.next();
        mean += noise[i];
    }
    mean /= static_cast<double>(n);

    const std::int64_t cadence_ms = 25;
    std::int64_t first_ts = std::max<std::int64_t>(0, t - static_cast<std::int64_t>(n) * cadence_ms);
    b.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        FrequencyMeasurement m;
        m.timestamp = first_ts + static_cast<std::int64_t>(i) * cadence_ms;
        m.node_id = subject;
        m.freq_hz = cfg.grid.nominal_freq_f0 + delta + (noise[i] - mean);
        m.power_mw = 1100.0 + static_cast<double>(i % 10);
        b.records.push_back(std::move(m));
    }
    return b;
}

// Healthy-noise baseline histogram for the drift stage, shaped exactly like
// the per-batch deviation histograms it will be compared against.
inline Histogram build_baseline_histogram(const BaselineConfig& bc, GaussianSource& gauss) {
    bc.validate();
    std::vector<double> samples(bc.num_samples);
    for (auto& s : samples) s = bc.sigma_hz * gauss.next();
    auto edges = uniform_edges(-bc.half_span_hz, bc.half_span_hz, bc.bins);
    return deviation_histogram(samples, edges);
}

// --- Phase B: sponge-attack latency train ----------------------------------

struct LatencySample {
    std::int64_t ts_ms = 0;
    double latency_ms = 0.0;
};

// Evenly spaced over-budget samples; duration must give escalation a chance
// (three violations inside one 90 s window).
inline std::vector<LatencySample> build_phase_b(std::int64_t duration_ms,
                                                double latency_ms = 340.0,
                                                std::int64_t interval_ms = 40000,
                                                std::int64_t start_ms = 0) {
    if (duration_ms < 90000)
        throw Error(ErrorCode::ConfigError, "phase B duration must be >= 90000 ms");
    if (interval_ms <= 0) throw Error(ErrorCode::ConfigError, "phase B interval must be > 0");
    std::vector<LatencySample> out;
    for (std::int64_t off = 0; off < duration_ms; off += interval_ms)
        out.push_back({start_ms + off, latency_ms});
    return out;
}

// --- Phase C: rogue-agent tool calls ---------------------------------------

struct PhaseCScript {
    std::vector<PriceSample> market_feed;  // exogenous price ticks
    std::vector<ToolCall> calls;           // dispatch signals, then the bid
};

inline PhaseCScript build_phase_c(const PhaseCConfig& pc) {
    pc.validate();
    PhaseCScript s;
    for (int i = 0; i < pc.market_feed_count; ++i)
        s.market_feed.push_back(
            {pc.market_feed_start_ms + i * pc.market_feed_interval_ms, pc.market_price});
    for (int i = 0; i < pc.dispatch_count; ++i) {
        ToolCall c;
        c.call_id = "phase-c-dispatch-" + std::to_string(i + 1);
        c.agent_id = pc.agent_id;
        c.kind = ToolCallKind::DispatchSignal;
        c.magnitude = pc.dispatch_mw;
        c.timestamp = pc.start_ms + i * pc.dispatch_interval_ms;
        s.calls.push_back(std::move(c));
    }
    ToolCall bid;
    bid.call_id = "phase-c-bid";
    bid.agent_id = pc.agent_id;
    bid.kind = ToolCallKind::MarketBid;
    bid.magnitude = pc.bid_price;
    bid.timestamp = pc.bid_ts_ms;
    s.calls.push_back(std::move(bid));
    return s;
}

// --- SIEM correlation --------------------------------------------------------

// One signature per maximal cluster of quarantine (DLQ_ROUTE) and breaker
// (BREAKER_BREAK) events in which consecutive members lie within window_ms,
// provided the cluster holds at least one of each. Signatures are stamped at
// the newest timestamp in the scanned log — correlation happens when the scan
// completes — so appending them keeps the log monotone.
inline std::vector<AuditEvent> correlate(const std::vector<AuditEvent>& events,
                                         std::int64_t window_ms = 300000) {
    if (window_ms <= 0) throw Error(ErrorCode::ConfigError, "correlation window must be > 0");

    struct Member {
        std::int64_t ts;
        EventKind kind;
        std::string id;
    };
    std::vector<Member> interesting;
    std::int64_t scan_ts = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& ev = events[i];
        scan_ts = std::max(scan_ts, ev.ts_ms);
        if (ev.event_kind != EventKind::DLQ_ROUTE && ev.event_kind != EventKind::BREAKER_BREAK)
            continue;
        auto it = ev.detail.find("event_id");
        interesting.push_back(
            {ev.ts_ms, ev.event_kind, it != ev.detail.end() ? it->second : std::to_string(i)});
    }

    std::vector<AuditEvent> signatures;
    std::size_t begin = 0;
    while (begin < interesting.size()) {
        std::size_t end = begin + 1;
        while (end < interesting.size() &&
               interesting[end].ts - interesting[end - 1].ts <= window_ms)
            ++end;

        int dlq = 0, brk = 0;
        std::string ids;
        for (std::size_t i = begin; i < end; ++i) {
            (interesting[i].kind == EventKind::DLQ_ROUTE ? dlq : brk) += 1;
            if (!ids.empty()) ids += ",";
            ids += interesting[i].id;
        }
        if (dlq >= 1 && brk >= 1) {
            signatures.push_back(make_event(scan_ts, EventKind::MULTI_VECTOR_SIGNATURE,
                                            {{"linked_event_ids", ids},
                                             {"dlq_count", std::to_string(dlq)},
                                             {"break_count", std::to_string(brk)},
                                             {"window_ms", std::to_string(window_ms)}}));
        }
        begin = end;
    }
    return signatures;
}

// --- Report ------------------------------------------------------------------

struct PhaseAReport {
    bool contained = false;
    int layer = 1;
    std::string reason;
    std::optional<double> implied_delta_p_mw;
};

struct PhaseBReport {
    bool contained = false;
    int layer = 2;
    double max_latency_ms = 0.0;
    bool escalated = false;
    double max_abs_delta_f_hz = 0.0;
};

struct PhaseCReport {
    bool contained = false;
    int layer = 3;
    std::vector<std::string> deny_reasons;
    std::optional<long> violation_factor;
};

struct CorrelationReport {
    bool signature_emitted = false;
    std::vector<std::string> linked_event_ids;
};

struct ComplianceRowStatus {
    int row = 0;
    std::string attack_vector;
    std::string status;  // "exercised" | "not exercised" | "static mapping only"
};

struct ScenarioReport {
    int report_version = 1;
    PhaseAReport phase_a;
    PhaseBReport phase_b;
    PhaseCReport phase_c;
    CorrelationReport correlation;
    std::vector<ComplianceRowStatus> compliance_rows_exercised;
    std::uint64_t deterministic_seed = 0;

    bool all_contained() const {
        return phase_a.contained && phase_b.contained && phase_c.contained;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["report_version"] = report_version;
        j["phase_a"]["contained"] = phase_a.contained;
        j["phase_a"]["layer"] = phase_a.layer;
        j["phase_a"]["reason"] = phase_a.reason;
        if (phase_a.implied_delta_p_mw)
            j["phase_a"]["implied_delta_p_mw"] = *phase_a.implied_delta_p_mw;
        else
            j["phase_a"]["implied_delta_p_mw"] = nullptr;
        j["phase_b"]["contained"] = phase_b.contained;
        j["phase_b"]["layer"] = phase_b.layer;
        j["phase_b"]["max_latency_ms"] = phase_b.max_latency_ms;
        j["phase_b"]["escalated"] = phase_b.escalated;
        j["phase_b"]["max_abs_delta_f_hz"] = phase_b.max_abs_delta_f_hz;
        j["phase_c"]["contained"] = phase_c.contained;
        j["phase_c"]["layer"] = phase_c.layer;
        j["phase_c"]["deny_reasons"] = phase_c.deny_reasons;
        if (phase_c.violation_factor)
            j["phase_c"]["violation_factor"] = *phase_c.violation_factor;
        else
            j["phase_c"]["violation_factor"] = nullptr;
        j["correlation"]["signature_emitted"] = correlation.signature_emitted;
        j["correlation"]["linked_event_ids"] = correlation.linked_event_ids;
        j["compliance_rows_exercised"] = nlohmann::ordered_json::array();
        for (const auto& r : compliance_rows_exercised) {
            nlohmann::ordered_json row;
            row["row"] = r.row;
            row["attack_vector"] = r.attack_vector;
            row["status"] = r.status;
            j["compliance_rows_exercised"].push_back(std::move(row));
        }
        j["deterministic_seed"] = deterministic_seed;
        return j;
    }

    std::string to_json_text() const { return to_json().dump(2) + "\n"; }
};

namespace detail_scn {

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline std::optional<std::string> detail_of(const AuditEvent& ev, const std::string& key) {
    auto it = ev.detail.find(key);
    if (it == ev.detail.end()) return std::nullopt;
    return it->second;
}

}  // namespace detail_scn

// Derive the report from the evidence alone: the audit log, the grid trace,
// and the seed that labels the run. Nothing here consults the scenario
// config or the engine's in-memory state, so replaying a saved log + trace
// reproduces the report byte for byte.
inline ScenarioReport build_report(const AuditLog& log, const std::vector<GridTraceRow>& trace,
                                   std::uint64_t seed) {
    ScenarioReport rep;
    rep.deterministic_seed = seed;
    const auto& events = log.events();

    // Phase A: every id marked hostile must be dead-lettered, never accepted.
    std::set<std::string> poisoned_seen, poisoned_dead, poisoned_accepted;
    std::vector<std::string> reasons_in_order;
    for (const auto& ev : events) {
        if (ev.event_kind != EventKind::DLQ_ROUTE && ev.event_kind != EventKind::INGEST_OK)
            continue;
        auto id = detail_scn::detail_of(ev, "batch_id");
        if (!id || !is_poisoned_batch_id(*id)) continue;
        poisoned_seen.insert(*id);
        if (ev.event_kind == EventKind::DLQ_ROUTE) {
            poisoned_dead.insert(*id);
            if (auto r = detail_scn::detail_of(ev, "reason")) {
                if (std::find(reasons_in_order.begin(), reasons_in_order.end(), *r) ==
                    reasons_in_order.end())
                    reasons_in_order.push_back(*r);
            }
            if (auto dp = detail_scn::detail_of(ev, "implied_delta_p_mw"))
                rep.phase_a.implied_delta_p_mw = std::strtod(dp->c_str(), nullptr);
        } else {
            poisoned_accepted.insert(*id);
        }
    }
    rep.phase_a.contained = !poisoned_seen.empty() && poisoned_accepted.empty() &&
                            poisoned_dead.size() == poisoned_seen.size();
    for (const auto& r : reasons_in_order) {
        if (!rep.phase_a.reason.empty()) rep.phase_a.reason += ",";
        rep.phase_a.reason += r;
    }

    // Phase B: fallback within one tick of the first over-budget sample, and
    // the frequency excursion stays inside the +/-1 Hz stability envelope.
    std::optional<std::int64_t> first_break_ts;
    for (const auto& ev : events) {
        if (ev.event_kind != EventKind::BREAKER_BREAK && ev.event_kind != EventKind::BREAKER_ESCALATE)
            continue;
        if (!first_break_ts) first_break_ts = ev.ts_ms;
        if (ev.event_kind == EventKind::BREAKER_ESCALATE) rep.phase_b.escalated = true;
        if (auto l = detail_scn::detail_of(ev, "latency_ms"))
            rep.phase_b.max_latency_ms =
                std::max(rep.phase_b.max_latency_ms, std::strtod(l->c_str(), nullptr));
    }
    for (const auto& row : trace)
        rep.phase_b.max_abs_delta_f_hz =
            std::max(rep.phase_b.max_abs_delta_f_hz, std::abs(row.delta_f_hz));
    if (first_break_ts && trace.size() >= 2) {
        std::int64_t dt = trace[1].t_ms - trace[0].t_ms;
        std::optional<std::int64_t> fallback_ts;
        for (const auto& row : trace) {
            if (row.fallback) {
                fallback_ts = row.t_ms;
                break;
            }
        }
        rep.phase_b.contained = fallback_ts && *fallback_ts <= *first_break_ts + dt &&
                                rep.phase_b.max_abs_delta_f_hz <= 1.0;
    }

    // Phase C: no market bid was ever allowed through, and at least one was
    // denied. Reasons and factor come from the first denied bid.
    bool bid_denied = false, bid_allowed = false;
    for (const auto& ev : events) {
        if (ev.event_kind != EventKind::SIDECAR_DENY && ev.event_kind != EventKind::SIDECAR_ALLOW)
            continue;
        auto kind = detail_scn::detail_of(ev, "kind");
        if (!kind || *kind != "MarketBid") continue;
        if (ev.event_kind == EventKind::SIDECAR_ALLOW) {
            bid_allowed = true;
        } else if (!bid_denied) {
            bid_denied = true;
            if (auto r = detail_scn::detail_of(ev, "reasons"))
                rep.phase_c.deny_reasons = detail_scn::split_csv(*r);
            if (auto f = detail_scn::detail_of(ev, "violation_factor"))
                rep.phase_c.violation_factor = std::strtol(f->c_str(), nullptr, 10);
        }
    }
    rep.phase_c.contained = bid_denied && !bid_allowed;

    // Correlation.
    for (const auto& ev : events) {
        if (ev.event_kind != EventKind::MULTI_VECTOR_SIGNATURE) continue;
        rep.correlation.signature_emitted = true;
        if (auto ids = detail_scn::detail_of(ev, "linked_event_ids"))
            rep.correlation.linked_event_ids = detail_scn::split_csv(*ids);
        break;
    }

    // Compliance coverage: which matrix rows did this log actually exercise?
    std::set<EventKind> kinds_seen;
    for (const auto& ev : events) kinds_seen.insert(ev.event_kind);
    for (const auto& row : compliance_matrix()) {
        ComplianceRowStatus st;
        st.row = row.row;
        st.attack_vector = row.attack_vector;
        if (row.runtime_kinds.empty()) {
            st.status = "static mapping only";
        } else {
            bool hit = std::any_of(row.runtime_kinds.begin(), row.runtime_kinds.end(),
                                   [&](EventKind k) { return kinds_seen.count(k) > 0; });
            st.status = hit ? "exercised" : "not exercised";
        }
        rep.compliance_rows_exercised.push_back(std::move(st));
    }
    return rep;
}

// Rebuild a report from saved artifacts; identical by construction to the one
// produced at run time.
inline ScenarioReport replay_report(const AuditLog& log, const std::vector<GridTraceRow>& trace,
                                    std::uint64_t seed) {
    return build_report(log, trace, seed);
}

// --- Run loop ------------------------------------------------------------------

struct RunResult {
    ScenarioReport report;
    AuditLog log;
    std::vector<GridTraceRow> trace;
};

inline RunResult run_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    GaussianSource gauss(seed);
    auto root = crypto::keypair_from_seed(cfg.identity.trust_root_seed);

    RevocationList rl;
    rl.as_of = 0;
    for (const auto& s : cfg.identity.revoked_subjects) rl.revoked_subjects.insert(s);

    // Stimuli are built up front in a fixed order so the RNG stream — and
    // therefore the whole run — is a pure function of (config, seed).
    Histogram baseline = build_baseline_histogram(cfg.baseline, gauss);
    TelemetryBatch a1 = build_phase_a(cfg, PhaseAVariant::RevokedIdentity, root.secret_key, gauss);
    TelemetryBatch a2 = build_phase_a(cfg, PhaseAVariant::PhysicsOnly, root.secret_key, gauss);
    TelemetryBatch ctl = build_phase_a(cfg, PhaseAVariant::Control, root.secret_key, gauss);
    std::vector<LatencySample> latencies =
        build_phase_b(cfg.scenario.phase_b.duration_ms, cfg.scenario.phase_b.latency_ms,
                      cfg.scenario.phase_b.sample_interval_ms, cfg.scenario.phase_b.start_ms);
    PhaseCScript pc = build_phase_c(cfg.scenario.phase_c);

    AuditLog log;
    BreakerState breaker = cfg.breaker.initial_state();
    SidecarState sidecar;
    sidecar.available = cfg.sidecar_available;
    GridState grid;
    std::vector<GridTraceRow> trace;
    double pending_injection_mw = 0.0;

    // Tick-aligned schedule; per-timestamp insertion order is construction
    // order, which is fixed.
    std::multimap<std::int64_t, std::function<void(std::int64_t)>> schedule;
    auto at = [&](std::int64_t ts, std::function<void(std::int64_t)> fn, const char* what) {
        if (ts < 0 || ts % cfg.scenario.dt_ms != 0 || ts >= cfg.scenario.duration_ms)
            throw Error(ErrorCode::ConfigError,
                        std::string("scenario: ") + what + " at t=" + std::to_string(ts) +
                            " is not a tick-aligned time within the run");
        schedule.emplace(ts, std::move(fn));
    };

    auto ingest_batch = [&](const TelemetryBatch& batch, std::int64_t now) {
        IngestVerdict v = ingest(batch, root.public_key, rl, baseline, cfg.grid,
                                 reference_observations(now), cfg.ingest, now);
        for (auto& ev : v.audit_events) log.append(std::move(ev));
    };
    at(cfg.scenario.phase_a.t_a1_ms, [&](std::int64_t now) { ingest_batch(a1, now); },
       "phase A ingest (A1)");
    at(cfg.scenario.phase_a.t_a2_ms, [&](std::int64_t now) { ingest_batch(a2, now); },
       "phase A ingest (A2)");
    at(cfg.scenario.phase_a.t_control_ms, [&](std::int64_t now) { ingest_batch(ctl, now); },
       "phase A ingest (control)");

    for (const auto& sample : latencies) {
        at(sample.ts_ms,
           [&, sample](std::int64_t now) {
               bool was_closed = breaker.mode == BreakerMode::Closed;
               BreakerResult res = breaker_record_latency(breaker, sample.latency_ms, now);
               breaker = res.state;
               for (auto& ev : res.events) log.append(std::move(ev));
               if (was_closed && breaker.mode == BreakerMode::Open) {
                   // The AI loop is cut out: droop fallback takes over and the
                   // attack's disturbance lands on it in the same tick.
                   grid = engage_fallback(grid);
                   pending_injection_mw += cfg.scenario.phase_b.disturbance_mw;
               }
           },
           "phase B latency sample");
    }

    for (const auto& price : pc.market_feed) {
        at(price.ts_ms,
           [&, price](std::int64_t now) { sidecar = note_market_price(sidecar, now, price.price); },
           "phase C market feed");
    }
    for (const auto& call : pc.calls) {
        at(call.timestamp,
           [&, call](std::int64_t now) {
               auto [decision, next] = sidecar_evaluate(call, sidecar, cfg.policy, now);
               sidecar = next;
               for (auto& ev : decision.audit_events) log.append(std::move(ev));
           },
           "phase C tool call");
    }

    if (cfg.scenario.canary_subscenario.enabled) {
        at(cfg.scenario.canary_subscenario.t_ms,
           [&](std::int64_t now) {
               const auto& cs = cfg.scenario.canary_subscenario;
               std::vector<CanaryPrediction> base_preds, canary_preds;
               for (std::size_t k = 0; k < cs.predictions_per_arm; ++k) {
                   double f = cfg.grid.nominal_freq_f0 +
                              0.01 * (static_cast<double>(k % 5) - 2.0);
                   double mw = 1000.0 + 5.0 * static_cast<double>(k);
                   base_preds.push_back({f, mw});
                   canary_preds.push_back({f, mw});
               }
               // The candidate model's tell: one prediction outside the
               // operating band.
               canary_preds.back().freq_hz = cs.bad_freq_hz;
               CanaryResult res = canary_evaluate(canary_preds, base_preds, cfg.canary, now);
               for (auto& ev : res.events) log.append(std::move(ev));
           },
           "canary sub-scenario");
    }

    // Single-threaded, tick-ordered loop: this is the determinism boundary.
    for (std::int64_t t = 0; t < cfg.scenario.duration_ms; t += cfg.scenario.dt_ms) {
        auto [lo, hi] = schedule.equal_range(t);
        for (auto it = lo; it != hi; ++it) it->second(t);
        grid = grid_step(grid, pending_injection_mw, cfg.grid, cfg.scenario.dt_ms);
        pending_injection_mw = 0.0;
        trace.push_back({grid.t, grid.delta_f_hz, grid.imbalance_mw, grid.fallback_engaged});
    }

    for (auto& sig : correlate(log.events(), cfg.scenario.correlation_window_ms))
        log.append(std::move(sig));

    RunResult out;
    out.report = build_report(log, trace, seed);
    out.log = std::move(log);
    out.trace = std::move(trace);
    return out;
}

// Run and persist the three artifacts the CLI and acceptance checks consume.
inline RunResult write_outputs(const ScenarioConfig& cfg, std::uint64_t seed,
                               const std::string& out_dir) {
    RunResult res = run_scenario(cfg, seed);
    std::filesystem::create_directories(out_dir);
    auto path = [&](const char* name) { return (std::filesystem::path(out_dir) / name).string(); };
    {
        std::ofstream f(path("report.json"), std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::IoError, "cannot write report.json in " + out_dir);
        f << res.report.to_json_text();
    }
    res.log.write_jsonl(path("audit.jsonl"));
    write_grid_trace(res.trace, path("grid_trace.csv"));
    return res;
}

}  // namespace gridguard
