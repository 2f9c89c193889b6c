#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gridguard/audit.hpp"
#include "gridguard/bytes.hpp"
#include "gridguard/compliance.hpp"
#include "gridguard/histogram.hpp"

namespace gridguard {

// ---------------------------------------------------------------------------
// Runtime governance: policy sidecar with fail-safe deny-all, latency circuit
// breaker with incident escalation, physics-aware canary controller.
//
// Sidecar and breaker state are immutable values threaded through pure
// evaluation functions; callers serialize updates per agent / per breaker.
// ---------------------------------------------------------------------------

enum class ToolCallKind { DispatchSignal, MarketBid };

inline const char* tool_call_kind_name(ToolCallKind k) {
    return k == ToolCallKind::DispatchSignal ? "DispatchSignal" : "MarketBid";
}

struct ToolCall {
    std::string call_id;
    std::string agent_id;
    ToolCallKind kind = ToolCallKind::DispatchSignal;
    double magnitude = 0.0;  // MW for DispatchSignal, $/MWh for MarketBid
    std::int64_t timestamp = 0;
};

struct PriceSample {
    std::int64_t ts_ms = 0;
    double price = 0.0;  // $/MWh
};

struct SidecarState {
    std::map<std::string, std::vector<std::int64_t>> signal_timestamps;  // per agent, ordered
    std::vector<PriceSample> price_samples;                              // ordered, exogenous feed
    bool available = true;
};

struct PolicyConfig {
    int velocity_limit = 5;               // signals per minute
    double financial_fraction = 0.15;     // ceiling = (1 + fraction) * rolling average
    std::int64_t velocity_window_ms = 60000;
    std::int64_t financial_window_ms = 3600000;
    // Agent -> permitted call kinds. An EMPTY map disables the scope policy
    // entirely (every kind permitted); a non-empty map is enforced strictly,
    // including for agents it does not mention.
    std::map<std::string, std::set<ToolCallKind>> scope_allowlist;

    void validate() const {
        if (velocity_limit < 1) throw Error(ErrorCode::ConfigError, "velocity_limit must be >= 1");
        if (!(financial_fraction > 0))
            throw Error(ErrorCode::ConfigError, "financial_fraction must be > 0");
        if (velocity_window_ms <= 0 || financial_window_ms <= 0)
            throw Error(ErrorCode::ConfigError, "policy windows must be positive");
    }
};

enum class PolicyKind { Velocity, Financial, Scope, FailSafe };

inline const char* policy_kind_name(PolicyKind p) {
    switch (p) {
        case PolicyKind::Velocity: return "Velocity";
        case PolicyKind::Financial: return "Financial";
        case PolicyKind::Scope: return "Scope";
        case PolicyKind::FailSafe: return "FailSafe";
    }
    return "Unknown";
}

struct PolicyViolation {
    PolicyKind policy = PolicyKind::FailSafe;
    std::string detail;
};

struct Decision {
    bool allow = false;
    int status_code = 403;  // 200 on Allow, 403 on Deny
    std::vector<PolicyViolation> reasons;
    std::vector<AuditEvent> audit_events;
    std::optional<long> violation_factor;  // floor(bid / ceiling) on financial denials

    bool has_reason(PolicyKind p) const {
        for (const auto& r : reasons)
            if (r.policy == p) return true;
        return false;
    }
};

// Mean of prices within the trailing window (now - window_ms, now]. Absent
// when no sample qualifies.
inline std::optional<double> rolling_average(const std::vector<PriceSample>& samples,
                                             std::int64_t now, std::int64_t window_ms) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : samples) {
        if (s.ts_ms > now - window_ms && s.ts_ms <= now) {
            sum += s.price;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

// Market feed hook: price history is exogenous. Denied or allowed bids never
// touch it, so an agent cannot inflate its own future ceiling.
inline SidecarState note_market_price(SidecarState state, std::int64_t ts_ms, double price) {
    state.price_samples.push_back({ts_ms, price});
    return state;
}

namespace detail_gov {

inline void prune(SidecarState& s, const PolicyConfig& cfg, std::int64_t now) {
    for (auto& [agent, ts] : s.signal_timestamps)
        std::erase_if(ts, [&](std::int64_t t) { return t <= now - cfg.velocity_window_ms; });
    std::erase_if(s.price_samples,
                  [&](const PriceSample& p) { return p.ts_ms <= now - cfg.financial_window_ms; });
}

}  // namespace detail_gov

// Evaluate one outbound tool call against all policies.
//
// Sidecar unavailable => Deny(FailSafe) with the state untouched. Otherwise
// every policy is evaluated and every violation is reported, so each policy
// independently produces a deny:
//   Scope     -- call kind must be in the agent's allowlist (when enforced).
//   Velocity  -- deny when the call would become the velocity_limit-th signal
//                inside the velocity window, i.e. when the window already
//                holds velocity_limit - 1 signals.
//   Financial -- MarketBid only: ceiling = (1 + fraction) * rolling average;
//                deny when the bid exceeds the ceiling (ties allow); an empty
//                price history fails safe to deny.
// Allowed calls append their timestamp to the agent's window; denied calls do
// not. Every decision emits one audit event (SIDECAR_DENY / SIDECAR_ALLOW).
inline std::pair<Decision, SidecarState> sidecar_evaluate(const ToolCall& call, SidecarState state,
                                                          const PolicyConfig& cfg,
                                                          std::int64_t now) {
    cfg.validate();
    Decision d;

    auto base_detail = [&](int status) {
        std::map<std::string, std::string> detail = {
            {"call_id", call.call_id},
            {"agent_id", call.agent_id},
            {"kind", tool_call_kind_name(call.kind)},
            {"magnitude", fmt_double(call.magnitude)},
            {"status_code", std::to_string(status)},
        };
        return detail;
    };

    if (!state.available) {
        d.allow = false;
        d.status_code = 403;
        d.reasons.push_back({PolicyKind::FailSafe, "sidecar unavailable; deny-all"});
        auto detail = base_detail(403);
        detail["reasons"] = "FailSafe";
        d.audit_events.push_back(make_event(now, EventKind::SIDECAR_DENY, detail, "FailSafe"));
        return {d, state};  // state deliberately unchanged
    }

    detail_gov::prune(state, cfg, now);

    // Scope.
    if (!cfg.scope_allowlist.empty()) {
        auto it = cfg.scope_allowlist.find(call.agent_id);
        bool permitted = it != cfg.scope_allowlist.end() && it->second.count(call.kind) > 0;
        if (!permitted)
            d.reasons.push_back(
                {PolicyKind::Scope, std::string(tool_call_kind_name(call.kind)) +
                                        " not in least-privilege scope for " + call.agent_id});
    }

    // Velocity.
    const auto& window = state.signal_timestamps[call.agent_id];
    auto prior = static_cast<long>(std::count_if(window.begin(), window.end(), [&](std::int64_t t) {
        return t > now - cfg.velocity_window_ms && t <= now;
    }));
    if (prior >= cfg.velocity_limit - 1)
        d.reasons.push_back({PolicyKind::Velocity,
                             "call would be signal " + std::to_string(prior + 1) + " of limit " +
                                 std::to_string(cfg.velocity_limit) + " in window"});

    // Financial (bids only).
    std::map<std::string, std::string> fin_detail;
    if (call.kind == ToolCallKind::MarketBid) {
        auto avg = rolling_average(state.price_samples, now, cfg.financial_window_ms);
        if (!avg) {
            d.reasons.push_back({PolicyKind::Financial, "no rolling average"});
        } else {
            double ceiling = (1.0 + cfg.financial_fraction) * *avg;
            fin_detail["rolling_avg"] = fmt_double(*avg);
            fin_detail["ceiling"] = fmt_double(ceiling);
            if (call.magnitude > ceiling) {
                long factor = static_cast<long>(std::floor(call.magnitude / ceiling));
                d.violation_factor = factor;
                d.reasons.push_back({PolicyKind::Financial,
                                     "bid " + fmt_double(call.magnitude) + " exceeds ceiling " +
                                         fmt_double(ceiling) + " by factor " + std::to_string(factor)});
            }
        }
    }

    if (d.reasons.empty()) {
        d.allow = true;
        d.status_code = 200;
        state.signal_timestamps[call.agent_id].push_back(call.timestamp);
        auto detail = base_detail(200);
        for (const auto& [k, v] : fin_detail) detail[k] = v;
        d.audit_events.push_back(make_event(now, EventKind::SIDECAR_ALLOW, detail));
    } else {
        d.allow = false;
        d.status_code = 403;
        auto detail = base_detail(403);
        std::string joined;
        for (const auto& r : d.reasons) {
            if (!joined.empty()) joined += ",";
            joined += policy_kind_name(r.policy);
            detail[std::string("reason_") + policy_kind_name(r.policy)] = r.detail;
        }
        detail["reasons"] = joined;
        if (d.violation_factor) detail["violation_factor"] = std::to_string(*d.violation_factor);
        for (const auto& [k, v] : fin_detail) detail[k] = v;
        d.audit_events.push_back(make_event(now, EventKind::SIDECAR_DENY, detail, joined));
    }
    return {d, state};
}

// --- Latency circuit breaker -----------------------------------------------

enum class BreakerMode { Closed, Open };
enum class BreakerAction { Pass, Break, Escalate };

inline const char* breaker_action_name(BreakerAction a) {
    switch (a) {
        case BreakerAction::Pass: return "Pass";
        case BreakerAction::Break: return "Break";
        case BreakerAction::Escalate: return "Escalate";
    }
    return "Unknown";
}

struct BreakerState {
    BreakerMode mode = BreakerMode::Closed;
    double latency_budget_ms = 200.0;
    std::vector<std::int64_t> violation_timestamps;
    std::int64_t escalation_window_ms = 90000;
    int escalation_count_threshold = 3;
    bool fallback_engaged = false;
    bool escalated = false;
};

struct BreakerResult {
    BreakerAction action = BreakerAction::Pass;
    int status_code = 200;  // 503 on Break / Escalate
    BreakerState state;
    std::vector<AuditEvent> events;
};

// Record one AI-loop response latency. Over-budget samples trip the breaker:
// the mode opens, deterministic droop fallback engages, and the violation is
// recorded. When the trailing escalation window accumulates the configured
// number of violations the action escalates exactly once, emitting the
// incident-response chain (IR plan invocation, E-ISAC notification, recovery
// documentation). Pass results never close an open breaker; recovery is a
// manual breaker_reset.
inline BreakerResult breaker_record_latency(BreakerState b, double latency_ms, std::int64_t now) {
    if (!(latency_ms >= 0)) throw Error(ErrorCode::ConfigError, "latency must be >= 0");
    BreakerResult res;
    if (latency_ms <= b.latency_budget_ms) {
        res.action = BreakerAction::Pass;
        res.status_code = 200;
        res.state = std::move(b);
        return res;
    }

    b.mode = BreakerMode::Open;
    b.fallback_engaged = true;
    b.violation_timestamps.push_back(now);

    auto in_window = static_cast<int>(std::count_if(
        b.violation_timestamps.begin(), b.violation_timestamps.end(),
        [&](std::int64_t t) { return t >= now - b.escalation_window_ms && t <= now; }));

    std::map<std::string, std::string> detail = {
        {"latency_ms", fmt_double(latency_ms)},
        {"budget_ms", fmt_double(b.latency_budget_ms)},
        {"status_code", "503"},
        {"violations_in_window", std::to_string(in_window)},
    };

    if (in_window >= b.escalation_count_threshold && !b.escalated) {
        b.escalated = true;
        res.action = BreakerAction::Escalate;
        res.status_code = 503;
        res.events.push_back(make_event(now, EventKind::BREAKER_ESCALATE, detail));
        res.events.push_back(make_event(now, EventKind::IR_PLAN_INVOKED,
                                        {{"trigger", "latency escalation"}}));
        res.events.push_back(make_event(now, EventKind::EISAC_NOTIFIED,
                                        {{"trigger", "latency escalation"}}));
        res.events.push_back(make_event(now, EventKind::RECOVERY_DOCUMENTED,
                                        {{"trigger", "latency escalation"}}));
    } else {
        res.action = BreakerAction::Break;
        res.status_code = 503;
        res.events.push_back(make_event(now, EventKind::BREAKER_BREAK, detail));
    }
    res.state = std::move(b);
    return res;
}

inline BreakerState breaker_reset(BreakerState b, std::int64_t now) {
    (void)now;
    if (b.mode == BreakerMode::Closed)
        throw Error(ErrorCode::AlreadyClosed, "breaker is already closed");
    b.mode = BreakerMode::Closed;
    b.fallback_engaged = false;
    // escalated stays as-is: escalation is a historical fact.
    return b;
}

// --- Canary controller -------------------------------------------------

struct CanaryConfig {
    double fraction = 0.10;  // share of traffic routed to the canary arm
    double kl_threshold_nats = 0.1;
    double freq_band_lo_hz = 59.0;
    double freq_band_hi_hz = 61.0;
    double rated_capacity_mw = 2000.0;
    // Drift histogram shape for freq predictions.
    double hist_lo_hz = 58.0;
    double hist_hi_hz = 62.0;
    std::size_t hist_bins = 20;
    double kl_epsilon = 1e-9;

    void validate() const {
        if (!(freq_band_lo_hz < freq_band_hi_hz))
            throw Error(ErrorCode::ConfigError, "canary frequency band is inverted");
        if (!(kl_threshold_nats > 0) || !(rated_capacity_mw > 0))
            throw Error(ErrorCode::ConfigError, "canary thresholds out of range");
    }
};

enum class CanaryArm { Canary, Baseline };

// Deterministic traffic split on a stable hash of the batch id. The paper
// interval pins fraction to [0.05, 0.10]; llround avoids the binary-fraction
// off-by-one at the threshold (0.10 * 10000 is not exactly 1000 in binary).
inline CanaryArm canary_route(const std::string& batch_id, double fraction) {
    if (!(fraction >= 0.05 && fraction <= 0.10))
        throw Error(ErrorCode::ConfigError, "canary fraction must be within [0.05, 0.10]");
    auto threshold = static_cast<std::uint64_t>(std::llround(fraction * 10000.0));
    return (fnv1a64(batch_id) % 10000) < threshold ? CanaryArm::Canary : CanaryArm::Baseline;
}

struct CanaryPrediction {
    double freq_hz = 0.0;
    double dispatch_mw = 0.0;
};

struct CanaryResult {
    bool promote = true;
    std::vector<std::string> reasons;  // "frequency band", "rated capacity", "kl drift"
    std::vector<AuditEvent> events;
};

inline CanaryResult canary_evaluate(const std::vector<CanaryPrediction>& canary_preds,
                                    const std::vector<CanaryPrediction>& baseline_preds,
                                    const CanaryConfig& cfg, std::int64_t now = 0) {
    cfg.validate();
    if (canary_preds.empty() || baseline_preds.empty())
        throw Error(ErrorCode::EmptyDataset, "canary evaluation needs both arms' predictions");

    CanaryResult res;
    bool band_violation = false, capacity_violation = false;
    for (const auto& p : canary_preds) {
        if (p.freq_hz < cfg.freq_band_lo_hz || p.freq_hz > cfg.freq_band_hi_hz)
            band_violation = true;
        if (p.dispatch_mw > cfg.rated_capacity_mw) capacity_violation = true;
    }
    if (band_violation) res.reasons.emplace_back("frequency band");
    if (capacity_violation) res.reasons.emplace_back("rated capacity");

    auto edges = uniform_edges(cfg.hist_lo_hz, cfg.hist_hi_hz, cfg.hist_bins);
    auto freqs_of = [](const std::vector<CanaryPrediction>& preds) {
        std::vector<double> f;
        f.reserve(preds.size());
        for (const auto& p : preds) f.push_back(p.freq_hz);
        return f;
    };
    double kl = kl_divergence(histogram_from_samples(freqs_of(canary_preds), edges),
                              histogram_from_samples(freqs_of(baseline_preds), edges),
                              cfg.kl_epsilon);
    if (kl > cfg.kl_threshold_nats) res.reasons.emplace_back("kl drift");

    res.promote = res.reasons.empty();
    if (!res.promote) {
        std::string joined;
        for (const auto& r : res.reasons) {
            if (!joined.empty()) joined += ",";
            joined += r;
        }
        res.events.push_back(make_event(now, EventKind::CANARY_ROLLBACK,
                                        {{"reasons", joined}, {"kl_nats", fmt_double(kl)}}));
    }
    return res;
}

}  // namespace gridguard
