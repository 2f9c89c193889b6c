#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridguard/bytes.hpp"
#include "gridguard/datafactory.hpp"
#include "gridguard/errors.hpp"
#include "gridguard/governance.hpp"

namespace gridguard {

// ---------------------------------------------------------------------------
// Scenario configuration: one JSON document wiring every module together.
// Parsing is strict — every error names the offending field path, unknown
// keys are rejected, and the parsed structs re-run their owning module's
// validation so a config that loads is a config that runs.
// ---------------------------------------------------------------------------

namespace detail_cfg {

// Cursor over one JSON object that tracks consumed keys so leftovers can be
// rejected, and threads a dotted path into every error message.
class ObjCursor {
  public:
    ObjCursor(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw Error(ErrorCode::ConfigError, path_ + ": expected an object");
    }

    const std::string& path() const { return path_; }

    bool has(const std::string& key) const { return j_.contains(key); }

    const nlohmann::json& raw(const std::string& key) {
        auto it = j_.find(key);
        if (it == j_.end())
            throw Error(ErrorCode::ConfigError, sub(key) + ": missing required field");
        seen_.insert(key);
        return *it;
    }

    ObjCursor child(const std::string& key) { return ObjCursor(raw(key), sub(key)); }

    double num(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_number()) throw Error(ErrorCode::ConfigError, sub(key) + ": expected a number");
        return v.get<double>();
    }

    std::int64_t integer(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_number_integer())
            throw Error(ErrorCode::ConfigError, sub(key) + ": expected an integer");
        return v.get<std::int64_t>();
    }

    bool boolean(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_boolean()) throw Error(ErrorCode::ConfigError, sub(key) + ": expected a boolean");
        return v.get<bool>();
    }

    std::string str(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_string()) throw Error(ErrorCode::ConfigError, sub(key) + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<std::string> str_list(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_array()) throw Error(ErrorCode::ConfigError, sub(key) + ": expected an array");
        std::vector<std::string> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_string())
                throw Error(ErrorCode::ConfigError,
                            sub(key) + "[" + std::to_string(i) + "]: expected a string");
            out.push_back(v[i].get<std::string>());
        }
        return out;
    }

    bool opt_boolean(const std::string& key, bool fallback) {
        return has(key) ? boolean(key) : fallback;
    }

    // Call last: any key never consumed is a typo worth failing loudly on.
    void reject_unknown() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key))
                throw Error(ErrorCode::ConfigError, sub(key) + ": unknown field");
    }

  private:
    std::string sub(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace detail_cfg

// Healthy-telemetry baseline for the drift stage: seeded Gaussian noise
// around the nominal frequency, histogrammed as deviations from the mean.
struct BaselineConfig {
    double sigma_hz = 0.015;
    std::size_t num_samples = 4096;
    std::size_t bins = 12;
    double half_span_hz = 0.06;

    void validate() const {
        if (!(sigma_hz > 0)) throw Error(ErrorCode::ConfigError, "baseline.sigma_hz must be > 0");
        if (num_samples < 16)
            throw Error(ErrorCode::ConfigError, "baseline.num_samples must be >= 16");
        if (bins < 2) throw Error(ErrorCode::ConfigError, "baseline.bins must be >= 2");
        if (!(half_span_hz > 0))
            throw Error(ErrorCode::ConfigError, "baseline.half_span_hz must be > 0");
    }
};

struct IdentityConfig {
    Bytes trust_root_seed;  // 32 bytes, hex in the config file
    std::int64_t credential_validity_ms = 300000;
    std::vector<std::string> revoked_subjects;

    void validate() const {
        if (trust_root_seed.size() != 32)
            throw Error(ErrorCode::ConfigError, "identity.trust_root_seed_hex must be 32 bytes");
        if (credential_validity_ms <= 0)
            throw Error(ErrorCode::ConfigError, "identity.credential_validity_ms must be > 0");
    }
};

struct BreakerConfig {
    double latency_budget_ms = 200.0;
    std::int64_t escalation_window_ms = 90000;
    int escalation_count_threshold = 3;

    void validate() const {
        if (!(latency_budget_ms > 0))
            throw Error(ErrorCode::ConfigError, "breaker.latency_budget_ms must be > 0");
        if (escalation_window_ms <= 0)
            throw Error(ErrorCode::ConfigError, "breaker.escalation_window_ms must be > 0");
        if (escalation_count_threshold < 1)
            throw Error(ErrorCode::ConfigError, "breaker.escalation_count_threshold must be >= 1");
    }

    BreakerState initial_state() const {
        BreakerState b;
        b.latency_budget_ms = latency_budget_ms;
        b.escalation_window_ms = escalation_window_ms;
        b.escalation_count_threshold = escalation_count_threshold;
        return b;
    }
};

struct PhaseAConfig {
    std::int64_t t_a1_ms = 10000;       // revoked-identity variant
    std::int64_t t_a2_ms = 20000;       // physics-only variant
    std::int64_t t_control_ms = 30000;  // clean control batch
    double delta_f_hz = -0.6;
    double control_delta_f_hz = -0.01;
    std::size_t records_per_batch = 240;
    std::string revoked_subject = "rtu-07";
    std::string valid_subject = "rtu-12";

    void validate() const {
        if (records_per_batch < 2)
            throw Error(ErrorCode::ConfigError, "phase_a.records_per_batch must be >= 2");
        if (revoked_subject.empty() || valid_subject.empty())
            throw Error(ErrorCode::ConfigError, "phase_a subjects must be non-empty");
    }
};

struct PhaseBConfig {
    std::int64_t start_ms = 60000;
    std::int64_t duration_ms = 90000;
    std::int64_t sample_interval_ms = 40000;
    double latency_ms = 340.0;
    double disturbance_mw = 800.0;

    void validate() const {
        if (duration_ms < 90000)
            throw Error(ErrorCode::ConfigError,
                        "phase_b.duration_ms must be >= 90000 so escalation can trigger");
        if (sample_interval_ms <= 0)
            throw Error(ErrorCode::ConfigError, "phase_b.sample_interval_ms must be > 0");
        if (!(latency_ms >= 0))
            throw Error(ErrorCode::ConfigError, "phase_b.latency_ms must be >= 0");
    }
};

struct PhaseCConfig {
    std::int64_t start_ms = 200000;
    std::string agent_id = "dispatch-agent-1";
    int dispatch_count = 4;
    std::int64_t dispatch_interval_ms = 10000;
    double dispatch_mw = 150.0;
    std::int64_t bid_ts_ms = 240000;
    double bid_price = 9000.0;
    double market_price = 42.0;
    std::int64_t market_feed_start_ms = 190000;
    int market_feed_count = 5;
    std::int64_t market_feed_interval_ms = 10000;

    void validate() const {
        if (agent_id.empty()) throw Error(ErrorCode::ConfigError, "phase_c.agent_id is empty");
        if (dispatch_count < 0 || market_feed_count < 1)
            throw Error(ErrorCode::ConfigError, "phase_c counts out of range");
        if (dispatch_interval_ms <= 0 || market_feed_interval_ms <= 0)
            throw Error(ErrorCode::ConfigError, "phase_c intervals must be > 0");
    }
};

struct CanarySubscenarioConfig {
    bool enabled = true;
    std::int64_t t_ms = 400000;
    double bad_freq_hz = 61.5;
    std::size_t predictions_per_arm = 20;

    void validate() const {
        if (predictions_per_arm < 2)
            throw Error(ErrorCode::ConfigError,
                        "canary_subscenario.predictions_per_arm must be >= 2");
    }
};

struct TimelineConfig {
    std::int64_t dt_ms = 100;
    std::int64_t duration_ms = 480000;
    std::int64_t correlation_window_ms = 300000;
    std::string tenant_id = "tenant-alpha";
    PhaseAConfig phase_a;
    PhaseBConfig phase_b;
    PhaseCConfig phase_c;
    CanarySubscenarioConfig canary_subscenario;

    void validate() const {
        if (dt_ms <= 0) throw Error(ErrorCode::ConfigError, "scenario.dt_ms must be > 0");
        if (duration_ms <= 0 || duration_ms % dt_ms != 0)
            throw Error(ErrorCode::ConfigError,
                        "scenario.duration_ms must be a positive multiple of dt_ms");
        if (correlation_window_ms <= 0)
            throw Error(ErrorCode::ConfigError, "scenario.correlation_window_ms must be > 0");
        if (tenant_id.empty()) throw Error(ErrorCode::ConfigError, "scenario.tenant_id is empty");
        phase_a.validate();
        phase_b.validate();
        phase_c.validate();
        canary_subscenario.validate();

        // Every scheduled action must land on a tick boundary, and inside the run.
        auto on_grid = [&](std::int64_t t, const char* field) {
            if (t < 0 || t % dt_ms != 0 || t >= duration_ms)
                throw Error(ErrorCode::ConfigError,
                            std::string("scenario.") + field +
                                ": must be a tick-aligned time within the run");
        };
        on_grid(phase_a.t_a1_ms, "phase_a.t_a1_ms");
        on_grid(phase_a.t_a2_ms, "phase_a.t_a2_ms");
        on_grid(phase_a.t_control_ms, "phase_a.t_control_ms");
        on_grid(phase_b.start_ms, "phase_b.start_ms");
        on_grid(phase_c.start_ms, "phase_c.start_ms");
        on_grid(phase_c.bid_ts_ms, "phase_c.bid_ts_ms");
        if (canary_subscenario.enabled)
            on_grid(canary_subscenario.t_ms, "canary_subscenario.t_ms");
    }
};

struct ScenarioConfig {
    GridParameters grid;
    IdentityConfig identity;
    IngestConfig ingest;  // includes the test-only physics_check_enabled hook
    BaselineConfig baseline;
    PolicyConfig policy;
    bool sidecar_available = true;
    BreakerConfig breaker;
    CanaryConfig canary;
    TimelineConfig scenario;

    void validate() const {
        grid.validate();
        identity.validate();
        ingest.physics.validate();
        if (!(ingest.kl_threshold_nats > 0))
            throw Error(ErrorCode::ConfigError, "ingest.kl_threshold_nats must be > 0");
        if (!(ingest.kl_epsilon > 0))
            throw Error(ErrorCode::ConfigError, "ingest.kl_epsilon must be > 0");
        baseline.validate();
        policy.validate();
        breaker.validate();
        canary.validate();
        scenario.validate();
    }

    static ScenarioConfig from_json(const nlohmann::json& j);
    static ScenarioConfig load(const std::string& path);
};

inline ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
    using detail_cfg::ObjCursor;
    ScenarioConfig cfg;
    ObjCursor root(j, "");

    {
        ObjCursor c = root.child("grid");
        cfg.grid.inertia_h = c.num("inertia_h_mw_s_per_hz");
        cfg.grid.nominal_freq_f0 = c.num("nominal_freq_hz");
        cfg.grid.rated_capacity_mw = c.num("rated_capacity_mw");
        cfg.grid.droop_gain = c.num("droop_gain_mw_per_hz");
        c.reject_unknown();
    }
    {
        ObjCursor c = root.child("identity");
        std::string hex = c.str("trust_root_seed_hex");
        Bytes seed;
        try {
            seed = from_hex(hex);
        } catch (const Error&) {
            seed.clear();
        }
        if (seed.size() != 32)
            throw Error(ErrorCode::ConfigError,
                        "identity.trust_root_seed_hex: expected 64 hex characters");
        cfg.identity.trust_root_seed = std::move(seed);
        cfg.identity.credential_validity_ms = c.integer("credential_validity_ms");
        cfg.identity.revoked_subjects = c.str_list("revoked_subjects");
        c.reject_unknown();
    }
    {
        ObjCursor c = root.child("ingest");
        cfg.ingest.expected_schema_version = static_cast<int>(c.integer("expected_schema_version"));
        cfg.ingest.kl_threshold_nats = c.num("kl_threshold_nats");
        cfg.ingest.kl_epsilon = c.num("kl_epsilon");
        // Test-only hook, defaults on; the golden config does not set it.
        cfg.ingest.physics_check_enabled = c.opt_boolean("physics_check_enabled", true);
        {
            ObjCursor b = c.child("baseline");
            cfg.baseline.sigma_hz = b.num("sigma_hz");
            cfg.baseline.num_samples = static_cast<std::size_t>(b.integer("num_samples"));
            cfg.baseline.bins = static_cast<std::size_t>(b.integer("bins"));
            cfg.baseline.half_span_hz = b.num("half_span_hz");
            b.reject_unknown();
        }
        {
            ObjCursor p = c.child("physics");
            cfg.ingest.physics.ref_tolerance_hz = p.num("ref_tolerance_hz");
            cfg.ingest.physics.plausibility_fraction = p.num("plausibility_fraction");
            p.reject_unknown();
        }
        c.reject_unknown();
    }
    {
        ObjCursor c = root.child("policy");
        cfg.policy.velocity_limit = static_cast<int>(c.integer("velocity_limit"));
        cfg.policy.financial_fraction = c.num("financial_fraction");
        cfg.policy.velocity_window_ms = c.integer("velocity_window_ms");
        cfg.policy.financial_window_ms = c.integer("financial_window_ms");
        cfg.sidecar_available = c.boolean("sidecar_available");
        // Optional least-privilege scope map: agent id -> permitted call kinds.
        if (c.has("scope_allowlist")) {
            const auto& scope = c.raw("scope_allowlist");
            if (!scope.is_object())
                throw Error(ErrorCode::ConfigError, "policy.scope_allowlist: expected an object");
            for (const auto& [agent, kinds] : scope.items()) {
                if (!kinds.is_array())
                    throw Error(ErrorCode::ConfigError,
                                "policy.scope_allowlist." + agent + ": expected an array");
                for (const auto& k : kinds) {
                    std::string name = k.is_string() ? k.get<std::string>() : "";
                    if (name == "DispatchSignal")
                        cfg.policy.scope_allowlist[agent].insert(ToolCallKind::DispatchSignal);
                    else if (name == "MarketBid")
                        cfg.policy.scope_allowlist[agent].insert(ToolCallKind::MarketBid);
                    else
                        throw Error(ErrorCode::ConfigError,
                                    "policy.scope_allowlist." + agent + ": unknown call kind");
                }
            }
        }
        c.reject_unknown();
    }
    {
        ObjCursor c = root.child("breaker");
        cfg.breaker.latency_budget_ms = c.num("latency_budget_ms");
        cfg.breaker.escalation_window_ms = c.integer("escalation_window_ms");
        cfg.breaker.escalation_count_threshold =
            static_cast<int>(c.integer("escalation_count_threshold"));
        c.reject_unknown();
    }
    {
        ObjCursor c = root.child("canary");
        cfg.canary.fraction = c.num("fraction");
        cfg.canary.kl_threshold_nats = c.num("kl_threshold_nats");
        cfg.canary.freq_band_lo_hz = c.num("freq_band_lo_hz");
        cfg.canary.freq_band_hi_hz = c.num("freq_band_hi_hz");
        cfg.canary.rated_capacity_mw = c.num("rated_capacity_mw");
        c.reject_unknown();
    }
    {
        ObjCursor c = root.child("scenario");
        cfg.scenario.dt_ms = c.integer("dt_ms");
        cfg.scenario.duration_ms = c.integer("duration_ms");
        cfg.scenario.correlation_window_ms = c.integer("correlation_window_ms");
        cfg.scenario.tenant_id = c.str("tenant_id");
        {
            ObjCursor a = c.child("phase_a");
            cfg.scenario.phase_a.t_a1_ms = a.integer("t_a1_ms");
            cfg.scenario.phase_a.t_a2_ms = a.integer("t_a2_ms");
            cfg.scenario.phase_a.t_control_ms = a.integer("t_control_ms");
            cfg.scenario.phase_a.delta_f_hz = a.num("delta_f_hz");
            cfg.scenario.phase_a.control_delta_f_hz = a.num("control_delta_f_hz");
            cfg.scenario.phase_a.records_per_batch =
                static_cast<std::size_t>(a.integer("records_per_batch"));
            cfg.scenario.phase_a.revoked_subject = a.str("revoked_subject");
            cfg.scenario.phase_a.valid_subject = a.str("valid_subject");
            a.reject_unknown();
        }
        {
            ObjCursor b = c.child("phase_b");
            cfg.scenario.phase_b.start_ms = b.integer("start_ms");
            cfg.scenario.phase_b.duration_ms = b.integer("duration_ms");
            cfg.scenario.phase_b.sample_interval_ms = b.integer("sample_interval_ms");
            cfg.scenario.phase_b.latency_ms = b.num("latency_ms");
            cfg.scenario.phase_b.disturbance_mw = b.num("disturbance_mw");
            b.reject_unknown();
        }
        {
            ObjCursor p = c.child("phase_c");
            cfg.scenario.phase_c.start_ms = p.integer("start_ms");
            cfg.scenario.phase_c.agent_id = p.str("agent_id");
            cfg.scenario.phase_c.dispatch_count = static_cast<int>(p.integer("dispatch_count"));
            cfg.scenario.phase_c.dispatch_interval_ms = p.integer("dispatch_interval_ms");
            cfg.scenario.phase_c.dispatch_mw = p.num("dispatch_mw");
            cfg.scenario.phase_c.bid_ts_ms = p.integer("bid_ts_ms");
            cfg.scenario.phase_c.bid_price = p.num("bid_price");
            cfg.scenario.phase_c.market_price = p.num("market_price");
            cfg.scenario.phase_c.market_feed_start_ms = p.integer("market_feed_start_ms");
            cfg.scenario.phase_c.market_feed_count =
                static_cast<int>(p.integer("market_feed_count"));
            cfg.scenario.phase_c.market_feed_interval_ms = p.integer("market_feed_interval_ms");
            p.reject_unknown();
        }
        {
            ObjCursor k = c.child("canary_subscenario");
            cfg.scenario.canary_subscenario.enabled = k.boolean("enabled");
            cfg.scenario.canary_subscenario.t_ms = k.integer("t_ms");
            cfg.scenario.canary_subscenario.bad_freq_hz = k.num("bad_freq_hz");
            cfg.scenario.canary_subscenario.predictions_per_arm =
                static_cast<std::size_t>(k.integer("predictions_per_arm"));
            k.reject_unknown();
        }
        c.reject_unknown();
    }
    root.reject_unknown();

    cfg.validate();
    return cfg;
}

inline ScenarioConfig ScenarioConfig::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::ConfigError, "cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    }
    return from_json(j);
}

}  // namespace gridguard
