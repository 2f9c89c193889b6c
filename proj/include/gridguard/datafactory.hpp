#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridguard/audit.hpp"
#include "gridguard/bytes.hpp"
#include "gridguard/compliance.hpp"
#include "gridguard/histogram.hpp"
#include "gridguard/identity.hpp"

namespace gridguard {

// ---------------------------------------------------------------------------
// Telemetry ingestion: identity gate, schema validation, statistical drift
// check, physics consistency check, dead-letter routing.
// ---------------------------------------------------------------------------

struct FrequencyMeasurement {
    std::int64_t timestamp = 0;  // epoch ms
    std::string node_id;
    double freq_hz = 0.0;
    double power_mw = 0.0;
};

struct TelemetryBatch {
    std::string batch_id;
    std::string tenant_id;
    std::string source_id;
    WorkloadCredential credential;
    int schema_version = 1;
    std::vector<FrequencyMeasurement> records;

    double mean_freq_hz() const {
        double sum = 0.0;
        for (const auto& r : records) sum += r.freq_hz;
        return sum / static_cast<double>(records.size());
    }

    // Canonical binary form, used verbatim for dead-letter retention.
    Bytes to_bytes() const {
        Bytes out;
        put_lp_string(out, batch_id);
        put_lp_string(out, tenant_id);
        put_lp_string(out, source_id);
        put_lp_bytes(out, credential.to_bytes());
        put_u32be(out, static_cast<std::uint32_t>(schema_version));
        put_u32be(out, static_cast<std::uint32_t>(records.size()));
        for (const auto& r : records) {
            put_i64be(out, r.timestamp);
            put_lp_string(out, r.node_id);
            put_f64be(out, r.freq_hz);
            put_f64be(out, r.power_mw);
        }
        return out;
    }

    static TelemetryBatch from_bytes(const Bytes& data) {
        ByteReader r(data);
        TelemetryBatch b;
        b.batch_id = r.lp_string();
        b.tenant_id = r.lp_string();
        b.source_id = r.lp_string();
        auto cred = WorkloadCredential::from_bytes(r.lp_bytes());
        if (!cred) throw Error(ErrorCode::ParseError, "batch credential malformed");
        b.credential = *cred;
        b.schema_version = static_cast<int>(r.u32be());
        std::uint32_t n = r.u32be();
        b.records.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            FrequencyMeasurement m;
            m.timestamp = r.i64be();
            m.node_id = r.lp_string();
            m.freq_hz = r.f64be();
            m.power_mw = r.f64be();
            b.records.push_back(std::move(m));
        }
        r.expect_exhausted();
        return b;
    }
};

struct GridParameters {
    double inertia_h = 11.111111111111111;  // MW*s/Hz, aggregate system inertia
    double nominal_freq_f0 = 60.0;          // Hz
    double rated_capacity_mw = 2000.0;
    double droop_gain = 800.0;  // MW/Hz

    void validate() const {
        if (!(inertia_h > 0) || !(nominal_freq_f0 > 0) || !(rated_capacity_mw > 0) ||
            !(droop_gain >= 0))
            throw Error(ErrorCode::ConfigError, "grid parameters out of range");
    }
};

struct ReferenceObservation {
    std::string node_id;
    double delta_f_hz = 0.0;  // deviation measured at an independent reference PMU
    std::int64_t timestamp = 0;
};

struct PhysicsCheckConfig {
    double ref_tolerance_hz = 0.05;
    double plausibility_fraction = 0.25;  // of rated capacity

    void validate() const {
        if (!(ref_tolerance_hz > 0))
            throw Error(ErrorCode::ConfigError, "ref_tolerance_hz must be > 0");
        if (!(plausibility_fraction > 0) || plausibility_fraction > 1.0)
            throw Error(ErrorCode::ConfigError, "plausibility_fraction must be in (0,1]");
    }
};

// --- Schema validation --------------------------------------------------

struct SchemaVerdict {
    bool ok = true;
    std::string detail;  // first failing field path
};

inline SchemaVerdict validate_schema(const TelemetryBatch& batch, int expected_version) {
    auto fail = [](std::string path) { return SchemaVerdict{false, std::move(path)}; };
    if (batch.schema_version != expected_version) return fail("schema_version");
    if (batch.records.empty()) return fail("records");
    for (std::size_t i = 0; i < batch.records.size(); ++i) {
        const auto& r = batch.records[i];
        const std::string p = "records[" + std::to_string(i) + "]";
        if (r.timestamp < 0) return fail(p + ".timestamp");
        if (i > 0 && r.timestamp < batch.records[i - 1].timestamp) return fail(p + ".timestamp");
        if (r.node_id != batch.source_id) return fail(p + ".node_id");
        if (!std::isfinite(r.freq_hz) || !(r.freq_hz > 0)) return fail(p + ".freq_hz");
        if (!std::isfinite(r.power_mw)) return fail(p + ".power_mw");
    }
    return {};
}

// --- Physics consistency check -------------------------------------------
//
// Quasi-steady swing equation: delta_f ~= -delta_P / (2 * H * f0). The
// reported deviation is the batch mean minus nominal; the implied power step
// is the rearrangement |delta_f| * 2 * H * f0. A batch is physically
// inconsistent only when BOTH hold: the independent reference PMUs do not
// corroborate the deviation (median reference delta differs by more than the
// tolerance) AND the implied power step is implausibly large relative to
// rated capacity. Requiring both avoids dead-lettering benign local
// transients.

struct PhysicsResult {
    bool ok = true;
    double implied_delta_p_mw = 0.0;  // reported on both outcomes
    std::string detail;
};

inline double median_reference_deviation(const std::vector<ReferenceObservation>& refs) {
    if (refs.empty()) throw Error(ErrorCode::MissingReference, "no reference observations");
    std::vector<double> d;
    d.reserve(refs.size());
    for (const auto& r : refs) d.push_back(r.delta_f_hz);
    std::sort(d.begin(), d.end());
    std::size_t n = d.size();
    return n % 2 == 1 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
}

inline PhysicsResult physics_check(const TelemetryBatch& batch, const GridParameters& gp,
                                   const std::vector<ReferenceObservation>& refs,
                                   const PhysicsCheckConfig& cfg) {
    gp.validate();
    cfg.validate();
    if (batch.records.empty()) throw Error(ErrorCode::ConfigError, "physics_check needs records");
    double delta_f_ref = median_reference_deviation(refs);  // throws MissingReference when empty

    double delta_f_rep = batch.mean_freq_hz() - gp.nominal_freq_f0;
    double implied_dp = std::abs(delta_f_rep) * 2.0 * gp.inertia_h * gp.nominal_freq_f0;

    bool uncorroborated = std::abs(delta_f_rep - delta_f_ref) > cfg.ref_tolerance_hz;
    bool implausible = implied_dp > cfg.plausibility_fraction * gp.rated_capacity_mw;
    if (uncorroborated && implausible) {
        return {false, implied_dp,
                "reported delta_f " + fmt_double(delta_f_rep) + " Hz vs reference " +
                    fmt_double(delta_f_ref) + " Hz implies " + fmt_double(implied_dp) + " MW step"};
    }
    return {true, implied_dp, ""};
}

// --- Drift check -----------------------------------------------------------
//
// Stage 1 compares the *noise shape* of a batch against a baseline: each
// sample's deviation from its own population mean is histogrammed and the
// KL divergence against the baseline deviation histogram is thresholded.
// Level shifts in the mean are deliberately invisible here -- catching a
// physically impossible mean shift is the physics check's job; this stage
// catches distributional drift (variance changes, multimodality).

inline Histogram deviation_histogram(const std::vector<double>& values,
                                     const std::vector<double>& edges) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    std::vector<double> devs;
    devs.reserve(values.size());
    for (double v : values) devs.push_back(v - mean);
    return histogram_from_samples(devs, edges);
}

inline Histogram batch_deviation_histogram(const TelemetryBatch& batch,
                                           const std::vector<double>& edges) {
    std::vector<double> freqs;
    freqs.reserve(batch.records.size());
    for (const auto& r : batch.records) freqs.push_back(r.freq_hz);
    return deviation_histogram(freqs, edges);
}

// --- Ingestion pipeline ----------------------------------------------------

enum class IngestOutcome { Accepted, DeadLettered };
enum class RejectReason { None, IdentityRejected, SchemaViolation, DriftExceeded, PhysicsViolation };

inline const char* reject_reason_name(RejectReason r) {
    switch (r) {
        case RejectReason::None: return "None";
        case RejectReason::IdentityRejected: return "IdentityRejected";
        case RejectReason::SchemaViolation: return "SchemaViolation";
        case RejectReason::DriftExceeded: return "DriftExceeded";
        case RejectReason::PhysicsViolation: return "PhysicsViolation";
    }
    return "Unknown";
}

struct IngestVerdict {
    IngestOutcome outcome = IngestOutcome::Accepted;
    RejectReason reason = RejectReason::None;
    std::optional<double> implied_delta_p_mw;
    std::vector<AuditEvent> audit_events;
    std::string detail;
};

struct IngestConfig {
    int expected_schema_version = 1;
    double kl_threshold_nats = 0.1;
    double kl_epsilon = 1e-9;
    PhysicsCheckConfig physics;
    // Test-only hook: lets the containment tests prove the physics stage, not
    // the scenario generator, is what rejects the poisoned batch.
    bool physics_check_enabled = true;
};

// Stage counters for pipeline-ordering assertions in tests.
struct IngestProbe {
    int identity_checked = 0;
    int schema_checked = 0;
    int drift_checked = 0;
    int physics_checked = 0;
};

// Fixed evaluation order: identity -> schema -> KL drift -> physics. The
// first failing stage dead-letters the batch with its reason and emits a
// DLQ_ROUTE audit event; acceptance emits INGEST_OK.
inline IngestVerdict ingest(const TelemetryBatch& batch, const Bytes& trust_root_pub,
                            const RevocationList& rl, const Histogram& baseline,
                            const GridParameters& gp, const std::vector<ReferenceObservation>& refs,
                            const IngestConfig& cfg, std::int64_t now,
                            IngestProbe* probe = nullptr) {
    if (!(cfg.kl_threshold_nats > 0))
        throw Error(ErrorCode::ConfigError, "kl_threshold_nats must be > 0");

    IngestVerdict v;
    auto dead_letter = [&](RejectReason reason, const std::string& detail) {
        v.outcome = IngestOutcome::DeadLettered;
        v.reason = reason;
        v.detail = detail;
        std::map<std::string, std::string> d = {
            {"batch_id", batch.batch_id},
            {"tenant_id", batch.tenant_id},
            {"reason", reject_reason_name(reason)},
            {"detail", detail},
        };
        if (v.implied_delta_p_mw) d["implied_delta_p_mw"] = fmt_double(*v.implied_delta_p_mw);
        v.audit_events.push_back(make_event(now, EventKind::DLQ_ROUTE, d, reject_reason_name(reason)));
        return v;
    };

    // 1. Identity.
    if (probe) ++probe->identity_checked;
    CredentialVerdict id = verify_credential(batch.credential, trust_root_pub, now, rl);
    if (id != CredentialVerdict::Valid)
        return dead_letter(RejectReason::IdentityRejected, credential_verdict_name(id));

    // 2. Schema.
    if (probe) ++probe->schema_checked;
    SchemaVerdict schema = validate_schema(batch, cfg.expected_schema_version);
    if (!schema.ok) return dead_letter(RejectReason::SchemaViolation, schema.detail);

    // 3. Statistical drift.
    if (probe) ++probe->drift_checked;
    Histogram batch_hist = batch_deviation_histogram(batch, baseline.bin_edges);
    double kl = kl_divergence(batch_hist, baseline, cfg.kl_epsilon);
    if (kl > cfg.kl_threshold_nats)
        return dead_letter(RejectReason::DriftExceeded,
                           "kl=" + fmt_double(kl) + " nats > " + fmt_double(cfg.kl_threshold_nats));

    // 4. Physics consistency.
    if (cfg.physics_check_enabled) {
        if (probe) ++probe->physics_checked;
        PhysicsResult phys = physics_check(batch, gp, refs, cfg.physics);
        v.implied_delta_p_mw = phys.implied_delta_p_mw;
        if (!phys.ok) return dead_letter(RejectReason::PhysicsViolation, phys.detail);
    }

    v.outcome = IngestOutcome::Accepted;
    v.reason = RejectReason::None;
    v.audit_events.push_back(make_event(
        now, EventKind::INGEST_OK, {{"batch_id", batch.batch_id}, {"tenant_id", batch.tenant_id}}));
    return v;
}

// --- Dead letter store -------------------------------------------------
//
// Append-only forensic retention: rejected batches are stored verbatim
// (pre-tokenization) as length-prefixed canonical records, with a JSONL
// index alongside. Appends open in append mode per call, so concurrent
// appenders interleave whole records.

class DlqStore {
  public:
    explicit DlqStore(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    struct IndexEntry {
        std::string batch_id;
        std::string reason;
        std::int64_t ts_ms = 0;
    };

    void append(const TelemetryBatch& batch, RejectReason reason, std::int64_t ts_ms) {
        Bytes rec = batch.to_bytes();
        Bytes framed;
        put_u32be(framed, static_cast<std::uint32_t>(rec.size()));
        framed.insert(framed.end(), rec.begin(), rec.end());
        {
            std::ofstream f(records_path(), std::ios::binary | std::ios::app);
            if (!f) throw Error(ErrorCode::IoError, "cannot open DLQ records file");
            f.write(reinterpret_cast<const char*>(framed.data()),
                    static_cast<std::streamsize>(framed.size()));
        }
        {
            nlohmann::ordered_json j;
            j["batch_id"] = batch.batch_id;
            j["reason"] = reject_reason_name(reason);
            j["ts_ms"] = ts_ms;
            std::ofstream f(index_path(), std::ios::binary | std::ios::app);
            if (!f) throw Error(ErrorCode::IoError, "cannot open DLQ index file");
            f << j.dump() << '\n';
        }
    }

    std::vector<TelemetryBatch> read_records() const {
        std::vector<TelemetryBatch> out;
        std::ifstream f(records_path(), std::ios::binary);
        if (!f) return out;
        Bytes all((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        ByteReader r(all);
        while (!r.exhausted()) out.push_back(TelemetryBatch::from_bytes(r.lp_bytes()));
        return out;
    }

    std::vector<IndexEntry> read_index() const {
        std::vector<IndexEntry> out;
        std::ifstream f(index_path(), std::ios::binary);
        if (!f) return out;
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line);
            out.push_back({j.at("batch_id").get<std::string>(), j.at("reason").get<std::string>(),
                           j.at("ts_ms").get<std::int64_t>()});
        }
        return out;
    }

    std::filesystem::path records_path() const { return dir_ / "records.bin"; }
    std::filesystem::path index_path() const { return dir_ / "index.jsonl"; }

  private:
    std::filesystem::path dir_;
};

}  // namespace gridguard
