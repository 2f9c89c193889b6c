#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridguard/bytes.hpp"
#include "gridguard/errors.hpp"

namespace gridguard {

// Every security-relevant occurrence in the system is recorded as one of
// these kinds. The set is closed: report generation, correlation, and the
// control-framework mapping are all keyed on it.
enum class EventKind {
    INGEST_OK,
    DLQ_ROUTE,
    REGISTRY_PUT,
    GATE_FAIL,
    BREAKER_BREAK,
    BREAKER_ESCALATE,
    IR_PLAN_INVOKED,
    EISAC_NOTIFIED,
    RECOVERY_DOCUMENTED,
    SIDECAR_DENY,
    SIDECAR_ALLOW,
    CANARY_ROLLBACK,
    MULTI_VECTOR_SIGNATURE,
};

inline const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::INGEST_OK: return "INGEST_OK";
        case EventKind::DLQ_ROUTE: return "DLQ_ROUTE";
        case EventKind::REGISTRY_PUT: return "REGISTRY_PUT";
        case EventKind::GATE_FAIL: return "GATE_FAIL";
        case EventKind::BREAKER_BREAK: return "BREAKER_BREAK";
        case EventKind::BREAKER_ESCALATE: return "BREAKER_ESCALATE";
        case EventKind::IR_PLAN_INVOKED: return "IR_PLAN_INVOKED";
        case EventKind::EISAC_NOTIFIED: return "EISAC_NOTIFIED";
        case EventKind::RECOVERY_DOCUMENTED: return "RECOVERY_DOCUMENTED";
        case EventKind::SIDECAR_DENY: return "SIDECAR_DENY";
        case EventKind::SIDECAR_ALLOW: return "SIDECAR_ALLOW";
        case EventKind::CANARY_ROLLBACK: return "CANARY_ROLLBACK";
        case EventKind::MULTI_VECTOR_SIGNATURE: return "MULTI_VECTOR_SIGNATURE";
    }
    throw Error(ErrorCode::UnknownEventKind, "unmapped event kind value");
}

inline EventKind event_kind_from_name(const std::string& name) {
    static const std::map<std::string, EventKind> table = {
        {"INGEST_OK", EventKind::INGEST_OK},
        {"DLQ_ROUTE", EventKind::DLQ_ROUTE},
        {"REGISTRY_PUT", EventKind::REGISTRY_PUT},
        {"GATE_FAIL", EventKind::GATE_FAIL},
        {"BREAKER_BREAK", EventKind::BREAKER_BREAK},
        {"BREAKER_ESCALATE", EventKind::BREAKER_ESCALATE},
        {"IR_PLAN_INVOKED", EventKind::IR_PLAN_INVOKED},
        {"EISAC_NOTIFIED", EventKind::EISAC_NOTIFIED},
        {"RECOVERY_DOCUMENTED", EventKind::RECOVERY_DOCUMENTED},
        {"SIDECAR_DENY", EventKind::SIDECAR_DENY},
        {"SIDECAR_ALLOW", EventKind::SIDECAR_ALLOW},
        {"CANARY_ROLLBACK", EventKind::CANARY_ROLLBACK},
        {"MULTI_VECTOR_SIGNATURE", EventKind::MULTI_VECTOR_SIGNATURE},
    };
    auto it = table.find(name);
    if (it == table.end()) throw Error(ErrorCode::UnknownEventKind, name);
    return it->second;
}

// Name of the control that emitted a given kind of event.
inline const char* control_id_for(EventKind k) {
    switch (k) {
        case EventKind::INGEST_OK: return "INGEST_GATE";
        case EventKind::DLQ_ROUTE: return "DLQ_ROUTE";
        case EventKind::REGISTRY_PUT: return "IMMUTABLE_REGISTRY";
        case EventKind::GATE_FAIL: return "ROBUSTNESS_GATE";
        case EventKind::BREAKER_BREAK: return "LATENCY_CIRCUIT_BREAKER";
        case EventKind::BREAKER_ESCALATE: return "LATENCY_CIRCUIT_BREAKER";
        case EventKind::IR_PLAN_INVOKED: return "CIP-008-7.1-R1";
        case EventKind::EISAC_NOTIFIED: return "CIP-008-7.1-R2";
        case EventKind::RECOVERY_DOCUMENTED: return "CIP-009-7.1-R1";
        case EventKind::SIDECAR_DENY: return "GOVERNANCE_SIDECAR";
        case EventKind::SIDECAR_ALLOW: return "GOVERNANCE_SIDECAR";
        case EventKind::CANARY_ROLLBACK: return "CANARY_CONTROLLER";
        case EventKind::MULTI_VECTOR_SIGNATURE: return "SIEM_CORRELATION";
    }
    throw Error(ErrorCode::UnknownEventKind, "unmapped event kind value");
}

struct AuditEvent {
    std::int64_t ts_ms = 0;
    EventKind event_kind = EventKind::INGEST_OK;
    std::string control_id;
    std::map<std::string, std::string> detail;  // sorted keys => stable JSON
    std::vector<std::string> framework_tags;
};

inline nlohmann::ordered_json audit_event_to_json(const AuditEvent& ev) {
    nlohmann::ordered_json j;
    j["ts_ms"] = ev.ts_ms;
    j["event_kind"] = event_kind_name(ev.event_kind);
    j["control_id"] = ev.control_id;
    nlohmann::ordered_json d = nlohmann::ordered_json::object();
    for (const auto& [k, v] : ev.detail) d[k] = v;
    j["detail"] = d;
    j["framework_tags"] = ev.framework_tags;
    return j;
}

inline AuditEvent audit_event_from_json(const nlohmann::json& j) {
    AuditEvent ev;
    ev.ts_ms = j.at("ts_ms").get<std::int64_t>();
    ev.event_kind = event_kind_from_name(j.at("event_kind").get<std::string>());
    ev.control_id = j.at("control_id").get<std::string>();
    for (const auto& [k, v] : j.at("detail").items()) ev.detail[k] = v.get<std::string>();
    for (const auto& t : j.at("framework_tags")) ev.framework_tags.push_back(t.get<std::string>());
    return ev;
}

// Ordered event log. Appending assigns each event a sequential id (stored in
// detail["event_id"]) and enforces that timestamps never decrease.
class AuditLog {
  public:
    std::size_t append(AuditEvent ev) {
        if (!events_.empty() && ev.ts_ms < events_.back().ts_ms)
            throw Error(ErrorCode::ConfigError, "audit log timestamps must be non-decreasing");
        std::size_t id = events_.size();
        ev.detail["event_id"] = std::to_string(id);
        events_.push_back(std::move(ev));
        return id;
    }

    const std::vector<AuditEvent>& events() const { return events_; }
    bool empty() const { return events_.empty(); }
    std::size_t size() const { return events_.size(); }
    std::int64_t last_ts_ms() const { return events_.empty() ? 0 : events_.back().ts_ms; }

    std::string to_jsonl() const {
        std::ostringstream os;
        for (const auto& ev : events_) os << audit_event_to_json(ev).dump() << '\n';
        return os.str();
    }

    void write_jsonl(const std::string& path) const {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::IoError, "cannot open audit log for writing: " + path);
        f << to_jsonl();
    }

    static AuditLog read_jsonl(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw Error(ErrorCode::IoError, "cannot open audit log: " + path);
        AuditLog log;
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            log.events_.push_back(audit_event_from_json(nlohmann::json::parse(line)));
        }
        return log;
    }

  private:
    std::vector<AuditEvent> events_;
};

}  // namespace gridguard
