#pragma once

#include <string>
#include <vector>

#include "gridguard/audit.hpp"
#include "gridguard/errors.hpp"

namespace gridguard {

// ---------------------------------------------------------------------------
// Unified compliance matrix.
//
// Seven threat-vector rows, each carrying the framework tags (MITRE ATLAS,
// OWASP LLM Top-10 2025, MAESTRO layers, NIST AI RMF functions, NERC CIP
// requirements) that the corresponding runtime control satisfies. Rows 2 and
// 6 describe controls outside this simulator's runtime (retrieval isolation,
// container hardening); they are carried as static mapping rows only.
// ---------------------------------------------------------------------------

struct ComplianceRow {
    int row = 0;
    std::string attack_vector;
    std::vector<std::string> tags;
    std::vector<EventKind> runtime_kinds;  // empty => static mapping only
};

inline const std::vector<ComplianceRow>& compliance_matrix() {
    static const std::vector<ComplianceRow> rows = {
        {1,
         "Data & Model Poisoning (Physics-Aware)",
         {"AML.T0020", "LLM04:2025", "MAESTRO-L2", "NIST-AI-RMF-Map-1.1", "NIST-AI-RMF-Measure-2.6",
          "CIP-005-8-R1", "CIP-011-4.1-R1.2", "CIP-007-7.1-R5", "CIP-015-1"},
         {EventKind::DLQ_ROUTE}},
        {2,
         "RAG & Vector Store Injection",
         {"AML.T0020", "LLM08:2025", "LLM02:2025", "MAESTRO-L2", "MAESTRO-L3", "NIST-AI-RMF-Map-1.1",
          "NIST-AI-RMF-Manage-2.4", "CIP-011-4.1-R1", "CIP-005-8-R1", "CIP-003-10"},
         {}},
        {3,
         "Supply Chain & Registry Tampering",
         {"AML.T0010", "LLM03:2025", "MAESTRO-L3", "MAESTRO-L4", "NIST-AI-RMF-Gov-3.1",
          "NIST-AI-RMF-Manage-1.3", "CIP-010-5-R1.1", "CIP-010-5-R3", "CIP-013-3-R1.2.5",
          "CIP-007-7.1-R2"},
         {EventKind::REGISTRY_PUT}},
        {4,
         "Unbounded Consumption / Sponge Attack",
         {"AML.T0029", "LLM10:2025", "MAESTRO-L4", "MAESTRO-L5", "NIST-AI-RMF-Map-1.5",
          "NIST-AI-RMF-Manage-1.3", "CIP-007-7.1-R5", "CIP-008-7.1-R1/R2", "CIP-009-7.1-R1",
          "CIP-014-3-R1", "CIP-015-1"},
         {EventKind::BREAKER_BREAK, EventKind::BREAKER_ESCALATE}},
        {5,
         "Excessive Agency & Prompt Injection",
         {"AML.T0051", "LLM06:2025", "LLM01:2025", "MAESTRO-L6", "MAESTRO-L7",
          "NIST-AI-RMF-Manage-3.2", "NIST-AI-RMF-Gov-1.2", "CIP-005-8-R1", "CIP-007-7.1-R5",
          "CIP-003-10-R1"},
         {EventKind::SIDECAR_DENY}},
        {6,
         "Container Escape & RCE",
         {"AML.T0029", "LLM05:2025", "MAESTRO-L4", "NIST-AI-RMF-Manage-1.3", "CIP-005-8-R1",
          "CIP-007-7.1-R5", "CIP-010-5-R1", "CIP-015-1"},
         {}},
        {7,
         "Model Drift & Unsafe Output Propagation",
         {"AML.T0020", "AML.T0040", "LLM09:2025", "LLM05:2025", "MAESTRO-L5", "MAESTRO-L1",
          "Measure-2.6", "Manage-2.2", "CIP-010-5-R1.1", "CIP-008-7.1-R1", "CIP-015-1"},
         {EventKind::CANARY_ROLLBACK}},
    };
    return rows;
}

// Tags for the matrix row a given event kind exercises. Operational events
// that are not matrix rows (accept paths, incident-response chain steps,
// correlation signatures) carry the logging / IR requirement they satisfy.
//
// The reason parameter is part of the lookup contract; today every rejection
// reason handled by a control maps to that control's single matrix row, so
// only the kind selects the list.
inline std::vector<std::string> compliance_map(EventKind kind, const std::string& reason = "") {
    (void)reason;
    const auto& m = compliance_matrix();
    switch (kind) {
        case EventKind::DLQ_ROUTE: return m[0].tags;
        case EventKind::REGISTRY_PUT: return m[2].tags;
        case EventKind::BREAKER_BREAK:
        case EventKind::BREAKER_ESCALATE: return m[3].tags;
        case EventKind::SIDECAR_DENY: return m[4].tags;
        case EventKind::CANARY_ROLLBACK: return m[6].tags;
        case EventKind::INGEST_OK: return {"CIP-007-7.1-R5"};
        case EventKind::SIDECAR_ALLOW: return {"CIP-007-7.1-R5"};
        case EventKind::GATE_FAIL:
            return {"LLM04:2025", "MAESTRO-L1", "MAESTRO-L3", "MAESTRO-L5",
                    "NIST-AI-RMF-Measure-2.5", "NIST-AI-RMF-Measure-2.6", "CIP-010-5-R1"};
        case EventKind::IR_PLAN_INVOKED: return {"CIP-008-7.1-R1"};
        case EventKind::EISAC_NOTIFIED: return {"CIP-008-7.1-R2"};
        case EventKind::RECOVERY_DOCUMENTED: return {"CIP-009-7.1-R1"};
        case EventKind::MULTI_VECTOR_SIGNATURE: return {"MAESTRO-L5", "CIP-015-1"};
    }
    throw Error(ErrorCode::UnknownEventKind, "unmapped event kind value");
}

inline std::vector<std::string> compliance_map(const std::string& kind_name,
                                               const std::string& reason = "") {
    return compliance_map(event_kind_from_name(kind_name), reason);
}

// Convenience constructor: an event stamped with the tags the matrix requires.
inline AuditEvent make_event(std::int64_t ts_ms, EventKind kind,
                             std::map<std::string, std::string> detail,
                             const std::string& reason = "") {
    AuditEvent ev;
    ev.ts_ms = ts_ms;
    ev.event_kind = kind;
    ev.control_id = control_id_for(kind);
    ev.detail = std::move(detail);
    ev.framework_tags = compliance_map(kind, reason);
    return ev;
}

}  // namespace gridguard
