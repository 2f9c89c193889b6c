#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include "gridguard/bytes.hpp"
#include "gridguard/crypto.hpp"

namespace gridguard {

// ---------------------------------------------------------------------------
// Workload identity: short-lived signed credentials for field devices and
// services, plus a revocation list. Credentials and revocation lists are
// immutable values -- revoke() returns a new list -- so they are safe to
// share read-only across concurrent verifiers.
// ---------------------------------------------------------------------------

struct WorkloadCredential {
    std::string subject_id;
    std::string tenant_id;
    std::int64_t issued_at = 0;   // epoch ms, inclusive
    std::int64_t expires_at = 0;  // epoch ms, exclusive
    Bytes signature;              // Ed25519 over the canonical payload

    // Canonical payload: fields in declaration order, strings length-prefixed
    // (u32 big-endian), timestamps as 8-byte big-endian. This form is what the
    // trust root signs, so it must never change shape.
    Bytes canonical_payload() const {
        Bytes out;
        put_lp_string(out, subject_id);
        put_lp_string(out, tenant_id);
        put_i64be(out, issued_at);
        put_i64be(out, expires_at);
        return out;
    }

    Bytes to_bytes() const {
        Bytes out = canonical_payload();
        put_lp_bytes(out, signature);
        return out;
    }

    std::string to_base64() const { return crypto::base64_encode(to_bytes()); }

    static std::optional<WorkloadCredential> from_bytes(const Bytes& data) {
        try {
            ByteReader r(data);
            WorkloadCredential c;
            c.subject_id = r.lp_string();
            c.tenant_id = r.lp_string();
            c.issued_at = r.i64be();
            c.expires_at = r.i64be();
            c.signature = r.lp_bytes();
            r.expect_exhausted();
            return c;
        } catch (const Error&) {
            return std::nullopt;
        }
    }

    static std::optional<WorkloadCredential> from_base64(const std::string& text) {
        auto raw = crypto::base64_decode(text);
        if (!raw) return std::nullopt;
        return from_bytes(*raw);
    }
};

struct RevocationList {
    std::set<std::string> revoked_subjects;
    std::int64_t as_of = 0;

    bool contains(const std::string& subject_id) const {
        return revoked_subjects.count(subject_id) > 0;
    }
};

enum class CredentialVerdict { Valid, Expired, Revoked, BadSignature };

inline const char* credential_verdict_name(CredentialVerdict v) {
    switch (v) {
        case CredentialVerdict::Valid: return "Valid";
        case CredentialVerdict::Expired: return "Expired";
        case CredentialVerdict::Revoked: return "Revoked";
        case CredentialVerdict::BadSignature: return "BadSignature";
    }
    return "Unknown";
}

inline WorkloadCredential issue_credential(const std::string& subject_id,
                                           const std::string& tenant_id, std::int64_t now,
                                           std::int64_t validity_ms,
                                           const Bytes& trust_root_secret_key) {
    if (validity_ms <= 0) throw Error(ErrorCode::ConfigError, "credential validity must be positive");
    WorkloadCredential c;
    c.subject_id = subject_id;
    c.tenant_id = tenant_id;
    c.issued_at = now;
    c.expires_at = now + validity_ms;
    c.signature = crypto::sign_detached(c.canonical_payload(), trust_root_secret_key);
    return c;
}

// Failure precedence: BadSignature > Revoked > Expired. A credential outside
// its validity window reports Expired; half-open window [issued_at,
// expires_at) means a credential is valid at issuance and dead exactly at
// expiry. Time-travel cases (now < issued_at) also report Expired, the only
// time-bucket verdict.
inline CredentialVerdict verify_credential(const WorkloadCredential& cred,
                                           const Bytes& trust_root_public_key, std::int64_t now,
                                           const RevocationList& rl) {
    if (!crypto::verify_detached(cred.canonical_payload(), cred.signature, trust_root_public_key))
        return CredentialVerdict::BadSignature;
    if (rl.contains(cred.subject_id)) return CredentialVerdict::Revoked;
    if (now < cred.issued_at || now >= cred.expires_at) return CredentialVerdict::Expired;
    return CredentialVerdict::Valid;
}

// Verify a credential delivered as raw bytes; malformed payloads are treated
// as unsigned, i.e. BadSignature.
inline CredentialVerdict verify_credential_bytes(const Bytes& data,
                                                 const Bytes& trust_root_public_key,
                                                 std::int64_t now, const RevocationList& rl) {
    auto cred = WorkloadCredential::from_bytes(data);
    if (!cred) return CredentialVerdict::BadSignature;
    return verify_credential(*cred, trust_root_public_key, now, rl);
}

inline RevocationList revoke(const RevocationList& rl, const std::string& subject_id,
                             std::int64_t now) {
    RevocationList out = rl;
    out.revoked_subjects.insert(subject_id);  // idempotent
    out.as_of = now;
    return out;
}

}  // namespace gridguard
