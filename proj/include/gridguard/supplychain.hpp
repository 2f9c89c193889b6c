#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "gridguard/audit.hpp"
#include "gridguard/bytes.hpp"
#include "gridguard/compliance.hpp"
#include "gridguard/crypto.hpp"
#include "gridguard/errors.hpp"

namespace gridguard {

// ---------------------------------------------------------------------------
// Model supply chain: artifact digesting and signing, a write-once
// content-addressed registry with provenance metadata, and the adversarial
// robustness gate used in CI.
// ---------------------------------------------------------------------------

struct ModelArtifact {
    Bytes content;
    std::map<std::string, std::string> manifest;  // must include model_name, version
    std::int64_t created_at = 0;                  // epoch ms

    void validate() const {
        if (content.empty()) throw Error(ErrorCode::InvalidArtifact, "artifact content is empty");
        if (!manifest.count("model_name") || !manifest.count("version"))
            throw Error(ErrorCode::InvalidArtifact, "manifest must include model_name and version");
        for (const auto& [k, v] : manifest) {
            if (k.empty() || k.find('=') != std::string::npos || k.find('\n') != std::string::npos)
                throw Error(ErrorCode::InvalidArtifact, "manifest key unrepresentable in canonical form");
            if (v.find('\n') != std::string::npos)
                throw Error(ErrorCode::InvalidArtifact, "manifest value unrepresentable in canonical form");
        }
    }

    // Canonical digest input: content length-prefixed (u64 big-endian), then
    // manifest keys sorted lexicographically as "key=value\n" lines, then
    // created_at as 8 big-endian bytes. Any implementation following this
    // recipe computes the same digest.
    Bytes canonical_digest_input() const {
        Bytes out;
        put_u64be(out, content.size());
        out.insert(out.end(), content.begin(), content.end());
        for (const auto& [k, v] : manifest) {  // std::map iterates in sorted key order
            std::string line = k + "=" + v + "\n";
            out.insert(out.end(), line.begin(), line.end());
        }
        put_i64be(out, created_at);
        return out;
    }
};

inline std::string artifact_digest(const ModelArtifact& a) {
    a.validate();
    return crypto::sha256_hex(a.canonical_digest_input());
}

struct Provenance {
    std::string signer_id;
    std::int64_t signed_at = 0;
    std::string ci_run_id;
};

struct SignedArtifact {
    ModelArtifact artifact;
    std::string digest;  // hex SHA-256 of the canonical serialization
    Bytes signature;     // Ed25519 over the digest hex bytes
    Provenance provenance;

    // Full record form stored by the registry. Every field participates, so
    // any byte-level tampering of a stored record is detectable.
    Bytes to_bytes() const {
        Bytes out;
        put_lp_bytes(out, artifact.content);
        put_u32be(out, static_cast<std::uint32_t>(artifact.manifest.size()));
        for (const auto& [k, v] : artifact.manifest) {
            put_lp_string(out, k);
            put_lp_string(out, v);
        }
        put_i64be(out, artifact.created_at);
        put_lp_string(out, digest);
        put_lp_bytes(out, signature);
        put_lp_string(out, provenance.signer_id);
        put_i64be(out, provenance.signed_at);
        put_lp_string(out, provenance.ci_run_id);
        return out;
    }

    static SignedArtifact from_bytes(const Bytes& data) {
        ByteReader r(data);
        SignedArtifact sa;
        sa.artifact.content = r.lp_bytes();
        std::uint32_t n = r.u32be();
        for (std::uint32_t i = 0; i < n; ++i) {
            std::string k = r.lp_string();
            std::string v = r.lp_string();
            sa.artifact.manifest[k] = v;
        }
        if (sa.artifact.manifest.size() != n)
            throw Error(ErrorCode::ParseError, "duplicate manifest key in record");
        sa.artifact.created_at = r.i64be();
        sa.digest = r.lp_string();
        sa.signature = r.lp_bytes();
        sa.provenance.signer_id = r.lp_string();
        sa.provenance.signed_at = r.i64be();
        sa.provenance.ci_run_id = r.lp_string();
        r.expect_exhausted();
        return sa;
    }
};

inline SignedArtifact sign_artifact(const ModelArtifact& a, const Bytes& signer_secret_key,
                                    const std::string& signer_id, const std::string& ci_run_id,
                                    std::int64_t now) {
    SignedArtifact sa;
    sa.artifact = a;
    sa.digest = artifact_digest(a);
    sa.signature = crypto::sign_detached(to_bytes(sa.digest), signer_secret_key);
    sa.provenance = {signer_id, now, ci_run_id};
    return sa;
}

inline bool verify_artifact(const SignedArtifact& sa, const Bytes& signer_public_key) {
    try {
        if (artifact_digest(sa.artifact) != sa.digest) return false;
    } catch (const Error&) {
        return false;
    }
    return crypto::verify_detached(to_bytes(sa.digest), sa.signature, signer_public_key);
}

// --- JSON form (CLI interchange) ----------------------------------------

inline nlohmann::ordered_json signed_artifact_to_json(const SignedArtifact& sa) {
    nlohmann::ordered_json j;
    j["content_b64"] = crypto::base64_encode(sa.artifact.content);
    j["manifest"] = sa.artifact.manifest;
    j["created_at_ms"] = sa.artifact.created_at;
    j["digest"] = sa.digest;
    j["signature_b64"] = crypto::base64_encode(sa.signature);
    j["provenance"] = {{"signer_id", sa.provenance.signer_id},
                       {"signed_at_ms", sa.provenance.signed_at},
                       {"ci_run_id", sa.provenance.ci_run_id}};
    return j;
}

inline SignedArtifact signed_artifact_from_json(const nlohmann::json& j) {
    SignedArtifact sa;
    auto content = crypto::base64_decode(j.at("content_b64").get<std::string>());
    if (!content) throw Error(ErrorCode::ParseError, "content_b64 is not valid base64");
    sa.artifact.content = *content;
    for (const auto& [k, v] : j.at("manifest").items()) sa.artifact.manifest[k] = v.get<std::string>();
    sa.artifact.created_at = j.at("created_at_ms").get<std::int64_t>();
    sa.digest = j.at("digest").get<std::string>();
    auto sig = crypto::base64_decode(j.at("signature_b64").get<std::string>());
    if (!sig) throw Error(ErrorCode::ParseError, "signature_b64 is not valid base64");
    sa.signature = *sig;
    const auto& p = j.at("provenance");
    sa.provenance.signer_id = p.at("signer_id").get<std::string>();
    sa.provenance.signed_at = p.at("signed_at_ms").get<std::int64_t>();
    sa.provenance.ci_run_id = p.at("ci_run_id").get<std::string>();
    return sa;
}

// --- Write-once registry -------------------------------------------------
//
// Content-addressed directory: one file per digest holding the canonical
// record, plus an append-only JSONL provenance log. put() re-verifies the
// record (digest recomputation + signature) before anything touches disk, so
// a record whose embedded digest does not match its own content can never be
// stored. First creation uses O_CREAT|O_EXCL, so under concurrent conflicting
// puts exactly one writer wins; every other writer observes the stored bytes
// and gets idempotent success or ImmutableViolation.

struct PutReceipt {
    std::string digest;
    std::int64_t stored_at = 0;
    bool already_present = false;
};

class Registry {
  public:
    Registry(std::filesystem::path dir, Bytes trusted_signer_public_key)
        : dir_(std::move(dir)), signer_pub_(std::move(trusted_signer_public_key)) {
        std::filesystem::create_directories(dir_ / "objects");
    }

    PutReceipt put(const SignedArtifact& sa, std::int64_t now, AuditLog* log = nullptr) {
        if (!verify_artifact(sa, signer_pub_))
            throw Error(ErrorCode::UnverifiableArtifact, "artifact failed re-verification");
        if (!is_hex_digest(sa.digest))
            throw Error(ErrorCode::UnverifiableArtifact, "digest is not a 64-char hex string");

        Bytes record = sa.to_bytes();
        std::filesystem::path path = object_path(sa.digest);

        int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
        if (fd >= 0) {
            ssize_t n = ::write(fd, record.data(), record.size());
            ::close(fd);
            if (n != static_cast<ssize_t>(record.size()))
                throw Error(ErrorCode::IoError, "short write to registry object");
            append_provenance(sa);
            if (log)
                log->append(make_event(now, EventKind::REGISTRY_PUT,
                                       {{"digest", sa.digest},
                                        {"signer_id", sa.provenance.signer_id},
                                        {"ci_run_id", sa.provenance.ci_run_id}}));
            return {sa.digest, now, false};
        }

        // Object exists (or raced): byte-identical re-put is idempotent
        // success, anything else violates write-once.
        Bytes existing = read_object(sa.digest);
        if (existing == record) return {sa.digest, now, true};
        throw Error(ErrorCode::ImmutableViolation,
                    "digest " + sa.digest + " already stored with different bytes");
    }

    SignedArtifact get(const std::string& digest) const {
        return SignedArtifact::from_bytes(read_object(digest));
    }

    Bytes read_object(const std::string& digest) const {
        if (!is_hex_digest(digest)) throw Error(ErrorCode::NotFound, digest);
        std::ifstream f(object_path(digest), std::ios::binary);
        if (!f) throw Error(ErrorCode::NotFound, digest);
        return Bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    }

    std::filesystem::path provenance_log_path() const { return dir_ / "provenance.jsonl"; }

  private:
    static bool is_hex_digest(const std::string& d) {
        if (d.size() != 64) return false;
        for (char c : d)
            if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
        return true;
    }

    std::filesystem::path object_path(const std::string& digest) const {
        return dir_ / "objects" / digest;
    }

    void append_provenance(const SignedArtifact& sa) {
        nlohmann::ordered_json j;
        j["digest"] = sa.digest;
        j["signer_id"] = sa.provenance.signer_id;
        j["signed_at"] = sa.provenance.signed_at;
        j["ci_run_id"] = sa.provenance.ci_run_id;
        std::ofstream f(provenance_log_path(), std::ios::binary | std::ios::app);
        if (!f) throw Error(ErrorCode::IoError, "cannot open provenance log");
        f << j.dump() << '\n';
    }

    std::filesystem::path dir_;
    Bytes signer_pub_;
};

// --- Adversarial robustness evaluation ------------------------------------

struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;

    // Decision rule: sign(w . x + b), with sign(0) = +1.
    int predict(const std::vector<double>& x) const {
        if (x.size() != weights.size())
            throw Error(ErrorCode::DimensionMismatch, "sample/model dimension mismatch");
        double s = bias;
        for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * x[i];
        return s >= 0.0 ? 1 : -1;
    }
};

struct LabeledSample {
    std::vector<double> x;
    int label = 1;  // +1 or -1
};

struct RobustnessReport {
    double clean_accuracy = 0.0;
    double robust_accuracy = 0.0;
    double epsilon = 0.0;
};

// Worst-case L-infinity perturbation of a linear classifier: step against the
// label along sign(w). Zero weights leave their component untouched.
inline std::vector<double> fgsm_perturb(const std::vector<double>& x, const LinearModel& model,
                                        int label, double epsilon) {
    if (x.size() != model.weights.size())
        throw Error(ErrorCode::DimensionMismatch, "sample/model dimension mismatch");
    if (!(epsilon >= 0)) throw Error(ErrorCode::ConfigError, "epsilon must be >= 0");
    std::vector<double> out(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double w = model.weights[i];
        if (w == 0.0) continue;
        double sgn = w > 0.0 ? 1.0 : -1.0;
        out[i] -= epsilon * static_cast<double>(label) * sgn;
    }
    return out;
}

inline RobustnessReport evaluate_robustness(const LinearModel& model,
                                            const std::vector<LabeledSample>& dataset,
                                            double epsilon) {
    if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "robustness dataset is empty");
    std::size_t clean = 0, robust = 0;
    for (const auto& s : dataset) {
        if (model.predict(s.x) == s.label) ++clean;
        if (model.predict(fgsm_perturb(s.x, model, s.label, epsilon)) == s.label) ++robust;
    }
    double n = static_cast<double>(dataset.size());
    return {static_cast<double>(clean) / n, static_cast<double>(robust) / n, epsilon};
}

// --- CI gate ---------------------------------------------------------------
//
// A candidate that buys accuracy with robustness fails automatically: Fail
// iff candidate.clean > baseline.clean AND candidate.robust < baseline.robust.
// An optional absolute floor (min_robust, default 0 = disabled) additionally
// rejects candidates below a minimum robust accuracy regardless of baseline.

struct GateResult {
    bool pass = true;
    std::string reason;  // empty on pass
};

inline GateResult robustness_gate(const RobustnessReport& candidate,
                                  const RobustnessReport& baseline, double min_robust = 0.0) {
    if (candidate.epsilon != baseline.epsilon)
        throw Error(ErrorCode::ConfigError, "reports evaluated at different epsilon");
    if (candidate.clean_accuracy > baseline.clean_accuracy &&
        candidate.robust_accuracy < baseline.robust_accuracy)
        return {false, "accuracy-robustness tradeoff"};
    if (candidate.robust_accuracy < min_robust) return {false, "robust floor"};
    return {true, ""};
}

}  // namespace gridguard
