#pragma once

#include <map>
#include <string>

#include "gridguard/bytes.hpp"
#include "gridguard/crypto.hpp"
#include "gridguard/errors.hpp"

namespace gridguard {

// Per-tenant payload sealing. Each tenant has its own symmetric key; data
// sealed for one tenant can never be opened as another's, so a compromise in
// one tenant's pipeline cannot expose another tenant's payloads.

class TenantKeystore {
  public:
    void add_tenant(const std::string& tenant_id, const Bytes& key) {
        if (key.size() != crypto::kSealKeyBytes)
            throw Error(ErrorCode::ConfigError, "tenant key must be 32 bytes");
        keys_[tenant_id] = key;
    }

    bool has_tenant(const std::string& tenant_id) const { return keys_.count(tenant_id) > 0; }

    const Bytes& key_for(const std::string& tenant_id) const {
        auto it = keys_.find(tenant_id);
        if (it == keys_.end()) throw Error(ErrorCode::UnknownTenant, tenant_id);
        return it->second;
    }

  private:
    std::map<std::string, Bytes> keys_;
};

// Sealed blob layout: lp(tenant_id) || lp(nonce) || lp(ciphertext).
// The tenant id rides in clear so cross-tenant opens are distinguishable from
// plain corruption; the ciphertext is authenticated, so flipping any byte of
// the blob surfaces as either TenantIsolationError (header) or IntegrityError
// (nonce/ciphertext). The nonce is derived from key and payload, making
// sealing deterministic.
inline Bytes seal_for_tenant(const Bytes& payload, const std::string& tenant_id,
                             const TenantKeystore& ks) {
    const Bytes& key = ks.key_for(tenant_id);
    Bytes nonce = crypto::derive_nonce(key, payload);
    Bytes ct = crypto::secretbox_seal(key, nonce, payload);
    Bytes blob;
    put_lp_string(blob, tenant_id);
    put_lp_bytes(blob, nonce);
    put_lp_bytes(blob, ct);
    return blob;
}

inline Bytes open_for_tenant(const Bytes& blob, const std::string& tenant_id,
                             const TenantKeystore& ks) {
    const Bytes& key = ks.key_for(tenant_id);
    std::string sealed_tenant;
    Bytes nonce, ct;
    try {
        ByteReader r(blob);
        sealed_tenant = r.lp_string();
        nonce = r.lp_bytes();
        ct = r.lp_bytes();
        r.expect_exhausted();
    } catch (const Error&) {
        throw Error(ErrorCode::IntegrityError, "sealed blob is malformed");
    }
    if (sealed_tenant != tenant_id)
        throw Error(ErrorCode::TenantIsolationError,
                    "blob sealed for '" + sealed_tenant + "', open attempted as '" + tenant_id + "'");
    if (nonce.size() != crypto_secretbox_NONCEBYTES)
        throw Error(ErrorCode::IntegrityError, "sealed blob nonce corrupted");
    auto pt = crypto::secretbox_open(key, nonce, ct);
    if (!pt) throw Error(ErrorCode::IntegrityError, "authentication failed");
    return *pt;
}

}  // namespace gridguard
