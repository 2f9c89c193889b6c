#pragma once

#include <sodium.h>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridguard/bytes.hpp"
#include "gridguard/errors.hpp"

// Thin wrappers around libsodium. The library supplies the standard
// primitives (SHA-256, HMAC-SHA256, Ed25519, XSalsa20-Poly1305); everything
// domain-specific -- canonical serializations, the Feistel tokenizer, policy
// logic -- is built in this repository on top of these calls.

namespace gridguard::crypto {

inline void ensure_init() {
    static const bool ok = [] { return sodium_init() >= 0; }();
    if (!ok) throw Error(ErrorCode::ConfigError, "libsodium initialization failed");
}

// --- Hashing -----------------------------------------------------------

inline Bytes sha256(const Bytes& data) {
    ensure_init();
    Bytes out(crypto_hash_sha256_BYTES);
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

inline std::string sha256_hex(const Bytes& data) { return to_hex(sha256(data)); }

// HMAC-SHA256 with an arbitrary-length key.
inline Bytes hmac_sha256(const Bytes& key, const Bytes& msg) {
    ensure_init();
    crypto_auth_hmacsha256_state st;
    crypto_auth_hmacsha256_init(&st, key.data(), key.size());
    crypto_auth_hmacsha256_update(&st, msg.data(), msg.size());
    Bytes out(crypto_auth_hmacsha256_BYTES);
    crypto_auth_hmacsha256_final(&st, out.data());
    return out;
}

// --- Signatures (Ed25519, deterministic per RFC 8032) ------------------

constexpr std::size_t kSeedBytes = 32;      // crypto_sign_SEEDBYTES
constexpr std::size_t kPublicKeyBytes = 32; // crypto_sign_PUBLICKEYBYTES
constexpr std::size_t kSignatureBytes = 64; // crypto_sign_BYTES

struct SigningKeypair {
    Bytes public_key;  // 32 bytes
    Bytes secret_key;  // 64 bytes
};

inline SigningKeypair keypair_from_seed(const Bytes& seed) {
    ensure_init();
    if (seed.size() != kSeedBytes)
        throw Error(ErrorCode::ConfigError, "signing seed must be 32 bytes");
    SigningKeypair kp;
    kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
}

inline Bytes sign_detached(const Bytes& msg, const Bytes& secret_key) {
    ensure_init();
    if (secret_key.size() != crypto_sign_SECRETKEYBYTES)
        throw Error(ErrorCode::ConfigError, "secret key must be 64 bytes");
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(), secret_key.data());
    return sig;
}

inline bool verify_detached(const Bytes& msg, const Bytes& sig, const Bytes& public_key) {
    ensure_init();
    if (sig.size() != crypto_sign_BYTES || public_key.size() != crypto_sign_PUBLICKEYBYTES) return false;
    return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(), public_key.data()) == 0;
}

// --- Authenticated encryption (XSalsa20-Poly1305) ----------------------
//
// The nonce is derived from the key and payload (SIV style) so sealing is
// deterministic; the simulator requires byte-identical outputs for identical
// inputs.

constexpr std::size_t kSealKeyBytes = 32;  // crypto_secretbox_KEYBYTES

inline Bytes derive_nonce(const Bytes& key, const Bytes& payload) {
    Bytes domain = to_bytes("seal-nonce:");
    Bytes msg = domain;
    msg.insert(msg.end(), payload.begin(), payload.end());
    Bytes mac = hmac_sha256(key, msg);
    mac.resize(crypto_secretbox_NONCEBYTES);
    return mac;
}

inline Bytes secretbox_seal(const Bytes& key, const Bytes& nonce, const Bytes& plaintext) {
    ensure_init();
    if (key.size() != crypto_secretbox_KEYBYTES)
        throw Error(ErrorCode::ConfigError, "sealing key must be 32 bytes");
    Bytes ct(plaintext.size() + crypto_secretbox_MACBYTES);
    crypto_secretbox_easy(ct.data(), plaintext.data(), plaintext.size(), nonce.data(), key.data());
    return ct;
}

inline std::optional<Bytes> secretbox_open(const Bytes& key, const Bytes& nonce, const Bytes& ciphertext) {
    ensure_init();
    if (key.size() != crypto_secretbox_KEYBYTES || ciphertext.size() < crypto_secretbox_MACBYTES)
        return std::nullopt;
    Bytes pt(ciphertext.size() - crypto_secretbox_MACBYTES);
    if (crypto_secretbox_open_easy(pt.data(), ciphertext.data(), ciphertext.size(), nonce.data(),
                                   key.data()) != 0)
        return std::nullopt;
    return pt;
}

// --- Base64 (for embedding binary fields in JSON) ----------------------

inline std::string base64_encode(const Bytes& data) {
    ensure_init();
    std::string out(sodium_base64_ENCODED_LEN(data.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
    sodium_bin2base64(out.data(), out.size(), data.data(), data.size(), sodium_base64_VARIANT_ORIGINAL);
    out.resize(out.find('\0') == std::string::npos ? out.size() : out.find('\0'));
    return out;
}

inline std::optional<Bytes> base64_decode(const std::string& text) {
    ensure_init();
    Bytes out(text.size());
    std::size_t len = 0;
    if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, nullptr,
                          sodium_base64_VARIANT_ORIGINAL) != 0)
        return std::nullopt;
    out.resize(len);
    return out;
}

}  // namespace gridguard::crypto
