#pragma once

#include <cstdint>
#include <string>

#include "gridguard/bytes.hpp"
#include "gridguard/crypto.hpp"
#include "gridguard/errors.hpp"

namespace gridguard {

// ---------------------------------------------------------------------------
// Format-preserving tokenization of decimal digit strings.
//
// Construction: 8-round balanced Feistel over digit vectors. The combining
// step is componentwise addition mod 10, which is invertible for any round
// function, so the cipher is a bijection over the n-digit domain without any
// big-integer arithmetic. The round function is HMAC-SHA256 over a
// domain-separated message, expanded to digits.
//
// Odd lengths are handled by cycle-walking: the input is lifted into the
// (n+1)-digit domain with a leading zero, the even-length permutation is
// applied repeatedly until the result lands back in the leading-zero coset,
// and the leading zero is stripped. The first-return map of a permutation is
// itself a permutation, so bijectivity is preserved.
//
// This is a deliberately compact stand-in for a standardized FPE mode; the
// interface (digit strings in, digit strings out, exact inverse) is what the
// ingestion pipeline relies on.
// ---------------------------------------------------------------------------

namespace detail_fpe {

constexpr int kRounds = 8;
constexpr std::size_t kMaxLen = 64;

inline void check_digits(const std::string& s) {
    if (s.empty()) throw Error(ErrorCode::AlphabetError, "empty input");
    if (s.size() > kMaxLen) throw Error(ErrorCode::AlphabetError, "input longer than 64 digits");
    for (char c : s)
        if (c < '0' || c > '9') throw Error(ErrorCode::AlphabetError, "non-digit character");
}

// Round function: half_len pseudo-random digits bound to (domain length,
// round index, opposite half).
inline std::string round_digits(const Bytes& key, std::size_t domain_len, int round,
                                const std::string& other_half) {
    Bytes msg = to_bytes("fpe-round:");
    put_u32be(msg, static_cast<std::uint32_t>(domain_len));
    put_u32be(msg, static_cast<std::uint32_t>(round));
    put_u32be(msg, static_cast<std::uint32_t>(other_half.size()));
    Bytes half_bytes = to_bytes(other_half);
    msg.insert(msg.end(), half_bytes.begin(), half_bytes.end());
    Bytes mac = crypto::hmac_sha256(key, msg);  // 32 bytes >= 32 digits; halves are <= 32
    std::string digits(other_half.size(), '0');
    for (std::size_t i = 0; i < digits.size(); ++i)
        digits[i] = static_cast<char>('0' + mac[i] % 10);
    return digits;
}

inline std::string add_mod10(const std::string& a, const std::string& b) {
    std::string out(a.size(), '0');
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = static_cast<char>('0' + ((a[i] - '0') + (b[i] - '0')) % 10);
    return out;
}

inline std::string sub_mod10(const std::string& a, const std::string& b) {
    std::string out(a.size(), '0');
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = static_cast<char>('0' + ((a[i] - '0') - (b[i] - '0') + 10) % 10);
    return out;
}

// One full forward pass of the balanced Feistel network (even-length input).
inline std::string feistel_forward(const std::string& s, const Bytes& key) {
    const std::size_t half = s.size() / 2;
    std::string left = s.substr(0, half);
    std::string right = s.substr(half);
    for (int r = 0; r < kRounds; ++r) {
        std::string f = round_digits(key, s.size(), r, right);
        std::string new_right = add_mod10(left, f);
        left = std::move(right);
        right = std::move(new_right);
    }
    return left + right;
}

inline std::string feistel_backward(const std::string& s, const Bytes& key) {
    const std::size_t half = s.size() / 2;
    std::string left = s.substr(0, half);
    std::string right = s.substr(half);
    for (int r = kRounds - 1; r >= 0; --r) {
        std::string f = round_digits(key, s.size(), r, left);
        std::string prev_left = sub_mod10(right, f);
        right = std::move(left);
        left = std::move(prev_left);
    }
    return left + right;
}

template <typename Perm>
inline std::string cycle_walk(std::string lifted, Perm perm) {
    // Expected ~10 applications (P[leading digit = 0] = 1/10); the guard is
    // purely defensive.
    for (long guard = 0; guard < 100000000L; ++guard) {
        lifted = perm(lifted);
        if (lifted.front() == '0') return lifted;
    }
    throw Error(ErrorCode::ConfigError, "cycle walk failed to terminate");
}

}  // namespace detail_fpe

inline std::string tokenize_field(const std::string& plaintext, const Bytes& key) {
    detail_fpe::check_digits(plaintext);
    if (plaintext.size() % 2 == 0) return detail_fpe::feistel_forward(plaintext, key);
    std::string lifted = detail_fpe::cycle_walk(
        "0" + plaintext, [&](const std::string& s) { return detail_fpe::feistel_forward(s, key); });
    return lifted.substr(1);
}

inline std::string detokenize_field(const std::string& token, const Bytes& key) {
    detail_fpe::check_digits(token);
    if (token.size() % 2 == 0) return detail_fpe::feistel_backward(token, key);
    std::string lifted = detail_fpe::cycle_walk(
        "0" + token, [&](const std::string& s) { return detail_fpe::feistel_backward(s, key); });
    return lifted.substr(1);
}

}  // namespace gridguard
