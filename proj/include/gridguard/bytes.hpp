#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "gridguard/errors.hpp"

namespace gridguard {

using Bytes = std::vector<std::uint8_t>;

// ---------------------------------------------------------------------------
// Canonical binary encoding helpers.
//
// Every structure with a pinned wire form (credentials, batches, artifact
// records) is serialized with these primitives: big-endian fixed-width
// integers, IEEE-754 doubles as their big-endian bit pattern, and strings as
// a u32 big-endian length prefix followed by the raw bytes.
// ---------------------------------------------------------------------------

inline void put_u32be(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u64be(Bytes& out, std::uint64_t v) {
    put_u32be(out, static_cast<std::uint32_t>(v >> 32));
    put_u32be(out, static_cast<std::uint32_t>(v));
}

inline void put_i64be(Bytes& out, std::int64_t v) {
    put_u64be(out, static_cast<std::uint64_t>(v));
}

inline void put_f64be(Bytes& out, double v) {
    put_u64be(out, std::bit_cast<std::uint64_t>(v));
}

inline void put_lp_string(Bytes& out, const std::string& s) {
    put_u32be(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

inline void put_lp_bytes(Bytes& out, const Bytes& b) {
    put_u32be(out, static_cast<std::uint32_t>(b.size()));
    out.insert(out.end(), b.begin(), b.end());
}

// Bounds-checked reader over a byte span. Truncated or oversized fields throw
// ParseError, so corrupted records fail closed instead of reading garbage.
class ByteReader {
  public:
    explicit ByteReader(const Bytes& data) : data_(data) {}

    std::uint32_t u32be() {
        need(4);
        std::uint32_t v = (std::uint32_t{data_[pos_]} << 24) | (std::uint32_t{data_[pos_ + 1]} << 16) |
                          (std::uint32_t{data_[pos_ + 2]} << 8) | std::uint32_t{data_[pos_ + 3]};
        pos_ += 4;
        return v;
    }

    std::uint64_t u64be() {
        std::uint64_t hi = u32be();
        std::uint64_t lo = u32be();
        return (hi << 32) | lo;
    }

    std::int64_t i64be() { return static_cast<std::int64_t>(u64be()); }

    double f64be() { return std::bit_cast<double>(u64be()); }

    std::string lp_string() {
        std::uint32_t n = u32be();
        need(n);
        std::string s(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                      data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return s;
    }

    Bytes lp_bytes() {
        std::uint32_t n = u32be();
        need(n);
        Bytes b(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return b;
    }

    bool exhausted() const { return pos_ == data_.size(); }

    void expect_exhausted() const {
        if (!exhausted()) throw Error(ErrorCode::ParseError, "trailing bytes after record");
    }

  private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw Error(ErrorCode::ParseError, "record truncated");
    }

    const Bytes& data_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Hex / text helpers.
// ---------------------------------------------------------------------------

inline std::string to_hex(const Bytes& b) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(b.size() * 2);
    for (std::uint8_t x : b) {
        s.push_back(digits[x >> 4]);
        s.push_back(digits[x & 0x0f]);
    }
    return s;
}

inline Bytes from_hex(const std::string& s) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (s.size() % 2 != 0) throw Error(ErrorCode::ParseError, "hex string has odd length");
    Bytes out;
    out.reserve(s.size() / 2);
    for (std::size_t i = 0; i < s.size(); i += 2) {
        int hi = nibble(s[i]), lo = nibble(s[i + 1]);
        if (hi < 0 || lo < 0) throw Error(ErrorCode::ParseError, "invalid hex digit");
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

inline Bytes to_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

inline std::string to_string(const Bytes& b) { return std::string(b.begin(), b.end()); }

// Shortest round-trip decimal form of a double; used wherever numbers are
// embedded in textual event details so serialization stays deterministic.
inline std::string fmt_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

// Stable 64-bit FNV-1a hash. Deliberately self-contained: std::hash makes no
// cross-implementation stability promise, and routing decisions must be
// reproducible everywhere.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace gridguard
