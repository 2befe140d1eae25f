#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gtwin/errors.hpp"

namespace gtwin {

// Protocol framing works on explicit bit sequences, one bit per element, in
// transmission order. Every multi-bit field is MSB-first; this is the single
// place that convention is defined.
using BitSeq = std::vector<std::uint8_t>;

inline void append_bits(BitSeq& bits, std::uint64_t value, int width) {
    for (int i = width - 1; i >= 0; --i)
        bits.push_back(static_cast<std::uint8_t>((value >> i) & 1u));
}

// caller guarantees pos + width <= bits.size()
inline std::uint64_t read_bits(const BitSeq& bits, std::size_t pos, int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i)
        v = (v << 1) | bits[pos + static_cast<std::size_t>(i)];
    return v;
}

// reinterpret the low `width` bits as two's complement
inline std::int32_t sign_extend(std::uint64_t value, int width) {
    std::uint64_t sign = 1ULL << (width - 1);
    return static_cast<std::int32_t>((value ^ sign) - sign);
}

// hex rendering, MSB-first; a tail shorter than a nibble is zero-padded on the right
inline std::string to_hex(const BitSeq& bits) {
    static const char* digits = "0123456789ABCDEF";
    std::string out;
    for (std::size_t i = 0; i < bits.size(); i += 4) {
        unsigned nib = 0;
        for (std::size_t j = 0; j < 4; ++j)
            nib = (nib << 1) | (i + j < bits.size() ? bits[i + j] : 0u);
        out.push_back(digits[nib]);
    }
    return out;
}

// token format used by the vectors file: "<nbits>:<hex>"
inline std::string bits_token(const BitSeq& bits) {
    return std::to_string(bits.size()) + ":" + to_hex(bits);
}

inline BitSeq parse_bits_token(std::string_view tok) {
    auto colon = tok.find(':');
    if (colon == std::string_view::npos)
        throw MalformedPayload("bits token missing ':'");
    std::size_t nbits = 0;
    for (char c : tok.substr(0, colon)) {
        if (c < '0' || c > '9') throw MalformedPayload("bad bit count in bits token");
        nbits = nbits * 10 + static_cast<std::size_t>(c - '0');
    }
    std::string_view hex = tok.substr(colon + 1);
    if (hex.size() * 4 < nbits)
        throw MalformedPayload("bits token shorter than declared length");
    BitSeq bits;
    bits.reserve(nbits);
    for (std::size_t i = 0; i < nbits; ++i) {
        char c = hex[i / 4];
        unsigned nib;
        if (c >= '0' && c <= '9') nib = static_cast<unsigned>(c - '0');
        else if (c >= 'A' && c <= 'F') nib = static_cast<unsigned>(c - 'A') + 10;
        else if (c >= 'a' && c <= 'f') nib = static_cast<unsigned>(c - 'a') + 10;
        else throw MalformedPayload("bad hex digit in bits token");
        bits.push_back(static_cast<std::uint8_t>((nib >> (3 - i % 4)) & 1u));
    }
    return bits;
}

}  // namespace gtwin
