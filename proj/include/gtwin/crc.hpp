#pragma once

// CRCs used by the Gen2-style inventory framing.
//
//   crc5 : poly x^5 + x^3 + 1, preset 0b01001, MSB-first, no output complement
//   crc16: poly x^16 + x^12 + x^5 + 1, preset 0xFFFF, MSB-first, complemented output
//
// Both run in the "direct" (non-augmented) register form: no zero bits are
// appended to the message; the feedback tap applies as each message bit enters
// the register. crc16 ships two independent routes, bit-serial and
// table-driven, which must agree bit for bit (tested against each other and
// against a long-division oracle that lives only in the tests).

#include <array>
#include <cstdint>

#include "gtwin/bits.hpp"

namespace gtwin {

inline constexpr std::uint8_t kCrc5Poly = 0x09;
inline constexpr std::uint8_t kCrc5Preset = 0x09;
inline constexpr std::uint16_t kCrc16Poly = 0x1021;
inline constexpr std::uint16_t kCrc16Preset = 0xFFFF;

// crc16(m ‖ crc16(m)) for any m; fixed by the polynomial/preset family
inline constexpr std::uint16_t kCrc16Residue = 0xE2F0;

inline std::uint8_t crc5(const BitSeq& bits) {
    std::uint8_t reg = kCrc5Preset;
    for (std::uint8_t b : bits) {
        std::uint8_t fb = static_cast<std::uint8_t>(((reg >> 4) & 1u) ^ b);
        reg = static_cast<std::uint8_t>((reg << 1) & 0x1Fu);
        if (fb) reg ^= kCrc5Poly;
    }
    return reg;
}

namespace detail {

inline std::uint16_t crc16_shift_bit(std::uint16_t reg, std::uint8_t bit) {
    std::uint16_t fb = static_cast<std::uint16_t>(((reg >> 15) & 1u) ^ bit);
    reg = static_cast<std::uint16_t>(reg << 1);
    if (fb) reg ^= kCrc16Poly;
    return reg;
}

constexpr std::array<std::uint16_t, 256> make_crc16_table() {
    std::array<std::uint16_t, 256> t{};
    for (unsigned byte = 0; byte < 256; ++byte) {
        std::uint16_t reg = static_cast<std::uint16_t>(byte << 8);
        for (int i = 0; i < 8; ++i) {
            bool msb = (reg & 0x8000u) != 0;
            reg = static_cast<std::uint16_t>(reg << 1);
            if (msb) reg ^= kCrc16Poly;
        }
        t[byte] = reg;
    }
    return t;
}

inline constexpr auto kCrc16Table = make_crc16_table();

}  // namespace detail

// bit-serial route
inline std::uint16_t crc16(const BitSeq& bits) {
    std::uint16_t reg = kCrc16Preset;
    for (std::uint8_t b : bits) reg = detail::crc16_shift_bit(reg, b);
    return static_cast<std::uint16_t>(~reg);
}

// table-driven route; the leading (len mod 8) bits go through the serial
// register, the remainder bytewise
inline std::uint16_t crc16_table(const BitSeq& bits) {
    std::uint16_t reg = kCrc16Preset;
    std::size_t head = bits.size() % 8;
    for (std::size_t i = 0; i < head; ++i)
        reg = detail::crc16_shift_bit(reg, bits[i]);
    for (std::size_t i = head; i < bits.size(); i += 8) {
        unsigned byte = 0;
        for (int j = 0; j < 8; ++j) byte = (byte << 1) | bits[i + static_cast<std::size_t>(j)];
        reg = static_cast<std::uint16_t>(
            (reg << 8) ^ detail::kCrc16Table[((reg >> 8) ^ byte) & 0xFFu]);
    }
    return static_cast<std::uint16_t>(~reg);
}

}  // namespace gtwin
