#pragma once

// Gen2-style inventory framing: reader commands (Query / QueryRep / Ack), tag
// replies (RN16 / EPC block), and the sensor-payload-in-EPC layout.
//
// Frame layouts (bit counts, MSB-first):
//   Query    = 1000 | DR(1) | M(2) | TRext(1) | Sel(2) | Session(2) | Target(1) | Q(4) | CRC5(5)  -> 22
//   QueryRep = 00 | Session(2)                                                                     -> 4
//   Ack      = 01 | RN16(16)                                                                       -> 18
//   Rn16     = RN16(16)                                                                            -> 16
//   EpcBlock = PC(16) | EPC(16 x words) | CRC16(16) over PC‖EPC                                    -> 128 for 6 words
//
// Decoders parse the declared frame from the start of the sequence and ignore
// any trailing bits; a reply sequence shorter than 32 bits is dispatched as an
// RN16 frame, anything longer as an EPC block whose PC declares its length.

#include <array>
#include <cstdint>
#include <variant>

#include "gtwin/bits.hpp"
#include "gtwin/crc.hpp"
#include "gtwin/errors.hpp"

namespace gtwin {

struct QueryCommand {
    std::uint8_t dr = 1;      // TRcal divide ratio flag
    std::uint8_t m = 2;       // cycles-per-symbol selector
    std::uint8_t trext = 1;   // pilot tone flag
    std::uint8_t sel = 0;
    std::uint8_t session = 0;
    std::uint8_t target = 0;
    std::uint8_t q = 0;       // slot-count exponent, [0, 15]
};
struct QueryRepCommand { std::uint8_t session = 0; };
struct AckCommand { std::uint16_t rn16 = 0; };
using ReaderCommand = std::variant<QueryCommand, QueryRepCommand, AckCommand>;

struct Rn16Reply { std::uint16_t rn16 = 0; };
struct EpcBlockReply {
    std::uint16_t pc = 0;
    BitSeq epc;               // 16 bits per word declared in pc; 96 here
    std::uint16_t crc = 0;
};
using TagReply = std::variant<Rn16Reply, EpcBlockReply>;

// 96-bit sensor EPC: ax, ay, az, mx, my, mz as 12-bit two's-complement codes,
// then counter(8), status(8), reserved(8, must be zero).
struct SensorPayload {
    std::array<std::int16_t, 3> accel{};  // codes in [-2048, 2047]
    std::array<std::int16_t, 3> mag{};
    std::uint8_t counter = 0;
    std::uint8_t status = 0;

    bool operator==(const SensorPayload&) const = default;
};

inline constexpr std::size_t kEpcBits = 96;
inline constexpr std::size_t kQueryBits = 22;
inline constexpr std::size_t kQueryRepBits = 4;
inline constexpr std::size_t kAckBits = 18;
inline constexpr std::size_t kRn16Bits = 16;
inline constexpr std::size_t kEpcBlockBits = 128;
inline constexpr std::uint16_t kSensorPc = 6u << 11;  // PC length field: 6 words

inline BitSeq encode_sensor_epc(const SensorPayload& p) {
    for (int i = 0; i < 3; ++i)
        if (p.accel[i] < -2048 || p.accel[i] > 2047 || p.mag[i] < -2048 || p.mag[i] > 2047)
            throw MalformedPayload("sensor code outside 12-bit range");
    BitSeq bits;
    bits.reserve(kEpcBits);
    for (int i = 0; i < 3; ++i)
        append_bits(bits, static_cast<std::uint16_t>(p.accel[i]) & 0xFFFu, 12);
    for (int i = 0; i < 3; ++i)
        append_bits(bits, static_cast<std::uint16_t>(p.mag[i]) & 0xFFFu, 12);
    append_bits(bits, p.counter, 8);
    append_bits(bits, p.status, 8);
    append_bits(bits, 0, 8);  // reserved
    return bits;
}

inline SensorPayload decode_sensor_epc(const BitSeq& bits) {
    if (bits.size() != kEpcBits) throw TruncatedFrame("sensor EPC must be 96 bits");
    SensorPayload p;
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i, pos += 12)
        p.accel[i] = static_cast<std::int16_t>(sign_extend(read_bits(bits, pos, 12), 12));
    for (int i = 0; i < 3; ++i, pos += 12)
        p.mag[i] = static_cast<std::int16_t>(sign_extend(read_bits(bits, pos, 12), 12));
    p.counter = static_cast<std::uint8_t>(read_bits(bits, pos, 8));
    pos += 8;
    p.status = static_cast<std::uint8_t>(read_bits(bits, pos, 8));
    pos += 8;
    if (read_bits(bits, pos, 8) != 0) throw MalformedPayload("reserved byte nonzero");
    return p;
}

inline BitSeq encode_command(const ReaderCommand& cmd) {
    BitSeq bits;
    if (const auto* q = std::get_if<QueryCommand>(&cmd)) {
        if (q->q > 15) throw MalformedPayload("Query Q exponent outside [0, 15]");
        append_bits(bits, 0b1000, 4);
        append_bits(bits, q->dr & 1u, 1);
        append_bits(bits, q->m & 3u, 2);
        append_bits(bits, q->trext & 1u, 1);
        append_bits(bits, q->sel & 3u, 2);
        append_bits(bits, q->session & 3u, 2);
        append_bits(bits, q->target & 1u, 1);
        append_bits(bits, q->q & 0xFu, 4);
        append_bits(bits, crc5(bits), 5);
    } else if (const auto* r = std::get_if<QueryRepCommand>(&cmd)) {
        append_bits(bits, 0b00, 2);
        append_bits(bits, r->session & 3u, 2);
    } else {
        append_bits(bits, 0b01, 2);
        append_bits(bits, std::get<AckCommand>(cmd).rn16, 16);
    }
    return bits;
}

inline ReaderCommand decode_command(const BitSeq& bits) {
    if (bits.size() < 2) throw TruncatedFrame("command shorter than any opcode");
    if (bits[0] == 0) {
        if (bits[1] == 0) {
            if (bits.size() < kQueryRepBits) throw TruncatedFrame("QueryRep needs 4 bits");
            return QueryRepCommand{static_cast<std::uint8_t>(read_bits(bits, 2, 2))};
        }
        if (bits.size() < kAckBits) throw TruncatedFrame("Ack needs 18 bits");
        return AckCommand{static_cast<std::uint16_t>(read_bits(bits, 2, 16))};
    }
    if (bits.size() < 4) throw TruncatedFrame("command opcode cut short");
    if (bits[1] != 0 || bits[2] != 0 || bits[3] != 0)
        throw UnknownOpcode("unrecognized command opcode");
    if (bits.size() < kQueryBits) throw TruncatedFrame("Query needs 22 bits");
    BitSeq body(bits.begin(), bits.begin() + 17);
    if (crc5(body) != read_bits(bits, 17, 5)) throw CrcMismatch("Query CRC-5 mismatch");
    QueryCommand q;
    q.dr = bits[4];
    q.m = static_cast<std::uint8_t>(read_bits(bits, 5, 2));
    q.trext = bits[7];
    q.sel = static_cast<std::uint8_t>(read_bits(bits, 8, 2));
    q.session = static_cast<std::uint8_t>(read_bits(bits, 10, 2));
    q.target = bits[12];
    q.q = static_cast<std::uint8_t>(read_bits(bits, 13, 4));
    return q;
}

inline BitSeq encode_reply(const TagReply& reply) {
    BitSeq bits;
    if (const auto* r = std::get_if<Rn16Reply>(&reply)) {
        append_bits(bits, r->rn16, 16);
        return bits;
    }
    const auto& b = std::get<EpcBlockReply>(reply);
    if (b.epc.size() != 16u * (b.pc >> 11))
        throw MalformedPayload("EPC length disagrees with PC word count");
    append_bits(bits, b.pc, 16);
    bits.insert(bits.end(), b.epc.begin(), b.epc.end());
    append_bits(bits, b.crc, 16);
    return bits;
}

inline TagReply decode_reply(const BitSeq& bits) {
    if (bits.size() < 32) {
        if (bits.size() < kRn16Bits) throw TruncatedFrame("RN16 reply needs 16 bits");
        return Rn16Reply{static_cast<std::uint16_t>(read_bits(bits, 0, 16))};
    }
    auto pc = static_cast<std::uint16_t>(read_bits(bits, 0, 16));
    std::size_t epc_bits = 16u * (pc >> 11);
    std::size_t total = 16 + epc_bits + 16;
    if (bits.size() < total) throw TruncatedFrame("EPC block shorter than its PC declares");
    BitSeq covered(bits.begin(), bits.begin() + static_cast<long>(16 + epc_bits));
    auto crc = static_cast<std::uint16_t>(read_bits(bits, 16 + epc_bits, 16));
    if (crc16(covered) != crc) throw CrcMismatch("EPC block CRC-16 mismatch");
    return EpcBlockReply{pc, BitSeq(bits.begin() + 16, bits.begin() + static_cast<long>(16 + epc_bits)), crc};
}

inline EpcBlockReply make_epc_block(const SensorPayload& p) {
    EpcBlockReply r;
    r.pc = kSensorPc;
    r.epc = encode_sensor_epc(p);
    BitSeq covered;
    append_bits(covered, r.pc, 16);
    covered.insert(covered.end(), r.epc.begin(), r.epc.end());
    r.crc = crc16(covered);
    return r;
}

}  // namespace gtwin
