#pragma once

// Golden test vectors for the codec. The rendered text is committed at
// vectors/epc_vectors.txt and the tests require the current code to
// reproduce it byte for byte, so any change to bit order, CRC parameters, or
// frame layout shows up as a diff against the committed file.

#include <string>
#include <vector>

#include "gtwin/bits.hpp"
#include "gtwin/crc.hpp"
#include "gtwin/epc.hpp"

namespace gtwin {

struct GoldenVector {
    std::string name;
    BitSeq input;
    BitSeq output;
};

inline std::vector<GoldenVector> golden_vectors() {
    std::vector<GoldenVector> v;

    auto add = [&](std::string name, BitSeq in, BitSeq out) {
        v.push_back({std::move(name), std::move(in), std::move(out)});
    };
    auto bits_of = [](std::uint32_t value, std::size_t width) {
        BitSeq b;
        append_bits(b, value, width);
        return b;
    };

    BitSeq zeros22(22, 0);
    add("crc5_zeros22", zeros22, bits_of(crc5(zeros22), 5));

    BitSeq query_frame = encode_command(QueryCommand{});
    BitSeq query_body(query_frame.begin(), query_frame.begin() + 17);
    add("crc5_query_body_defaults", query_body, bits_of(crc5(query_body), 5));
    add("query_defaults", query_body, query_frame);

    BitSeq ascii;
    for (char c : std::string("123456789")) append_bits(ascii, static_cast<std::uint8_t>(c), 8);
    add("crc16_ascii_123456789", ascii, bits_of(crc16(ascii), 16));

    BitSeq zeros16(16, 0);
    add("crc16_zeros16", zeros16, bits_of(crc16(zeros16), 16));

    add("ack_beef", bits_of(0xBEEF, 16), encode_command(AckCommand{0xBEEF}));

    SensorPayload pm1;
    pm1.accel = {1, -1, 0};
    add("sensor_epc_accel_pm1", encode_sensor_epc(pm1), encode_sensor_epc(pm1));

    SensorPayload mixed;
    mixed.accel = {100, -200, 1024};
    mixed.mag = {-300, 47, -1700};
    mixed.counter = 0xA5;
    mixed.status = 0x01;
    BitSeq mixed_epc = encode_sensor_epc(mixed);
    add("sensor_epc_mixed", mixed_epc, mixed_epc);
    add("epc_block_mixed", mixed_epc, encode_reply(TagReply{make_epc_block(mixed)}));

    return v;
}

inline std::string render_vector_file() {
    std::string out;
    out += "# Codec golden vectors. One vector per line:\n";
    out += "#   <name> <input> <output>\n";
    out += "# where a bit string is written <nbits>:<hex>, MSB first, with the\n";
    out += "# final nibble zero-padded on the right.\n";
    for (const auto& g : golden_vectors()) {
        out += g.name;
        out += ' ';
        out += bits_token(g.input);
        out += ' ';
        out += bits_token(g.output);
        out += '\n';
    }
    return out;
}

}  // namespace gtwin
