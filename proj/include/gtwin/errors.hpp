#pragma once

#include <stdexcept>

namespace gtwin {

// Categories the CLI maps to process exit codes.
struct ConfigError : std::runtime_error { using std::runtime_error::runtime_error; };      // exit 1
struct SimulationFault : std::runtime_error { using std::runtime_error::runtime_error; };  // exit 2
struct AlignmentError : std::runtime_error { using std::runtime_error::runtime_error; };   // exit 3

// Sensor-node fault: IMU access while the node is not awake.
struct NotPowered : std::runtime_error { using std::runtime_error::runtime_error; };

// Codec faults, each distinguishable on decode.
struct CodecError : std::runtime_error { using std::runtime_error::runtime_error; };
struct CrcMismatch : CodecError { using CodecError::CodecError; };
struct UnknownOpcode : CodecError { using CodecError::CodecError; };
struct TruncatedFrame : CodecError { using CodecError::CodecError; };
struct MalformedPayload : CodecError { using CodecError::CodecError; };

}  // namespace gtwin
