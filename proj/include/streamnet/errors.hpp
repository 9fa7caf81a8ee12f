#pragma once

#include <stdexcept>
#include <string>

namespace streamnet {

/// Error categories surfaced by the engine. The CLI maps these onto
/// process exit codes (config=1, io=2, numeric=3).
enum class Errc {
    InvalidInput,
    NonFiniteValue,
    DimensionMismatch,
    LambdaOutOfRange,
    UnboundedActivation,
    InvalidActivation,
    DegenerateInput,
    LagOutOfRange,
    EmptyTrajectory,
    InvalidSpec,
    SourceError,
    ParseError,
    IoError,
    DigestMismatch,
    VersionUnsupported,
    CorruptSnapshot,
    StreamMisuse,
};

const char* errc_name(Errc c) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace streamnet
