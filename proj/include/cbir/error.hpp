#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cbir {

/// Every failure raised by the library carries one of these codes so callers
/// (CLI exit codes, HTTP status mapping) can branch without parsing messages.
enum class ErrorCode {
    FileNotFound,
    UnsupportedFormat,
    CorruptData,
    IoError,
    InvalidArgument,
    DimensionMismatch,
    WrongChannelCount,
    EmptyInput,
    UndefinedInput,
    NoShape,
    ImageTooSmall,
    BoundaryTooShort,
    UnknownName,
    ConfigMismatch,
    VersionMismatch,
    CorruptIndex,
    UnknownImage,
    UnknownMetric,
    AllNeutral,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for codes that describe a problem reading or writing files, as opposed
/// to a domain-level failure on well-formed input.
bool is_io_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace cbir
