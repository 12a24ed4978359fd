#include "cbir/error.hpp"

namespace cbir {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::FileNotFound: return "file_not_found";
    case ErrorCode::UnsupportedFormat: return "unsupported_format";
    case ErrorCode::CorruptData: return "corrupt_data";
    case ErrorCode::IoError: return "io_error";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::WrongChannelCount: return "wrong_channel_count";
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::UndefinedInput: return "undefined_input";
    case ErrorCode::NoShape: return "no_shape";
    case ErrorCode::ImageTooSmall: return "image_too_small";
    case ErrorCode::BoundaryTooShort: return "boundary_too_short";
    case ErrorCode::UnknownName: return "unknown_name";
    case ErrorCode::ConfigMismatch: return "config_mismatch";
    case ErrorCode::VersionMismatch: return "version_mismatch";
    case ErrorCode::CorruptIndex: return "corrupt_index";
    case ErrorCode::UnknownImage: return "unknown_image";
    case ErrorCode::UnknownMetric: return "unknown_metric";
    case ErrorCode::AllNeutral: return "all_neutral";
    }
    return "unknown";
}

bool is_io_error(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::FileNotFound:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::CorruptData:
    case ErrorCode::IoError:
    case ErrorCode::VersionMismatch:
    case ErrorCode::CorruptIndex:
        return true;
    default:
        return false;
    }
}

} // namespace cbir
