#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wildvision {

enum class Errc {
    InvalidBox,
    InvalidScore,
    InvalidLabel,
    InvalidDetectorId,
    InvalidArgument,
    UnknownSchema,
    CountExceedsFrames,
    FrameCountMismatch,
    EmptyBatch,
    EmptyTruth,
    EmptyInput,
    EmptyImage,
    InsufficientImages,
    DegenerateVariance,
    ParseError,
    DuplicateKey,
    MissingFrame,
    DecodeError,
    IoError,
    BackendError,
};

/// Coarse grouping used to map errors onto process exit codes.
enum class ErrorKind { Validation, Io, Internal };

constexpr std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::InvalidBox: return "InvalidBox";
    case Errc::InvalidScore: return "InvalidScore";
    case Errc::InvalidLabel: return "InvalidLabel";
    case Errc::InvalidDetectorId: return "InvalidDetectorId";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::UnknownSchema: return "UnknownSchema";
    case Errc::CountExceedsFrames: return "CountExceedsFrames";
    case Errc::FrameCountMismatch: return "FrameCountMismatch";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::EmptyTruth: return "EmptyTruth";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::EmptyImage: return "EmptyImage";
    case Errc::InsufficientImages: return "InsufficientImages";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateKey: return "DuplicateKey";
    case Errc::MissingFrame: return "MissingFrame";
    case Errc::DecodeError: return "DecodeError";
    case Errc::IoError: return "IoError";
    case Errc::BackendError: return "BackendError";
    }
    return "Unknown";
}

constexpr ErrorKind kind_of(Errc code) noexcept {
    switch (code) {
    case Errc::MissingFrame:
    case Errc::DecodeError:
    case Errc::IoError:
        return ErrorKind::Io;
    case Errc::BackendError:
        return ErrorKind::Internal;
    default:
        return ErrorKind::Validation;
    }
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }
    ErrorKind kind() const noexcept { return kind_of(code_); }

private:
    Errc code_;
};

}  // namespace wildvision
