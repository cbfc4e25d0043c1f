#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace plotminer {

enum class ErrorCode {
    UnreadableFile,
    UnsupportedFormat,
    CorruptHeader,
    InvalidArgument,
    BlockTooLarge,
    EmptyFeatureSet,
    DimensionMismatch,
    SingleClassData,
    TooFewSamples,
    IoError,
    MalformedModelFile,
    AxesNotFound,
    DegenerateRegion,
    OutOfBounds,
    UnknownShape,
    NoTemplates,
    EmptyTarget,
    InfeasibleSpec,
    NotAPlot,
    MalformedConfig,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI exit-code logic) can branch on kind, not on text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace plotminer
