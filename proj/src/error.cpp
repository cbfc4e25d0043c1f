#include "plotminer/error.hpp"

namespace plotminer {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BlockTooLarge: return "BlockTooLarge";
    case ErrorCode::EmptyFeatureSet: return "EmptyFeatureSet";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingleClassData: return "SingleClassData";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedModelFile: return "MalformedModelFile";
    case ErrorCode::AxesNotFound: return "AxesNotFound";
    case ErrorCode::DegenerateRegion: return "DegenerateRegion";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::UnknownShape: return "UnknownShape";
    case ErrorCode::NoTemplates: return "NoTemplates";
    case ErrorCode::EmptyTarget: return "EmptyTarget";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::NotAPlot: return "NotAPlot";
    case ErrorCode::MalformedConfig: return "MalformedConfig";
    }
    return "Unknown";
}

}  // namespace plotminer
