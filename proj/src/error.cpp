#include "specs/error.hpp"

namespace specs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::BadTokens: return "BadTokens";
    case ErrorCode::CorpusTooSmall: return "CorpusTooSmall";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadVersion: return "BadVersion";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::DataMissing: return "DataMissing";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::BadEdges: return "BadEdges";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace specs
