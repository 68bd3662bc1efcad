#include "sizerforge/error.hpp"

namespace sizerforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::BadScaleRef: return "BadScaleRef";
    case ErrorCode::NonMonotonicGrid: return "NonMonotonicGrid";
    case ErrorCode::TemplateUnresolvable: return "TemplateUnresolvable";
    case ErrorCode::MissingAssignment: return "MissingAssignment";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::SpecParseError: return "SpecParseError";
    case ErrorCode::UnsupportedCombinator: return "UnsupportedCombinator";
    case ErrorCode::MissingMetric: return "MissingMetric";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::NoValidDesign: return "NoValidDesign";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::IllegalEdit: return "IllegalEdit";
    case ErrorCode::PlanIncomplete: return "PlanIncomplete";
    case ErrorCode::ValueOffGrid: return "ValueOffGrid";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::UnknownMethod: return "UnknownMethod";
    case ErrorCode::SingularKernel: return "SingularKernel";
    case ErrorCode::EvaluatorUnavailable: return "EvaluatorUnavailable";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::LlmTransport: return "LlmTransport";
    case ErrorCode::LlmTimeout: return "LlmTimeout";
    case ErrorCode::LlmConfig: return "LlmConfig";
    case ErrorCode::JsonUnparseable: return "JsonUnparseable";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::IllegalPlan: return "IllegalPlan";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace sizerforge
