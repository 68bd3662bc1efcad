#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sizerforge {

/// Every failure the library reports carries one of these codes so callers
/// (and tests) can branch on the kind without parsing messages.
enum class ErrorCode {
  // bench_config
  MissingKey,
  BadScaleRef,
  NonMonotonicGrid,
  TemplateUnresolvable,
  MissingAssignment,
  ConfigInvalid,
  // spec_expr
  SpecParseError,
  UnsupportedCombinator,
  MissingMetric,
  InvalidThreshold,
  // sizing_core
  EmptyHistory,
  NoValidDesign,
  InsufficientHistory,
  // search_space
  IllegalEdit,
  PlanIncomplete,
  ValueOffGrid,
  // optimizer_pool
  InvalidParameter,
  UnknownMethod,
  SingularKernel,
  // evaluation / surrogate_models
  EvaluatorUnavailable,
  UnknownModel,
  GridTooLarge,
  // agents
  LlmTransport,
  LlmTimeout,
  LlmConfig,
  JsonUnparseable,
  SchemaViolation,
  IllegalPlan,
  // plumbing
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sizerforge
