#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agentflow {

enum class ErrorCode {
  // graph-core
  DuplicateNodeId,
  InvalidNodeSpec,
  NodeNotFound,
  ProtectedNode,
  WouldDisconnect,
  DuplicateEdge,
  CycleWithoutLoopBack,
  UnknownNode,
  ValidationRejected,
  // ops
  IncompletePayload,
  NeedDefaultBranch,
  UnsupportedTemplate,
  PreconditionFailed,
  // llm / exec
  UnresolvedPlaceholder,
  Transport,
  RateLimited,
  MalformedResponse,
  BackendFailure,
  EmptyRanking,
  // tools
  UnknownTool,
  ParamSchemaViolation,
  ToolFailure,
  DimensionMismatch,
  InconsistentDimension,
  DegenerateVector,
  IndexCaseOverlap,
  // evolve
  ReformulationError,
  // metrics
  EmptyPredictionSet,
  WrongSampleCount,
  // dataset / config / io
  ParseError,
  SplitOverlap,
  UnknownLabel,
  UnknownCase,
  ConfigError,
  IoError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Process exit statuses used by the command-line tool.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kValidationFailed = 1;
inline constexpr int kUsage = 2;
inline constexpr int kConfig = 3;
inline constexpr int kData = 4;
inline constexpr int kGraph = 5;
inline constexpr int kBackend = 6;
inline constexpr int kIo = 7;
inline constexpr int kInternal = 10;
}  // namespace exit_code

int exit_code_for(ErrorCode code);

/// Base exception for every failure the library reports. The code is stable
/// and is what the CLI maps onto exit codes and `--json` error output.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace agentflow
