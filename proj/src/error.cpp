#include "agentflow/error.hpp"

namespace agentflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateNodeId: return "DuplicateNodeId";
    case ErrorCode::InvalidNodeSpec: return "InvalidNodeSpec";
    case ErrorCode::NodeNotFound: return "NodeNotFound";
    case ErrorCode::ProtectedNode: return "ProtectedNode";
    case ErrorCode::WouldDisconnect: return "WouldDisconnect";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::CycleWithoutLoopBack: return "CycleWithoutLoopBack";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::ValidationRejected: return "ValidationRejected";
    case ErrorCode::IncompletePayload: return "IncompletePayload";
    case ErrorCode::NeedDefaultBranch: return "NeedDefaultBranch";
    case ErrorCode::UnsupportedTemplate: return "UnsupportedTemplate";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::UnresolvedPlaceholder: return "UnresolvedPlaceholder";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::EmptyRanking: return "EmptyRanking";
    case ErrorCode::UnknownTool: return "UnknownTool";
    case ErrorCode::ParamSchemaViolation: return "ParamSchemaViolation";
    case ErrorCode::ToolFailure: return "ToolFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InconsistentDimension: return "InconsistentDimension";
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::IndexCaseOverlap: return "IndexCaseOverlap";
    case ErrorCode::ReformulationError: return "ReformulationError";
    case ErrorCode::EmptyPredictionSet: return "EmptyPredictionSet";
    case ErrorCode::WrongSampleCount: return "WrongSampleCount";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SplitOverlap: return "SplitOverlap";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::UnknownCase: return "UnknownCase";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return exit_code::kUsage;
    case ErrorCode::ConfigError:
      return exit_code::kConfig;
    case ErrorCode::ParseError:
    case ErrorCode::SplitOverlap:
    case ErrorCode::UnknownLabel:
    case ErrorCode::UnknownCase:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InconsistentDimension:
    case ErrorCode::DegenerateVector:
    case ErrorCode::IndexCaseOverlap:
    case ErrorCode::EmptyPredictionSet:
    case ErrorCode::WrongSampleCount:
    case ErrorCode::EmptyRanking:
      return exit_code::kData;
    case ErrorCode::DuplicateNodeId:
    case ErrorCode::InvalidNodeSpec:
    case ErrorCode::NodeNotFound:
    case ErrorCode::ProtectedNode:
    case ErrorCode::WouldDisconnect:
    case ErrorCode::DuplicateEdge:
    case ErrorCode::CycleWithoutLoopBack:
    case ErrorCode::UnknownNode:
    case ErrorCode::ValidationRejected:
    case ErrorCode::IncompletePayload:
    case ErrorCode::NeedDefaultBranch:
    case ErrorCode::UnsupportedTemplate:
    case ErrorCode::PreconditionFailed:
    case ErrorCode::UnresolvedPlaceholder:
    case ErrorCode::UnknownTool:
    case ErrorCode::ParamSchemaViolation:
    case ErrorCode::ReformulationError:
      return exit_code::kGraph;
    case ErrorCode::Transport:
    case ErrorCode::RateLimited:
    case ErrorCode::MalformedResponse:
    case ErrorCode::BackendFailure:
    case ErrorCode::ToolFailure:
      return exit_code::kBackend;
    case ErrorCode::IoError:
      return exit_code::kIo;
  }
  return exit_code::kInternal;
}

}  // namespace agentflow
