#include "xmkt/error.hpp"

namespace xmkt {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonMonotoneDates: return "NonMonotoneDates";
    case ErrorCode::NegativePrice: return "NegativePrice";
    case ErrorCode::DuplicateTickerDate: return "DuplicateTickerDate";
    case ErrorCode::UnparseableValue: return "UnparseableValue";
    case ErrorCode::InsufficientDates: return "InsufficientDates";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::DateMismatch: return "DateMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NTooLarge: return "NTooLarge";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::UnknownTicker: return "UnknownTicker";
    case ErrorCode::IncompleteEtf: return "IncompleteEtf";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::WindowUnavailable: return "WindowUnavailable";
    case ErrorCode::TickerSetMismatch: return "TickerSetMismatch";
    case ErrorCode::UnlabeledTicker: return "UnlabeledTicker";
    case ErrorCode::InsufficientCandidates: return "InsufficientCandidates";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidHyperparameter: return "InvalidHyperparameter";
    case ErrorCode::WrongArity: return "WrongArity";
    case ErrorCode::SpanUnavailable: return "SpanUnavailable";
    case ErrorCode::ZeroVolatility: return "ZeroVolatility";
    case ErrorCode::EmptySubset: return "EmptySubset";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::PlanError: return "PlanError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace xmkt
