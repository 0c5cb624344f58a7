#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xmkt {

enum class ErrorCode {
  // market data
  MissingColumn,
  NonMonotoneDates,
  NegativePrice,
  DuplicateTickerDate,
  UnparseableValue,
  InsufficientDates,
  KindMismatch,
  DateMismatch,
  EmptyInput,
  NTooLarge,
  InsufficientHistory,
  UnknownTicker,
  IncompleteEtf,
  // screening
  InvalidConfig,
  WindowUnavailable,
  TickerSetMismatch,
  UnlabeledTicker,
  InsufficientCandidates,
  // models
  DimensionMismatch,
  InvalidHyperparameter,
  WrongArity,
  // backtest / experiments
  SpanUnavailable,
  ZeroVolatility,
  EmptySubset,
  InvalidSpec,
  PlanError,
  IoError,
  // command line
  ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-readable code and,
/// where one exists, a location (file:row, ticker, date).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string location = {})
      : std::runtime_error(message), code_(code), location_(std::move(location)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& location() const noexcept { return location_; }

 private:
  ErrorCode code_;
  std::string location_;
};

}  // namespace xmkt
