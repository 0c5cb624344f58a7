#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xmkt {

/// Calendar date stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}
  explicit Date(std::chrono::year_month_day ymd);

  /// Parses ISO-8601 `YYYY-MM-DD`; throws UnparseableValue otherwise.
  static Date parse(std::string_view iso);

  std::string iso() const;
  std::chrono::year_month_day ymd() const;
  constexpr std::int32_t days() const { return days_; }
  bool is_weekday() const;

  friend constexpr auto operator<=>(Date, Date) = default;

 private:
  std::int32_t days_ = 0;
};

/// Trading session bounds in minutes after 00:00 UTC of the trading date.
struct Session {
  int open_utc_min = 0;
  int close_utc_min = 0;
};

inline constexpr Session kUsSession{14 * 60 + 30, 21 * 60};  // 09:30-16:00 ET (UTC-5)
inline constexpr Session kCnSession{1 * 60 + 30, 7 * 60};    // 09:30-15:00 CST (UTC+8)

/// Ordered trading dates of one market. Position in `dates` defines
/// trading-day arithmetic: t-1 is the previous trading date.
struct TradingCalendar {
  std::string market_id;
  std::vector<Date> dates;
  Session session;

  /// Index of `d` or -1 when `d` is not a trading date.
  std::ptrdiff_t index_of(Date d) const;
};

/// Smallest admissible lag between two markets: 0 when a source session on
/// the same calendar date closes before the target session opens, else 1.
int minimum_lag(Session source, Session target);

/// Pairs every target date with a source date index under the
/// cross-calendar rule: take the most recent source date whose close is
/// strictly before the target open, then step back (lag - minimum_lag)
/// further source trading days. Entries are -1 where no such date exists.
/// Throws InvalidConfig if lag < minimum_lag(source, target).
std::vector<std::ptrdiff_t> pair_dates(const std::vector<Date>& source_dates, Session source,
                                       const std::vector<Date>& target_dates, Session target,
                                       int lag);

}  // namespace xmkt
