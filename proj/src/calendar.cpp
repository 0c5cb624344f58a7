#include "xmkt/calendar.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "xmkt/error.hpp"

namespace xmkt {

Date::Date(std::chrono::year_month_day ymd)
    : days_(static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count())) {}

Date Date::parse(std::string_view iso) {
  auto bad = [&] { return Error(ErrorCode::UnparseableValue, "invalid date '" + std::string(iso) + "'"); };
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') throw bad();
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  auto field = [&](std::size_t pos, std::size_t len, auto& out) {
    auto [p, ec] = std::from_chars(iso.data() + pos, iso.data() + pos + len, out);
    if (ec != std::errc{} || p != iso.data() + pos + len) throw bad();
  };
  field(0, 4, y);
  field(5, 2, m);
  field(8, 2, d);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw bad();
  return Date(ymd);
}

std::chrono::year_month_day Date::ymd() const {
  return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{days_}}};
}

std::string Date::iso() const {
  const auto v = ymd();
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(v.year()),
                static_cast<unsigned>(v.month()), static_cast<unsigned>(v.day()));
  return buf;
}

bool Date::is_weekday() const {
  const std::chrono::weekday wd{std::chrono::sys_days{std::chrono::days{days_}}};
  return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
}

std::ptrdiff_t TradingCalendar::index_of(Date d) const {
  auto it = std::lower_bound(dates.begin(), dates.end(), d);
  if (it == dates.end() || *it != d) return -1;
  return it - dates.begin();
}

int minimum_lag(Session source, Session target) {
  return source.close_utc_min < target.open_utc_min ? 0 : 1;
}

std::vector<std::ptrdiff_t> pair_dates(const std::vector<Date>& source_dates, Session source,
                                       const std::vector<Date>& target_dates, Session target,
                                       int lag) {
  const int lmin = minimum_lag(source, target);
  if (lag < lmin) {
    throw Error(ErrorCode::InvalidConfig,
                "lag " + std::to_string(lag) + " is below the minimum admissible lag " +
                    std::to_string(lmin) + " for this market pair");
  }
  const std::ptrdiff_t back = lag - lmin;
  std::vector<std::ptrdiff_t> out(target_dates.size(), -1);
  std::ptrdiff_t k = -1;  // last source index with close < current target open
  for (std::size_t t = 0; t < target_dates.size(); ++t) {
    const std::int64_t open = std::int64_t{target_dates[t].days()} * 1440 + target.open_utc_min;
    while (k + 1 < static_cast<std::ptrdiff_t>(source_dates.size()) &&
           std::int64_t{source_dates[static_cast<std::size_t>(k + 1)].days()} * 1440 +
                   source.close_utc_min <
               open) {
      ++k;
    }
    const std::ptrdiff_t idx = k - back;
    out[t] = idx >= 0 ? idx : -1;
  }
  return out;
}

}  // namespace xmkt
