#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "xmkt/market_data.hpp"

namespace xmkt::testing {

inline std::filesystem::path temp_dir(const std::string& stem) {
  static int counter = 0;
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  auto dir = std::filesystem::temp_directory_path() / (stem + "_" + std::to_string(stamp) + "_" + std::to_string(++counter));
  std::filesystem::create_directories(dir);
  return dir;
}

// Full regression y = X b with X = [1, x], solved through the normal
// equations; returns t of the slope from the covariance diagonal.
inline double textbook_slope_t(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = x[static_cast<std::size_t>(i)];
    Y(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::Matrix2d XtX = X.transpose() * X;
  const Eigen::Matrix2d inv = XtX.inverse();
  const Eigen::Vector2d b = inv * (X.transpose() * Y);
  const Eigen::VectorXd r = Y - X * b;
  const double s2 = r.squaredNorm() / static_cast<double>(n - 2);
  return b(1) / std::sqrt(s2 * inv(1, 1));
}

inline std::vector<double> gaussian(std::mt19937_64& eng, std::size_t n, double mean = 0.0, double sd = 1.0) {
  std::normal_distribution<double> N(mean, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = N(eng);
  return v;
}

// Weekday dates from 2015-01-01.
inline std::vector<Date> weekdays(std::size_t n, Date start = Date(16436)) {
  std::vector<Date> out;
  for (Date d = start; out.size() < n; d = Date(d.days() + 1))
    if (d.is_weekday()) out.push_back(d);
  return out;
}

// Price panel with geometric random-walk closes; the first ticker is the ETF.
inline PricePanel random_panel(std::size_t n_dates, std::size_t n_tickers, std::uint64_t seed,
                               const std::string& market = "US", const std::string& etf = "AETF") {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> N(0.0, 0.01);
  PricePanel p;
  p.market_id = market;
  p.dates = weekdays(n_dates);
  p.etf_ticker = etf;
  p.tickers.push_back(etf);
  for (std::size_t j = 1; j < n_tickers; ++j) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "T%03zu", j);
    p.tickers.push_back(buf);
  }
  const auto T = static_cast<Eigen::Index>(n_dates), M = static_cast<Eigen::Index>(n_tickers);
  p.open.resize(T, M);
  p.close.resize(T, M);
  p.volume.resize(T, M);
  p.market_cap.resize(T, M);
  for (Eigen::Index j = 0; j < M; ++j) {
    double c = 100.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      const double o = c * std::exp(N(eng));
      c = o * std::exp(N(eng));
      p.open(t, j) = o;
      p.close(t, j) = c;
      p.volume(t, j) = 1e6 * (1.0 + static_cast<double>(j));
      p.market_cap(t, j) = c * 1e7;
    }
    p.sector.push_back(j == 0 ? "ETF" : (j % 2 ? "S1" : "S2"));
  }
  return p;
}

}  // namespace xmkt::testing
