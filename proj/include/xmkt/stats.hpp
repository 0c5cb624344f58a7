#pragma once

#include <span>
#include <vector>

namespace xmkt::stats {

/// Percentile with linear interpolation between order statistics: for a
/// sorted sample v of size n the p-th percentile sits at rank h = (n-1)*p/100
/// and equals v[floor(h)] + (h - floor(h)) * (v[floor(h)+1] - v[floor(h)]).
/// p is in [0, 100]. Throws EmptyInput on an empty sample.
double percentile(std::span<const double> values, double p);

/// Same convention on data the caller has already sorted ascending.
double percentile_sorted(std::span<const double> sorted, double p);

/// Median; even counts average the two middle values.
double median(std::span<const double> values);

double mean(std::span<const double> values);

/// Sample standard deviation (divisor n-1). Requires n >= 2.
double sample_sd(std::span<const double> values);

}  // namespace xmkt::stats
