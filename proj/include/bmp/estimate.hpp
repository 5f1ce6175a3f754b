#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace bmp {

/// Monte Carlo mean of a functional with its standard error.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t replicas = 0;
  std::size_t capped = 0;

  bool valid() const { return capped == 0; }
};

/// Mean and standard error (sample sd / sqrt(n)) of `values`, summed in index order.
inline Estimate summarize(std::span<const double> values, std::size_t capped = 0) {
  Estimate e;
  e.replicas = values.size();
  e.capped = capped;
  if (values.empty()) return e;
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
    e.mean = values.front();
    return e;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  e.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    e.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return e;
}

}  // namespace bmp
