#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace wavedecay {

/// A sampled nonnegative function of time: pairs (t_i, w_i) with strictly
/// increasing times.  This is the common currency of the decay toolkit;
/// between samples the function is read as left-continuous piecewise
/// constant.
struct DecaySeries {
  std::vector<double> t;
  std::vector<double> w;

  std::size_t size() const { return t.size(); }

  void validate() const {
    if (t.size() != w.size()) throw std::invalid_argument("DecaySeries: length mismatch");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!std::isfinite(t[i]) || !std::isfinite(w[i]))
        throw std::invalid_argument("DecaySeries: non-finite entry");
      if (w[i] < 0.0) throw std::invalid_argument("DecaySeries: negative value");
      if (i > 0 && t[i] <= t[i - 1])
        throw std::invalid_argument("DecaySeries: times must be strictly increasing");
    }
  }
};

/// Integral of uniformly sampled y over its whole span with spacing dx.
/// Composite Simpson; an odd interval count gets a 3/8 tail so the result
/// stays fourth-order accurate.  One interval falls back to the trapezoid.
inline double integrate_uniform(const std::vector<double>& y, double dx) {
  const std::size_t n = y.size();
  if (n < 2) return 0.0;
  const std::size_t intervals = n - 1;
  if (intervals == 1) return 0.5 * dx * (y[0] + y[1]);

  double acc = 0.0;
  std::size_t simpson_end = intervals;  // index of last point covered by Simpson pairs
  if (intervals % 2 != 0) simpson_end = intervals - 3;

  for (std::size_t i = 0; i + 2 <= simpson_end; i += 2)
    acc += dx / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);

  if (intervals % 2 != 0) {
    const std::size_t i = simpson_end;
    acc += 3.0 * dx / 8.0 * (y[i] + 3.0 * y[i + 1] + 3.0 * y[i + 2] + y[i + 3]);
  }
  return acc;
}

}  // namespace wavedecay
