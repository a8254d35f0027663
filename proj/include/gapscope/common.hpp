#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gapscope {

using RealFn = std::function<double(double)>;

/// Library error with a stable machine-readable code ("NotContracting",
/// "ImagesOverlap", ...). The CLI maps codes to error JSON and exit code 2.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& message) {
  throw Error(std::move(code), message);
}

// Streaming log-sum-exp accumulator for sums of exp(t) with wildly
// different magnitudes. add(t) accumulates exp(t); log() returns the log
// of the running sum. Empty sum reports -inf.
class LogSumAcc {
 public:
  void add(double t) {
    if (!std::isfinite(t) && t < 0) return;  // exp(-inf) contributes 0
    if (n_ == 0 || t > shift_ + 30.0) {
      // rescale so the largest exponent stays O(1)
      double new_shift = (n_ == 0) ? t : std::max(t, shift_);
      if (n_ > 0) sum_ *= std::exp(shift_ - new_shift);
      shift_ = new_shift;
    }
    sum_ += std::exp(t - shift_);
    ++n_;
  }
  double log() const {
    if (n_ == 0 || sum_ <= 0.0) return -std::numeric_limits<double>::infinity();
    return shift_ + std::log(sum_);
  }
  std::size_t count() const { return n_; }

 private:
  double shift_ = 0.0;
  double sum_ = 0.0;
  std::size_t n_ = 0;
};

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> g;
  if (n <= 0) return g;
  if (n == 1) {
    g.push_back(0.5 * (a + b));
    return g;
  }
  g.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    g.push_back(a + (b - a) * static_cast<double>(k) / (n - 1));
  return g;
}

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail("DegenerateRange", "slope fit needs >= 2 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) fail("DegenerateRange", "slope fit with constant abscissa");
  return sxy / sxx;
}

// Bisection for a continuous function with a sign change on [a,b].
// Refines until the interval is below xtol or f hits ftol.
template <class F>
double bisect(F&& f, double a, double b, double xtol = 1e-14, double ftol = 0.0,
              int max_iter = 200) {
  double fa = f(a), fb = f(b);
  if (fa == 0) return a;
  if (fb == 0) return b;
  if ((fa > 0) == (fb > 0)) fail("NoBracket", "bisect: no sign change on bracket");
  for (int it = 0; it < max_iter; ++it) {
    double m = 0.5 * (a + b);
    double fm = f(m);
    if (std::abs(fm) <= ftol || 0.5 * (b - a) < xtol) return m;
    if ((fm > 0) == (fa > 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace gapscope
