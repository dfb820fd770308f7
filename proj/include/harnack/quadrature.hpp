#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace harnack::quad {

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double lo, double hi)
      : std::runtime_error(describe(what, lo, hi)), lo_(lo), hi_(hi) {}

  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  static std::string describe(const std::string& what, double lo, double hi) {
    std::ostringstream os;
    os.precision(17);
    os << "quadrature did not converge";
    if (!what.empty()) os << " for " << what;
    os << " on [" << lo << ", " << hi << "]";
    return os.str();
  }

  double lo_;
  double hi_;
};

struct Tolerance {
  double abs = 1e-14;
  double rel = 1e-12;
  int max_intervals = 4000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
};

namespace detail {

// 15-point Kronrod abscissae (nonnegative half) with the embedded 7-point Gauss rule.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment kronrod15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[j] * sum;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * sum;
  }
  kronrod *= half;
  gauss *= half;
  double err = std::abs(kronrod - gauss);
  if (!std::isfinite(kronrod)) err = std::numeric_limits<double>::infinity();
  return {a, b, kronrod, err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b].
///
/// The interval with the largest error estimate is bisected until the summed
/// error drops below max(tol.abs, tol.rel * |integral|). Throws
/// QuadratureError naming the worst remaining sub-interval when the interval
/// budget is exhausted or the integrand is not finite.
template <class F>
Result gauss_kronrod(F&& f, double a, double b, Tolerance tol = {},
                     const std::string& what = "") {
  if (a == b) return {};
  if (b < a) {
    Result r = gauss_kronrod(f, b, a, tol, what);
    r.value = -r.value;
    return r;
  }
  std::priority_queue<detail::Segment> heap;
  auto first = detail::kronrod15(f, a, b);
  if (!std::isfinite(first.value)) throw QuadratureError(what + " (non-finite integrand)", a, b);
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  // Segments too narrow to split are retired with their (small) error.
  double retired_err = 0.0;
  int intervals = 1;
  while (total_err + retired_err > std::max(tol.abs, tol.rel * std::abs(total))) {
    if (heap.empty()) break;
    if (intervals >= tol.max_intervals) {
      const auto worst = heap.top();
      throw QuadratureError(what, worst.a, worst.b);
    }
    const auto seg = heap.top();
    heap.pop();
    const double mid = 0.5 * (seg.a + seg.b);
    if (mid <= seg.a || mid >= seg.b ||
        (seg.b - seg.a) < 64 * std::numeric_limits<double>::epsilon() *
                              std::max(std::abs(seg.a), std::abs(seg.b))) {
      total_err -= seg.error;
      retired_err += seg.error;
      continue;
    }
    auto left = detail::kronrod15(f, seg.a, mid);
    auto right = detail::kronrod15(f, mid, seg.b);
    if (!std::isfinite(left.value) || !std::isfinite(right.value)) {
      throw QuadratureError(what + " (non-finite integrand)", seg.a, seg.b);
    }
    total += left.value + right.value - seg.value;
    total_err += left.error + right.error - seg.error;
    heap.push(left);
    heap.push(right);
    ++intervals;
  }
  // Re-sum to shed accumulated cancellation in the running total.
  double value = 0.0;
  double err = retired_err;
  while (!heap.empty()) {
    value += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  return {value, err, intervals};
}

/// Integral of s^p * g(s) over [0, a] for p > -1 with g smooth at the origin.
///
/// Substitutes u = s^(p+1), which removes the power singularity:
///   int_0^a s^p g(s) ds = 1/(p+1) * int_0^{a^(p+1)} g(u^(1/(p+1))) du.
template <class G>
Result power_singular(G&& g, double p, double a, Tolerance tol = {},
                      const std::string& what = "") {
  if (!(p > -1.0)) throw std::invalid_argument("power_singular: exponent must exceed -1");
  const double q = p + 1.0;
  const double inv_q = 1.0 / q;
  auto mapped = [&](double u) { return g(std::pow(u, inv_q)); };
  Result r = gauss_kronrod(mapped, 0.0, std::pow(a, q), tol, what);
  r.value *= inv_q;
  r.error *= inv_q;
  return r;
}

/// Wynn epsilon extrapolation of a sequence of partial sums.
///
/// Returns the most advanced even-column estimate and the difference to the
/// previous one as an error proxy.
inline std::pair<double, double> wynn_epsilon(std::span<const double> sums) {
  const std::size_t n = sums.size();
  if (n == 0) return {0.0, std::numeric_limits<double>::infinity()};
  if (n < 3) return {sums.back(), n == 2 ? std::abs(sums[1] - sums[0])
                                          : std::numeric_limits<double>::infinity()};
  std::vector<double> prev(n + 1, 0.0);  // column k-1
  std::vector<double> cur(sums.begin(), sums.end());  // column k
  double best = sums.back();
  double best_prev = sums[n - 2];
  for (std::size_t k = 1; k < n; ++k) {
    std::vector<double> next(cur.size() - 1);
    bool degenerate = false;
    for (std::size_t j = 0; j + 1 < cur.size(); ++j) {
      const double diff = cur[j + 1] - cur[j];
      if (diff == 0.0) {
        degenerate = true;
        break;
      }
      next[j] = prev[j + 1] + 1.0 / diff;
    }
    if (degenerate) break;
    prev = std::move(cur);
    cur = std::move(next);
    if (k % 2 == 0 && !cur.empty()) {
      if (!std::isfinite(cur.back())) break;
      best_prev = best;
      best = cur.back();
    }
    if (cur.size() < 2) break;
  }
  return {best, std::abs(best - best_prev)};
}

struct SeriesControl {
  double abs = 1e-300;
  double rel = 1e-12;
  int max_pieces = 20000;
  int window = 24;  // partial sums fed to the extrapolation
};

/// Sums piece integrals piece(0), piece(1), ... of an oscillatory integrand.
///
/// Converges either directly (pieces fall below the absolute floor) or through
/// Wynn extrapolation of the alternating partial sums. Throws QuadratureError
/// if neither settles within max_pieces.
template <class Piece>
Result oscillatory_series(Piece&& piece, SeriesControl ctl = {},
                          const std::string& what = "") {
  std::vector<double> sums;
  sums.reserve(256);
  double sum = 0.0;
  double last_extrapolated = std::numeric_limits<double>::quiet_NaN();
  int small_run = 0;
  int settled_run = 0;
  for (int k = 0; k < ctl.max_pieces; ++k) {
    const double p = piece(k);
    if (!std::isfinite(p)) throw QuadratureError(what + " (non-finite piece)", k, k + 1);
    sum += p;
    sums.push_back(sum);
    if (std::abs(p) <= std::max(ctl.abs, 1e-17 * std::abs(sum))) {
      if (++small_run >= 3) return {sum, std::abs(p), k + 1};
    } else {
      small_run = 0;
    }
    if (sums.size() >= 8) {
      const std::size_t w = std::min<std::size_t>(sums.size(), ctl.window);
      auto [est, err] = wynn_epsilon(std::span<const double>(sums).last(w));
      const double target = std::max(ctl.abs, ctl.rel * std::abs(est));
      const bool agrees = std::isfinite(last_extrapolated) &&
                          std::abs(est - last_extrapolated) <= target;
      if (err <= target && agrees) {
        if (++settled_run >= 2) return {est, std::max(err, std::abs(est - last_extrapolated)), k + 1};
      } else {
        settled_run = 0;
      }
      last_extrapolated = est;
    }
  }
  throw QuadratureError(what + " (oscillatory series did not settle)", 0, ctl.max_pieces);
}

}  // namespace harnack::quad
