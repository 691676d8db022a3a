#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace iva {

/// Closed interval [lo, hi] of nonnegative reals with a uniform grid.
/// Grid points are lo + k*(hi-lo)/steps for k = 0..steps. A singleton
/// space (lo == hi) has steps == 0 and a single grid point.
struct SignalSpace {
  double lo = 0.0;
  double hi = 1.0;
  int steps = 64;

  SignalSpace() = default;
  SignalSpace(double lo_, double hi_, int steps_) : lo(lo_), hi(hi_), steps(steps_) {
    if (lo < 0.0 || hi < lo) throw std::invalid_argument("SignalSpace: need 0 <= lo <= hi");
    if (lo == hi) {
      steps = 0;
    } else if (steps <= 0) {
      throw std::invalid_argument("SignalSpace: steps must be positive for non-singleton space");
    }
  }

  static SignalSpace singleton(double v) { return SignalSpace(v, v, 0); }

  bool is_singleton() const { return lo == hi; }
  int point_count() const { return steps + 1; }

  double point(int k) const {
    if (k < 0 || k > steps) throw std::out_of_range("SignalSpace::point: index out of range");
    if (steps == 0) return lo;
    return lo + static_cast<double>(k) * (hi - lo) / static_cast<double>(steps);
  }

  double step_size() const { return steps == 0 ? 0.0 : (hi - lo) / static_cast<double>(steps); }

  bool contains(double v, double tol = 1e-12) const { return v >= lo - tol && v <= hi + tol; }

  /// Largest grid index whose point is <= v (+tol). Used to cap deviation
  /// scans at a true signal without leaving the grid.
  int floor_index(double v, double tol = 1e-9) const {
    if (steps == 0) return 0;
    int k = static_cast<int>(std::floor((v - lo) / step_size() + tol));
    if (k < 0) k = 0;
    if (k > steps) k = steps;
    return k;
  }

  bool operator==(const SignalSpace&) const = default;
};

/// Signal (or bid) profile. Single-item mode stores an n-vector (m == 1);
/// multi-item mode stores an n x m matrix with entry (i, l) = s_{il},
/// row-major. Column l collects every agent's signal for item l.
struct SignalProfile {
  int n = 0;
  int m = 1;
  std::vector<double> data;

  SignalProfile() = default;
  SignalProfile(int n_, int m_, double fill = 0.0)
      : n(n_), m(m_), data(static_cast<size_t>(n_) * static_cast<size_t>(m_), fill) {
    if (n_ <= 0 || m_ <= 0) throw std::invalid_argument("SignalProfile: n, m must be positive");
  }
  static SignalProfile from_vector(std::vector<double> v) {
    SignalProfile p;
    p.n = static_cast<int>(v.size());
    p.m = 1;
    p.data = std::move(v);
    if (p.n == 0) throw std::invalid_argument("SignalProfile: empty vector");
    return p;
  }

  double& at(int i, int l = 0) { return data[static_cast<size_t>(i) * m + l]; }
  double at(int i, int l = 0) const { return data[static_cast<size_t>(i) * m + l]; }

  std::vector<double> column(int l) const {
    std::vector<double> c(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) c[static_cast<size_t>(i)] = at(i, l);
    return c;
  }

  bool operator==(const SignalProfile&) const = default;
};

/// View of one item's signal column inside a row-major n x m matrix.
struct ColumnView {
  const double* base = nullptr;
  int stride = 1;
  int n = 0;

  ColumnView() = default;
  ColumnView(const std::vector<double>& col)
      : base(col.data()), stride(1), n(static_cast<int>(col.size())) {}
  ColumnView(const SignalProfile& p, int item)
      : base(p.data.data() + item), stride(p.m), n(p.n) {}

  double operator[](int i) const { return base[static_cast<size_t>(i) * stride]; }

  std::vector<double> to_vector() const {
    std::vector<double> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = (*this)[i];
    return v;
  }
};

/// Odometer over a list of per-coordinate grid sizes. next() advances in
/// lexicographic order; flat_index() is the mixed-radix rank, which checkers
/// use to report the lexicographically smallest violating tuple regardless
/// of how the range was partitioned across workers.
struct GridOdometer {
  std::vector<int> sizes;
  std::vector<int> idx;

  explicit GridOdometer(std::vector<int> sizes_) : sizes(std::move(sizes_)), idx(sizes.size(), 0) {}

  uint64_t total() const {
    uint64_t t = 1;
    for (int s : sizes) t *= static_cast<uint64_t>(s);
    return t;
  }

  void seek(uint64_t flat) {
    for (int d = static_cast<int>(sizes.size()) - 1; d >= 0; --d) {
      idx[static_cast<size_t>(d)] = static_cast<int>(flat % static_cast<uint64_t>(sizes[static_cast<size_t>(d)]));
      flat /= static_cast<uint64_t>(sizes[static_cast<size_t>(d)]);
    }
  }

  bool next() {
    for (int d = static_cast<int>(sizes.size()) - 1; d >= 0; --d) {
      if (++idx[static_cast<size_t>(d)] < sizes[static_cast<size_t>(d)]) return true;
      idx[static_cast<size_t>(d)] = 0;
    }
    return false;
  }
};

}  // namespace iva
