#pragma once

// Dense two-phase simplex for the small LPs used by the geometry code
// (boundedness, Chebyshev balls, redundancy). Bland-style tie breaking on
// variable ids keeps it from cycling.

#include <secureplan/common.hpp>

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace secureplan::lp {

enum class Status { Optimal, Unbounded, Infeasible };

struct Result {
  Status status = Status::Infeasible;
  double value = 0.0;
  Vector x;
};

namespace detail {

class Tableau {
 public:
  // maximize c.x  s.t.  A x <= b,  x >= 0
  Tableau(const Matrix& A, const Vector& b, const Vector& c)
      : m_(static_cast<int>(A.rows())),
        n_(static_cast<int>(A.cols())),
        d_(m_ + 2, n_ + 2),
        basis_(m_),
        nonbasis_(n_ + 1) {
    d_.setZero();
    d_.topLeftCorner(m_, n_) = A;
    for (int i = 0; i < m_; ++i) {
      basis_[i] = n_ + i;
      d_(i, n_) = -1.0;
      d_(i, n_ + 1) = b(i);
    }
    for (int j = 0; j < n_; ++j) {
      nonbasis_[j] = j;
      d_(m_, j) = -c(j);
    }
    nonbasis_[n_] = -1;
    d_(m_ + 1, n_) = 1.0;
  }

  Result solve() {
    Result res;
    int r = 0;
    for (int i = 1; i < m_; ++i)
      if (d_(i, n_ + 1) < d_(r, n_ + 1)) r = i;
    if (m_ > 0 && d_(r, n_ + 1) < -kEps) {
      pivot(r, n_);
      if (!run(2) || d_(m_ + 1, n_ + 1) < -kEps) {
        res.status = Status::Infeasible;
        return res;
      }
      for (int i = 0; i < m_; ++i) {
        if (basis_[i] != -1) continue;
        int s = 0;
        for (int j = 1; j <= n_; ++j)
          if (less(d_(i, j), nonbasis_[j], d_(i, s), nonbasis_[s])) s = j;
        pivot(i, s);
      }
    }
    const bool bounded = run(1);
    res.x = Vector::Zero(n_);
    for (int i = 0; i < m_; ++i)
      if (basis_[i] >= 0 && basis_[i] < n_) res.x(basis_[i]) = d_(i, n_ + 1);
    res.status = bounded ? Status::Optimal : Status::Unbounded;
    res.value = bounded ? d_(m_, n_ + 1) : std::numeric_limits<double>::infinity();
    return res;
  }

 private:
  static constexpr double kEps = 1e-11;

  static bool less(double a, int ia, double b, int ib) {
    return a < b || (a == b && ia < ib);
  }

  void pivot(int r, int s) {
    const double inv = 1.0 / d_(r, s);
    for (int i = 0; i < m_ + 2; ++i) {
      if (i == r || std::abs(d_(i, s)) <= kEps) continue;
      const double f = d_(i, s) * inv;
      for (int j = 0; j < n_ + 2; ++j) d_(i, j) -= d_(r, j) * f;
      d_(i, s) = d_(r, s) * f;
    }
    for (int j = 0; j < n_ + 2; ++j)
      if (j != s) d_(r, j) *= inv;
    for (int i = 0; i < m_ + 2; ++i)
      if (i != r) d_(i, s) *= -inv;
    d_(r, s) = inv;
    std::swap(basis_[r], nonbasis_[s]);
  }

  bool run(int phase) {
    const int row = m_ + phase - 1;
    for (;;) {
      int s = -1;
      for (int j = 0; j <= n_; ++j) {
        if (nonbasis_[j] == -phase) continue;
        if (s == -1 || less(d_(row, j), nonbasis_[j], d_(row, s), nonbasis_[s])) s = j;
      }
      if (d_(row, s) >= -kEps) return true;
      int r = -1;
      for (int i = 0; i < m_; ++i) {
        if (d_(i, s) <= kEps) continue;
        if (r == -1) {
          r = i;
          continue;
        }
        const double lhs = d_(i, n_ + 1) / d_(i, s);
        const double rhs = d_(r, n_ + 1) / d_(r, s);
        if (lhs < rhs || (lhs == rhs && basis_[i] < basis_[r])) r = i;
      }
      if (r == -1) return false;
      pivot(r, s);
    }
  }

  int m_, n_;
  Matrix d_;
  std::vector<int> basis_, nonbasis_;
};

}  // namespace detail

/// Maximize c.x subject to A x <= b with x free.
inline Result maximize(const Matrix& A, const Vector& b, const Vector& c) {
  const Eigen::Index n = A.cols();
  Matrix split(A.rows(), 2 * n);
  split << A, -A;
  Vector c2(2 * n);
  c2 << c, -c;
  Result r = detail::Tableau(split, b, c2).solve();
  if (r.status == Status::Optimal) {
    Vector x = r.x.head(n) - r.x.tail(n);
    r.x = std::move(x);
  } else {
    r.x = Vector::Zero(n);
  }
  return r;
}

}  // namespace secureplan::lp
