#pragma once

// Dense convex QP
//   minimize ½ zᵀPz + qᵀz  subject to  A_eq z = b_eq,  G z ≤ h
// solved by ADMM operator splitting on the stacked form l ≤ Cz ≤ u, with
// Ruiz equilibration, adaptive step size, infeasibility certificates and a
// final active-set polish.

#include <secureplan/common.hpp>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

namespace secureplan::qp {

struct Problem {
  Matrix P;
  Vector q;
  Matrix A_eq;
  Vector b_eq;
  Matrix G;
  Vector h;

  Eigen::Index num_vars() const { return q.size(); }

  /// Dimension and symmetry checks; empty constraint blocks may be 0xn or 0x0.
  void validate() const {
    const auto n = q.size();
    if (P.rows() != n || P.cols() != n) throw StructuralError("qp: P must be n x n");
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, P.cwiseAbs().maxCoeff()))
      throw StructuralError("qp: P is not symmetric");
    if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != n))
      throw StructuralError("qp: equality block has inconsistent dimensions");
    if (G.rows() != h.size() || (G.rows() > 0 && G.cols() != n))
      throw StructuralError("qp: inequality block has inconsistent dimensions");
    if (!P.allFinite() || !q.allFinite() || !A_eq.allFinite() || !b_eq.allFinite() || !G.allFinite())
      throw StructuralError("qp: non-finite data");
  }
};

enum class Status { Optimal, PrimalInfeasible, DualInfeasible, MaxIterations };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::PrimalInfeasible: return "primal_infeasible";
    case Status::DualInfeasible: return "dual_infeasible";
    case Status::MaxIterations: return "max_iterations";
  }
  return "?";
}

struct Settings {
  double rho = 1.0;
  double sigma = 1e-6;
  double alpha = 1.6;
  double eps_abs = 1e-6;
  double eps_rel = 0.0;
  double eps_infeasible = 1e-8;
  int max_iterations = 50000;
  int check_interval = 10;
  int adapt_interval = 50;
  int scaling_iterations = 10;
  bool polish = true;
};

struct Solution {
  Status status = Status::MaxIterations;
  Vector z;
  Vector y_eq;    // multipliers of A_eq z = b_eq
  Vector y_ineq;  // multipliers of G z <= h, nonnegative at optimum
  double objective = std::numeric_limits<double>::quiet_NaN();
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool polished = false;

  bool optimal() const { return status == Status::Optimal; }
};

struct WarmStart {
  Vector z, y_eq, y_ineq;
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline Vector project(const Vector& v, const Vector& l, const Vector& u) { return v.cwiseMax(l).cwiseMin(u); }

// Stacked data l <= C z <= u.
struct Stacked {
  Matrix P, C;
  Vector q, l, u;
};

inline Stacked stack(const Problem& p) {
  const auto n = p.num_vars();
  const auto me = p.A_eq.rows(), mi = p.G.rows();
  Stacked s;
  s.P = p.P;
  s.q = p.q;
  s.C.resize(me + mi, n);
  if (me) s.C.topRows(me) = p.A_eq;
  if (mi) s.C.bottomRows(mi) = p.G;
  s.l.resize(me + mi);
  s.u.resize(me + mi);
  s.l.head(me) = p.b_eq;
  s.u.head(me) = p.b_eq;
  s.l.tail(mi).setConstant(-kInf);
  s.u.tail(mi) = p.h;
  return s;
}

inline double clip_scale(double v) { return std::clamp(v, 1e-4, 1e4); }

struct Scaling {
  Vector D, E;  // variable and constraint scaling
  double c = 1.0;
};

// Ruiz equilibration of [[P, Cᵀ], [C, 0]] followed by cost scaling, in place.
inline Scaling equilibrate(Stacked& s, int iterations) {
  const auto n = s.P.rows(), m = s.C.rows();
  Scaling sc{Vector::Ones(n), Vector::Ones(m), 1.0};
  for (int it = 0; it < iterations; ++it) {
    Vector dv(n), ev(m);
    for (Eigen::Index j = 0; j < n; ++j) {
      double norm = s.P.col(j).cwiseAbs().maxCoeff();
      if (m) norm = std::max(norm, s.C.col(j).cwiseAbs().maxCoeff());
      dv(j) = 1.0 / std::sqrt(clip_scale(norm == 0.0 ? 1.0 : norm));
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      const double norm = s.C.row(i).cwiseAbs().maxCoeff();
      ev(i) = 1.0 / std::sqrt(clip_scale(norm == 0.0 ? 1.0 : norm));
    }
    s.P = dv.asDiagonal() * s.P * dv.asDiagonal();
    s.q = dv.cwiseProduct(s.q);
    if (m) s.C = ev.asDiagonal() * s.C * dv.asDiagonal();
    sc.D = sc.D.cwiseProduct(dv);
    sc.E = sc.E.cwiseProduct(ev);
  }
  double pnorm = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) pnorm += s.P.col(j).cwiseAbs().maxCoeff();
  pnorm = n ? pnorm / static_cast<double>(n) : 0.0;
  const double cost = std::max(pnorm, inf_norm(s.q));
  sc.c = 1.0 / clip_scale(cost == 0.0 ? 1.0 : cost);
  s.P *= sc.c;
  s.q *= sc.c;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::isfinite(s.l(i))) s.l(i) *= sc.E(i);
    if (std::isfinite(s.u(i))) s.u(i) *= sc.E(i);
  }
  return sc;
}

inline double bound_violation(const Vector& cz, const Vector& l, const Vector& u) {
  double v = 0.0;
  for (Eigen::Index i = 0; i < cz.size(); ++i) v = std::max({v, l(i) - cz(i), cz(i) - u(i)});
  return v;
}

}  // namespace detail

/// Throws StructuralError when P + 1e-9 I has no Cholesky factor.
inline void require_psd(const Matrix& P) {
  const Eigen::Index n = P.rows();
  Eigen::LLT<Matrix> llt(P + 1e-9 * Matrix::Identity(n, n));
  if (llt.info() != Eigen::Success) throw StructuralError("qp: P is not positive semidefinite");
}

inline Solution solve(const Problem& problem, const Settings& settings = {}, const WarmStart* warm = nullptr) {
  problem.validate();
  require_psd(problem.P);
  using detail::inf_norm;
  const auto n = problem.num_vars();
  const auto me = problem.A_eq.rows();
  const detail::Stacked orig = detail::stack(problem);
  detail::Stacked s = orig;
  const auto m = s.C.rows();
  const detail::Scaling sc = detail::equilibrate(s, settings.scaling_iterations);

  // unscaled residuals of a scaled iterate
  struct Residuals {
    double prim, dual, prim_scale, dual_scale;
  };
  auto unscaled = [&](const Vector& xs, const Vector& zs, const Vector& ys) {
    const Vector x = sc.D.cwiseProduct(xs);
    const Vector y = sc.E.cwiseProduct(ys) / sc.c;
    const Vector z = zs.cwiseQuotient(sc.E);
    const Vector cx = orig.C * x;
    const Vector px = orig.P * x;
    const Vector cty = orig.C.transpose() * y;
    return Residuals{inf_norm(cx - z), inf_norm(px + orig.q + cty), std::max(inf_norm(cx), inf_norm(z)),
                     std::max({inf_norm(px), inf_norm(cty), inf_norm(orig.q)})};
  };

  Vector x = Vector::Zero(n), z = Vector::Zero(m), y = Vector::Zero(m);
  if (warm) {
    if (warm->z.size() == n) x = warm->z.cwiseQuotient(sc.D);
    if (warm->y_eq.size() == me && warm->y_ineq.size() == m - me) {
      Vector yw(m);
      yw << warm->y_eq, warm->y_ineq;
      y = yw.cwiseQuotient(sc.E) * sc.c;
    }
    z = detail::project(s.C * x, s.l, s.u);
  }

  double rho = settings.rho;
  Vector rho_vec(m);
  auto set_rho = [&]() {
    for (Eigen::Index i = 0; i < m; ++i) rho_vec(i) = (s.l(i) == s.u(i)) ? 1e3 * rho : rho;
  };
  Eigen::LLT<Matrix> kkt;
  auto factor = [&]() {
    set_rho();
    Matrix K = s.P + settings.sigma * Matrix::Identity(n, n);
    if (m) K += s.C.transpose() * rho_vec.asDiagonal() * s.C;
    kkt.compute(K);
    if (kkt.info() != Eigen::Success) throw StructuralError("qp: reduced KKT matrix is not positive definite");
  };
  factor();

  Solution sol;
  const double a = settings.alpha;
  const double eps_inf = settings.eps_infeasible;
  int k = 0;
  for (k = 1; k <= settings.max_iterations; ++k) {
    const Vector x_prev = x, y_prev = y;
    Vector rhs = settings.sigma * x - s.q;
    if (m) rhs += s.C.transpose() * (rho_vec.cwiseProduct(z) - y);
    const Vector xt = kkt.solve(rhs);
    const Vector zt = s.C * xt;
    x = a * xt + (1.0 - a) * x_prev;
    const Vector z_relax = a * zt + (1.0 - a) * z;
    const Vector z_next = detail::project(z_relax + y.cwiseQuotient(rho_vec), s.l, s.u);
    y = y + rho_vec.cwiseProduct(z_relax - z_next);
    z = z_next;

    if (k % settings.check_interval != 0 && k != settings.max_iterations) continue;

    const Residuals r = unscaled(x, z, y);
    const double eps_p = settings.eps_abs + settings.eps_rel * r.prim_scale;
    const double eps_d = settings.eps_abs + settings.eps_rel * r.dual_scale;
    if (r.prim <= eps_p && r.dual <= eps_d) {
      sol.status = Status::Optimal;
      break;
    }

    // primal infeasibility: C'dy ~ 0 with u'dy+ + l'dy- < 0
    if (m) {
      Vector dy = sc.E.cwiseProduct(y - y_prev);
      for (Eigen::Index i = 0; i < m; ++i) {
        if (dy(i) > 0 && !std::isfinite(orig.u(i))) dy(i) = 0.0;
        if (dy(i) < 0 && !std::isfinite(orig.l(i))) dy(i) = 0.0;
      }
      const double dy_norm = inf_norm(dy);
      if (dy_norm > 0.0) {
        double support = 0.0;
        for (Eigen::Index i = 0; i < m; ++i)
          support += dy(i) > 0 ? orig.u(i) * dy(i) : (dy(i) < 0 ? orig.l(i) * dy(i) : 0.0);
        if (inf_norm(orig.C.transpose() * dy) <= eps_inf * dy_norm && support < -eps_inf * dy_norm) {
          sol.status = Status::PrimalInfeasible;
          sol.y_eq = dy.head(me) / dy_norm;
          sol.y_ineq = dy.tail(m - me) / dy_norm;
          break;
        }
      }
    }
    // dual infeasibility: a recession direction of decreasing cost
    {
      const Vector dx = sc.D.cwiseProduct(x - x_prev);
      const double dx_norm = inf_norm(dx);
      if (dx_norm > 0.0 && inf_norm(orig.P * dx) <= eps_inf * dx_norm && orig.q.dot(dx) < -eps_inf * dx_norm) {
        const Vector cdx = orig.C * dx;
        bool recession = true;
        for (Eigen::Index i = 0; i < m && recession; ++i) {
          const double t = eps_inf * dx_norm;
          if (std::isfinite(orig.u(i)) && cdx(i) > t) recession = false;
          if (std::isfinite(orig.l(i)) && cdx(i) < -t) recession = false;
        }
        if (recession) {
          sol.status = Status::DualInfeasible;
          sol.z = dx / dx_norm;
          break;
        }
      }
    }

    if (k % settings.adapt_interval == 0) {
      // step-size balancing on scaled residuals
      const Vector cx = s.C * x;
      const double pr = inf_norm(cx - z) / std::max({inf_norm(cx), inf_norm(z), 1e-12});
      const Vector px = s.P * x, cty = s.C.transpose() * y;
      // |C|'|y| keeps opposing multipliers that cancel in C'y in the scale
      const Vector cty_abs = s.C.cwiseAbs().transpose() * y.cwiseAbs();
      const double dr =
          inf_norm(px + s.q + cty) / std::max({inf_norm(px), inf_norm(cty_abs), inf_norm(s.q), 1e-12});
      const double ratio = std::sqrt(pr / std::max(dr, 1e-12));
      const double rho_new = std::clamp(rho * ratio, 1e-6, 1e6);
      if (rho_new > 5.0 * rho || rho_new < 0.2 * rho) {
        rho = rho_new;
        factor();
      }
    }
  }
  sol.iterations = std::min(k, settings.max_iterations);

  if (sol.status == Status::PrimalInfeasible || sol.status == Status::DualInfeasible) return sol;

  Vector xu = sc.D.cwiseProduct(x);
  Vector yu = sc.E.cwiseProduct(y) / sc.c;
  auto measure = [&](const Vector& xv, const Vector& yv) {
    const Vector cx = orig.C * xv;
    double dual = inf_norm(orig.P * xv + orig.q + orig.C.transpose() * yv);
    double sign = 0.0;
    for (Eigen::Index i = me; i < m; ++i) sign = std::max(sign, -yv(i));
    return std::pair{detail::bound_violation(cx, orig.l, orig.u), std::max(dual, sign)};
  };
  auto [prim, dual] = measure(xu, yu);

  if (settings.polish && sol.status == Status::Optimal && m > 0) {
    // active set from the ADMM iterate: equality rows and rows whose
    // multiplier dominates the slack
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (s.l(i) == s.u(i) || z(i) - s.l(i) < -y(i) || s.u(i) - z(i) < y(i)) active.push_back(i);
    }
    const auto na = static_cast<Eigen::Index>(active.size());
    Matrix Ca(na, n);
    Vector ba(na);
    for (Eigen::Index r = 0; r < na; ++r) {
      const auto i = active[static_cast<std::size_t>(r)];
      Ca.row(r) = s.C.row(i);
      ba(r) = (s.l(i) == s.u(i) || y(i) > 0) ? s.u(i) : s.l(i);
      if (!std::isfinite(ba(r))) ba(r) = std::isfinite(s.u(i)) ? s.u(i) : s.l(i);
    }
    const double delta = 1e-9;
    Matrix K = Matrix::Zero(n + na, n + na);
    K.topLeftCorner(n, n) = s.P;
    K.topRightCorner(n, na) = Ca.transpose();
    K.bottomLeftCorner(na, n) = Ca;
    Matrix Kreg = K;
    Kreg.topLeftCorner(n, n) += delta * Matrix::Identity(n, n);
    Kreg.bottomRightCorner(na, na) -= delta * Matrix::Identity(na, na);
    Eigen::PartialPivLU<Matrix> lu(Kreg);
    Vector rhs(n + na);
    rhs << -s.q, ba;
    Vector sol_kkt = lu.solve(rhs);
    for (int refine = 0; refine < 5; ++refine) sol_kkt += lu.solve(rhs - K * sol_kkt);
    if (sol_kkt.allFinite()) {
      Vector yp = Vector::Zero(m);
      for (Eigen::Index r = 0; r < na; ++r) yp(active[static_cast<std::size_t>(r)]) = sol_kkt(n + r);
      const Vector xp = sc.D.cwiseProduct(sol_kkt.head(n));
      const Vector ypu = sc.E.cwiseProduct(yp) / sc.c;
      auto [pp, dp] = measure(xp, ypu);
      if (pp <= std::max(prim, settings.eps_abs) && dp <= std::max(dual, settings.eps_abs)) {
        xu = xp;
        yu = ypu;
        prim = pp;
        dual = dp;
        sol.polished = true;
      }
    }
  }

  sol.z = xu;
  sol.y_eq = yu.head(me);
  sol.y_ineq = yu.tail(m - me);
  sol.primal_residual = prim;
  sol.dual_residual = dual;
  sol.objective = 0.5 * xu.dot(problem.P * xu) + problem.q.dot(xu);
  return sol;
}

/// Plain-text dump for offline reproduction.
inline void dump(const Problem& p, std::ostream& os) {
  const Eigen::IOFormat fmt(Eigen::FullPrecision, Eigen::DontAlignCols, " ", "\n");
  auto block = [&](const char* name, const Matrix& m) {
    os << name << " " << m.rows() << " " << m.cols() << "\n";
    if (m.size()) os << m.format(fmt) << "\n";
  };
  os << std::setprecision(17);
  block("P", p.P);
  block("q", p.q);
  block("A_eq", p.A_eq);
  block("b_eq", p.b_eq);
  block("G", p.G);
  block("h", p.h);
}

}  // namespace secureplan::qp
