#pragma once

// Dynamic feasibility of discrete transitions: each agent role moves between
// region representative points over a fixed horizon under forward-Euler
// dynamics, input bounds and discrete CBF rows keeping it inside the current
// region before the crossing index and inside the next region after it.

#include <secureplan/abstraction.hpp>
#include <secureplan/qp.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace secureplan {

struct FeasibilityParams {
  double t_f = 2.0;
  int N = 40;
  int k_c = -1;  // negative: N / 2
  double gamma = 1.0;
  double epsilon = 0.01;
  qp::Settings solver;

  double dt() const { return t_f / N; }
  int crossing() const { return k_c < 0 ? N / 2 : k_c; }

  void validate() const {
    if (!(t_f > 0.0)) throw ConfigError("t_f must be positive");
    if (N < 2) throw ConfigError("N must be at least 2");
    if (crossing() <= 0 || crossing() >= N) throw ConfigError("crossing index must satisfy 0 < k_c < N");
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be nonnegative");
    if (gamma * dt() >= 1.0) throw ConfigError("gamma * dt must be below 1 for the discrete barrier");
  }
};

/// One agent role (real or copy) moving between two regions.
struct Move {
  std::size_t agent = 0;
  RegionId from = 0, to = 0;
  auto operator<=>(const Move&) const = default;
};

struct AgentSegment {
  Matrix x;  // n x (N+1)
  Matrix u;  // m x N
  double objective = 0.0;
};

struct TrajectorySegment {
  std::vector<AgentSegment> roles;
  double dt = 0.0;
  int k_c = 0;
  double objective = 0.0;
};

namespace detail {

inline std::optional<Eigen::Index> facet_row(const HPolytope& poly, const Facet& f) {
  for (Eigen::Index j = 0; j < poly.num_halfspaces(); ++j)
    if (poly.normals().row(j).transpose() == f.normal && poly.offsets()(j) == f.offset) return j;
  return std::nullopt;
}

// Row layout of one move's block, used to size and fill the joint problem.
struct BlockShape {
  Eigen::Index vars = 0, eq = 0, ineq = 0;
};

struct RowWriter {
  Matrix& Aeq;
  Vector& beq;
  Matrix& G;
  Vector& h;
  Eigen::Index eq_row = 0, ineq_row = 0;
};

}  // namespace detail

/// Writes one move's block at column offset `col` through `out`; with no
/// writer only the block's shape is computed.
inline detail::BlockShape move_block(const Team& team, const Move& mv, const FeasibilityParams& par,
                                     detail::RowWriter* out = nullptr, Eigen::Index col = 0) {
  const AgentModel& ag = team.agent(mv.agent);
  const Partition& part = team.partition();
  const Eigen::Index n = ag.state_dim(), m = ag.input_dim();
  const int N = par.N, kc = par.crossing();
  const double dt = par.dt(), gamma = par.gamma, eps = par.epsilon;
  const HPolytope& q = part.region(mv.from);
  const HPolytope& qn = part.region(mv.to);
  const bool moving = mv.from != mv.to;

  std::optional<Eigen::Index> exit_row, entry_row;
  if (moving) {
    const auto& f_exit = part.adjacency(mv.from, mv.to);
    const auto& f_entry = part.adjacency(mv.to, mv.from);
    if (!f_exit || !f_entry)
      throw StructuralError("no shared facet between " + part.name(mv.from) + " and " + part.name(mv.to));
    exit_row = detail::facet_row(q, *f_exit);
    entry_row = detail::facet_row(qn, *f_entry);
    if (!exit_row || !entry_row) throw StructuralError("shared facet is not a facet row of its region");
  }

  // CBF rows, plain rows h >= eps, and plain rows h >= 0 on the exit facet: (region, facet row, step)
  std::vector<std::tuple<const HPolytope*, Eigen::Index, int>> cbf, interior, boundary;
  if (!moving) {
    for (Eigen::Index j = 0; j < q.num_halfspaces(); ++j)
      for (int k = 0; k < N; ++k) cbf.emplace_back(&q, j, k);
  } else {
    for (Eigen::Index j = 0; j < q.num_halfspaces(); ++j)
      for (int k = 0; k < kc; ++k) {
        if (j == *exit_row)
          boundary.emplace_back(&q, j, k);
        else
          cbf.emplace_back(&q, j, k);
      }
    for (Eigen::Index j = 0; j < qn.num_halfspaces(); ++j) {
      for (int k = kc; k < N; ++k) cbf.emplace_back(&qn, j, k);
      if (j != *entry_row) interior.emplace_back(&qn, j, kc);
    }
  }
  const Eigen::Index input_rows = ag.input_set.num_halfspaces();
  detail::BlockShape shape;
  shape.vars = (N + 1) * n + N * m;
  shape.eq = N * n + 2 * n + (moving ? 1 : 0);
  shape.ineq = N * input_rows + static_cast<Eigen::Index>(cbf.size() + interior.size() + boundary.size());
  if (!out) return shape;

  auto xcol = [&](int k) { return col + k * n; };
  auto ucol = [&](int k) { return col + (N + 1) * n + k * m; };
  auto& w = *out;
  const Matrix I = Matrix::Identity(n, n);
  for (int k = 0; k < N; ++k) {
    // x(k+1) - (I + dt A) x(k) - dt B u(k) = dt b
    w.Aeq.block(w.eq_row, xcol(k + 1), n, n) = I;
    w.Aeq.block(w.eq_row, xcol(k), n, n) = -(I + dt * ag.A);
    w.Aeq.block(w.eq_row, ucol(k), n, m) = -dt * ag.B;
    w.beq.segment(w.eq_row, n) = dt * ag.b;
    w.eq_row += n;
  }
  w.Aeq.block(w.eq_row, xcol(0), n, n) = I;
  w.beq.segment(w.eq_row, n) = part.representative(mv.from);
  w.eq_row += n;
  w.Aeq.block(w.eq_row, xcol(N), n, n) = I;
  w.beq.segment(w.eq_row, n) = part.representative(mv.to);
  w.eq_row += n;
  if (moving) {
    w.Aeq.block(w.eq_row, xcol(kc), 1, n) = q.normals().row(*exit_row);
    w.beq(w.eq_row) = -q.offsets()(*exit_row);
    ++w.eq_row;
  }
  // U = {u : H u + g >= 0}  ->  -H u <= g
  for (int k = 0; k < N; ++k) {
    w.G.block(w.ineq_row, ucol(k), input_rows, m) = -ag.input_set.normals();
    w.h.segment(w.ineq_row, input_rows) = ag.input_set.offsets();
    w.ineq_row += input_rows;
  }
  // p'(A x + B u + b) >= -gamma (p'x + g - eps)
  for (const auto& [poly, j, k] : cbf) {
    const Vector p = poly->normals().row(j).transpose();
    const double g = poly->offsets()(j);
    w.G.block(w.ineq_row, xcol(k), 1, n) = -(p.transpose() * ag.A + gamma * p.transpose());
    w.G.block(w.ineq_row, ucol(k), 1, m) = -(p.transpose() * ag.B);
    w.h(w.ineq_row) = p.dot(ag.b) + gamma * (g - eps);
    ++w.ineq_row;
  }
  // p'x(k) + g >= eps
  for (const auto& [poly, j, k] : interior) {
    w.G.block(w.ineq_row, xcol(k), 1, n) = -poly->normals().row(j);
    w.h(w.ineq_row) = poly->offsets()(j) - eps;
    ++w.ineq_row;
  }
  // p'x(k) + g >= 0
  for (const auto& [poly, j, k] : boundary) {
    w.G.block(w.ineq_row, xcol(k), 1, n) = -poly->normals().row(j);
    w.h(w.ineq_row) = poly->offsets()(j);
    ++w.ineq_row;
  }
  return shape;
}

/// Decision vector: per role, states x(0..N) then inputs u(0..N-1).
/// Objective: sum over roles of dt * sum_k |u(k)|^2.
inline qp::Problem build_transition_qp(const Team& team, const std::vector<Move>& roles,
                                       const FeasibilityParams& par) {
  par.validate();
  detail::BlockShape total;
  std::vector<detail::BlockShape> shapes;
  for (const auto& mv : roles) {
    shapes.push_back(move_block(team, mv, par));
    total.vars += shapes.back().vars;
    total.eq += shapes.back().eq;
    total.ineq += shapes.back().ineq;
  }
  qp::Problem p;
  p.P = Matrix::Zero(total.vars, total.vars);
  p.q = Vector::Zero(total.vars);
  p.A_eq = Matrix::Zero(total.eq, total.vars);
  p.b_eq = Vector::Zero(total.eq);
  p.G = Matrix::Zero(total.ineq, total.vars);
  p.h = Vector::Zero(total.ineq);
  detail::RowWriter w{p.A_eq, p.b_eq, p.G, p.h};
  Eigen::Index col = 0;
  for (std::size_t r = 0; r < roles.size(); ++r) {
    const auto& ag = team.agent(roles[r].agent);
    move_block(team, roles[r], par, &w, col);
    const Eigen::Index n = ag.state_dim(), m = ag.input_dim();
    const Eigen::Index ustart = col + (par.N + 1) * n;
    p.P.block(ustart, ustart, par.N * m, par.N * m) = 2.0 * par.dt() * Matrix::Identity(par.N * m, par.N * m);
    col += shapes[r].vars;
  }
  return p;
}

/// Splits a solution of build_transition_qp into per-role segments.
inline TrajectorySegment extract_segment(const Team& team, const std::vector<Move>& roles,
                                         const FeasibilityParams& par, const Vector& z) {
  TrajectorySegment seg;
  seg.dt = par.dt();
  seg.k_c = par.crossing();
  Eigen::Index col = 0;
  for (const auto& mv : roles) {
    const auto& ag = team.agent(mv.agent);
    const Eigen::Index n = ag.state_dim(), m = ag.input_dim();
    AgentSegment a;
    a.x.resize(n, par.N + 1);
    a.u.resize(m, par.N);
    for (int k = 0; k <= par.N; ++k) a.x.col(k) = z.segment(col + k * n, n);
    for (int k = 0; k < par.N; ++k) a.u.col(k) = z.segment(col + (par.N + 1) * n + k * m, m);
    a.objective = par.dt() * a.u.squaredNorm();
    seg.objective += a.objective;
    seg.roles.push_back(std::move(a));
    col += (par.N + 1) * n + par.N * m;
  }
  return seg;
}

struct SolveRecord {
  qp::Status status = qp::Status::MaxIterations;
  int iterations = 0;
  bool retried = false;
  std::string warning;
};

/// Solves the joint QP of a transition; nullopt if infeasible. A
/// max_iterations result is retried once with a smaller step size and then
/// treated as infeasible.
inline std::optional<TrajectorySegment> check_transition(const Team& team, const std::vector<Move>& roles,
                                                         const FeasibilityParams& par, SolveRecord* record = nullptr) {
  const qp::Problem p = build_transition_qp(team, roles, par);
  SolveRecord rec;
  qp::Solution s = qp::solve(p, par.solver);
  rec.iterations = s.iterations;
  if (s.status == qp::Status::MaxIterations) {
    qp::Settings relaxed = par.solver;
    relaxed.rho = par.solver.rho * 0.1;
    s = qp::solve(p, relaxed);
    rec.retried = true;
    rec.iterations += s.iterations;
    if (s.status == qp::Status::MaxIterations) rec.warning = "no convergence after retry; treated as infeasible";
  }
  rec.status = s.status;
  if (record) *record = rec;
  if (!s.optimal()) return std::nullopt;
  return extract_segment(team, roles, par, s.z);
}

/// Roles of a transition between two states of a global (width M) or twin
/// (width 2M) system; role r drives agent r mod M.
inline std::vector<Move> transition_roles(const Tuple& from, const Tuple& to, std::size_t num_agents) {
  std::vector<Move> roles;
  for (std::size_t r = 0; r < from.size(); ++r) roles.push_back({r % num_agents, from[r], to[r]});
  return roles;
}

/// Per-move results shared by all transitions using the move.
class SegmentCache {
 public:
  struct Entry {
    std::optional<AgentSegment> segment;
    SolveRecord record;
  };

  const Entry* find(const Move& mv) const {
    auto it = entries_.find(mv);
    return it == entries_.end() ? nullptr : &it->second;
  }
  void insert(const Move& mv, Entry e) { entries_.emplace(mv, std::move(e)); }
  std::size_t size() const { return entries_.size(); }
  const std::map<Move, Entry>& entries() const { return entries_; }

  bool feasible(const Move& mv) const {
    const Entry* e = find(mv);
    return e && e->segment.has_value();
  }

  /// Segment of a transition assembled from cached moves.
  std::optional<TrajectorySegment> segment(const std::vector<Move>& roles, const FeasibilityParams& par) const {
    TrajectorySegment seg;
    seg.dt = par.dt();
    seg.k_c = par.crossing();
    for (const auto& mv : roles) {
      const Entry* e = find(mv);
      if (!e || !e->segment) return std::nullopt;
      seg.roles.push_back(*e->segment);
      seg.objective += e->segment->objective;
    }
    return seg;
  }

 private:
  std::map<Move, Entry> entries_;
};

/// Solves each distinct move once (in parallel) and keeps the transitions
/// whose roles are all feasible. The joint QP has no coupling rows, so it is
/// feasible exactly when every role's block is.
inline std::pair<TransitionSystem, SegmentCache> prune_infeasible(const TransitionSystem& system, const Team& team,
                                                                  const FeasibilityParams& par,
                                                                  unsigned threads = 0) {
  par.validate();
  std::vector<Move> moves;
  {
    std::set<Move> seen;
    for (std::size_t s = 0; s < system.size(); ++s)
      for (const auto& t : system.successors(s))
        for (const auto& mv : transition_roles(system.tuple(s), system.tuple(t.target), team.num_agents()))
          if (seen.insert(mv).second) moves.push_back(mv);
  }
  std::vector<SegmentCache::Entry> results(moves.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < moves.size(); i += stride) {
      SolveRecord rec;
      try {
        auto seg = check_transition(team, {moves[i]}, par, &rec);
        if (seg) results[i].segment = std::move(seg->roles.front());
      } catch (const StructuralError& e) {
        rec.status = qp::Status::PrimalInfeasible;
        rec.warning = e.what();
      }
      results[i].record = rec;
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, moves.size())));
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  SegmentCache cache;
  for (std::size_t i = 0; i < moves.size(); ++i) cache.insert(moves[i], std::move(results[i]));
  TransitionSystem pruned = system.filter([](std::size_t) { return true; },
                                          [&](std::size_t a, std::size_t b) {
                                            for (const auto& mv : transition_roles(system.tuple(a), system.tuple(b),
                                                                                   team.num_agents()))
                                              if (!cache.feasible(mv)) return false;
                                            return true;
                                          });
  return {std::move(pruned), std::move(cache)};
}

/// Exact forward-Euler replay of an input sequence.
inline Matrix simulate(const AgentModel& ag, const Vector& x0, const Matrix& u, double dt) {
  Matrix x(x0.size(), u.cols() + 1);
  x.col(0) = x0;
  for (Eigen::Index k = 0; k < u.cols(); ++k) x.col(k + 1) = x.col(k) + dt * (ag.A * x.col(k) + ag.B * u.col(k) + ag.b);
  return x;
}

}  // namespace secureplan
