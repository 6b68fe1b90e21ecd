#pragma once

// Re-simulates a move's inputs through forward Euler and measures the
// geometric conditions of a feasible segment.

#include <secureplan/feasibility.hpp>

#include <limits>

namespace secureplan::test {

struct SegmentMetrics {
  double min_margin = std::numeric_limits<double>::infinity();   // facets of the active region
  double min_interior = std::numeric_limits<double>::infinity();  // non-crossing facets, away from k_c
  double crossing = 0.0;                                          // |h_c(x(k_c))|
  double start_error = 0.0, end_error = 0.0;
  double input_violation = 0.0;
  double replay_error = 0.0;  // |x_solver - x_replayed|
};

inline SegmentMetrics measure_segment(const Team& team, const Move& mv, const FeasibilityParams& par,
                                      const AgentSegment& seg) {
  const AgentModel& ag = team.agent(mv.agent);
  const Partition& part = team.partition();
  const int N = par.N, kc = par.crossing();
  const Matrix x = simulate(ag, part.representative(mv.from), seg.u, par.dt());
  SegmentMetrics m;
  m.replay_error = (x - seg.x).cwiseAbs().maxCoeff();
  m.start_error = (x.col(0) - part.representative(mv.from)).norm();
  m.end_error = (x.col(N) - part.representative(mv.to)).norm();
  for (int k = 0; k < N; ++k) {
    const Vector r = ag.input_set.margins(seg.u.col(k));
    m.input_violation = std::max(m.input_violation, -r.minCoeff());
  }
  const HPolytope& q = part.region(mv.from);
  const HPolytope& qn = part.region(mv.to);
  const bool moving = mv.from != mv.to;
  std::optional<Facet> exit, entry;
  if (moving) {
    exit = part.adjacency(mv.from, mv.to);
    entry = part.adjacency(mv.to, mv.from);
    m.crossing = std::abs(exit->h(x.col(kc)));
  }
  auto on_plane = [](const HPolytope& poly, Eigen::Index j, const std::optional<Facet>& f) {
    return f && poly.normals().row(j).transpose() == f->normal && poly.offsets()(j) == f->offset;
  };
  for (int k = 0; k <= N; ++k) {
    const bool first_half = !moving || k <= kc;
    const bool second_half = moving && k >= kc;
    if (first_half)
      for (Eigen::Index j = 0; j < q.num_halfspaces(); ++j) {
        const double h = q.h(j, x.col(k));
        m.min_margin = std::min(m.min_margin, h);
        if (!on_plane(q, j, exit) && k != kc) m.min_interior = std::min(m.min_interior, h);
      }
    if (second_half)
      for (Eigen::Index j = 0; j < qn.num_halfspaces(); ++j) {
        const double h = qn.h(j, x.col(k));
        m.min_margin = std::min(m.min_margin, h);
        if (!on_plane(qn, j, entry) && k != kc) m.min_interior = std::min(m.min_interior, h);
      }
  }
  return m;
}

}  // namespace secureplan::test
