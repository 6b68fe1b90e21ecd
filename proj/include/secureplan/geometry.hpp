#pragma once

// Polytopic workspace geometry. Half-space convention throughout:
//   P = { x : p_j . x + g_j >= 0  for all j },  h_j(x) = p_j . x + g_j.

#include <secureplan/common.hpp>
#include <secureplan/lp.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace secureplan {

class HPolytope {
 public:
  HPolytope() = default;

  HPolytope(Matrix normals, Vector offsets)
      : normals_(std::move(normals)), offsets_(std::move(offsets)) {
    if (normals_.rows() != offsets_.size())
      throw StructuralError("polytope has " + std::to_string(normals_.rows()) +
                            " normals but " + std::to_string(offsets_.size()) + " offsets");
    if (normals_.cols() < 1) throw StructuralError("polytope dimension must be positive");
  }

  static HPolytope box(const Vector& lower, const Vector& upper) {
    if (lower.size() != upper.size()) throw StructuralError("box bounds differ in dimension");
    const Eigen::Index n = lower.size();
    Matrix p = Matrix::Zero(2 * n, n);
    Vector g(2 * n);
    for (Eigen::Index k = 0; k < n; ++k) {
      p(2 * k, k) = 1.0;
      g(2 * k) = -lower(k);
      p(2 * k + 1, k) = -1.0;
      g(2 * k + 1) = upper(k);
    }
    return HPolytope(std::move(p), std::move(g));
  }

  Eigen::Index dimension() const { return normals_.cols(); }
  Eigen::Index num_halfspaces() const { return normals_.rows(); }
  const Matrix& normals() const { return normals_; }
  const Vector& offsets() const { return offsets_; }

  double h(Eigen::Index j, const Vector& x) const { return normals_.row(j).dot(x) + offsets_(j); }
  Vector margins(const Vector& x) const { return normals_ * x + offsets_; }

  bool contains(const Vector& x, double tol = 1e-9) const {
    return num_halfspaces() == 0 || margins(x).minCoeff() >= -tol;
  }

  HPolytope intersect(const HPolytope& other) const {
    if (other.dimension() != dimension()) throw StructuralError("intersecting polytopes of different dimension");
    Matrix p(num_halfspaces() + other.num_halfspaces(), dimension());
    p << normals_, other.normals_;
    Vector g(p.rows());
    g << offsets_, other.offsets_;
    return HPolytope(std::move(p), std::move(g));
  }

 private:
  Matrix normals_;
  Vector offsets_;
};

struct PolytopeReport {
  bool empty = false;
  bool bounded = false;
  bool full_dimensional = false;
  double chebyshev_radius = 0.0;
  Vector chebyshev_center;
};

namespace detail {

// Constraint form A x <= b of a polytope: -p_j x <= g_j.
inline std::pair<Matrix, Vector> as_leq(const HPolytope& poly) {
  return {-poly.normals(), poly.offsets()};
}

inline lp::Result chebyshev_lp(const HPolytope& poly) {
  const Eigen::Index n = poly.dimension(), d = poly.num_halfspaces();
  Matrix a = Matrix::Zero(d + 1, n + 1);
  Vector b(d + 1);
  for (Eigen::Index j = 0; j < d; ++j) {
    a.row(j).head(n) = -poly.normals().row(j);
    a(j, n) = poly.normals().row(j).norm();
    b(j) = poly.offsets()(j);
  }
  // Caps the radius so unbounded sets still give a finite LP.
  a(d, n) = 1.0;
  b(d) = 1e12;
  Vector c = Vector::Zero(n + 1);
  c(n) = 1.0;
  return lp::maximize(a, b, c);
}

}  // namespace detail

inline PolytopeReport validate_polytope(const HPolytope& poly, double tol = 1e-9) {
  PolytopeReport report;
  const Eigen::Index n = poly.dimension();
  const auto [a, b] = detail::as_leq(poly);
  report.bounded = true;
  for (Eigen::Index k = 0; k < n && report.bounded; ++k) {
    for (double sign : {1.0, -1.0}) {
      Vector c = Vector::Zero(n);
      c(k) = sign;
      const auto r = lp::maximize(a, b, c);
      if (r.status == lp::Status::Infeasible) {
        report.empty = true;
        report.chebyshev_center = Vector::Zero(n);
        return report;
      }
      if (r.status == lp::Status::Unbounded) {
        report.bounded = false;
        break;
      }
    }
  }
  const auto cheb = detail::chebyshev_lp(poly);
  if (cheb.status != lp::Status::Optimal) {
    report.empty = true;
    report.chebyshev_center = Vector::Zero(n);
    return report;
  }
  report.chebyshev_radius = cheb.x(n);
  report.chebyshev_center = cheb.x.head(n);
  report.full_dimensional = report.chebyshev_radius > tol;
  return report;
}

/// Drops half-spaces implied by the others (LP test per row, in order).
inline HPolytope remove_redundant(const HPolytope& poly, double tol = 1e-9) {
  const Eigen::Index d = poly.num_halfspaces(), n = poly.dimension();
  std::vector<bool> keep(static_cast<std::size_t>(d), true);
  for (Eigen::Index k = 0; k < d; ++k) {
    std::vector<Eigen::Index> others;
    for (Eigen::Index j = 0; j < d; ++j)
      if (j != k && keep[static_cast<std::size_t>(j)]) others.push_back(j);
    Matrix a(static_cast<Eigen::Index>(others.size()), n);
    Vector b(static_cast<Eigen::Index>(others.size()));
    for (std::size_t i = 0; i < others.size(); ++i) {
      a.row(static_cast<Eigen::Index>(i)) = -poly.normals().row(others[i]);
      b(static_cast<Eigen::Index>(i)) = poly.offsets()(others[i]);
    }
    const auto r = lp::maximize(a, b, -poly.normals().row(k).transpose());
    if (r.status != lp::Status::Optimal) continue;
    const double min_h = -r.value + poly.offsets()(k);
    if (min_h >= -tol * std::max(1.0, poly.normals().row(k).norm())) keep[static_cast<std::size_t>(k)] = false;
  }
  const auto kept = static_cast<Eigen::Index>(std::count(keep.begin(), keep.end(), true));
  Matrix p(kept, n);
  Vector g(kept);
  Eigen::Index row = 0;
  for (Eigen::Index k = 0; k < d; ++k) {
    if (!keep[static_cast<std::size_t>(k)]) continue;
    p.row(row) = poly.normals().row(k);
    g(row++) = poly.offsets()(k);
  }
  return HPolytope(std::move(p), std::move(g));
}

/// All 0-faces, by intersecting every n-subset of facet hyperplanes (n <= 3).
inline std::vector<Vector> enumerate_vertices(const HPolytope& poly) {
  const auto n = static_cast<int>(poly.dimension());
  const auto d = static_cast<int>(poly.num_halfspaces());
  if (n > 3) throw UnsupportedFeature("vertex enumeration supports dimension <= 3, got " + std::to_string(n));
  std::vector<Vector> vertices;
  if (d < n) return vertices;

  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Matrix a(n, n);
  Vector rhs(n);
  for (;;) {
    for (int r = 0; r < n; ++r) {
      a.row(r) = poly.normals().row(idx[static_cast<std::size_t>(r)]);
      rhs(r) = -poly.offsets()(idx[static_cast<std::size_t>(r)]);
    }
    Eigen::FullPivLU<Matrix> lu(a);
    lu.setThreshold(1e-12);
    if (lu.rank() == n) {
      Vector x = lu.solve(rhs);
      bool feasible = true;
      for (int j = 0; j < d && feasible; ++j)
        feasible = poly.h(j, x) >= -1e-9 * std::max(1.0, poly.normals().row(j).norm());
      if (feasible) {
        const bool dup = std::any_of(vertices.begin(), vertices.end(),
                                     [&](const Vector& v) { return (v - x).norm() <= 1e-7; });
        if (!dup) vertices.push_back(std::move(x));
      }
    }
    // next n-combination of [0, d)
    int i = n - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == d - n + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return vertices;
}

/// Affine dimension of a point set; -1 for the empty set.
inline int affine_dimension(const std::vector<Vector>& points, double threshold = 1e-8) {
  if (points.empty()) return -1;
  const Eigen::Index n = points.front().size();
  Matrix diffs(n, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i)
    diffs.col(static_cast<Eigen::Index>(i)) = points[i] - points.front();
  Eigen::JacobiSVD<Matrix> svd(diffs);
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > threshold) ++rank;
  return rank;
}

/// Vertex average. Interior for full-dimensional polytopes; in dimension > 3
/// the Chebyshev center is used instead since vertices are not enumerated.
inline Vector representative_point(const HPolytope& poly) {
  if (poly.dimension() > 3) {
    const auto report = validate_polytope(poly);
    if (!report.full_dimensional) throw GeometryError("representative point of a degenerate polytope");
    return report.chebyshev_center;
  }
  const auto vertices = enumerate_vertices(poly);
  if (vertices.empty()) throw GeometryError("vertex enumeration found no vertices");
  Vector sum = Vector::Zero(poly.dimension());
  for (const auto& v : vertices) sum += v;
  return sum / static_cast<double>(vertices.size());
}

namespace detail {

// Area of a convex planar polygon given in arbitrary order, in the plane with
// orthonormal in-plane basis (u, v).
inline double polygon_area(const std::vector<Vector>& pts, const Vector& u, const Vector& v) {
  if (pts.size() < 3) return 0.0;
  Vector c = Vector::Zero(pts.front().size());
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  std::vector<std::pair<double, std::pair<double, double>>> polar;
  for (const auto& p : pts) {
    const double a = (p - c).dot(u), b = (p - c).dot(v);
    polar.push_back({std::atan2(b, a), {a, b}});
  }
  std::sort(polar.begin(), polar.end());
  double area = 0.0;
  for (std::size_t i = 0; i < polar.size(); ++i) {
    const auto& [x0, y0] = polar[i].second;
    const auto& [x1, y1] = polar[(i + 1) % polar.size()].second;
    area += x0 * y1 - x1 * y0;
  }
  return std::abs(area) / 2.0;
}

}  // namespace detail

inline double volume(const HPolytope& poly) {
  const Eigen::Index n = poly.dimension();
  const auto verts = enumerate_vertices(poly);
  if (verts.empty()) return 0.0;
  if (n == 1) {
    double lo = verts.front()(0), hi = lo;
    for (const auto& v : verts) {
      lo = std::min(lo, v(0));
      hi = std::max(hi, v(0));
    }
    return hi - lo;
  }
  if (n == 2) return detail::polygon_area(verts, Vector::Unit(2, 0), Vector::Unit(2, 1));

  Vector center = Vector::Zero(3);
  for (const auto& v : verts) center += v;
  center /= static_cast<double>(verts.size());
  double total = 0.0;
  for (Eigen::Index j = 0; j < poly.num_halfspaces(); ++j) {
    const Vector p = poly.normals().row(j).transpose();
    const double norm = p.norm();
    if (norm == 0.0) continue;
    std::vector<Vector> on_facet;
    for (const auto& v : verts)
      if (std::abs(poly.h(j, v)) <= 1e-7 * norm) on_facet.push_back(v);
    if (on_facet.size() < 3) continue;
    const Eigen::Vector3d nrm = p / norm;
    const Eigen::Vector3d u =
        nrm.cross(std::abs(nrm(0)) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY()).normalized();
    const Eigen::Vector3d v = nrm.cross(u);
    total += detail::polygon_area(on_facet, u, v) * (poly.h(j, center) / norm) / 3.0;
  }
  return total;
}

struct Facet {
  Vector normal;
  double offset = 0.0;
  RegionId owner = 0;
  std::optional<RegionId> neighbor;  // nullopt: workspace boundary
  Vector center;                     // average of the facet's vertices

  double h(const Vector& x) const { return normal.dot(x) + offset; }
};

/// Common (n-1)-face of two regions, expressed in q's half-space function
/// (p.x + g >= 0 inside q, = 0 on the facet). Returns nullopt when the
/// intersection has affine dimension below n-1.
inline std::optional<Facet> shared_facet(const HPolytope& q, const HPolytope& q_next) {
  const auto inter = enumerate_vertices(q.intersect(q_next));
  const int n = static_cast<int>(q.dimension());
  if (affine_dimension(inter) != n - 1) return std::nullopt;
  for (Eigen::Index j = 0; j < q.num_halfspaces(); ++j) {
    const double scale = std::max(1.0, q.normals().row(j).norm());
    const bool on_plane = std::all_of(inter.begin(), inter.end(),
                                      [&](const Vector& v) { return std::abs(q.h(j, v)) <= 1e-7 * scale; });
    if (!on_plane) continue;
    Facet f;
    f.normal = q.normals().row(j).transpose();
    f.offset = q.offsets()(j);
    f.center = Vector::Zero(q.dimension());
    for (const auto& v : inter) f.center += v;
    f.center /= static_cast<double>(inter.size());
    return f;
  }
  return std::nullopt;
}

class Partition {
 public:
  /// Validates regions (bounded, full-dimensional, inside the workspace,
  /// pairwise interior-disjoint, covering it) and precomputes adjacency.
  static Partition create(HPolytope workspace, std::vector<HPolytope> regions, std::vector<std::string> names) {
    if (regions.size() != names.size()) throw StructuralError("region/name count mismatch");
    if (regions.empty()) throw GeometryError("partition has no regions");
    const auto wreport = validate_polytope(workspace);
    if (!wreport.bounded || !wreport.full_dimensional)
      throw GeometryError("workspace must be bounded and full-dimensional");
    Partition part;
    part.workspace_ = remove_redundant(workspace);
    const Eigen::Index n = workspace.dimension();
    std::map<std::string, RegionId> seen;
    for (std::size_t i = 0; i < regions.size(); ++i) {
      if (regions[i].dimension() != n) throw StructuralError("region " + names[i] + " has wrong dimension");
      if (!seen.emplace(names[i], i).second) throw StructuralError("duplicate region name " + names[i]);
      const auto r = validate_polytope(regions[i]);
      if (!r.bounded) throw GeometryError("region " + names[i] + " is unbounded");
      if (!r.full_dimensional) throw GeometryError("region " + names[i] + " is not full-dimensional");
      part.regions_.push_back(remove_redundant(regions[i]));
    }
    part.names_ = std::move(names);
    part.check_cover();
    for (const auto& r : part.regions_) part.representatives_.push_back(representative_point(r));
    const std::size_t p = part.regions_.size();
    part.adjacency_.assign(p, std::vector<std::optional<Facet>>(p));
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        if (i == j) continue;
        auto f = shared_facet(part.regions_[i], part.regions_[j]);
        if (f) {
          f->owner = i;
          f->neighbor = j;
        }
        part.adjacency_[i][j] = std::move(f);
      }
    }
    return part;
  }

  Eigen::Index dimension() const { return workspace_.dimension(); }
  std::size_t size() const { return regions_.size(); }
  const HPolytope& workspace() const { return workspace_; }
  const HPolytope& region(RegionId i) const { return regions_.at(i); }
  const std::vector<HPolytope>& regions() const { return regions_; }
  const std::string& name(RegionId i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  const Vector& representative(RegionId i) const { return representatives_.at(i); }

  std::optional<RegionId> find(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    return std::nullopt;
  }

  /// Shared facet of regions i and j in region i's convention.
  const std::optional<Facet>& adjacency(RegionId i, RegionId j) const { return adjacency_.at(i).at(j); }
  bool adjacent(RegionId i, RegionId j) const { return i != j && adjacency(i, j).has_value(); }

  /// Index of the region containing x with the largest normalized margin.
  std::optional<RegionId> locate(const Vector& x, double tol = 1e-6) const {
    std::optional<RegionId> best;
    double best_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      const double m = normalized_margin(i, x);
      if (m >= -tol && m > best_margin) {
        best_margin = m;
        best = i;
      }
    }
    return best;
  }

  /// min_j h_j(x)/|p_j| over the region's half-spaces.
  double normalized_margin(RegionId i, const Vector& x) const {
    const auto& r = regions_.at(i);
    double m = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < r.num_halfspaces(); ++j)
      m = std::min(m, r.h(j, x) / r.normals().row(j).norm());
    return m;
  }

 private:
  void check_cover() const {
    const Eigen::Index n = workspace_.dimension();
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      for (std::size_t j = i + 1; j < regions_.size(); ++j) {
        const auto r = validate_polytope(regions_[i].intersect(regions_[j]));
        if (!r.empty && r.chebyshev_radius > 1e-7)
          throw GeometryError("regions " + names_[i] + " and " + names_[j] + " overlap");
      }
    }
    if (n <= 3) {
      double sum = 0.0;
      for (std::size_t i = 0; i < regions_.size(); ++i) {
        for (const auto& v : enumerate_vertices(regions_[i]))
          if (!workspace_.contains(v, 1e-7)) throw GeometryError("region " + names_[i] + " leaves the workspace");
        sum += volume(regions_[i]);
      }
      const double total = volume(workspace_);
      if (std::abs(sum - total) > 1e-6 * total)
        throw GeometryError("regions do not cover the workspace (volume " + std::to_string(sum) + " of " +
                            std::to_string(total) + ")");
      return;
    }
    // Higher dimensions: LP containment plus a fixed-seed sampling cover test.
    const auto [wa, wb] = detail::as_leq(workspace_);
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      const auto [ra, rb] = detail::as_leq(regions_[i]);
      for (Eigen::Index j = 0; j < workspace_.num_halfspaces(); ++j) {
        const auto r = lp::maximize(ra, rb, -workspace_.normals().row(j).transpose());
        if (r.status == lp::Status::Optimal && -r.value + workspace_.offsets()(j) < -1e-7)
          throw GeometryError("region " + names_[i] + " leaves the workspace");
      }
    }
    Vector lo(n), hi(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      lo(k) = -lp::maximize(wa, wb, -Vector::Unit(n, k)).value;
      hi(k) = lp::maximize(wa, wb, Vector::Unit(n, k)).value;
    }
    std::mt19937_64 rng(0x5eedu);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int s = 0; s < 20000; ++s) {
      Vector x(n);
      for (Eigen::Index k = 0; k < n; ++k) x(k) = lo(k) + unit(rng) * (hi(k) - lo(k));
      if (!workspace_.contains(x)) continue;
      const bool covered =
          std::any_of(regions_.begin(), regions_.end(), [&](const HPolytope& r) { return r.contains(x, 1e-9); });
      if (!covered) throw GeometryError("regions do not cover the workspace");
    }
  }

  HPolytope workspace_;
  std::vector<HPolytope> regions_;
  std::vector<std::string> names_;
  std::vector<Vector> representatives_;
  std::vector<std::vector<std::optional<Facet>>> adjacency_;
};

struct AxisCut {
  int axis = 0;
  double value = 0.0;
};

/// Cells of the arrangement of axis-aligned cuts inside the workspace.
/// Grid cells are numbered with axis 0 varying fastest; each merge group
/// names grid cells that together form one box block and become one region.
/// Regions are named q1..qp in order of their smallest grid cell.
inline Partition axis_split(const HPolytope& workspace, const std::vector<AxisCut>& cuts,
                            const std::vector<std::vector<std::size_t>>& merges = {}) {
  const Eigen::Index n = workspace.dimension();
  const auto [wa, wb] = detail::as_leq(workspace);
  std::vector<std::vector<double>> breaks(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto lo = lp::maximize(wa, wb, -Vector::Unit(n, k));
    const auto hi = lp::maximize(wa, wb, Vector::Unit(n, k));
    if (lo.status != lp::Status::Optimal || hi.status != lp::Status::Optimal)
      throw GeometryError("workspace must be bounded for axis_split");
    breaks[static_cast<std::size_t>(k)] = {-lo.value, hi.value};
  }
  for (const auto& cut : cuts) {
    if (cut.axis < 0 || cut.axis >= n) throw StructuralError("cut axis out of range");
    auto& b = breaks[static_cast<std::size_t>(cut.axis)];
    if (!(cut.value > b.front() + 1e-9 && cut.value < b.back() - 1e-9))
      throw GeometryError("cut x" + std::to_string(cut.axis + 1) + " = " + std::to_string(cut.value) +
                          " lies outside the workspace");
    b.insert(b.end() - 1, cut.value);
  }
  std::vector<std::size_t> counts;
  std::size_t total = 1;
  for (auto& b : breaks) {
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    counts.push_back(b.size() - 1);
    total *= b.size() - 1;
  }
  auto multi_index = [&](std::size_t flat) {
    std::vector<std::size_t> m(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < m.size(); ++k) {
      m[k] = flat % counts[k];
      flat /= counts[k];
    }
    return m;
  };
  auto box_region = [&](const std::vector<std::size_t>& lo_idx, const std::vector<std::size_t>& hi_idx) {
    Vector lo(n), hi(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto& b = breaks[static_cast<std::size_t>(k)];
      lo(k) = b[lo_idx[static_cast<std::size_t>(k)]];
      hi(k) = b[hi_idx[static_cast<std::size_t>(k)] + 1];
    }
    return remove_redundant(workspace.intersect(HPolytope::box(lo, hi)));
  };

  std::vector<std::optional<std::size_t>> group_of(total);
  for (std::size_t g = 0; g < merges.size(); ++g) {
    for (auto c : merges[g]) {
      if (c >= total) throw StructuralError("merge references unknown cell " + std::to_string(c));
      if (group_of[c]) throw StructuralError("cell " + std::to_string(c) + " merged twice");
      group_of[c] = g;
    }
  }
  std::vector<HPolytope> regions;
  std::vector<bool> emitted(merges.size(), false);
  for (std::size_t c = 0; c < total; ++c) {
    if (!group_of[c]) {
      const auto m = multi_index(c);
      auto cell = box_region(m, m);
      if (validate_polytope(cell).full_dimensional) regions.push_back(std::move(cell));
      continue;
    }
    const std::size_t g = *group_of[c];
    if (emitted[g]) continue;
    emitted[g] = true;
    std::vector<std::size_t> lo(static_cast<std::size_t>(n), std::numeric_limits<std::size_t>::max()), hi(lo.size(), 0);
    for (auto member : merges[g]) {
      const auto m = multi_index(member);
      for (std::size_t k = 0; k < m.size(); ++k) {
        lo[k] = std::min(lo[k], m[k]);
        hi[k] = std::max(hi[k], m[k]);
      }
    }
    std::size_t block = 1;
    for (std::size_t k = 0; k < lo.size(); ++k) block *= hi[k] - lo[k] + 1;
    if (block != merges[g].size()) throw GeometryError("merge group " + std::to_string(g) + " is not a box block");
    regions.push_back(box_region(lo, hi));
  }
  std::vector<std::string> names;
  for (std::size_t i = 0; i < regions.size(); ++i) names.push_back("q" + std::to_string(i + 1));
  return Partition::create(workspace, std::move(regions), std::move(names));
}

}  // namespace secureplan
