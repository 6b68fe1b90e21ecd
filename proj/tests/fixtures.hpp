#pragma once

// Shared geometric fixtures: the Example-1 grid and the two-drone workspace
// (same layout as scenarios/casestudy.scenario).

#include <secureplan/abstraction.hpp>
#include <secureplan/geometry.hpp>

#include <array>
#include <string>
#include <vector>

namespace secureplan::test {

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline HPolytope box2(double x0, double x1, double y0, double y1) {
  return HPolytope::box(vec({x0, y0}), vec({x1, y1}));
}

inline HPolytope poly2(std::vector<std::array<double, 3>> rows) {
  Matrix p(static_cast<Eigen::Index>(rows.size()), 2);
  Vector g(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    p(static_cast<Eigen::Index>(i), 0) = rows[i][0];
    p(static_cast<Eigen::Index>(i), 1) = rows[i][1];
    g(static_cast<Eigen::Index>(i)) = rows[i][2];
  }
  return HPolytope(p, g);
}

// Example grid, three rows of two cells:
//   A F   (y1)
//   B E   (y2)
//   C D   (y3)
inline Partition example1_partition() {
  return Partition::create(box2(0, 2, 0, 3),
                           {box2(0, 1, 2, 3), box2(0, 1, 1, 2), box2(0, 1, 0, 1), box2(1, 2, 0, 1),
                            box2(1, 2, 1, 2), box2(1, 2, 2, 3)},
                           {"A", "B", "C", "D", "E", "F"});
}

// [0,10]x[0,5]; south band x2<=2, north band x2>=2, diagonal facet
// x1 - x2 + 2 = 0 bounding q2 and q6 from the upper-left triangle q7.
inline Partition casestudy_partition() {
  return Partition::create(
      box2(0, 10, 0, 5),
      {
          box2(6, 10, 0, 2),                                                   // q1
          poly2({{0, 1, -3.5}, {0, -1, 5}, {1, -1, 2}, {-1, 0, 6}}),           // q2
          box2(6, 10, 2, 5),                                                   // q3
          box2(0, 4, 0, 2),                                                    // q4
          box2(4, 6, 0, 2),                                                    // q5
          poly2({{0, 1, -2}, {0, -1, 3.5}, {1, -1, 2}, {-1, 0, 6}}),           // q6
          poly2({{1, 0, 0}, {0, -1, 5}, {-1, 1, -2}}),                         // q7
      },
      {"q1", "q2", "q3", "q4", "q5", "q6", "q7"});
}

inline AgentModel integrator_agent(const Partition& part, const std::string& name, std::vector<RegionId> initial,
                                   double umax = 1.0) {
  const auto n = part.dimension();
  AgentModel a;
  a.name = name;
  a.A = Matrix::Zero(n, n);
  a.B = Matrix::Identity(n, n);
  a.b = Vector::Zero(n);
  a.input_set = HPolytope::box(Vector::Constant(n, -umax), Vector::Constant(n, umax));
  a.initial = std::move(initial);
  a.secret.assign(part.size(), false);
  a.observation.assign(part.size(), "y");
  a.labels.assign(part.size(), {});
  return a;
}

// Secrets {A,B,F}; observation rows y1={A,F}, y2={B,E}, y3={C,D}.
inline Team example1_team() {
  Partition part = example1_partition();
  std::vector<AgentModel> agents;
  for (std::size_t i = 0; i < 2; ++i) {
    auto a = integrator_agent(part, "agent" + std::to_string(i + 1), {*part.find(i == 0 ? "D" : "E")});
    const std::array<const char*, 6> obs = {"y1", "y2", "y3", "y3", "y2", "y1"};
    for (RegionId q = 0; q < 6; ++q) {
      a.observation[q] = obs[q];
      a.secret[q] = part.name(q) == "A" || part.name(q) == "B" || part.name(q) == "F";
    }
    agents.push_back(std::move(a));
  }
  return Team(std::move(part), std::move(agents));
}

inline AgentModel drone(const Partition& part, const std::string& name) {
  AgentModel a = integrator_agent(part, name, {*part.find("q4")}, 3.0);
  a.A.resize(2, 2);
  a.A << 0.1, -0.15, -0.1, 0.2;
  a.b = vec({0.2, 0.3});
  const std::array<const char*, 7> obs = {"y1", "y2", "y2", "y1", "y1", "y2", "y2"};
  const std::array<std::vector<std::string>, 7> labels = {
      std::vector<std::string>{"scan"}, {"encode"}, {"inspect"}, {}, {"obs"}, {}, {"transmit"}};
  for (RegionId q = 0; q < 7; ++q) {
    a.observation[q] = obs[q];
    a.labels[q] = labels[q];
  }
  a.secret[0] = a.secret[2] = true;
  return a;
}

// Two drones with the case-study dynamics, secrets q1 and q3, obstacle q5,
// south band y1 = {q1, q4, q5}, north band y2 = {q2, q3, q6, q7}.
inline Team casestudy_team() {
  Partition part = casestudy_partition();
  std::vector<AgentModel> agents = {drone(part, "drone1"), drone(part, "drone2")};
  return Team(std::move(part), std::move(agents));
}

inline Tuple regions(const Partition& part, std::initializer_list<const char*> names) {
  Tuple t;
  for (auto n : names) t.push_back(*part.find(n));
  return t;
}

}  // namespace secureplan::test
