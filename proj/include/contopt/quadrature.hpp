#pragma once

#include <array>
#include <vector>

namespace contopt {

// Triangle rule in barycentric coordinates; weights sum to 1 (multiply by area).
struct TriangleRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;
};

// Rules exact up to the requested degree: 1 (1 pt), 2 (3 pts), 4 (6 pts), 5 (7 pts).
const TriangleRule& triangle_rule(int degree);

// Gauss-Legendre on [0,1]; weights sum to 1 (multiply by length).
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
  int degree = 0;
};

// n = 1..5 points, exact to degree 2n-1.
const LineRule& gauss_rule(int n);

// Simpson (3-point Gauss-Lobatto) on [0,1]: nodes at the ends and midpoint.
const LineRule& simpson_rule();

}  // namespace contopt
