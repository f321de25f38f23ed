#include "contopt/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace contopt {

namespace {

TriangleRule make_rule1() { return {{{1.0 / 3, 1.0 / 3, 1.0 / 3}}, {1.0}, 1}; }

TriangleRule make_rule2() {
  return {{{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}},
          {1.0 / 3, 1.0 / 3, 1.0 / 3},
          2};
}

// Dunavant degree 4.
TriangleRule make_rule4() {
  TriangleRule r;
  r.degree = 4;
  const double a1 = 0.445948490915965, w1 = 0.223381589678011;
  const double a2 = 0.091576213509771, w2 = 0.109951743655322;
  for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
    const double b = 1.0 - 2.0 * a;
    r.points.push_back({b, a, a});
    r.points.push_back({a, b, a});
    r.points.push_back({a, a, b});
    for (int k = 0; k < 3; ++k) r.weights.push_back(w);
  }
  return r;
}

// Radon 7-point degree 5.
TriangleRule make_rule5() {
  TriangleRule r;
  r.degree = 5;
  const double s15 = std::sqrt(15.0);
  r.points.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3});
  r.weights.push_back(9.0 / 40);
  const double a1 = (6.0 - s15) / 21.0, w1 = (155.0 - s15) / 1200.0;
  const double a2 = (6.0 + s15) / 21.0, w2 = (155.0 + s15) / 1200.0;
  for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
    const double b = 1.0 - 2.0 * a;
    r.points.push_back({b, a, a});
    r.points.push_back({a, b, a});
    r.points.push_back({a, a, b});
    for (int k = 0; k < 3; ++k) r.weights.push_back(w);
  }
  return r;
}

LineRule make_gauss(int n) {
  // Nodes/weights on [-1,1], mapped to [0,1].
  static const std::vector<std::vector<std::pair<double, double>>> table = {
      {{0.0, 2.0}},
      {{-0.5773502691896257, 1.0}, {0.5773502691896257, 1.0}},
      {{-0.7745966692414834, 5.0 / 9}, {0.0, 8.0 / 9}, {0.7745966692414834, 5.0 / 9}},
      {{-0.8611363115940526, 0.3478548451374538},
       {-0.3399810435848563, 0.6521451548625461},
       {0.3399810435848563, 0.6521451548625461},
       {0.8611363115940526, 0.3478548451374538}},
      {{-0.9061798459386640, 0.2369268850561891},
       {-0.5384693101056831, 0.4786286704993665},
       {0.0, 0.5688888888888889},
       {0.5384693101056831, 0.4786286704993665},
       {0.9061798459386640, 0.2369268850561891}}};
  LineRule r;
  r.degree = 2 * n - 1;
  for (auto [x, w] : table[n - 1]) {
    r.points.push_back(0.5 * (x + 1.0));
    r.weights.push_back(0.5 * w);
  }
  return r;
}

}  // namespace

const TriangleRule& triangle_rule(int degree) {
  static const TriangleRule r1 = make_rule1(), r2 = make_rule2(), r4 = make_rule4(),
                            r5 = make_rule5();
  if (degree <= 1) return r1;
  if (degree == 2) return r2;
  if (degree <= 4) return r4;
  if (degree == 5) return r5;
  throw std::invalid_argument("no triangle rule of degree " + std::to_string(degree));
}

const LineRule& gauss_rule(int n) {
  static const std::array<LineRule, 5> rules = {make_gauss(1), make_gauss(2), make_gauss(3),
                                                make_gauss(4), make_gauss(5)};
  if (n < 1 || n > 5) throw std::invalid_argument("gauss_rule: n must be in 1..5");
  return rules[n - 1];
}

const LineRule& simpson_rule() {
  static const LineRule rule{{0.0, 0.5, 1.0}, {1.0 / 6, 4.0 / 6, 1.0 / 6}, 3};
  return rule;
}

}  // namespace contopt
