#pragma once

#include <array>
#include <cstddef>

#include <boost/math/quadrature/gauss.hpp>

namespace impactlab::detail {

// 7-point Gauss-Legendre rule on [a, b]; exact for polynomials of degree 13.
class GaussLegendre7 {
 public:
  static constexpr std::size_t points = 7;

  GaussLegendre7() {
    using rule = boost::math::quadrature::gauss<double, 7>;
    const auto& abs = rule::abscissa();
    const auto& w = rule::weights();
    std::size_t i = 0;
    for (std::size_t j = abs.size(); j-- > 1;) {
      nodes_[i] = -abs[j];
      weights_[i++] = w[j];
    }
    for (std::size_t j = 0; j < abs.size(); ++j) {
      nodes_[i] = abs[j];
      weights_[i++] = w[j];
    }
  }

  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < points; ++i) s += weights_[i] * f(mid + half * nodes_[i]);
    return half * s;
  }

  // Nodes and weights mapped onto [a, b].
  void map(double a, double b, std::array<double, points>& t, std::array<double, points>& w) const {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < points; ++i) {
      t[i] = mid + half * nodes_[i];
      w[i] = half * weights_[i];
    }
  }

 private:
  std::array<double, points> nodes_{};
  std::array<double, points> weights_{};
};

inline const GaussLegendre7& gauss7() {
  static const GaussLegendre7 rule;
  return rule;
}

}  // namespace impactlab::detail
