#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "fourfield/errors.hpp"

namespace fourfield {

/// Quadrature rule on a reference domain. Points are rows of `points`;
/// weights carry the reference measure (1/2 for the unit triangle, 1/6 for
/// the unit tetrahedron, 1 for the unit interval).
struct QuadratureRule {
  Eigen::MatrixXd points; // npts x dim
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(points.cols()); }
};

/// Gauss-Legendre rule with `n` points on [0,1]; exact for degree 2n-1.
/// Nodes found by Newton iteration on the Legendre polynomial.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw ConfigError("gauss_legendre: need at least one point");
  QuadratureRule r;
  r.points.resize(n, 1);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // initial guess on [-1,1]
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // evaluate P_n and P_n' by recurrence
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double pn = (n == 0) ? 1.0 : (n == 1 ? x : p1);
      dp = n * (x * pn - p0) / (x * x - 1.0);
      double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.points(i, 0) = 0.5 * (x + 1.0);
    r.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

/// Quadrature on the unit simplex exact for polynomials of total degree
/// <= `degree`, built by collapsing tensor Gauss rules (Duffy transform).
inline QuadratureRule simplex_rule(int dim, int degree) {
  if (dim != 1 && dim != 2 && dim != 3)
    throw ConfigError("simplex_rule: dim must be 1, 2 or 3");
  if (degree < 0 || degree > 30)
    throw ConfigError("simplex_rule: unsupported degree");

  if (dim == 1) {
    return gauss_legendre(degree / 2 + 1);
  }
  if (dim == 2) {
    // x = u, y = v(1-u); the Jacobian (1-u) raises the u-degree by one.
    QuadratureRule gu = gauss_legendre((degree + 1) / 2 + 1);
    QuadratureRule gv = gauss_legendre(degree / 2 + 1);
    QuadratureRule r;
    const int n = gu.size() * gv.size();
    r.points.resize(n, 2);
    r.weights.resize(n);
    int q = 0;
    for (int i = 0; i < gu.size(); ++i)
      for (int j = 0; j < gv.size(); ++j, ++q) {
        const double u = gu.points(i, 0), v = gv.points(j, 0);
        r.points(q, 0) = u;
        r.points(q, 1) = v * (1.0 - u);
        r.weights[q] = gu.weights[i] * gv.weights[j] * (1.0 - u);
      }
    return r;
  }
  // x = u, y = v(1-u), z = w(1-u)(1-v); Jacobian (1-u)^2 (1-v).
  QuadratureRule gu = gauss_legendre((degree + 2) / 2 + 1);
  QuadratureRule gv = gauss_legendre((degree + 1) / 2 + 1);
  QuadratureRule gw = gauss_legendre(degree / 2 + 1);
  QuadratureRule r;
  const int n = gu.size() * gv.size() * gw.size();
  r.points.resize(n, 3);
  r.weights.resize(n);
  int q = 0;
  for (int i = 0; i < gu.size(); ++i)
    for (int j = 0; j < gv.size(); ++j)
      for (int k = 0; k < gw.size(); ++k, ++q) {
        const double u = gu.points(i, 0), v = gv.points(j, 0), w = gw.points(k, 0);
        r.points(q, 0) = u;
        r.points(q, 1) = v * (1.0 - u);
        r.points(q, 2) = w * (1.0 - u) * (1.0 - v);
        r.weights[q] = gu.weights[i] * gv.weights[j] * gw.weights[k] * (1.0 - u) * (1.0 - u) * (1.0 - v);
      }
  return r;
}

} // namespace fourfield
