#pragma once

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "fourfield/errors.hpp"

namespace fourfield {

/// Incompressible Neo-Hookean material, P(F) = mu F - p F^{-T} with F = I + K.
/// The linearization interface admits a general elasticity tensor acting on a
/// direction M; for Neo-Hookean it reduces to mu M.
struct NeoHookean {
  double mu = 1.0;

  explicit NeoHookean(double mu_ = 1.0) : mu(mu_) {
    if (mu <= 0.0) throw ConfigError("NeoHookean: mu must be positive");
  }

  template <int Dim>
  using Mat = Eigen::Matrix<double, Dim, Dim>;

  /// First Piola-Kirchhoff stress P = mu (I+K) - p (I+K)^{-T}.
  template <int Dim>
  Mat<Dim> first_pk(const Mat<Dim>& K, double p) const {
    Mat<Dim> F = Mat<Dim>::Identity() + K;
    const double det = F.determinant();
    if (det <= 0.0) throw StateDomainError("first_pk: det(I+K) <= 0");
    return mu * F - p * F.inverse().transpose();
  }

  /// A(K) : M, the derivative of the elastic part mu (I+K) in direction M.
  template <int Dim>
  Mat<Dim> elasticity_apply(const Mat<Dim>& /*K*/, const Mat<Dim>& M) const {
    return mu * M;
  }

  /// Directional derivative of -p (I+K)^{-T} in direction M, i.e. the term
  /// p (I+K)^{-T} M^T (I+K)^{-T} on the left side of the Newton form.
  template <int Dim>
  static Mat<Dim> pressure_linearization(const Mat<Dim>& K, double p, const Mat<Dim>& M) {
    Mat<Dim> F = Mat<Dim>::Identity() + K;
    const double det = F.determinant();
    if (det <= 0.0) throw StateDomainError("pressure_linearization: det(I+K) <= 0");
    Mat<Dim> FinvT = F.inverse().transpose();
    return p * FinvT * M.transpose() * FinvT;
  }

  /// det(I+K) - 1.
  template <int Dim>
  static double incompressibility_residual(const Mat<Dim>& K) {
    return (Mat<Dim>::Identity() + K).determinant() - 1.0;
  }

  /// det(I+K) tr[(I+K)^{-1} M], the derivative of det(I+K) in direction M.
  template <int Dim>
  static double incompressibility_linearization(const Mat<Dim>& K, const Mat<Dim>& M) {
    Mat<Dim> F = Mat<Dim>::Identity() + K;
    const double det = F.determinant();
    if (det <= 0.0) throw StateDomainError("incompressibility_linearization: det(I+K) <= 0");
    return det * (F.inverse() * M).trace();
  }
};

/// Manufactured exact solution with analytic derivatives. Both solutions are
/// simple shears in the first coordinate direction driven by the second
/// coordinate, so det(I + grad U) = 1 holds pointwise.
template <int Dim>
struct ExactSolution {
  using Vec = Eigen::Matrix<double, Dim, 1>;
  using Mat = Eigen::Matrix<double, Dim, Dim>;

  std::function<Vec(const Vec&)> displacement;
  std::function<Mat(const Vec&)> displacement_gradient;
  std::function<double(const Vec&)> pressure;
  // second derivative of the shear profile and first derivative of pressure,
  // both functions of the second coordinate (enough for the body force)
  std::function<double(double)> shear_second_derivative;
  std::function<double(double)> pressure_derivative;
};

/// Unit-square solution: U = (f(Y), 0) with f(Y) = Y^3/2 + sin(pi Y/2)/2 and
/// p = sin(pi Y/2), where Y is the second coordinate.
inline ExactSolution<2> exact_square() {
  ExactSolution<2> e;
  auto f = [](double y) { return 0.5 * y * y * y + 0.5 * std::sin(M_PI_2 * y); };
  auto fp = [](double y) { return 1.5 * y * y + 0.5 * M_PI_2 * std::cos(M_PI_2 * y); };
  e.displacement = [f](const Eigen::Vector2d& x) { return Eigen::Vector2d(f(x[1]), 0.0); };
  e.displacement_gradient = [fp](const Eigen::Vector2d& x) {
    Eigen::Matrix2d K = Eigen::Matrix2d::Zero();
    K(0, 1) = fp(x[1]);
    return K;
  };
  e.pressure = [](const Eigen::Vector2d& x) { return std::sin(M_PI_2 * x[1]); };
  e.shear_second_derivative = [](double y) { return 3.0 * y - 0.25 * M_PI * M_PI_2 * std::sin(M_PI_2 * y); };
  e.pressure_derivative = [](double y) { return M_PI_2 * std::cos(M_PI_2 * y); };
  return e;
}

/// Unit-cube solution: U = (g(Y), 0, 0) with g(Y) = Y^3/4 + sin(pi Y/2)/4 and
/// p = sin(pi Y/2)/2, Y the second coordinate.
inline ExactSolution<3> exact_cube() {
  ExactSolution<3> e;
  auto g = [](double y) { return 0.25 * y * y * y + 0.25 * std::sin(M_PI_2 * y); };
  auto gp = [](double y) { return 0.75 * y * y + 0.25 * M_PI_2 * std::cos(M_PI_2 * y); };
  e.displacement = [g](const Eigen::Vector3d& x) { return Eigen::Vector3d(g(x[1]), 0.0, 0.0); };
  e.displacement_gradient = [gp](const Eigen::Vector3d& x) {
    Eigen::Matrix3d K = Eigen::Matrix3d::Zero();
    K(0, 1) = gp(x[1]);
    return K;
  };
  e.pressure = [](const Eigen::Vector3d& x) { return 0.5 * std::sin(M_PI_2 * x[1]); };
  e.shear_second_derivative = [](double y) { return 1.5 * y - 0.125 * M_PI * M_PI_2 * std::sin(M_PI_2 * y); };
  e.pressure_derivative = [](double y) { return 0.5 * M_PI_2 * std::cos(M_PI_2 * y); };
  return e;
}

/// Exact stress field P_e = mu (I + K_e) - p_e (I + K_e)^{-T}.
template <int Dim>
std::function<Eigen::Matrix<double, Dim, Dim>(const Eigen::Matrix<double, Dim, 1>&)>
exact_stress(const NeoHookean& mat, const ExactSolution<Dim>& e) {
  return [mat, e](const Eigen::Matrix<double, Dim, 1>& x) {
    return mat.first_pk<Dim>(e.displacement_gradient(x), e.pressure(x));
  };
}

/// Body force from the strong form, B = -div P_e. For the shear solutions
/// P depends on the second coordinate only:
/// (div P)_1 = mu f''(Y), (div P)_2 = -p'(Y), other components zero.
template <int Dim>
std::function<Eigen::Matrix<double, Dim, 1>(const Eigen::Matrix<double, Dim, 1>&)>
body_force(const NeoHookean& mat, const ExactSolution<Dim>& e) {
  return [mat, e](const Eigen::Matrix<double, Dim, 1>& x) {
    Eigen::Matrix<double, Dim, 1> B = Eigen::Matrix<double, Dim, 1>::Zero();
    const double y = x[1];
    B[0] = -mat.mu * e.shear_second_derivative(y);
    B[1] = e.pressure_derivative(y);
    return B;
  };
}

/// Traction T = P_e N for a unit outward normal N on Gamma2.
template <int Dim>
std::function<Eigen::Matrix<double, Dim, 1>(const Eigen::Matrix<double, Dim, 1>&,
                                            const Eigen::Matrix<double, Dim, 1>&)>
exact_traction(const NeoHookean& mat, const ExactSolution<Dim>& e) {
  auto P = exact_stress(mat, e);
  return [P](const Eigen::Matrix<double, Dim, 1>& x, const Eigen::Matrix<double, Dim, 1>& N) {
    return Eigen::Matrix<double, Dim, 1>(P(x) * N);
  };
}

} // namespace fourfield
