#pragma once

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace fourfield {

/// Sparse multivariate polynomial in `dim` variables (dim = 2 or 3), stored as
/// a map from exponent tuples to coefficients. Used to express the prime bases
/// of the reference elements and to differentiate them exactly.
class Polynomial {
public:
  using Exps = std::array<int, 3>; // unused trailing exponents stay 0

  Polynomial() : dim_(2) {}
  explicit Polynomial(int dim) : dim_(dim) {}

  static Polynomial constant(int dim, double c) {
    Polynomial p(dim);
    if (c != 0.0) p.terms_[{0, 0, 0}] = c;
    return p;
  }

  static Polynomial variable(int dim, int i) {
    Polynomial p(dim);
    Exps e{0, 0, 0};
    e[i] = 1;
    p.terms_[e] = 1.0;
    return p;
  }

  int dim() const { return dim_; }
  bool zero() const { return terms_.empty(); }

  Polynomial& operator+=(const Polynomial& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Polynomial operator+(const Polynomial& o) const {
    Polynomial r = *this;
    r += o;
    return r;
  }
  Polynomial operator-(const Polynomial& o) const { return *this + o * -1.0; }
  Polynomial operator*(double s) const {
    Polynomial r(dim_);
    if (s == 0.0) return r;
    for (const auto& [e, c] : terms_) r.terms_[e] = c * s;
    return r;
  }
  Polynomial operator*(const Polynomial& o) const {
    Polynomial r(dim_);
    for (const auto& [ea, ca] : terms_)
      for (const auto& [eb, cb] : o.terms_)
        r.add_term({ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]}, ca * cb);
    return r;
  }

  Polynomial derivative(int var) const {
    Polynomial r(dim_);
    for (const auto& [e, c] : terms_) {
      if (e[var] == 0) continue;
      Exps d = e;
      d[var] -= 1;
      r.add_term(d, c * e[var]);
    }
    return r;
  }

  double operator()(const Eigen::VectorXd& x) const {
    double v = 0.0;
    for (const auto& [e, c] : terms_) {
      double t = c;
      for (int i = 0; i < dim_; ++i)
        for (int k = 0; k < e[i]; ++k) t *= x[i];
      v += t;
    }
    return v;
  }

  int degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, e[0] + e[1] + e[2]);
    return d;
  }

private:
  void add_term(const Exps& e, double c) {
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      if (c != 0.0) terms_[e] = c;
    } else {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  int dim_;
  std::map<Exps, double> terms_;
};

/// Vector-valued polynomial (one component per spatial dimension, or a single
/// component for scalar fields).
struct VecPoly {
  std::vector<Polynomial> comp;

  int value_size() const { return static_cast<int>(comp.size()); }

  static VecPoly scalar(Polynomial p) { return VecPoly{{std::move(p)}}; }

  static VecPoly unit(int dim, int direction, Polynomial p) {
    VecPoly v;
    v.comp.assign(dim, Polynomial::constant(dim, 0.0));
    v.comp[direction] = std::move(p);
    return v;
  }

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
    Eigen::VectorXd v(value_size());
    for (int c = 0; c < value_size(); ++c) v[c] = comp[c](x);
    return v;
  }
};

/// All monomial exponent tuples of total degree <= k in `dim` variables, in a
/// fixed deterministic order (graded lexicographic).
inline std::vector<std::array<int, 3>> monomial_exponents(int dim, int k) {
  std::vector<std::array<int, 3>> out;
  for (int total = 0; total <= k; ++total) {
    if (dim == 2) {
      for (int a = total; a >= 0; --a) out.push_back({a, total - a, 0});
    } else {
      for (int a = total; a >= 0; --a)
        for (int b = total - a; b >= 0; --b) out.push_back({a, b, total - a - b});
    }
  }
  return out;
}

inline Polynomial monomial(int dim, const std::array<int, 3>& e) {
  Polynomial p = Polynomial::constant(dim, 1.0);
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < e[i]; ++k) p = p * Polynomial::variable(dim, i);
  return p;
}

} // namespace fourfield
