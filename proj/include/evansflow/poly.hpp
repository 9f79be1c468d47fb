// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "evansflow/types.hpp"

namespace evansflow {

// Sparse multivariate polynomial in up to kMaxDim real variables.
// Coefficient tables are kept in a canonical (sorted, merged) form so that
// derivatives and symmetry checks are exact operations on coefficients.
class Polynomial {
 public:
  using Exponents = std::array<int, kMaxDim>;

  explicit Polynomial(int nvars = 0) : nvars_(nvars) {}

  static Polynomial constant(int nvars, Real c);
  static Polynomial variable(int nvars, int j);

  int nvars() const { return nvars_; }
  int degree() const;
  bool is_zero(Real tol = 0.0) const;

  void add_term(const Exponents& exp, Real coeff);
  void canonicalize(Real drop_tol = 0.0);

  Real eval(const Vec& v) const;
  Real coefficient(const Exponents& exp) const;

  Polynomial derivative(int j) const;

  Polynomial& operator+=(const Polynomial& rhs);
  Polynomial& operator-=(const Polynomial& rhs);
  Polynomial& operator*=(Real c);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Real c, Polynomial p) { return p *= c; }
  Polynomial operator*(const Polynomial& rhs) const;

  // p(A v + b); substitution preserves the total degree.
  Polynomial substitute_affine(const Mat& A, const Vec& b) const;

  bool same_coefficients(const Polynomial& other, Real tol = 0.0) const;

  struct Term {
    Exponents exp;
    Real coeff;
  };
  const std::vector<Term>& terms() const { return terms_; }

 private:
  int nvars_;
  std::vector<Term> terms_;
};

// Component map R^n -> R^n given by one polynomial per component.
using PolyMap = std::vector<Polynomial>;

Vec eval(const PolyMap& f, const Vec& v);
PolyMap jacobian_row_map(const PolyMap& f, int j);  // d f / d v_j, all components
Mat jacobian(const std::vector<PolyMap>& jac, const Vec& v);

// Exact check that the Jacobian of f is symmetric for every v, i.e. that f is
// a gradient field: d_j f_i == d_i f_j as polynomials.
bool jacobian_symmetric(const PolyMap& f, Real tol = 0.0);

// Averages the coefficients of d_j f_i and d_i f_j pairs; removes rounding
// noise after an affine change of variables that is symmetric in exact
// arithmetic.
PolyMap symmetrize_jacobian(const PolyMap& f);

PolyMap compose_affine(const PolyMap& f, const Mat& A, const Vec& b);
PolyMap linear_combination(Real a, const PolyMap& f, Real b, const PolyMap& g);
PolyMap left_multiply(const Mat& M, const PolyMap& f);

}  // namespace evansflow
