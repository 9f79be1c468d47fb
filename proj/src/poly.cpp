// SPDX-License-Identifier: Apache-2.0
#include "evansflow/poly.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace evansflow {

namespace {

bool exp_less(const Polynomial::Exponents& a, const Polynomial::Exponents& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

Polynomial Polynomial::constant(int nvars, Real c) {
  Polynomial p(nvars);
  Exponents e{};
  p.add_term(e, c);
  p.canonicalize();
  return p;
}

Polynomial Polynomial::variable(int nvars, int j) {
  Polynomial p(nvars);
  Exponents e{};
  e[j] = 1;
  p.add_term(e, 1.0);
  p.canonicalize();
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& t : terms_) {
    int td = 0;
    for (int j = 0; j < nvars_; ++j) td += t.exp[j];
    d = std::max(d, td);
  }
  return d;
}

bool Polynomial::is_zero(Real tol) const {
  for (const auto& t : terms_)
    if (std::abs(t.coeff) > tol) return false;
  return true;
}

void Polynomial::add_term(const Exponents& exp, Real coeff) {
  terms_.push_back(Term{exp, coeff});
}

void Polynomial::canonicalize(Real drop_tol) {
  std::sort(terms_.begin(), terms_.end(),
            [](const Term& a, const Term& b) { return exp_less(a.exp, b.exp); });
  std::vector<Term> merged;
  for (const auto& t : terms_) {
    if (!merged.empty() && merged.back().exp == t.exp)
      merged.back().coeff += t.coeff;
    else
      merged.push_back(t);
  }
  std::erase_if(merged, [&](const Term& t) { return std::abs(t.coeff) <= drop_tol; });
  terms_ = std::move(merged);
}

Real Polynomial::eval(const Vec& v) const {
  Real sum = 0.0;
  for (const auto& t : terms_) {
    Real m = t.coeff;
    for (int j = 0; j < nvars_; ++j)
      for (int p = 0; p < t.exp[j]; ++p) m *= v[j];
    sum += m;
  }
  return sum;
}

Real Polynomial::coefficient(const Exponents& exp) const {
  for (const auto& t : terms_)
    if (t.exp == exp) return t.coeff;
  return 0.0;
}

Polynomial Polynomial::derivative(int j) const {
  Polynomial d(nvars_);
  for (const auto& t : terms_) {
    if (t.exp[j] == 0) continue;
    Term s = t;
    s.coeff *= static_cast<Real>(t.exp[j]);
    s.exp[j] -= 1;
    d.terms_.push_back(s);
  }
  d.canonicalize();
  return d;
}

Polynomial& Polynomial::operator+=(const Polynomial& rhs) {
  terms_.insert(terms_.end(), rhs.terms_.begin(), rhs.terms_.end());
  canonicalize();
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& rhs) {
  for (const auto& t : rhs.terms_) terms_.push_back(Term{t.exp, -t.coeff});
  canonicalize();
  return *this;
}

Polynomial& Polynomial::operator*=(Real c) {
  for (auto& t : terms_) t.coeff *= c;
  canonicalize();
  return *this;
}

Polynomial Polynomial::operator*(const Polynomial& rhs) const {
  Polynomial prod(nvars_);
  for (const auto& a : terms_)
    for (const auto& b : rhs.terms_) {
      Term t;
      t.coeff = a.coeff * b.coeff;
      for (int j = 0; j < kMaxDim; ++j) t.exp[j] = a.exp[j] + b.exp[j];
      prod.terms_.push_back(t);
    }
  prod.canonicalize();
  return prod;
}

Polynomial Polynomial::substitute_affine(const Mat& A, const Vec& b) const {
  const int n = nvars_;
  // Linear forms L_j(w) = sum_i A(j,i) w_i + b(j) replacing variable j.
  std::vector<Polynomial> forms;
  forms.reserve(n);
  for (int j = 0; j < n; ++j) {
    Polynomial lf(n);
    Exponents e{};
    lf.add_term(e, b[j]);
    for (int i = 0; i < n; ++i) {
      Exponents ei{};
      ei[i] = 1;
      lf.add_term(ei, A(j, i));
    }
    lf.canonicalize();
    forms.push_back(lf);
  }
  Polynomial out(n);
  for (const auto& t : terms_) {
    Polynomial m = Polynomial::constant(n, t.coeff);
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < t.exp[j]; ++p) m = m * forms[j];
    out += m;
  }
  out.canonicalize();
  return out;
}

bool Polynomial::same_coefficients(const Polynomial& other, Real tol) const {
  Polynomial diff = *this;
  diff -= other;
  return diff.is_zero(tol);
}

Vec eval(const PolyMap& f, const Vec& v) {
  Vec out(static_cast<int>(f.size()));
  for (size_t i = 0; i < f.size(); ++i) out[static_cast<int>(i)] = f[i].eval(v);
  return out;
}

PolyMap jacobian_row_map(const PolyMap& f, int j) {
  PolyMap out;
  out.reserve(f.size());
  for (const auto& fi : f) out.push_back(fi.derivative(j));
  return out;
}

Mat jacobian(const std::vector<PolyMap>& jac, const Vec& v) {
  const int n = static_cast<int>(jac.size());
  Mat J(n, n);
  for (int j = 0; j < n; ++j) {
    Vec col = eval(jac[static_cast<size_t>(j)], v);
    J.col(j) = col;
  }
  return J;
}

bool jacobian_symmetric(const PolyMap& f, Real tol) {
  const int n = static_cast<int>(f.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!f[static_cast<size_t>(i)].derivative(j).same_coefficients(
              f[static_cast<size_t>(j)].derivative(i), tol))
        return false;
  return true;
}

PolyMap symmetrize_jacobian(const PolyMap& f) {
  // Integrate each monomial of each component into a shared potential
  // coefficient, average the estimates and re-differentiate. A gradient
  // field is reproduced exactly; rounding noise is projected out.
  const int n = static_cast<int>(f.size());
  const int nvars = f.empty() ? 0 : f[0].nvars();
  std::map<Polynomial::Exponents, Real> pot;
  for (int m = 0; m < n; ++m) {
    for (const auto& t : f[static_cast<size_t>(m)].terms()) {
      Polynomial::Exponents cap = t.exp;
      cap[m] += 1;
      pot[cap] += t.coeff / static_cast<Real>(cap[m]);
    }
  }
  PolyMap out(static_cast<size_t>(n), Polynomial(nvars));
  for (const auto& [cap, sum] : pot) {
    int members = 0;
    for (int m = 0; m < n; ++m)
      if (cap[m] > 0) members += 1;
    const Real c = sum / static_cast<Real>(members);
    for (int m = 0; m < n; ++m) {
      if (cap[m] == 0) continue;
      Polynomial::Exponents e = cap;
      e[m] -= 1;
      out[static_cast<size_t>(m)].add_term(e, c * static_cast<Real>(cap[m]));
    }
  }
  for (auto& p : out) p.canonicalize(1e-300);
  return out;
}

PolyMap compose_affine(const PolyMap& f, const Mat& A, const Vec& b) {
  PolyMap out;
  out.reserve(f.size());
  for (const auto& fi : f) out.push_back(fi.substitute_affine(A, b));
  return out;
}

PolyMap linear_combination(Real a, const PolyMap& f, Real b, const PolyMap& g) {
  PolyMap out;
  out.reserve(f.size());
  for (size_t i = 0; i < f.size(); ++i) {
    Polynomial p = f[i];
    p *= a;
    Polynomial q = g[i];
    q *= b;
    p += q;
    out.push_back(p);
  }
  return out;
}

PolyMap left_multiply(const Mat& M, const PolyMap& f) {
  const int n = static_cast<int>(f.size());
  PolyMap out;
  out.reserve(f.size());
  for (int i = 0; i < n; ++i) {
    Polynomial p(f[0].nvars());
    for (int j = 0; j < n; ++j) {
      Polynomial q = f[static_cast<size_t>(j)];
      q *= M(i, j);
      p += q;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace evansflow
