// Implementation of the exact linear algebra layer: Smith/Hermite forms with
// transforms, Bareiss determinants, Berkowitz characteristic polynomials,
// exact signatures, kernels, saturation, and rational Gaussian elimination.
#include <latt/exact.hpp>

#include <algorithm>
#include <ostream>
#include <utility>

namespace latt {

namespace {

// |a| < |b| for pivot selection.
bool abs_less(const Int& a, const Int& b) {
  return mpz_cmpabs(a.get_mpz_t(), b.get_mpz_t()) < 0;
}

bool divides(const Int& d, const Int& a) {
  return mpz_divisible_p(a.get_mpz_t(), d.get_mpz_t()) != 0;
}

Int floor_div(const Int& a, const Int& b) {
  Int q;
  mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

void sym_swap(RatMat& a, std::size_t i, std::size_t j) {
  if (i == j) return;
  for (std::size_t t = 0; t < a.cols(); ++t) std::swap(a(i, t), a(j, t));
  for (std::size_t t = 0; t < a.rows(); ++t) std::swap(a(t, i), a(t, j));
}

// row_i += row_j and col_i += col_j: congruence by a transvection.
void sym_add(RatMat& a, std::size_t i, std::size_t j) {
  for (std::size_t t = 0; t < a.cols(); ++t) a(i, t) += a(j, t);
  for (std::size_t t = 0; t < a.rows(); ++t) a(t, i) += a(t, j);
}

}  // namespace

// ---------------------------------------------------------------------------
// Matrix plumbing.

IntMat::IntMat(std::initializer_list<std::initializer_list<Int>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  a_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_)
      throw std::invalid_argument("IntMat: ragged initializer");
    a_.insert(a_.end(), r.begin(), r.end());
  }
}

IntMat IntMat::identity(std::size_t n) {
  IntMat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

IntVec IntMat::row(std::size_t i) const {
  IntVec v(cols_);
  for (std::size_t j = 0; j < cols_; ++j) v[j] = (*this)(i, j);
  return v;
}

IntVec IntMat::col(std::size_t j) const {
  IntVec v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

void IntMat::set_row(std::size_t i, const IntVec& v) {
  if (v.size() != cols_) throw std::invalid_argument("set_row: length mismatch");
  for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = v[j];
}

void IntMat::swap_rows(std::size_t i, std::size_t j) {
  if (i == j) return;
  for (std::size_t t = 0; t < cols_; ++t) std::swap((*this)(i, t), (*this)(j, t));
}

void IntMat::swap_cols(std::size_t i, std::size_t j) {
  if (i == j) return;
  for (std::size_t t = 0; t < rows_; ++t) std::swap((*this)(t, i), (*this)(t, j));
}

void IntMat::add_row(std::size_t i, std::size_t j, const Int& c) {
  for (std::size_t t = 0; t < cols_; ++t) (*this)(i, t) += c * (*this)(j, t);
}

void IntMat::add_col(std::size_t i, std::size_t j, const Int& c) {
  for (std::size_t t = 0; t < rows_; ++t) (*this)(t, i) += c * (*this)(t, j);
}

void IntMat::negate_row(std::size_t i) {
  for (std::size_t t = 0; t < cols_; ++t) (*this)(i, t) = -(*this)(i, t);
}

RatMat::RatMat(std::initializer_list<std::initializer_list<Rat>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  a_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_)
      throw std::invalid_argument("RatMat: ragged initializer");
    a_.insert(a_.end(), r.begin(), r.end());
  }
}

RatMat RatMat::identity(std::size_t n) {
  RatMat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

IntMat operator*(const IntMat& a, const IntMat& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  IntMat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Int& aik = a(i, k);
      if (aik == 0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

RatMat operator*(const RatMat& a, const RatMat& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  RatMat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Rat& aik = a(i, k);
      if (aik == 0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

IntMat operator+(const IntMat& a, const IntMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("add: shape mismatch");
  IntMat c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) + b(i, j);
  return c;
}

IntMat operator-(const IntMat& a, const IntMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("sub: shape mismatch");
  IntMat c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

IntMat transpose(const IntMat& m) {
  IntMat t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

RatMat transpose(const RatMat& m) {
  RatMat t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

RatMat to_rat(const IntMat& m) {
  RatMat r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = Rat(m(i, j));
  return r;
}

bool is_integral(const RatMat& m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j).get_den() != 1) return false;
  return true;
}

IntMat to_int(const RatMat& m) {
  IntMat r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m(i, j).get_den() != 1)
        throw std::invalid_argument("to_int: non-integral entry");
      r(i, j) = m(i, j).get_num();
    }
  return r;
}

bool is_symmetric(const IntMat& m) {
  if (m.rows() != m.cols()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (m(i, j) != m(j, i)) return false;
  return true;
}

bool is_symmetric(const RatMat& m) {
  if (m.rows() != m.cols()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (m(i, j) != m(j, i)) return false;
  return true;
}

IntVec mat_vec(const IntMat& m, const IntVec& v) {
  if (v.size() != m.cols()) throw std::invalid_argument("mat_vec: shape mismatch");
  IntVec out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i] += m(i, j) * v[j];
  return out;
}

RatVec mat_vec(const RatMat& m, const RatVec& v) {
  if (v.size() != m.cols()) throw std::invalid_argument("mat_vec: shape mismatch");
  RatVec out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i] += m(i, j) * v[j];
  return out;
}

Int dot(const IntVec& a, const IntVec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  Int s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Int bilinear(const IntMat& m, const IntVec& v, const IntVec& w) {
  return dot(v, mat_vec(m, w));
}

Rat bilinear(const RatMat& m, const RatVec& v, const RatVec& w) {
  RatVec mw = mat_vec(m, w);
  Rat s = 0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * mw[i];
  return s;
}

IntMat vstack(const IntMat& a, const IntMat& b) {
  if (a.cols() != b.cols() && a.rows() != 0 && b.rows() != 0)
    throw std::invalid_argument("vstack: column mismatch");
  std::size_t c = a.rows() ? a.cols() : b.cols();
  IntMat out(a.rows() + b.rows(), c);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < c; ++j) out(i, j) = a(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < c; ++j) out(a.rows() + i, j) = b(i, j);
  return out;
}

IntMat block_diag(const IntMat& a, const IntMat& b) {
  IntMat out(a.rows() + b.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      out(a.rows() + i, a.cols() + j) = b(i, j);
  return out;
}

std::ostream& operator<<(std::ostream& os, const IntMat& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << (i ? "; " : "[");
    for (std::size_t j = 0; j < m.cols(); ++j)
      os << (j ? " " : "") << m(i, j);
  }
  return os << "]";
}

std::ostream& operator<<(std::ostream& os, const RatMat& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << (i ? "; " : "[");
    for (std::size_t j = 0; j < m.cols(); ++j)
      os << (j ? " " : "") << m(i, j);
  }
  return os << "]";
}

std::ostream& operator<<(std::ostream& os, const Signature& s) {
  return os << "(" << s.pos << "," << s.neg << "," << s.zero << ")";
}

// ---------------------------------------------------------------------------
// Smith normal form with transforms.

SmithResult smith_normal_form(const IntMat& m) {
  const std::size_t r = m.rows(), c = m.cols();
  IntMat d = m, u = IntMat::identity(r), v = IntMat::identity(c);
  std::size_t t = 0;
  while (t < r && t < c) {
    // Pick the smallest nonzero entry of the trailing block as pivot.
    std::size_t pi = r, pj = c;
    for (std::size_t i = t; i < r; ++i)
      for (std::size_t j = t; j < c; ++j)
        if (d(i, j) != 0 && (pi == r || abs_less(d(i, j), d(pi, pj)))) {
          pi = i;
          pj = j;
        }
    if (pi == r) break;  // trailing block is zero
    d.swap_rows(t, pi);
    u.swap_rows(t, pi);
    d.swap_cols(t, pj);
    v.swap_cols(t, pj);

    for (;;) {
      // Clear row and column t; every nonzero remainder strictly shrinks
      // the pivot, so this terminates.
      for (;;) {
        bool dirty = false;
        for (std::size_t i = t + 1; i < r; ++i) {
          if (d(i, t) == 0) continue;
          Int q = d(i, t) / d(t, t);  // truncated division
          if (q != 0) {
            d.add_row(i, t, -q);
            u.add_row(i, t, -q);
          }
          if (d(i, t) != 0) {
            d.swap_rows(i, t);
            u.swap_rows(i, t);
            dirty = true;
          }
        }
        for (std::size_t j = t + 1; j < c; ++j) {
          if (d(t, j) == 0) continue;
          Int q = d(t, j) / d(t, t);
          if (q != 0) {
            d.add_col(j, t, -q);
            v.add_col(j, t, -q);
          }
          if (d(t, j) != 0) {
            d.swap_cols(j, t);
            v.swap_cols(j, t);
            dirty = true;
          }
        }
        if (!dirty) break;
      }
      // Pivot must divide the whole trailing block; if not, pull the
      // offending row up and reduce again.
      bool fixed = false;
      for (std::size_t i = t + 1; i < r && !fixed; ++i)
        for (std::size_t j = t + 1; j < c && !fixed; ++j)
          if (!divides(d(t, t), d(i, j))) {
            d.add_row(t, i, 1);
            u.add_row(t, i, 1);
            fixed = true;
          }
      if (!fixed) break;
    }
    if (d(t, t) < 0) {
      d.negate_row(t);
      u.negate_row(t);
    }
    ++t;
  }
  return {std::move(d), std::move(u), std::move(v)};
}

// ---------------------------------------------------------------------------
// Hermite form, rank, determinant.

IntMat hnf(const IntMat& m) {
  IntMat h = m;
  const std::size_t rows = h.rows(), cols = h.cols();
  std::size_t rr = 0;
  for (std::size_t col = 0; col < cols && rr < rows; ++col) {
    bool have = false;
    for (std::size_t i = rr; i < rows && !have; ++i) have = h(i, col) != 0;
    if (!have) continue;
    for (;;) {
      std::size_t best = rows;
      for (std::size_t i = rr; i < rows; ++i)
        if (h(i, col) != 0 && (best == rows || abs_less(h(i, col), h(best, col))))
          best = i;
      h.swap_rows(rr, best);
      bool clean = true;
      for (std::size_t i = rr + 1; i < rows; ++i) {
        if (h(i, col) == 0) continue;
        Int q = h(i, col) / h(rr, col);
        if (q != 0) h.add_row(i, rr, -q);
        if (h(i, col) != 0) clean = false;
      }
      if (clean) break;
    }
    if (h(rr, col) < 0) h.negate_row(rr);
    for (std::size_t i = 0; i < rr; ++i) {
      Int q = floor_div(h(i, col), h(rr, col));
      if (q != 0) h.add_row(i, rr, -q);
    }
    ++rr;
  }
  IntMat out(rr, cols);
  for (std::size_t i = 0; i < rr; ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = h(i, j);
  return out;
}

std::size_t rank(const IntMat& m) { return hnf(m).rows(); }

Int det(const IntMat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("det: non-square matrix");
  const std::size_t n = m.rows();
  if (n == 0) return 1;
  IntMat a = m;
  Int prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a(k, k) == 0) {
      std::size_t p = k + 1;
      while (p < n && a(p, k) == 0) ++p;
      if (p == n) return 0;
      a.swap_rows(k, p);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j) {
        Int num = a(i, j) * a(k, k) - a(i, k) * a(k, j);
        mpz_divexact(a(i, j).get_mpz_t(), num.get_mpz_t(), prev.get_mpz_t());
      }
    prev = a(k, k);
  }
  return sign > 0 ? a(n - 1, n - 1) : Int(-a(n - 1, n - 1));
}

bool is_unimodular(const IntMat& m) {
  if (m.rows() != m.cols()) return false;
  Int d = det(m);
  return d == 1 || d == -1;
}

// ---------------------------------------------------------------------------
// Characteristic polynomial (Berkowitz, division-free) and signatures.

std::vector<Int> charpoly(const IntMat& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("charpoly: non-square matrix");
  const std::size_t n = a.rows();
  std::vector<Int> p{1};
  for (std::size_t r = 1; r <= n; ++r) {
    // First column of the (r+1) x r Toeplitz factor:
    // [1, -a_rr, -(R S), -(R A S), ..., -(R A^{r-2} S)] where A is the
    // leading principal (r-1) block, R the row below it, S the column
    // to its right.
    std::vector<Int> colv(r + 1);
    colv[0] = 1;
    colv[1] = -a(r - 1, r - 1);
    std::vector<Int> w(r - 1);
    for (std::size_t j = 0; j + 1 < r; ++j) w[j] = a(j, r - 1);
    for (std::size_t m = 0; m + 2 <= r; ++m) {
      Int rs = 0;
      for (std::size_t j = 0; j + 1 < r; ++j) rs += a(r - 1, j) * w[j];
      colv[m + 2] = -rs;
      if (m + 3 <= r) {
        std::vector<Int> nw(r - 1);
        for (std::size_t i = 0; i + 1 < r; ++i) {
          Int acc = 0;
          for (std::size_t j = 0; j + 1 < r; ++j) acc += a(i, j) * w[j];
          nw[i] = acc;
        }
        w = std::move(nw);
      }
    }
    std::vector<Int> np(r + 1);
    for (std::size_t i = 0; i <= r; ++i) {
      Int acc = 0;
      for (std::size_t j = 0; j < r && j <= i; ++j) acc += colv[i - j] * p[j];
      np[i] = std::move(acc);
    }
    p = std::move(np);
  }
  return p;
}

namespace {

std::size_t sign_variations(const std::vector<Int>& c) {
  int last = 0;
  std::size_t v = 0;
  for (const Int& x : c) {
    if (x == 0) continue;
    int s = x < 0 ? -1 : 1;
    if (last != 0 && s != last) ++v;
    last = s;
  }
  return v;
}

}  // namespace

Signature signature_via_charpoly(const IntMat& gram) {
  if (!is_symmetric(gram))
    throw std::invalid_argument("signature_via_charpoly: matrix not symmetric");
  const std::size_t n = gram.rows();
  std::vector<Int> p = charpoly(gram);
  std::size_t zero = 0;
  while (zero < n && p[n - zero] == 0) ++zero;
  const std::size_t deg = n - zero;
  std::vector<Int> q(p.begin(), p.begin() + deg + 1);
  // A symmetric matrix has an all-real spectrum, so Descartes' rule is
  // exact: positive roots = sign variations of q(x), negative of q(-x).
  std::size_t pos = sign_variations(q);
  std::vector<Int> qneg(q);
  for (std::size_t i = 0; i <= deg; ++i)
    if ((deg - i) % 2 == 1) qneg[i] = -qneg[i];
  std::size_t neg = sign_variations(qneg);
  if (pos + neg + zero != n)
    throw std::runtime_error("signature_via_charpoly: root count mismatch");
  return {pos, neg, zero};
}

Signature exact_signature(const IntMat& gram) {
  if (!is_symmetric(gram))
    throw std::invalid_argument("exact_signature: matrix not symmetric");
  const std::size_t n = gram.rows();
  RatMat a = to_rat(gram);
  Signature s;
  std::size_t k = 0;
  while (k < n) {
    if (a(k, k) == 0) {
      std::size_t l = k + 1;
      while (l < n && a(l, l) == 0) ++l;
      if (l < n) {
        sym_swap(a, k, l);
      } else {
        // Totally isotropic diagonal: manufacture a pivot from an
        // off-diagonal entry (row/col addition gives diagonal 2*a_ij).
        std::size_t pi = n, pj = n;
        for (std::size_t i = k; i < n && pi == n; ++i)
          for (std::size_t j = i + 1; j < n; ++j)
            if (a(i, j) != 0) {
              pi = i;
              pj = j;
              break;
            }
        if (pi == n) {
          s.zero += n - k;
          break;
        }
        sym_add(a, pi, pj);
        sym_swap(a, k, pi);
      }
    }
    const Rat p = a(k, k);
    if (p > 0) ++s.pos;
    else ++s.neg;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (a(i, k) == 0) continue;
      Rat f = a(i, k) / p;
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      for (std::size_t j = k; j < n; ++j) a(j, i) -= f * a(j, k);
    }
    ++k;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Kernels and saturation.

IntMat kernel_basis(const IntMat& m) {
  SmithResult s = smith_normal_form(m);
  const std::size_t c = m.cols();
  std::size_t rk = 0;
  const std::size_t lim = std::min(m.rows(), c);
  while (rk < lim && s.d(rk, rk) != 0) ++rk;
  IntMat ker(c - rk, c);
  for (std::size_t idx = 0; idx < c - rk; ++idx)
    for (std::size_t i = 0; i < c; ++i) ker(idx, i) = s.v(i, rk + idx);
  return hnf(ker);
}

IntMat saturate(const IntMat& rows) {
  if (rank(rows) < rows.rows())
    throw std::invalid_argument("saturate: dependent rows");
  return kernel_basis(kernel_basis(rows));
}

// ---------------------------------------------------------------------------
// Rational solving.

RatSolve solve(const RatMat& a, const RatMat& b) {
  const std::size_t m = a.rows(), n = a.cols(), k = b.cols();
  if (b.rows() != m) throw std::invalid_argument("solve: dimension mismatch");
  RatMat w = a, rhs = b;
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < n && row < m; ++col) {
    std::size_t p = row;
    while (p < m && w(p, col) == 0) ++p;
    if (p == m) continue;
    if (p != row) {
      for (std::size_t j = 0; j < n; ++j) std::swap(w(p, j), w(row, j));
      for (std::size_t j = 0; j < k; ++j) std::swap(rhs(p, j), rhs(row, j));
    }
    const Rat piv = w(row, col);
    for (std::size_t j = col; j < n; ++j) w(row, j) /= piv;
    for (std::size_t j = 0; j < k; ++j) rhs(row, j) /= piv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == row || w(i, col) == 0) continue;
      const Rat f = w(i, col);
      for (std::size_t j = col; j < n; ++j) w(i, j) -= f * w(row, j);
      for (std::size_t j = 0; j < k; ++j) rhs(i, j) -= f * rhs(row, j);
    }
    pivots.push_back(col);
    ++row;
  }
  RatSolve out;
  for (std::size_t i = row; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (rhs(i, j) != 0) return out;  // inconsistent
  out.consistent = true;
  out.particular = RatMat(n, k);
  for (std::size_t t = 0; t < pivots.size(); ++t)
    for (std::size_t j = 0; j < k; ++j) out.particular(pivots[t], j) = rhs(t, j);
  std::vector<std::size_t> free_cols;
  for (std::size_t col = 0, t = 0; col < n; ++col) {
    if (t < pivots.size() && pivots[t] == col) ++t;
    else free_cols.push_back(col);
  }
  out.kernel = RatMat(free_cols.size(), n);
  for (std::size_t idx = 0; idx < free_cols.size(); ++idx) {
    out.kernel(idx, free_cols[idx]) = 1;
    for (std::size_t t = 0; t < pivots.size(); ++t)
      out.kernel(idx, pivots[t]) = -w(t, free_cols[idx]);
  }
  return out;
}

RatMat inverse(const RatMat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("inverse: non-square");
  RatSolve s = solve(a, RatMat::identity(a.rows()));
  if (!s.consistent || s.kernel.rows() != 0)
    throw std::invalid_argument("inverse: singular matrix");
  return s.particular;
}

RatMat inverse(const IntMat& a) { return inverse(to_rat(a)); }

std::optional<IntVec> solve_integer(const IntMat& a, const IntVec& b) {
  if (b.size() != a.rows())
    throw std::invalid_argument("solve_integer: dimension mismatch");
  SmithResult s = smith_normal_form(a);
  IntVec ub = mat_vec(s.u, b);
  const std::size_t lim = std::min(a.rows(), a.cols());
  IntVec w(a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (i >= lim || s.d(i, i) == 0) {
      if (ub[i] != 0) return std::nullopt;
    } else {
      if (!mpz_divisible_p(ub[i].get_mpz_t(), s.d(i, i).get_mpz_t()))
        return std::nullopt;
      mpz_divexact(w[i].get_mpz_t(), ub[i].get_mpz_t(), s.d(i, i).get_mpz_t());
    }
  }
  return mat_vec(s.v, w);
}

}  // namespace latt
