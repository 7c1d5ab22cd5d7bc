// exact.hpp — arbitrary-precision linear algebra over Z and Q: dense
// matrices, Smith/Hermite normal forms with transform tracking, Bareiss
// determinants, kernels and primitive closures, rational solving, and two
// independent exact signature routines.  Everything downstream (lattices,
// discriminant forms, genus checks) sits on top of this file.
//
// Convention: matrices act on column vectors; "rows" of a matrix are used
// as generator lists (a k x n matrix holds k generators of a subgroup of
// Z^n).  No fixed-width integer arithmetic anywhere in this module.
#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace latt {

using Int = mpz_class;
using Rat = mpq_class;
using IntVec = std::vector<Int>;
using RatVec = std::vector<Rat>;

// mpq_class(n, d) does not canonicalize; this does.
inline Rat frac(const Int& num, const Int& den) {
  if (den == 0) throw std::invalid_argument("frac: zero denominator");
  Rat r(num, den);
  r.canonicalize();
  return r;
}
inline Rat frac(long num, long den) { return frac(Int(num), Int(den)); }

// ---------------------------------------------------------------------------
// Dense matrices (row-major).

class IntMat {
public:
  IntMat() = default;
  IntMat(std::size_t r, std::size_t c) : rows_(r), cols_(c), a_(r * c) {}
  IntMat(std::initializer_list<std::initializer_list<Int>> rows);

  static IntMat identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Int& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const Int& operator()(std::size_t i, std::size_t j) const {
    return a_[i * cols_ + j];
  }

  IntVec row(std::size_t i) const;
  IntVec col(std::size_t j) const;
  void set_row(std::size_t i, const IntVec& v);

  void swap_rows(std::size_t i, std::size_t j);
  void swap_cols(std::size_t i, std::size_t j);
  // row_i += c * row_j  /  col_i += c * col_j
  void add_row(std::size_t i, std::size_t j, const Int& c);
  void add_col(std::size_t i, std::size_t j, const Int& c);
  void negate_row(std::size_t i);

  bool operator==(const IntMat&) const = default;

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<Int> a_;
};

class RatMat {
public:
  RatMat() = default;
  RatMat(std::size_t r, std::size_t c) : rows_(r), cols_(c), a_(r * c) {}
  RatMat(std::initializer_list<std::initializer_list<Rat>> rows);

  static RatMat identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Rat& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const Rat& operator()(std::size_t i, std::size_t j) const {
    return a_[i * cols_ + j];
  }

  bool operator==(const RatMat&) const = default;

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<Rat> a_;
};

IntMat operator*(const IntMat& a, const IntMat& b);
RatMat operator*(const RatMat& a, const RatMat& b);
IntMat operator+(const IntMat& a, const IntMat& b);
IntMat operator-(const IntMat& a, const IntMat& b);
IntMat transpose(const IntMat& m);
RatMat transpose(const RatMat& m);
RatMat to_rat(const IntMat& m);
// The integral matrix equal to m, or throws if any entry is non-integral.
IntMat to_int(const RatMat& m);
bool is_integral(const RatMat& m);
bool is_symmetric(const IntMat& m);
bool is_symmetric(const RatMat& m);

IntVec mat_vec(const IntMat& m, const IntVec& v);
RatVec mat_vec(const RatMat& m, const RatVec& v);
Int dot(const IntVec& a, const IntVec& b);
// v^T m w — the bilinear form given by a Gram matrix m.
Int bilinear(const IntMat& m, const IntVec& v, const IntVec& w);
Rat bilinear(const RatMat& m, const RatVec& v, const RatVec& w);

// Stack the rows of b under the rows of a (column counts must agree).
IntMat vstack(const IntMat& a, const IntMat& b);
// Block-diagonal sum.
IntMat block_diag(const IntMat& a, const IntMat& b);

std::ostream& operator<<(std::ostream& os, const IntMat& m);
std::ostream& operator<<(std::ostream& os, const RatMat& m);

// ---------------------------------------------------------------------------
// Normal forms and exact invariants.

// u * m * v == d with u, v unimodular and d diagonal, d(i,i) >= 0,
// d(i,i) | d(i+1,i+1).
struct SmithResult {
  IntMat d, u, v;
};
SmithResult smith_normal_form(const IntMat& m);

// Unique row-style Hermite normal form of the row span of m: pivots
// positive, entries above a pivot reduced into [0, pivot), pivot columns
// strictly increasing, zero rows dropped.  Canonical for the row span, so
// two generator lists span the same subgroup of Z^n iff their HNFs are equal.
IntMat hnf(const IntMat& m);

std::size_t rank(const IntMat& m);

// Determinant by fraction-free (Bareiss) elimination; square input only.
Int det(const IntMat& m);

bool is_unimodular(const IntMat& m);

struct Signature {
  std::size_t pos = 0, neg = 0, zero = 0;
  bool operator==(const Signature&) const = default;
};
std::ostream& operator<<(std::ostream& os, const Signature& s);

// Signature of a symmetric integer matrix via exact rational LDL^T with
// symmetric pivoting; totally isotropic blocks are unstalled with a
// symmetric row/column addition (which manufactures a 2*a_ij pivot).
Signature exact_signature(const IntMat& gram);

// Independent signature oracle: Berkowitz characteristic polynomial plus
// Descartes' rule of signs (exact for the all-real spectrum of a symmetric
// matrix).  Kept as the cross-check and fallback for exact_signature.
Signature signature_via_charpoly(const IntMat& gram);

// Characteristic polynomial det(xI - m), coefficients leading-first
// (monic: result[0] == 1, result[n] == (-1)^n det m).  Division-free.
std::vector<Int> charpoly(const IntMat& m);

// Rows form a saturated (primitive) basis of {x in Z^n : m x = 0}.
// Canonicalized via hnf().
IntMat kernel_basis(const IntMat& m);

// Primitive closure: basis of the smallest direct summand of Z^n containing
// the row span of `rows`.  Throws std::invalid_argument if the rows are
// dependent.  Canonical (HNF) output; idempotent by construction.
IntMat saturate(const IntMat& rows);

// ---------------------------------------------------------------------------
// Rational linear systems.

// General solve a x = b (a: m x n, b: m x k).  `particular` is n x k with
// a * particular == b when consistent; `kernel` rows form a basis of
// {x in Q^n : a x = 0}.
struct RatSolve {
  bool consistent = false;
  RatMat particular;
  RatMat kernel;
};
RatSolve solve(const RatMat& a, const RatMat& b);

// Inverse of a nonsingular square matrix; throws if singular.
RatMat inverse(const RatMat& a);
RatMat inverse(const IntMat& a);

// One integer solution of a x = b, if any (via Smith form).
std::optional<IntVec> solve_integer(const IntMat& a, const IntVec& b);

}  // namespace latt
