// lattice.hpp — even integral lattices: validated Gram containers, direct
// sums and rescaling, embedded sublattices (with primitivity tracking and
// orthogonal complements), glued overlattices, divisibility of vectors, and
// exact short-vector enumeration for negative definite forms.
#pragma once

#include <latt/exact.hpp>

#include <optional>
#include <vector>

namespace latt {

// An even integral lattice, stored as its Gram matrix (basis implicit).
// Degenerate forms are allowed (isotropic sublattices occur as intermediate
// objects); evenness and symmetry are enforced at construction.
class Lattice {
public:
  explicit Lattice(IntMat gram);
  const IntMat& gram() const { return gram_; }
  std::size_t rank() const { return gram_.rows(); }
  Int determinant() const { return det(gram_); }
  Signature signature() const { return exact_signature(gram_); }
  bool operator==(const Lattice&) const = default;

private:
  IntMat gram_;
};

Lattice direct_sum(const Lattice& a, const Lattice& b);
Lattice direct_sum(const std::vector<Lattice>& parts);

// Multiply the form by k (rational scales allowed, e.g. 1/2 to undo a
// doubling); throws if the result is not an even integral lattice.
Lattice rescale(const Lattice& l, const Rat& k);
Lattice rescale(const Lattice& l, long k);

// A sublattice of a fixed ambient lattice, spanned by the rows of `basis`
// (coordinates in the ambient basis).  Rows must be independent.  The
// `primitive` flag records whether the span is a direct summand of the
// ambient free module; it is computed at construction.
struct EmbeddedSublattice {
  Lattice ambient;
  IntMat basis;
  bool primitive;

  EmbeddedSublattice(Lattice ambient_, IntMat basis_);
  std::size_t rank() const { return basis.rows(); }
  Lattice induced() const;  // basis * G * basis^T
};

// Full orthogonal complement inside s.ambient, always saturated.
EmbeddedSublattice orthogonal_complement(const EmbeddedSublattice& s);

// Primitive closure of s inside its ambient.
EmbeddedSublattice saturation(const EmbeddedSublattice& s);

// A finite-index extension recipe: the direct sum of `summands` extended by
// the classes of `glue` (rational coordinates over the direct-sum basis).
struct GlueSpec {
  std::vector<Lattice> summands;
  std::vector<RatVec> glue;
};

// The constructed overlattice: Gram in a new basis, the new basis expressed
// in direct-sum coordinates (rows), and the extension index.
struct Overlattice {
  Lattice lattice;
  RatMat basis;
  Int index;
};

// Builds the extension and verifies it is an even integral lattice; throws
// with the offending vector spelled out otherwise.  Each glue vector must
// have order > 1 in (dual of direct sum)/(direct sum).
Overlattice overlattice(const GlueSpec& g);

// Coordinates of a direct-sum (rational) vector in the overlattice basis,
// if the vector lies in the overlattice.
std::optional<IntVec> coords_in(const Overlattice& o, const RatVec& v);

// gcd of the pairings of v (nonzero) with the whole lattice.
Int divisibility(const Lattice& l, const IntVec& v);

// All vectors x with 0 < -x^2 <= bound in a negative definite lattice, one
// representative per {x, -x} (first nonzero coordinate positive), sorted
// lexicographically.  Exact Fincke–Pohst enumeration.
std::vector<IntVec> short_vectors(const Lattice& l, const Int& bound);

}  // namespace latt
