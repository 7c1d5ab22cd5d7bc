// genus.hpp — genus-level bookkeeping for even lattices.  A genus is carried
// as a signature together with a discriminant form; genus equality is decided
// through the finite-module isomorphism search, and even overlattices of a
// direct sum landing in a prescribed genus are found by searching graph glues
// between anti-isometric subgroups of the two discriminant forms.
#pragma once

#include <latt/torsion.hpp>

namespace latt {

// A genus, described by signature and discriminant form.  Sufficient for the
// rank-and-determinant range handled here, where negative definite summands
// are only ever compared against printed block data; carriers with no pinned
// Gram matrix (only signature plus discriminant blocks) use this form too.
struct GenusDescriptor {
  Signature signature;
  TorsionQuadraticModule disc;
};

// Milgram consistency: the Gauss sum argument of the discriminant form must
// equal pos - neg modulo 8.  Every descriptor of an actual genus passes.
bool genus_consistent(const GenusDescriptor& g);

GenusDescriptor genus_of(const Lattice& l);

// Equal signatures and isometric discriminant forms.  The unknown outcome of
// the isomorphism search propagates; it never degrades to a yes or no.
Tri same_genus(const GenusDescriptor& a, const GenusDescriptor& b,
               const Int& budget);
Tri same_genus(const Lattice& a, const Lattice& b, const Int& budget);

// One generator of a glue group: a pair of discriminant classes, recorded in
// the generator coordinates of disc(a) and disc(b).
struct GluePair {
  FqmElement in_a;
  FqmElement in_b;
};

struct GlueSearchResult {
  Tri found = Tri::no;
  // Set when found == yes: generators of the glue group, prime by prime.
  std::vector<GluePair> pairs;
  // Lattice-level searches also return the ready-to-build extension recipe,
  // already round-tripped through overlattice() and a genus check.
  std::optional<GlueSpec> witness;
};

// Decides whether some even overlattice of (a direct sum of lattices in) the
// genera a and b lies in the target genus.  The search runs prime by prime:
// subgroups H of one discriminant form are enumerated, form-reversing
// embeddings of H into the other side are searched, and the quotient of the
// resulting graph glue is compared against the target discriminant form.
// Signature mismatch or a non-square glue order gives a definite no; budget
// exhaustion in any stage gives unknown.
GlueSearchResult exists_glue_to_genus(const GenusDescriptor& a,
                                      const GenusDescriptor& b,
                                      const GenusDescriptor& target,
                                      const Int& budget);
GlueSearchResult exists_glue_to_genus(const Lattice& a, const Lattice& b,
                                      const GenusDescriptor& target,
                                      const Int& budget);

// Glue comparison for a primitive sublattice phi of an ambient lattice: the
// glue between phi's image and its orthogonal complement (read off from the
// ambient lattice) must match the prescribed extension recipe — isomorphic
// glue group and equal glue graphs up to automorphisms of the two
// discriminant forms.  `prescribed` carries exactly two summands, matching
// the image and the complement in that order.
Tri check_star_condition(const EmbeddedSublattice& phi,
                         const GlueSpec& prescribed, const Int& budget);

}  // namespace latt
