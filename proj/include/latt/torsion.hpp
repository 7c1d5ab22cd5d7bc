// torsion.hpp — finite quadratic modules (discriminant forms): the group
// A_L = L*/L with its Q/2Z-valued quadratic form q and Q/Z-valued pairing b.
// Provides construction from lattices and from printed block data, subgroup
// and quotient machinery, exact Milgram signatures (cyclotomic arithmetic,
// no floating point), element searches, isomorphism tests with an honest
// "unknown" outcome, and orbit partitioning under the orthogonal group.
#pragma once

#include <latt/lattice.hpp>

#include <functional>
#include <optional>
#include <vector>

namespace latt {

// Three-valued verdicts for budgeted searches.
enum class Tri { yes, no, unknown };
std::ostream& operator<<(std::ostream& os, Tri t);

// Thrown when an enumeration is asked to exceed its budget; carries the
// budget that was requested.
struct budget_error : std::runtime_error {
  Int requested;
  budget_error(const std::string& what, Int req)
      : std::runtime_error(what), requested(std::move(req)) {}
};

// Element of a finite quadratic module: canonical residues, one coordinate
// per generator.
using FqmElement = IntVec;

class TorsionQuadraticModule {
public:
  // orders: invariant factors, each >= 2, with orders[i] | orders[i+1].
  // qb: symmetric; diagonal = q(g_i) reduced into [0,2), off-diagonal =
  // b(g_i, g_j) reduced into [0,1).  Well-definedness of q and b modulo the
  // generator orders is validated here.
  TorsionQuadraticModule(IntVec orders, RatMat qb);
  static TorsionQuadraticModule trivial() {
    return TorsionQuadraticModule(IntVec{}, RatMat(0, 0));
  }

  const IntVec& orders() const { return orders_; }
  const RatMat& qb() const { return qb_; }
  std::size_t ngens() const { return orders_.size(); }
  Int order() const;     // group order
  Int exponent() const;  // largest invariant factor (1 for the trivial group)

  FqmElement reduce(const IntVec& x) const;
  FqmElement zero() const { return FqmElement(ngens()); }
  FqmElement add(const FqmElement& x, const FqmElement& y) const;
  FqmElement scale(const FqmElement& x, const Int& c) const;
  Int element_order(const FqmElement& x) const;
  Rat q(const FqmElement& x) const;                       // in [0,2)
  Rat b(const FqmElement& x, const FqmElement& y) const;  // in [0,1)

  // All elements in a fixed deterministic order; throws budget_error if the
  // group order exceeds the budget.
  std::vector<FqmElement> all_elements(const Int& budget) const;

  // The radical of b is trivial.
  bool nondegenerate() const;

  bool operator==(const TorsionQuadraticModule&) const = default;

private:
  IntVec orders_;
  RatMat qb_;
};

// Normalization result: the module in invariant-factor form together with
// the change of generators in both directions.  old_to_new has one row per
// original generator giving its coordinates in the new basis, so that named
// elements of a printed presentation can be located after normalization;
// new_to_old has one row per new generator expressing it as an integer
// combination of the original ones.
struct TqmWithMap {
  TorsionQuadraticModule module;
  IntMat old_to_new;
  IntMat new_to_old;
};

// Normalizes an arbitrary finite presentation (generator orders need not
// form a divisor chain) into invariant-factor form.
TorsionQuadraticModule make_tqm(const IntVec& gen_orders, const RatMat& qb);
TqmWithMap make_tqm_mapped(const IntVec& gen_orders, const RatMat& qb);

// Quotient presentation: k generators with the given q/b matrix, subject to
// the relation rows (integer combinations that vanish).  The rows must
// define a finite quotient.
TorsionQuadraticModule tqm_from_presentation(const RatMat& qb,
                                             const IntMat& relations);
TqmWithMap tqm_from_presentation_mapped(const RatMat& qb,
                                        const IntMat& relations);

TorsionQuadraticModule discriminant_module(const Lattice& l);

// Discriminant module of a lattice together with the data needed to locate
// classes of explicit dual vectors: class_of maps a vector of the dual
// lattice (rational coordinates over the lattice basis) to its residue.
struct DiscriminantData {
  TorsionQuadraticModule module;
  IntMat gram;
  RatMat generators;              // column t: generator t as a dual vector
  IntMat u;                       // row transform of the Smith computation
  std::vector<Int> invariants;    // all invariant factors, including ones
  std::vector<std::size_t> keep;  // indices of the nontrivial factors
  FqmElement class_of(const RatVec& dual_coords) const;
};
DiscriminantData discriminant_data(const Lattice& l);
TorsionQuadraticModule direct_sum(const TorsionQuadraticModule& a,
                                  const TorsionQuadraticModule& b);
// Same group, q negated (the discriminant form of L(-1), and the form
// matched by complements in unimodular ambients).
TorsionQuadraticModule negated(const TorsionQuadraticModule& a);

// The p-primary component, as a module in its own right.
TorsionQuadraticModule primary_part(const TorsionQuadraticModule& a,
                                    const Int& p);

// Exact Gauss–Milgram signature: sigma with
// sum_x exp(pi i q(x)) = sqrt(|A|) exp(2 pi i sigma / 8), as residue 0..7.
// Exact cyclotomic arithmetic; throws on degenerate forms.
int milgram_signature(const TorsionQuadraticModule& m);

// A subgroup in normalized form: generators (ambient coordinates) whose
// orders form a divisor chain; they generate freely as a direct sum.
struct Subgroup {
  std::vector<FqmElement> gens;
  IntVec orders;
  Int order() const;
};

// Normalize the subgroup generated by arbitrary elements.
Subgroup subgroup(const TorsionQuadraticModule& a,
                  const std::vector<FqmElement>& gens);
std::vector<FqmElement> subgroup_elements(const TorsionQuadraticModule& a,
                                          const Subgroup& h, const Int& budget);
// {x : b(x, h) = 0 for all h in the subgroup}.
Subgroup orthogonal_subgroup(const TorsionQuadraticModule& a,
                             const Subgroup& h);
// q vanishes identically on the subgroup (then b does too).
bool is_isotropic(const TorsionQuadraticModule& a, const Subgroup& h,
                  const Int& budget);
// gamma^perp / gamma with the descended form; gamma must be isotropic.
TorsionQuadraticModule isotropic_quotient(const TorsionQuadraticModule& a,
                                          const Subgroup& gamma,
                                          const Int& budget);
// Coordinates of y in terms of the subgroup generators, if y lies in it.
std::optional<IntVec> subgroup_coordinates(const TorsionQuadraticModule& a,
                                           const Subgroup& h,
                                           const FqmElement& y);

// Exhaustive list of elements of the given order and square (mod 2);
// budget_error (carrying the requested budget) if the group is too big.
std::vector<FqmElement> elements_with(const TorsionQuadraticModule& m,
                                      const Int& order, const Rat& square,
                                      const Int& budget);

// All subgroups of the given order, each in normalized form.  Enumeration
// walks the subgroup lattice one prime index at a time; nullopt once more
// than `budget` subgroups (across all intermediate levels) get stored.
std::optional<std::vector<Subgroup>> all_subgroups_of_order(
    const TorsionQuadraticModule& a, const Int& m, const Int& budget);

// One p-primary component with its embedding back into the full module:
// generator t of the part equals cofactor[t] * g_{kept[t]} upstairs.
struct PrimaryPart {
  Int p;
  TorsionQuadraticModule part;
  std::vector<std::size_t> kept;
  std::vector<Int> cofactor;
  FqmElement to_ambient(const TorsionQuadraticModule& full,
                        const FqmElement& x) const;
};
// The parts for every prime dividing the order, ascending in p.
std::vector<PrimaryPart> primary_decomposition(const TorsionQuadraticModule& m);

// Enumerate the form-preserving injective homomorphisms of source into
// target: visit receives the images of the source generators (in target
// coordinates) for every embedding with q and b preserved exactly, until it
// returns true.  Pairs (x, y) in constraints restrict the enumeration to
// embeddings sending x (source coordinates) to y (target coordinates).
// Returns yes when a visit accepted, no when the search space is exhausted,
// unknown when the node budget runs out.  Modules may be degenerate.  When
// nodes_used is given it accumulates the number of search nodes spent, so a
// caller can run several searches against one shared pool.
using EmbeddingVisitor = std::function<bool(const std::vector<FqmElement>&)>;
Tri for_each_isometric_embedding(
    const TorsionQuadraticModule& source, const TorsionQuadraticModule& target,
    const std::vector<std::pair<FqmElement, FqmElement>>& constraints,
    const Int& budget, const EmbeddingVisitor& visit,
    Int* nodes_used = nullptr);

// Isometry of finite quadratic modules, decided by invariant prefilters
// (invariant factors, Milgram residue, q-multiset per order) and then
// per-p-part generator-matching backtracking.  Returns unknown only on
// budget exhaustion; both modules must be nondegenerate.
Tri fqm_isomorphic(const TorsionQuadraticModule& a,
                   const TorsionQuadraticModule& b, const Int& budget);

// Partition of elems under the full orthogonal group O(q).  If a budget is
// exhausted the result is flagged unresolved and unmerged classes remain.
struct OrbitPartition {
  std::vector<std::vector<FqmElement>> classes;
  bool resolved = true;
};
OrbitPartition fqm_orbits(const TorsionQuadraticModule& m,
                          const std::vector<FqmElement>& elems,
                          const Int& budget);

}  // namespace latt
