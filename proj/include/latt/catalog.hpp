// catalog.hpp — the data catalog: every printed Gram matrix, lattice formula,
// explicit class, glue instruction, involution matrix, quotient-map rule and
// classification-table row, loaded from the JSON files in data/ and
// structurally re-verified at load time.  Entries are immutable after load
// and carry a provenance string naming the printed statement they transcribe;
// any load-time check failure aborts with the offending key and provenance.
#pragma once

#include <latt/genus.hpp>
#include <latt/lattice.hpp>

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace latt {

struct CatalogError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Affine integer form a + b*t in a row or class parameter t.
struct Affine {
  Int a, b;
  Int at(const Int& t) const { return a + b * t; }
  bool operator==(const Affine&) const = default;
};

// Congruence restriction t = res mod mod.
struct Congruence {
  Int res, mod;
  bool admits(const Int& t) const;
};

// One summand in a direct-sum formula.  Exactly one of the alternatives is
// active; `scale` multiplies the form of a `ref` term, `border` extends a
// family matrix by one extra basis vector (corner entry `border`, pairing 2
// with the family's first generator, 0 with the rest).
struct Term {
  enum class Kind { ref, rank1, family, inline_gram, genus };
  Kind kind = Kind::ref;
  std::string key;               // ref / family / genus name
  Int scale = 1;                 // ref only
  Affine rank1{0, 0};            // rank1 only
  std::optional<Int> border;     // family only
  IntMat gram;                   // inline_gram only
};

struct CatalogEntry {
  std::string key;
  std::string kind;
  std::string provenance;
};

// Parametrised Gram family  G(t) = cgram + t * coef.
struct FamilySpec {
  IntMat cgram, coef;
  IntMat at(const Int& t) const;
};

struct InvolutionSpec {
  IntMat matrix;  // left action on column vectors of the Lambda_N basis
  std::size_t invariant_rank = 0, coinvariant_rank = 0;
  std::vector<Term> invariant_genus;
  std::string coinvariant_gram;  // gram:* key
};

struct GlueSummand {
  Term term;
  std::vector<std::string> names;
};

struct GlueEntrySpec {
  std::vector<GlueSummand> summands;
  Int denominator;
  std::vector<std::vector<std::string>> vectors;
  Int expected_index;
  std::string target_genus;  // lattice:* key
};

struct EmbeddingSpec {
  std::string ambient;  // lattice:* key
  IntMat rows;          // basis vectors of the sublattice, ambient coords
  std::string gram;     // gram:* key of the expected induced form
};

// Quotient-map transfer rules.  rules[i] maps target generator index ->
// integer coefficient; the transport identity degree*<x,y> = <fx,fy> is
// checked at load on all generator pairs.
struct PushforwardSpec {
  std::string key;
  Int degree;
  std::vector<std::string> source_names, target_names;
  Lattice source, target;
  std::vector<std::map<std::size_t, Int>> rules;
  std::map<std::string, IntVec> extra_vectors;  // named target-side vectors
  std::vector<Term> target_genus;  // declared genus of the target, if any
};

// Partial-Gram solve system: the first known_prefix symbols span a block
// with known Gram; all remaining pairings (and, unless cross_known_zero,
// the known-unknown pairings) are unknowns of the linear system imposed by
// requiring the generators' Gram to equal the target's.
struct SystemSpec {
  std::string key;
  std::vector<std::string> symbols;
  std::size_t known_prefix = 0;
  bool cross_known_zero = true;
  IntMat known;  // known_prefix x known_prefix
  RatMat generators;
  std::string target;  // lattice:* key
};

struct BasisSpec {
  std::vector<std::string> names;
  Lattice lattice;
};

struct ClassSpec {
  std::string basis;  // basis:* key
  std::string param;
  std::vector<Affine> coords;  // aligned with the basis names
  Affine d_of_param{0, 0};
  IntVec at(const Int& t) const;
};

// A printed finite quadratic form, parametrised by d: generators with
// orders, q values and b pairings as literal strings ("2d", "1/(2d)", ...),
// plus the witness element lists used by the element/orbit checks.
struct DiscformSpec {
  std::vector<std::string> gen_names;
  std::vector<std::string> gen_orders;
  std::map<std::string, std::string> q;
  std::vector<std::array<std::string, 3>> b;
  std::map<int, std::vector<std::string>> witnesses_order2_square32;
  std::vector<std::string> subgroup_Mtilde1;
};

// Instantiated discriminant-form recipe at a concrete d, with named-element
// lookup ("a1", "gamma*d", ...).
struct DiscformInstance {
  TorsionQuadraticModule module;
  std::map<std::string, FqmElement> named;  // generator name -> class
  FqmElement element(const std::string& expr, const Int& d) const;
};

struct NsSpec {
  std::vector<Term> summands;
  Int glue_index{1};
  std::optional<std::vector<std::size_t>> glue_span;  // nullopt = all
  std::string variant;  // "", "(1)", "(2)", "star"
  std::string display;
};

struct TSpec {
  std::vector<Term> summands;
  std::string display;
};

// One classification-table row, verbatim from the printed tables.
struct RowSpec {
  std::string key, table, section;
  std::string param;                       // sweep variable name
  std::optional<Congruence> param_mod;     // restriction on the parameter
  std::optional<Affine> d_of_param;        // source polarization degree
  std::optional<Affine> e_of_k;            // orbifold tables: e in terms of k
  std::optional<Congruence> e_mod;         // printed congruence class of e
  std::string k_display;
  NsSpec ns;
  TSpec t;
  std::string class_ref;  // class:* key, empty for recipe rows
  bool halved = false;
  std::string route;  // "", "pi_z4", "pi_tau", "pi_phi", "pi_iota"
  std::optional<Affine> lsq;  // printed L^2 / H^2 formula
  std::string L_display;
  std::string provenance;
};

class Catalog {
 public:
  explicit Catalog(const std::string& data_dir);

  // Process-wide instance, loaded from LATCHECK_DATA or the built-in path.
  static const Catalog& get();
  static std::string default_data_dir();

  std::size_t size() const;
  std::vector<std::string> keys() const;  // sorted, aliases not included
  bool has(const std::string& key) const;
  const CatalogEntry& entry(const std::string& key) const;
  std::string dump(const std::string& key) const;  // canonical JSON text

  // -- instantiation ---------------------------------------------------
  // Gram-backed entries (gram:*, lattice:*, and the LambdaN alias).
  const Lattice& lattice(const std::string& key) const;
  // One term / a direct-sum term list at a parameter value.  Throws on
  // genus terms, which have no pinned Gram.
  Lattice term_lattice(const Term& t, const Int& param) const;
  Lattice terms_lattice(const std::vector<Term>& ts, const Int& param) const;
  // Genus of a term (genus terms included) / of a direct sum of terms.
  GenusDescriptor term_genus(const Term& t, const Int& param) const;
  GenusDescriptor terms_genus(const std::vector<Term>& ts,
                              const Int& param) const;
  // Derived named genera: "Omega4", "Omega22", "LambdaN", "LambdaK3x2".
  const GenusDescriptor& genus(const std::string& name) const;

  const FamilySpec& family(const std::string& key) const;

  // -- typed entry views -------------------------------------------------
  IntMat induced_involution(const std::string& which) const;
  const InvolutionSpec& involution(const std::string& which) const;
  const GlueEntrySpec& glue(const std::string& key) const;
  GlueSpec glue_spec(const std::string& key) const;  // ready for overlattice()
  const EmbeddingSpec& embedding(const std::string& key) const;
  const PushforwardSpec& pushforward_spec(const std::string& key) const;
  const SystemSpec& system(const std::string& key) const;
  const BasisSpec& basis(const std::string& key) const;
  const ClassSpec& class_vec(const std::string& key) const;
  const DiscformSpec& discform(const std::string& key) const;
  DiscformInstance discform_at(const std::string& key, const Int& d) const;
  const RowSpec& row(const std::string& key) const;
  std::vector<const RowSpec*> rows_of(const std::string& table) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

// Image of v (source coordinates) under the printed transfer rules; the
// vector must have one coordinate per source generator.
IntVec pushforward(const PushforwardSpec& spec, const IntVec& v);

struct PartialGramResult {
  std::optional<IntMat> gram;  // completed symbol Gram when it exists
  bool consistent = false;
  bool unique = false;
  std::string detail;  // falsification report when gram is absent
};

// Solves for the unknown pairings so that the generators' Gram equals the
// target's.  The completed Gram must be unique, integral and even; anything
// else is reported as a falsification of the transcribed data.
PartialGramResult solve_partial_gram(const IntMat& known,
                                     bool cross_known_zero,
                                     const RatMat& generators,
                                     const Lattice& target);
PartialGramResult solve_partial_gram(const Catalog& cat, const SystemSpec& s);

}  // namespace latt
