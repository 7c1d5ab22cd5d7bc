#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <latt/catalog.hpp>

#include <map>
#include <set>

using namespace latt;

namespace {

const Int kBudget = 1 << 20;

const Catalog& cat() {
  static const Catalog c(Catalog::default_data_dir());
  return c;
}

// Induced lattice on a saturated eigen-sublattice of an involution.
Lattice eigenlattice(const Lattice& ambient, const IntMat& a, int sign) {
  IntMat shifted = sign > 0 ? a - IntMat::identity(a.rows())
                            : a + IntMat::identity(a.rows());
  return EmbeddedSublattice(ambient, kernel_basis(shifted)).induced();
}

}  // namespace

TEST_CASE("the catalog loads with the expected population") {
  CHECK(cat().size() == 160);
  std::map<std::string, int> by_kind;
  for (const auto& k : cat().keys()) ++by_kind[cat().entry(k).kind];
  CHECK(by_kind["gram"] == 8);
  CHECK(by_kind["formula"] == 6);
  CHECK(by_kind["family"] == 40);
  CHECK(by_kind["embedded"] == 1);
  CHECK(by_kind["discform-recipe"] == 1);
  CHECK(by_kind["involution"] == 3);
  CHECK(by_kind["glue"] == 2);
  CHECK(by_kind["basis"] == 2);
  CHECK(by_kind["class"] == 8);
  CHECK(by_kind["pushforward"] == 7);
  CHECK(by_kind["system"] == 3);
  CHECK(by_kind["row"] == 79);

  // Keys are sorted and unique; the alias resolves but is not listed.
  const auto keys = cat().keys();
  CHECK(std::is_sorted(keys.begin(), keys.end()));
  CHECK(std::set<std::string>(keys.begin(), keys.end()).size() == keys.size());
  CHECK(std::find(keys.begin(), keys.end(), "LambdaN") == keys.end());
  CHECK(cat().has("LambdaN"));
  CHECK(cat().entry("LambdaN").key == "lattice:LambdaN");
  CHECK_THROWS_AS((void)cat().entry("no-such-entry"), CatalogError);
}

TEST_CASE("the Nikulin lattice has the expected shape") {
  const Lattice& ln = cat().lattice("LambdaN");
  CHECK(ln.rank() == 16);
  CHECK(ln.determinant() == -256);
  CHECK(ln.signature() == Signature{3, 13, 0});
  CHECK(&ln == &cat().lattice("lattice:LambdaN"));

  const GenusDescriptor& g = cat().genus("LambdaN");
  CHECK(g.disc.order() == 256);
  CHECK(genus_consistent(g));
}

TEST_CASE("derived genera are consistent and correctly sized") {
  const GenusDescriptor& o4 = cat().genus("Omega4");
  CHECK(o4.signature == Signature{0, 14, 0});
  CHECK(o4.disc.order() == 1024);
  CHECK(genus_consistent(o4));

  const GenusDescriptor& o22 = cat().genus("Omega22");
  CHECK(o22.signature == Signature{0, 12, 0});
  CHECK(genus_consistent(o22));

  const GenusDescriptor& k3x2 = cat().genus("LambdaK3x2");
  CHECK(k3x2.signature == Signature{3, 20, 0});
  CHECK(k3x2.disc.order() == 2);
}

TEST_CASE("both involution matrices preserve the form and split 10+6 / 12+4") {
  const Lattice& ln = cat().lattice("LambdaN");
  const std::map<std::string, std::pair<std::size_t, std::size_t>> expect = {
      {"Z4", {10, 6}}, {"Klein-tau", {12, 4}}, {"Klein-phi", {12, 4}}};
  for (const auto& [name, ranks] : expect) {
    CAPTURE(name);
    const InvolutionSpec& s = cat().involution(name);
    const IntMat a = cat().induced_involution(name);
    CHECK(a * a == IntMat::identity(16));
    CHECK(transpose(a) * ln.gram() * a == ln.gram());
    CHECK(s.invariant_rank == ranks.first);
    CHECK(s.coinvariant_rank == ranks.second);

    // The actual eigenlattices must lie in the genera the tables use.
    Lattice inv = eigenlattice(ln, a, +1);
    Lattice coinv = eigenlattice(ln, a, -1);
    CHECK(inv.rank() == ranks.first);
    CHECK(coinv.rank() == ranks.second);
    CHECK(same_genus(genus_of(inv),
                     cat().terms_genus(s.invariant_genus, 0),
                     kBudget) == Tri::yes);
    CHECK(same_genus(coinv, cat().lattice(s.coinvariant_gram), kBudget) ==
          Tri::yes);
  }

  // The two commuting-pair involutions share one invariant genus, and it
  // differs from the order-4 one already in rank.
  Lattice tau_inv = eigenlattice(ln, cat().induced_involution("Klein-tau"), 1);
  Lattice phi_inv = eigenlattice(ln, cat().induced_involution("Klein-phi"), 1);
  CHECK(same_genus(tau_inv, phi_inv, kBudget) == Tri::yes);
  CHECK(tau_inv.rank() != cat().involution("Z4").invariant_rank);
}

TEST_CASE("the glue instructions rebuild the Nikulin lattice") {
  const std::map<std::string, Int> expect = {{"Lemma2.12-case1", 64},
                                             {"Lemma2.12-case2", 16}};
  for (const auto& [key, index] : expect) {
    CAPTURE(key);
    const GlueEntrySpec& g = cat().glue(key);
    GlueSpec spec = cat().glue_spec(key);
    CHECK(g.expected_index == index);

    // Every glue class has order two: twice the vector is integral.
    for (const RatVec& v : spec.glue) {
      bool two_integral = true;
      bool nonintegral = false;
      for (const Rat& x : v) {
        const Rat doubled = Rat(2) * x;
        if (doubled.get_den() != 1) two_integral = false;
        if (x.get_den() != 1) nonintegral = true;
      }
      CHECK(two_integral);
      CHECK(nonintegral);
    }

    Overlattice o = overlattice(spec);
    CHECK(o.index == index);
    CHECK(same_genus(o.lattice, cat().lattice(g.target_genus), kBudget) ==
          Tri::yes);
  }
  CHECK(cat().glue("Lemma2.12-case1").vectors.size() == 6);
  CHECK(cat().glue("Lemma2.12-case2").vectors.size() == 4);
}

TEST_CASE("the explicit co-invariant embedding matches the involution") {
  const EmbeddingSpec& emb = cat().embedding("embedding:phiD6");
  const Lattice& ln = cat().lattice(emb.ambient);
  EmbeddedSublattice sub(ln, emb.rows);
  CHECK(sub.primitive);
  CHECK(sub.induced() == cat().lattice(emb.gram));

  // Its orthogonal complement realises the invariant genus.
  Lattice comp = orthogonal_complement(sub).induced();
  CHECK(same_genus(genus_of(comp),
                   cat().terms_genus(cat().involution("Z4").invariant_genus, 0),
                   kBudget) == Tri::yes);
}

TEST_CASE("the printed discriminant-form recipe matches the derived form") {
  for (long d = 1; d <= 4; ++d) {
    CAPTURE(d);
    DiscformInstance inst = cat().discform_at("discform:Omega4-plus-2d", d);
    IntMat two_d(1, 1);
    two_d(0, 0) = 2 * d;
    TorsionQuadraticModule derived = direct_sum(
        cat().genus("Omega4").disc, discriminant_module(Lattice(two_d)));
    CHECK(inst.module.order() == derived.order());
    CHECK(fqm_isomorphic(inst.module, derived, kBudget) == Tri::yes);
  }
}

TEST_CASE("the quotient transfer rules satisfy the transport identity") {
  for (const char* key :
       {"pushforward:pi2", "pushforward:pi4", "pushforward:pi-iota-z4",
        "pushforward:pitau", "pushforward:piphi", "pushforward:pi22",
        "pushforward:lambda-invariant-to-N"}) {
    CAPTURE(key);
    const PushforwardSpec& s = cat().pushforward_spec(key);
    const std::size_t n = s.source.rank();
    std::vector<IntVec> im;
    for (std::size_t i = 0; i < n; ++i) {
      IntVec v(n, Int(0));
      v[i] = 1;
      im.push_back(pushforward(s, v));
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        CHECK(s.degree * s.source.gram()(i, j) ==
              bilinear(s.target.gram(), im[i], im[j]));
  }

  // A vector of the wrong dimension is outside the source span.
  const PushforwardSpec& p = cat().pushforward_spec("pushforward:pi2");
  CHECK_THROWS_AS((void)pushforward(p, IntVec(3, Int(1))), CatalogError);

  // The declared target genus of the Klein transfer holds exactly.
  const PushforwardSpec& pt = cat().pushforward_spec("pushforward:pitau");
  REQUIRE(!pt.target_genus.empty());
  CHECK(same_genus(pt.target, cat().terms_lattice(pt.target_genus, 0),
                   kBudget) == Tri::yes);
}

TEST_CASE("the order-4 transfer is the composite of the two square maps") {
  const PushforwardSpec& p2 = cat().pushforward_spec("pushforward:pi2");
  const PushforwardSpec& p4 = cat().pushforward_spec("pushforward:pi4");
  const PushforwardSpec& pz = cat().pushforward_spec("pushforward:pi-iota-z4");
  CHECK(p2.degree * pz.degree == p4.degree);
  for (std::size_t i = 0; i < p2.source.rank(); ++i) {
    IntVec v(p2.source.rank(), Int(0));
    v[i] = 1;
    IntVec step = pushforward(p2, v);
    step.resize(pz.source.rank(), Int(0));
    IntVec composed = pushforward(pz, step);
    IntVec direct = pushforward(p4, v);
    direct.resize(composed.size(), Int(0));
    CHECK(composed == direct);
  }
}

TEST_CASE("every named class has the printed square") {
  int checked = 0;
  for (const auto& key : cat().keys()) {
    if (cat().entry(key).kind != "class") continue;
    const ClassSpec& c = cat().class_vec(key);
    const BasisSpec& b = cat().basis(c.basis);
    for (long t = 1; t <= 5; ++t) {
      IntVec x = c.at(t);
      CHECK(bilinear(b.lattice.gram(), x, x) == 2 * c.d_of_param.at(t));
    }
    ++checked;
  }
  CHECK(checked == 8);
}

TEST_CASE("the partial-Gram systems complete uniquely to even lattices") {
  for (const char* key :
       {"system:z4-square-invariant", "system:klein-tau-invariant",
        "system:klein-phi-invariant"}) {
    CAPTURE(key);
    const SystemSpec& s = cat().system(key);
    PartialGramResult r = solve_partial_gram(cat(), s);
    CHECK(r.consistent);
    CHECK(r.unique);
    REQUIRE(r.gram.has_value());
    CHECK(r.detail.empty());

    // Substitute back: the generators' pairings under the completed Gram
    // must reproduce the target exactly, and the known block is untouched.
    const IntMat& g = *r.gram;
    RatMat got = s.generators * to_rat(g) * transpose(s.generators);
    CHECK(got == to_rat(cat().lattice(s.target).gram()));
    for (std::size_t i = 0; i < s.known_prefix; ++i)
      for (std::size_t j = 0; j < s.known_prefix; ++j)
        CHECK(g(i, j) == s.known(i, j));
    Lattice completed{g};  // must be even and integral by construction
    CHECK(completed.rank() == s.symbols.size());

    // The completed symbol lattice and the target are rationally the same
    // space presented differently: equal determinant up to the square of
    // the change-of-basis index is too weak a check, but the genus of the
    // completed lattice must at least be consistent.
    CHECK(genus_consistent(genus_of(completed)));
  }
}

TEST_CASE("mutilated systems are falsified, not silently accepted") {
  // Perturbing one known pairing must break consistency or integrality.
  const SystemSpec& s = cat().system("system:z4-square-invariant");
  IntMat known = s.known;
  known(0, 1) += 2;
  known(1, 0) += 2;
  PartialGramResult r = solve_partial_gram(known, s.cross_known_zero,
                                           s.generators,
                                           cat().lattice(s.target));
  CHECK(!r.gram.has_value());
  CHECK(!r.detail.empty());
}

TEST_CASE("table rows reference resolvable ingredients") {
  std::map<std::string, std::size_t> rows_per_table;
  for (const auto& key : cat().keys()) {
    if (cat().entry(key).kind != "row") continue;
    const RowSpec& r = cat().row(key);
    ++rows_per_table[r.table];
    if (!r.class_ref.empty()) {
      const ClassSpec& c = cat().class_vec(r.class_ref);
      CHECK(c.param == r.param);
    }
    for (const Term& t : r.ns.summands)
      if (t.kind == Term::Kind::genus)
        CHECK_NOTHROW((void)cat().genus(t.key));
  }
  CHECK(rows_per_table["thm-1.3"] == 14);
  CHECK(rows_per_table["thm-1.6"] == 13);
  CHECK(rows_per_table["table-3"] == 10);
  CHECK(rows_per_table["table-4"] == 12);
  CHECK(rows_per_table["thm-3.3"] == 16);
  CHECK(rows_per_table["thm-3.4"] == 14);
  CHECK(cat().rows_of("thm-1.3").size() == 14);
}

TEST_CASE("dump emits canonical deterministic JSON") {
  for (const char* key : {"gram:U", "lattice:LambdaN", "embedding:phiD6",
                          "row:thm-1.3:01", "Z4"}) {
    CAPTURE(key);
    const std::string a = cat().dump(key);
    const std::string b = cat().dump(key);
    CHECK(a == b);
    CHECK(!a.empty());
  }
  CHECK(cat().dump("gram:U").find("\"label\"") != std::string::npos);
  CHECK(cat().dump("LambdaN") == cat().dump("lattice:LambdaN"));
  CHECK_THROWS_AS((void)cat().dump("no-such-key"), CatalogError);
}
