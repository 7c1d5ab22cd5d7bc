#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <latt/torsion.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <random>

using namespace latt;

namespace {

const Int kBig = 1 << 20;

Lattice u_lattice() { return Lattice(IntMat{{0, 1}, {1, 0}}); }
Lattice u_scaled(long n) { return Lattice(IntMat{{0, n}, {n, 0}}); }
Lattice diag_lattice(std::vector<long> d) {
  IntMat g(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) g(i, i) = d[i];
  return Lattice(g);
}

// The hyperbolic plane rescaled by 2 has discriminant group (Z/2)^2 with
// q = 0 on both generators and b = 1/2 between them.
TorsionQuadraticModule q_u2() {
  return TorsionQuadraticModule(IntVec{2, 2},
                                RatMat{{0, frac(1, 2)}, {frac(1, 2), 0}});
}
// <2> and <-2> contribute one generator of order 2 with q = 1/2 resp. 3/2.
TorsionQuadraticModule q_two() {
  return TorsionQuadraticModule(IntVec{2}, RatMat{{frac(1, 2)}});
}
TorsionQuadraticModule q_minus_two() {
  return TorsionQuadraticModule(IntVec{2}, RatMat{{frac(3, 2)}});
}

// The finite quadratic module with blocks
//   [0 1/4; 1/4 0]^2 (+) [1/2]^2 (+) [1/2d],
// in that printed generator order; returned with the normalization map so
// the named elements x1, x2 (first block), a1, a2, gamma can be located.
TqmWithMap omega4_plus_2d(long d) {
  RatMat qb(7, 7);
  qb(0, 1) = qb(1, 0) = frac(1, 4);
  qb(2, 3) = qb(3, 2) = frac(1, 4);
  qb(4, 4) = frac(1, 2);
  qb(5, 5) = frac(1, 2);
  qb(6, 6) = frac(1, 2 * d);
  return make_tqm_mapped(IntVec{4, 4, 4, 4, 2, 2, 2 * d}, qb);
}

FqmElement map_element(const TqmWithMap& t, const IntVec& old_coords) {
  FqmElement out(t.module.ngens());
  for (std::size_t i = 0; i < old_coords.size(); ++i) {
    for (std::size_t j = 0; j < t.module.ngens(); ++j)
      out[j] += old_coords[i] * t.old_to_new(i, j);
  }
  return t.module.reduce(out);
}

// Independent floating-point oracle for the Gauss-Milgram signature: sum
// exp(pi i q(x)) over the whole group and read the argument off directly.
int milgram_numeric(const TorsionQuadraticModule& m) {
  std::complex<double> s = 0;
  for (const FqmElement& x : m.all_elements(kBig)) {
    double qx = mpq_class(m.q(x)).get_d();
    s += std::polar(1.0, M_PI * qx);
  }
  double mag = std::sqrt(mpq_class(m.order()).get_d());
  REQUIRE(std::abs(std::abs(s) - mag) < 1e-6);
  double sigma = std::arg(s) / (2 * M_PI / 8);
  long r = std::lround(sigma);
  REQUIRE(std::abs(sigma - static_cast<double>(r)) < 1e-6);
  return static_cast<int>(((r % 8) + 8) % 8);
}

bool contains(const std::vector<FqmElement>& v, const FqmElement& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::mt19937_64 rng(20260819);

// A random change of generators: unimodular integer matrix built from
// elementary row operations.
IntMat random_unimodular(std::size_t n) {
  IntMat m = IntMat::identity(n);
  std::uniform_int_distribution<std::size_t> pick(0, n ? n - 1 : 0);
  std::uniform_int_distribution<int> coef(-2, 2);
  for (int step = 0; step < 12; ++step) {
    std::size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    m.add_row(i, j, coef(rng));
  }
  return m;
}

// Re-present a module by an invertible change of generators g_i' = sum_j
// U(i,j) g_j; the result must be isomorphic (indeed equal after
// renormalization) to the original.
TorsionQuadraticModule represent(const TorsionQuadraticModule& a,
                                 const IntMat& u) {
  RatMat qb = to_rat(u) * a.qb() * to_rat(transpose(u));
  IntMat relations(a.ngens(), a.ngens());
  IntMat uinv = to_int(inverse(to_rat(u)));
  // d_i g_i = 0 becomes a relation on the new generators via g = u^-1 g'.
  for (std::size_t i = 0; i < a.ngens(); ++i)
    for (std::size_t j = 0; j < a.ngens(); ++j)
      relations(i, j) = a.orders()[i] * uinv(i, j);
  return tqm_from_presentation(qb, relations);
}

}  // namespace

TEST_CASE("constructor validates orders and well-definedness") {
  CHECK_NOTHROW(TorsionQuadraticModule(IntVec{2, 4}, RatMat(2, 2)));
  // Orders must be >= 2 and form a divisor chain.
  CHECK_THROWS_AS(TorsionQuadraticModule(IntVec{1}, RatMat(1, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(TorsionQuadraticModule(IntVec{4, 2}, RatMat(2, 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(TorsionQuadraticModule(IntVec{2, 3}, RatMat(2, 2)),
                  std::invalid_argument);
  // q(g) = 1/3 is not defined modulo 2Z on a generator of order 2.
  CHECK_THROWS_AS(TorsionQuadraticModule(IntVec{2}, RatMat{{frac(1, 3)}}),
                  std::invalid_argument);
  // b = 1/8 is not defined modulo Z against a generator of order 2.
  CHECK_THROWS_AS(TorsionQuadraticModule(IntVec{2, 4},
                                         RatMat{{0, frac(1, 8)}, {frac(1, 8), 0}}),
                  std::invalid_argument);
  // Non-symmetric pairing matrix.
  CHECK_THROWS_AS(TorsionQuadraticModule(IntVec{2, 2},
                                         RatMat{{0, frac(1, 2)}, {0, 0}}),
                  std::invalid_argument);
  // Canonical representatives are enforced on construction.
  TorsionQuadraticModule m(IntVec{2}, RatMat{{frac(-1, 2)}});
  CHECK(m.qb()(0, 0) == frac(3, 2));
}

TEST_CASE("element arithmetic, orders and forms") {
  TorsionQuadraticModule m = q_u2();
  FqmElement x1{1, 0}, x2{0, 1};
  CHECK(m.q(x1) == 0);
  CHECK(m.q(m.add(x1, x2)) == 1);  // q(x+y) = q(x)+q(y)+2b(x,y)
  CHECK(m.b(x1, x2) == frac(1, 2));
  CHECK(m.element_order(m.zero()) == 1);
  CHECK(m.element_order(x1) == 2);
  CHECK(m.order() == 4);
  CHECK(m.exponent() == 2);
  CHECK(m.reduce(IntVec{3, -2}) == FqmElement{1, 0});

  TorsionQuadraticModule c(IntVec{12}, RatMat{{frac(1, 12)}});
  CHECK(c.element_order(FqmElement{8}) == 3);
  CHECK(c.q(FqmElement{5}) == frac(1, 12));  // 25/12 reduced into [0,2)
  CHECK(c.q(FqmElement{6}) == 1);

  // q(x+y) - q(x) - q(y) == 2 b(x,y) mod 2 on random elements.
  TorsionQuadraticModule big = omega4_plus_2d(3).module;
  auto elems = big.all_elements(kBig);
  std::uniform_int_distribution<std::size_t> pick(0, elems.size() - 1);
  for (int t = 0; t < 40; ++t) {
    const FqmElement &x = elems[pick(rng)], &y = elems[pick(rng)];
    Rat lhs = big.q(big.add(x, y)) - big.q(x) - big.q(y) - 2 * big.b(x, y);
    mpq_class l(lhs);
    CHECK(mpq_class(l / 2).get_den() == 1);
    // ord(q(g)) | 2 ord(g): q(x) * ord(x) * 2 is an integer.
    CHECK(mpq_class(big.q(x) * big.element_order(x) * 2).get_den() == 1);
  }
}

TEST_CASE("all_elements enumerates the whole group once") {
  TorsionQuadraticModule m(IntVec{2, 4}, RatMat(2, 2));
  auto elems = m.all_elements(kBig);
  REQUIRE(elems.size() == 8);
  std::sort(elems.begin(), elems.end(),
            [](const FqmElement& a, const FqmElement& b) {
              return std::lexicographical_compare(a.begin(), a.end(),
                                                  b.begin(), b.end());
            });
  CHECK(std::unique(elems.begin(), elems.end()) == elems.end());
  CHECK_THROWS_AS(m.all_elements(7), budget_error);
  try {
    m.all_elements(7);
  } catch (const budget_error& e) {
    CHECK(e.requested == 7);
  }
}

TEST_CASE("discriminant_module: frozen forms") {
  // Unimodular lattices have trivial discriminant.
  CHECK(discriminant_module(u_lattice()).ngens() == 0);
  CHECK(discriminant_module(u_lattice()).order() == 1);

  // <2d> gives Z/2d with q(gamma) = 1/2d; here d = 3.
  TorsionQuadraticModule d6 = discriminant_module(diag_lattice({6}));
  CHECK(d6.orders() == IntVec{6});
  CHECK(d6.qb() == RatMat{{frac(1, 6)}});

  // <-2> gives [3/2] in canonical representatives.
  CHECK(discriminant_module(diag_lattice({-2})).qb() == RatMat{{frac(3, 2)}});

  // U(4) gives (Z/4)^2 with q = 0 on generators and b = 1/4.
  TorsionQuadraticModule u4 = discriminant_module(u_scaled(4));
  CHECK(u4.orders() == IntVec{4, 4});
  CHECK(u4.qb() == RatMat{{0, frac(1, 4)}, {frac(1, 4), 0}});

  // U(2) gives q_u2 as defined above.
  CHECK(discriminant_module(u_scaled(2)) == q_u2());

  // Degenerate Gram matrices are rejected.
  CHECK_THROWS_AS(discriminant_module(Lattice(IntMat{{0}})),
                  std::invalid_argument);

  // |A_L| = |det L| across a small battery.
  for (const Lattice& l :
       {diag_lattice({2, -4, 6}), Lattice(IntMat{{-4, 2}, {2, -4}}),
        direct_sum(u_scaled(2), diag_lattice({-2}))}) {
    CHECK(discriminant_module(l).order() == abs(l.determinant()));
  }
}

TEST_CASE("discriminant_module respects the Gram pairing") {
  // For A2(2) = [[-4,2],[2,-4]] the group is Z/2 x Z/6; check q and b against
  // hand-computed dual vectors: the dual basis pairing matrix is G^{-1}.
  Lattice a22(IntMat{{-4, 2}, {2, -4}});
  TorsionQuadraticModule m = discriminant_module(a22);
  CHECK(m.orders() == IntVec{2, 6});
  CHECK(m.order() == 12);
  // Every value of q has denominator dividing 2 * exponent.
  for (const FqmElement& x : m.all_elements(kBig)) {
    CHECK(mpq_class(m.q(x) * 2 * m.exponent()).get_den() == 1);
  }
}

TEST_CASE("make_tqm normalizes non-chain presentations") {
  // Orders (4, 2) must be reordered into the chain (2, 4).
  RatMat qb(2, 2);
  qb(0, 0) = frac(1, 4);
  qb(1, 1) = 1;
  TqmWithMap t = make_tqm_mapped(IntVec{4, 2}, qb);
  CHECK(t.module.orders() == IntVec{2, 4});
  CHECK(t.module.order() == 8);
  // The original generators keep their q values under the map.
  CHECK(t.module.q(map_element(t, IntVec{1, 0})) == frac(1, 4));
  CHECK(t.module.q(map_element(t, IntVec{0, 1})) == 1);
  CHECK(t.module.element_order(map_element(t, IntVec{1, 0})) == 4);
  CHECK(t.module.element_order(map_element(t, IntVec{0, 1})) == 2);

  // The printed presentation of q_{Omega4 (+) <2d>} normalizes to a group of
  // order 2^11 d with the named elements intact.
  for (long d : {1L, 3L}) {
    TqmWithMap o = omega4_plus_2d(d);
    CHECK(o.module.order() == Int(2048 * d));
    FqmElement gamma = map_element(o, IntVec{0, 0, 0, 0, 0, 0, 1});
    CHECK(o.module.element_order(gamma) == 2 * d);
    CHECK(o.module.q(gamma) == frac(1, 2 * d));
  }
}

TEST_CASE("tqm_from_presentation rejects infinite quotients") {
  // A single generator with no relation presents Z, not a finite group.
  CHECK_THROWS_AS(tqm_from_presentation(RatMat(1, 1), IntMat(0, 1)),
                  std::invalid_argument);
}

TEST_CASE("direct_sum and negated") {
  TorsionQuadraticModule s = direct_sum(q_two(), q_two());
  CHECK(s.orders() == IntVec{2, 2});
  CHECK(s.order() == 4);
  CHECK(s.q(FqmElement{1, 1}) == 1);

  TorsionQuadraticModule n = negated(q_two());
  CHECK(n.qb() == RatMat{{frac(3, 2)}});
  CHECK(negated(n) == q_two());

  // Discriminant of a direct sum is the direct sum of discriminants.
  TorsionQuadraticModule lhs =
      discriminant_module(direct_sum(u_scaled(2), diag_lattice({-2})));
  TorsionQuadraticModule rhs =
      direct_sum(discriminant_module(u_scaled(2)),
                 discriminant_module(diag_lattice({-2})));
  CHECK(lhs.order() == rhs.order());
  CHECK(fqm_isomorphic(lhs, rhs, kBig) == Tri::yes);
}

TEST_CASE("primary_part splits the group") {
  TorsionQuadraticModule m = discriminant_module(diag_lattice({6, 12}));
  CHECK(m.order() == 72);
  TorsionQuadraticModule p2 = primary_part(m, 2);
  TorsionQuadraticModule p3 = primary_part(m, 3);
  CHECK(p2.order() == 8);
  CHECK(p3.order() == 9);
  CHECK(p2.order() * p3.order() == m.order());
  CHECK(primary_part(m, 5).order() == 1);
  // Milgram is additive over the primary decomposition.
  CHECK((milgram_signature(p2) + milgram_signature(p3)) % 8 ==
        milgram_signature(m));
}

TEST_CASE("milgram_signature: frozen values") {
  CHECK(milgram_signature(TorsionQuadraticModule::trivial()) == 0);
  CHECK(milgram_signature(q_minus_two()) == 7);
  CHECK(milgram_signature(q_two()) == 1);
  CHECK(milgram_signature(q_u2()) == 0);

  // q of the ambient Nikulin lattice: E8 is unimodular and contributes
  // nothing, so the form is q_{U(2)}^3 (+) q_{<-2>}^2; signature (3, 13)
  // means the residue must be 3 - 13 = -10 = 6 mod 8.
  TorsionQuadraticModule lam =
      direct_sum(direct_sum(q_u2(), direct_sum(q_u2(), q_u2())),
                 direct_sum(q_minus_two(), q_minus_two()));
  CHECK(milgram_signature(lam) == 6);

  // Odd-order part: A2(2) has group Z/2 x Z/6 and signature (0,2).
  CHECK(milgram_signature(discriminant_module(Lattice(IntMat{{-4, 2}, {2, -4}}))) ==
        6);

  // Degenerate forms make the Gauss sum vanish or shrink.
  TorsionQuadraticModule degen(IntVec{2}, RatMat{{1}});
  CHECK_THROWS_AS(milgram_signature(degen), std::runtime_error);
  TorsionQuadraticModule degen0(IntVec{2}, RatMat{{0}});
  CHECK_THROWS_AS(milgram_signature(degen0), std::runtime_error);
}

TEST_CASE("milgram_signature agrees with the numeric Gauss sum") {
  std::vector<TorsionQuadraticModule> battery = {
      q_two(),
      q_minus_two(),
      q_u2(),
      discriminant_module(u_scaled(4)),
      discriminant_module(diag_lattice({6})),
      discriminant_module(diag_lattice({-6, 2, 10})),
      discriminant_module(Lattice(IntMat{{-4, 2}, {2, -4}})),
      discriminant_module(Lattice(IntMat{{-2, 1}, {1, -2}})),
      discriminant_module(diag_lattice({8, -4})),
      omega4_plus_2d(1).module,
      omega4_plus_2d(3).module,
      omega4_plus_2d(5).module,
  };
  for (const TorsionQuadraticModule& m : battery) {
    CHECK(milgram_signature(m) == milgram_numeric(m));
  }
}

TEST_CASE("milgram_signature matches lattice signatures mod 8") {
  std::vector<Lattice> battery = {
      u_lattice(),
      u_scaled(2),
      u_scaled(4),
      diag_lattice({2}),
      diag_lattice({-2}),
      diag_lattice({2, 2, -4}),
      Lattice(IntMat{{-4, 2}, {2, -4}}),
      Lattice(IntMat{{-2, 1}, {1, -2}}),
      direct_sum(u_scaled(2), diag_lattice({-6})),
  };
  for (const Lattice& l : battery) {
    Signature s = l.signature();
    long diff = static_cast<long>(s.pos) - static_cast<long>(s.neg);
    int expected = static_cast<int>(((diff % 8) + 8) % 8);
    CHECK(milgram_signature(discriminant_module(l)) == expected);
  }
}

TEST_CASE("elements_with: the case analysis of the order-2 square-3/2 search") {
  // d = 3: d*gamma has order 2 and square 3/2.
  {
    TqmWithMap o = omega4_plus_2d(3);
    FqmElement dgamma =
        o.module.scale(map_element(o, IntVec{0, 0, 0, 0, 0, 0, 1}), 3);
    CHECK(o.module.q(dgamma) == frac(3, 2));
    auto found = elements_with(o.module, 2, frac(3, 2), kBig);
    CHECK(!found.empty());
    CHECK(contains(found, dgamma));
  }
  // d = 1: d*gamma has square 1/2, and a1 + a2 + d*gamma has square 3/2.
  {
    TqmWithMap o = omega4_plus_2d(1);
    FqmElement gamma = map_element(o, IntVec{0, 0, 0, 0, 0, 0, 1});
    CHECK(o.module.q(gamma) == frac(1, 2));
    FqmElement cand = map_element(o, IntVec{0, 0, 0, 0, 1, 1, 1});
    CHECK(o.module.element_order(cand) == 2);
    CHECK(o.module.q(cand) == frac(3, 2));
    CHECK(contains(elements_with(o.module, 2, frac(3, 2), kBig), cand));
  }
  // d = 2: a1 + d*gamma has order 2 and square 3/2.
  {
    TqmWithMap o = omega4_plus_2d(2);
    FqmElement cand =
        o.module.reduce(map_element(o, IntVec{0, 0, 0, 0, 1, 0, 2}));
    CHECK(o.module.element_order(cand) == 2);
    CHECK(o.module.q(cand) == frac(3, 2));
    CHECK(contains(elements_with(o.module, 2, frac(3, 2), kBig), cand));
  }
  // d = 4: no element of order 2 and square 3/2 exists at all.
  {
    TqmWithMap o = omega4_plus_2d(4);
    CHECK(elements_with(o.module, 2, frac(3, 2), kBig).empty());
  }
  // The budget error carries the requested budget.
  try {
    elements_with(omega4_plus_2d(1).module, 2, frac(3, 2), 100);
    FAIL("expected budget_error");
  } catch (const budget_error& e) {
    CHECK(e.requested == 100);
  }
}

TEST_CASE("elements_with: counting identity over squares") {
  // Summing the counts over every attained square value recovers the number
  // of elements of that order.
  TorsionQuadraticModule m = omega4_plus_2d(3).module;
  auto elems = m.all_elements(kBig);
  std::map<Rat, long> by_square;
  long order2 = 0;
  for (const FqmElement& x : elems) {
    if (m.element_order(x) == 2) {
      ++order2;
      ++by_square[m.q(x)];
    }
  }
  long total = 0;
  for (const auto& [sq, cnt] : by_square) {
    auto found = elements_with(m, 2, sq, kBig);
    CHECK(static_cast<long>(found.size()) == cnt);
    total += static_cast<long>(found.size());
  }
  CHECK(total == order2);
  // Non-canonical square arguments are accepted and reduced mod 2.
  CHECK(elements_with(m, 2, frac(-1, 2), kBig) ==
        elements_with(m, 2, frac(3, 2), kBig));
}

TEST_CASE("subgroup normalization") {
  TorsionQuadraticModule m = discriminant_module(u_scaled(4));  // (Z/4)^2
  // The doubles generate (Z/2)^2.
  Subgroup h = subgroup(m, {FqmElement{2, 0}, FqmElement{0, 2}});
  CHECK(h.orders == IntVec{2, 2});
  CHECK(h.order() == 4);
  // A single generator of full order.
  Subgroup c = subgroup(m, {FqmElement{1, 2}});
  CHECK(c.orders == IntVec{4});
  // Redundant generating sets collapse.
  Subgroup r = subgroup(m, {FqmElement{1, 0}, FqmElement{2, 0}, FqmElement{3, 0}});
  CHECK(r.orders == IntVec{4});
  CHECK(subgroup(m, {}).order() == 1);
  CHECK(subgroup(m, {m.zero()}).order() == 1);

  // Subgroup elements are closed under addition and have the right count.
  auto elems = subgroup_elements(m, h, kBig);
  CHECK(elems.size() == 4);
  for (const FqmElement& x : elems)
    for (const FqmElement& y : elems) CHECK(contains(elems, m.add(x, y)));
}

TEST_CASE("subgroup coordinates solve membership") {
  TorsionQuadraticModule m = discriminant_module(u_scaled(4));
  Subgroup c = subgroup(m, {FqmElement{1, 2}});
  auto good = subgroup_coordinates(m, c, FqmElement{2, 0});
  REQUIRE(good.has_value());
  // 2 * (1,2) = (2,4) = (2,0) in (Z/4)^2.
  CHECK(m.reduce(IntVec{2 * 1, 2 * 2}) == FqmElement{2, 0});
  CHECK(!subgroup_coordinates(m, c, FqmElement{1, 0}).has_value());
}

TEST_CASE("orthogonal subgroups and nondegeneracy") {
  TorsionQuadraticModule m = q_u2();
  Subgroup all = subgroup(m, {FqmElement{1, 0}, FqmElement{0, 1}});
  CHECK(orthogonal_subgroup(m, all).order() == 1);
  CHECK(m.nondegenerate());

  Subgroup x1 = subgroup(m, {FqmElement{1, 0}});
  Subgroup perp = orthogonal_subgroup(m, x1);
  // b(x1, x1) = 0, so x1 is its own orthogonal complement here.
  CHECK(perp.order() == 2);
  CHECK(subgroup_coordinates(m, perp, FqmElement{1, 0}).has_value());

  // |H| * |H_perp| = |A| for nondegenerate forms, on a battery of subgroups.
  TorsionQuadraticModule big = discriminant_module(
      direct_sum(u_scaled(4), diag_lattice({2, -6})));
  auto elems = big.all_elements(kBig);
  std::uniform_int_distribution<std::size_t> pick(0, elems.size() - 1);
  for (int t = 0; t < 12; ++t) {
    Subgroup h = subgroup(big, {elems[pick(rng)], elems[pick(rng)]});
    Subgroup hp = orthogonal_subgroup(big, h);
    CHECK(h.order() * hp.order() == big.order());
    // H is contained in its double-perp (equality by nondegeneracy).
    Subgroup hpp = orthogonal_subgroup(big, hp);
    CHECK(hpp.order() == h.order());
    for (const FqmElement& g : h.gens)
      CHECK(subgroup_coordinates(big, hpp, g).has_value());
  }

  TorsionQuadraticModule degen(IntVec{2}, RatMat{{0}});
  CHECK(!degen.nondegenerate());
}

TEST_CASE("isotropic subgroups and quotients") {
  TorsionQuadraticModule m = q_u2();
  Subgroup x1 = subgroup(m, {FqmElement{1, 0}});
  CHECK(is_isotropic(m, x1, kBig));
  Subgroup diag = subgroup(m, {FqmElement{1, 1}});
  CHECK(!is_isotropic(m, diag, kBig));  // q(x1 + x2) = 1

  // U(2) glued along x1 becomes unimodular: the quotient is trivial.
  TorsionQuadraticModule q = isotropic_quotient(m, x1, kBig);
  CHECK(q.order() == 1);
  CHECK_THROWS_AS(isotropic_quotient(m, diag, kBig), std::invalid_argument);
}

TEST_CASE("isotropic quotient matches the overlattice discriminant") {
  // Glue U(2) (+) U(2) along (e1 + f1 + e2 + f2)/2 and compare the quotient
  // form with the overlattice's discriminant form.
  Lattice l = direct_sum(u_scaled(2), u_scaled(2));
  TorsionQuadraticModule a = direct_sum(q_u2(), q_u2());
  Subgroup gamma = subgroup(a, {FqmElement{1, 1, 1, 1}});
  REQUIRE(is_isotropic(a, gamma, kBig));
  TorsionQuadraticModule quotient = isotropic_quotient(a, gamma, kBig);
  CHECK(quotient.order() == 4);

  GlueSpec glue{{l}, {RatVec{frac(1, 2), frac(1, 2), frac(1, 2), frac(1, 2)}}};
  Overlattice over = overlattice(glue);
  CHECK(over.index == 2);
  TorsionQuadraticModule direct = discriminant_module(over.lattice);
  CHECK(direct.order() == 4);
  CHECK(fqm_isomorphic(quotient, direct, kBig) == Tri::yes);
  // Both are in fact q_{U(2)}.
  CHECK(fqm_isomorphic(quotient, q_u2(), kBig) == Tri::yes);
}

TEST_CASE("fqm_isomorphic: decisions and prefilters") {
  // <2>^2 and <-2>^2 share the same group and q-denominators but have
  // Milgram residues 2 and 6.
  TorsionQuadraticModule p = direct_sum(q_two(), q_two());
  TorsionQuadraticModule n = direct_sum(q_minus_two(), q_minus_two());
  CHECK(milgram_signature(p) == 2);
  CHECK(milgram_signature(n) == 6);
  CHECK(fqm_isomorphic(p, n, kBig) == Tri::no);

  // Different groups.
  CHECK(fqm_isomorphic(q_two(), q_u2(), kBig) == Tri::no);

  // Reflexive on a battery, including after re-presentation by a random
  // change of generators.
  std::vector<TorsionQuadraticModule> battery = {
      q_u2(),
      discriminant_module(u_scaled(4)),
      discriminant_module(Lattice(IntMat{{-4, 2}, {2, -4}})),
      omega4_plus_2d(3).module,
      discriminant_module(diag_lattice({2, -4, 6})),
  };
  for (const TorsionQuadraticModule& m : battery) {
    CHECK(fqm_isomorphic(m, m, kBig) == Tri::yes);
    TorsionQuadraticModule r = represent(m, random_unimodular(m.ngens()));
    CHECK(r.order() == m.order());
    CHECK(fqm_isomorphic(m, r, kBig) == Tri::yes);
    CHECK(fqm_isomorphic(r, m, kBig) == Tri::yes);
  }

  // u-type and the sum of two squares: [0 1/2; 1/2 0] vs [1/2] (+) [3/2]
  // share group (Z/2)^2 and Milgram 0, but their q-value multisets differ.
  TorsionQuadraticModule mixed = direct_sum(q_two(), q_minus_two());
  CHECK(milgram_signature(mixed) == 0);
  CHECK(fqm_isomorphic(q_u2(), mixed, kBig) == Tri::no);

  // Degenerate inputs are rejected.
  TorsionQuadraticModule degen(IntVec{2}, RatMat{{0}});
  CHECK_THROWS_AS(fqm_isomorphic(degen, degen, kBig), std::invalid_argument);

  // Budget exhaustion yields unknown, not an answer.
  CHECK(fqm_isomorphic(q_u2(), q_u2(), 2) == Tri::unknown);
}

TEST_CASE("fqm_isomorphic: negation duality for complements in unimodular") {
  // -q(U (+) <-2>^2 (+) U(4)^2) is isomorphic to the printed blocks of
  // q_{Omega4} = [0 1/4; 1/4 0]^2 (+) [1/2]^2.
  Lattice inv = direct_sum(
      direct_sum(u_lattice(), diag_lattice({-2, -2})),
      direct_sum(u_scaled(4), u_scaled(4)));
  TorsionQuadraticModule minus_q = negated(discriminant_module(inv));

  RatMat qb(6, 6);
  qb(0, 1) = qb(1, 0) = frac(1, 4);
  qb(2, 3) = qb(3, 2) = frac(1, 4);
  qb(4, 4) = frac(1, 2);
  qb(5, 5) = frac(1, 2);
  TorsionQuadraticModule omega4 = make_tqm(IntVec{4, 4, 4, 4, 2, 2}, qb);

  CHECK(minus_q.order() == omega4.order());
  CHECK(milgram_signature(omega4) == 2);  // signature (0,14) mod 8
  CHECK(fqm_isomorphic(minus_q, omega4, kBig) == Tri::yes);
}

TEST_CASE("fqm_orbits: frozen partitions") {
  // q_{U(2)}: the two isotropic nonzero vectors are swapped by O(q); the
  // vector of square 1 is alone.
  TorsionQuadraticModule m = q_u2();
  OrbitPartition part = fqm_orbits(
      m, {FqmElement{1, 0}, FqmElement{0, 1}, FqmElement{1, 1}}, kBig);
  REQUIRE(part.resolved);
  REQUIRE(part.classes.size() == 2);
  std::vector<std::size_t> sizes;
  for (const auto& c : part.classes) sizes.push_back(c.size());
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<std::size_t>{1, 2});

  // Empty input.
  CHECK(fqm_orbits(m, {}, kBig).classes.empty());

  // Budget exhaustion: unresolved singletons, no exception.
  OrbitPartition limited = fqm_orbits(
      m, {FqmElement{1, 0}, FqmElement{0, 1}}, 2);
  CHECK(!limited.resolved);
  CHECK(limited.classes.size() == 2);
}

TEST_CASE("fqm_orbits separates the two embeddings for d = 1") {
  TqmWithMap o = omega4_plus_2d(1);
  FqmElement first = map_element(o, IntVec{0, 0, 0, 0, 1, 1, 1});
  // a1 + a2 + d gamma + x1 + x2, with x1, x2 from the first block.
  FqmElement second = map_element(o, IntVec{1, 1, 0, 0, 1, 1, 1});
  OrbitPartition part = fqm_orbits(o.module, {first, second}, kBig);
  REQUIRE(part.resolved);
  CHECK(part.classes.size() == 2);
}

TEST_CASE("fqm_orbits merges genuinely equivalent elements") {
  // In (Z/4)^2 with q = [0 1/4; 1/4 0] the generators are swapped by an
  // isometry, as are their negatives.
  TorsionQuadraticModule m = discriminant_module(u_scaled(4));
  OrbitPartition part = fqm_orbits(
      m, {FqmElement{1, 0}, FqmElement{0, 1}, FqmElement{3, 0}}, kBig);
  REQUIRE(part.resolved);
  CHECK(part.classes.size() == 1);
}

TEST_CASE("tri-state printing") {
  std::ostringstream os;
  os << Tri::yes << ' ' << Tri::no << ' ' << Tri::unknown;
  CHECK(os.str() == "yes no unknown");
}

TEST_CASE("all_subgroups_of_order enumerates the subgroup lattice") {
  TorsionQuadraticModule m = q_u2();
  auto of = [&](long n) { return all_subgroups_of_order(m, n, kBig); };
  REQUIRE(of(1).has_value());
  CHECK(of(1)->size() == 1);
  CHECK(of(1)->front().order() == 1);
  auto order_two = of(2);
  REQUIRE(order_two.has_value());
  CHECK(order_two->size() == 3);
  for (const Subgroup& h : *order_two) CHECK(h.order() == 2);
  REQUIRE(of(4).has_value());
  CHECK(of(4)->size() == 1);
  CHECK(of(4)->front().order() == 4);
  CHECK(of(3)->empty());
  CHECK(of(8)->empty());

  // (Z/4)^2 has seven subgroups of order 4: six cyclic and the 2-torsion.
  TorsionQuadraticModule m4 = discriminant_module(u_scaled(4));
  auto subs = all_subgroups_of_order(m4, 4, kBig);
  REQUIRE(subs.has_value());
  CHECK(subs->size() == 7);

  // An exhausted budget is reported as nullopt, not an empty list.
  CHECK(!all_subgroups_of_order(m4, 4, 3).has_value());
}

TEST_CASE("for_each_isometric_embedding enumerates form-preserving maps") {
  TorsionQuadraticModule m = q_u2();
  TorsionQuadraticModule half = make_tqm(IntVec{2}, RatMat{{frac(1, 2)}});
  TorsionQuadraticModule one = make_tqm(IntVec{2}, RatMat{{1}});

  // q_u2 takes the value 1/2 nowhere, and the value 1 exactly once.
  CHECK(for_each_isometric_embedding(half, m, {}, kBig, [](const auto&) {
          return true;
        }) == Tri::no);
  int visits = 0;
  Tri exhausted = for_each_isometric_embedding(one, m, {}, kBig,
                                               [&](const auto& images) {
                                                 ++visits;
                                                 CHECK(images.front() ==
                                                       FqmElement{1, 1});
                                                 return false;
                                               });
  CHECK(exhausted == Tri::no);
  CHECK(visits == 1);

  // The empty module embeds exactly once, via the empty map.
  int trivial_visits = 0;
  CHECK(for_each_isometric_embedding(TorsionQuadraticModule::trivial(), m, {},
                                     kBig, [&](const auto&) {
                                       ++trivial_visits;
                                       return false;
                                     }) == Tri::no);
  CHECK(trivial_visits == 1);

  // Constraints pin chosen elements: x1 can map to x2 but not to x1 + x2,
  // whose square differs.
  auto accept = [](const auto&) { return true; };
  CHECK(for_each_isometric_embedding(
            m, m, {{FqmElement{1, 0}, FqmElement{0, 1}}}, kBig, accept) ==
        Tri::yes);
  CHECK(for_each_isometric_embedding(
            m, m, {{FqmElement{1, 0}, FqmElement{1, 1}}}, kBig, accept) ==
        Tri::no);
}

TEST_CASE("primary decomposition re-embeds into the full module") {
  TorsionQuadraticModule m =
      discriminant_module(direct_sum(u_scaled(2), diag_lattice({-6})));
  std::vector<PrimaryPart> parts = primary_decomposition(m);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].p == 2);
  CHECK(parts[1].p == 3);
  Int product = 1;
  for (const PrimaryPart& pp : parts) product *= pp.part.order();
  CHECK(product == m.order());
  // Ambient re-embedding preserves order and square.
  for (const PrimaryPart& pp : parts) {
    for (const FqmElement& x : pp.part.all_elements(kBig)) {
      FqmElement up = pp.to_ambient(m, x);
      CHECK(m.element_order(up) == pp.part.element_order(x));
      CHECK(m.q(up) == pp.part.q(x));
    }
  }
}

TEST_CASE("discriminant_data locates classes of dual vectors") {
  Lattice l = direct_sum(u_scaled(2), diag_lattice({-2}));
  DiscriminantData d = discriminant_data(l);
  CHECK(d.module == discriminant_module(l));
  // Lattice vectors land on zero.
  CHECK(d.class_of(RatVec{1, 0, 0}) == d.module.zero());
  CHECK(d.class_of(RatVec{3, -2, 1}) == d.module.zero());
  // Classes add and respect q.
  FqmElement alpha = d.class_of(RatVec{frac(1, 2), 0, 0});
  FqmElement beta = d.class_of(RatVec{0, frac(1, 2), 0});
  FqmElement gamma = d.class_of(RatVec{0, 0, frac(1, 2)});
  CHECK(d.module.q(alpha) == 0);
  CHECK(d.module.q(gamma) == frac(3, 2));
  CHECK(d.module.b(alpha, beta) == frac(1, 2));
  CHECK(d.module.add(alpha, beta) ==
        d.class_of(RatVec{frac(1, 2), frac(1, 2), 0}));
  // A non-dual vector is rejected.
  CHECK_THROWS_AS(static_cast<void>(d.class_of(RatVec{frac(1, 3), 0, 0})),
                  std::invalid_argument);
}
