#include <latt/torsion.hpp>

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>

namespace latt {
namespace {

// Canonical representative of r modulo m in [0, m).
Rat rat_mod(const Rat& r, long m) {
  Rat scaled = r / m;
  Int fl;
  mpz_fdiv_q(fl.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
  Rat out = r - m * fl;
  out.canonicalize();
  return out;
}

bool is_integer(const Rat& r) { return r.get_den() == 1; }

Int positive_mod(const Int& a, const Int& m) {
  Int r;
  mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
  return r;
}

IntMat hstack(const IntMat& a, const IntMat& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("hstack: row mismatch");
  IntMat out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) out(i, a.cols() + j) = b(i, j);
  }
  return out;
}

IntMat diagonal(const IntVec& d) {
  IntMat out(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out(i, i) = d[i];
  return out;
}

RatMat rat_block_diag(const RatMat& a, const RatMat& b) {
  RatMat out(a.rows() + b.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      out(a.rows() + i, a.cols() + j) = b(i, j);
  return out;
}

// Distinct prime divisors by trial division; the integers that occur here
// are group orders of catalog-sized modules.
std::vector<Int> prime_divisors(Int n) {
  std::vector<Int> primes;
  n = abs(n);
  for (Int p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
    if (n % p == 0) {
      primes.push_back(p);
      while (n % p == 0) n /= p;
    }
  }
  if (n > 1) primes.push_back(n);
  return primes;
}

struct RatLess {
  bool operator()(const Rat& a, const Rat& b) const { return cmp(a, b) < 0; }
};
struct OrderSquareLess {
  bool operator()(const std::pair<Int, Rat>& a,
                  const std::pair<Int, Rat>& b) const {
    int c = cmp(a.first, b.first);
    if (c != 0) return c < 0;
    return cmp(a.second, b.second) < 0;
  }
};

}  // namespace

std::ostream& operator<<(std::ostream& os, Tri t) {
  switch (t) {
    case Tri::yes: return os << "yes";
    case Tri::no: return os << "no";
    default: return os << "unknown";
  }
}

TorsionQuadraticModule::TorsionQuadraticModule(IntVec orders, RatMat qb)
    : orders_(std::move(orders)), qb_(std::move(qb)) {
  std::size_t n = orders_.size();
  if (qb_.rows() != n || qb_.cols() != n)
    throw std::invalid_argument("torsion module: size mismatch");
  if (!is_symmetric(qb_))
    throw std::invalid_argument("torsion module: pairing is not symmetric");
  for (std::size_t i = 0; i < n; ++i) {
    if (orders_[i] < 2)
      throw std::invalid_argument("torsion module: generator orders must be >= 2");
    if (i + 1 < n && orders_[i + 1] % orders_[i] != 0)
      throw std::invalid_argument(
          "torsion module: orders must form a divisor chain");
  }
  for (std::size_t i = 0; i < n; ++i) {
    qb_(i, i) = rat_mod(qb_(i, i), 2);
    for (std::size_t j = i + 1; j < n; ++j)
      qb_(i, j) = qb_(j, i) = rat_mod(qb_(i, j), 1);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_integer(Rat(orders_[i] * orders_[i] * qb_(i, i)) / 2))
      throw std::invalid_argument(
          "torsion module: q is not defined modulo 2Z on generator " +
          std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) {
      if (!is_integer(orders_[std::min(i, j)] * qb_(i, j)))
        throw std::invalid_argument(
            "torsion module: b is not defined modulo Z on generators " +
            std::to_string(i) + ", " + std::to_string(j));
    }
  }
}

Int TorsionQuadraticModule::order() const {
  Int n = 1;
  for (const Int& d : orders_) n *= d;
  return n;
}

Int TorsionQuadraticModule::exponent() const {
  return orders_.empty() ? Int(1) : orders_.back();
}

FqmElement TorsionQuadraticModule::reduce(const IntVec& x) const {
  if (x.size() != ngens())
    throw std::invalid_argument("torsion element: coordinate count mismatch");
  FqmElement out(ngens());
  for (std::size_t i = 0; i < ngens(); ++i)
    out[i] = positive_mod(x[i], orders_[i]);
  return out;
}

FqmElement TorsionQuadraticModule::add(const FqmElement& x,
                                       const FqmElement& y) const {
  if (x.size() != ngens() || y.size() != ngens())
    throw std::invalid_argument("torsion element: coordinate count mismatch");
  IntVec s(ngens());
  for (std::size_t i = 0; i < ngens(); ++i) s[i] = x[i] + y[i];
  return reduce(s);
}

FqmElement TorsionQuadraticModule::scale(const FqmElement& x,
                                         const Int& c) const {
  IntVec s(x);
  for (Int& v : s) v *= c;
  return reduce(s);
}

Int TorsionQuadraticModule::element_order(const FqmElement& x) const {
  FqmElement r = reduce(x);
  Int ord = 1;
  for (std::size_t i = 0; i < ngens(); ++i)
    ord = lcm(ord, Int(orders_[i] / gcd(orders_[i], r[i])));
  return ord;
}

Rat TorsionQuadraticModule::q(const FqmElement& x) const {
  if (x.size() != ngens())
    throw std::invalid_argument("torsion element: coordinate count mismatch");
  Rat acc = 0;
  for (std::size_t i = 0; i < ngens(); ++i)
    for (std::size_t j = 0; j < ngens(); ++j) acc += x[i] * x[j] * qb_(i, j);
  return rat_mod(acc, 2);
}

Rat TorsionQuadraticModule::b(const FqmElement& x, const FqmElement& y) const {
  if (x.size() != ngens() || y.size() != ngens())
    throw std::invalid_argument("torsion element: coordinate count mismatch");
  Rat acc = 0;
  for (std::size_t i = 0; i < ngens(); ++i)
    for (std::size_t j = 0; j < ngens(); ++j) acc += x[i] * y[j] * qb_(i, j);
  return rat_mod(acc, 1);
}

std::vector<FqmElement> TorsionQuadraticModule::all_elements(
    const Int& budget) const {
  Int n = order();
  if (n > budget) {
    std::ostringstream os;
    os << "group of order " << n << " exceeds the enumeration budget "
       << budget;
    throw budget_error(os.str(), budget);
  }
  std::vector<FqmElement> out;
  out.reserve(n.get_ui());
  FqmElement x(ngens());
  for (Int k = 0; k < n; ++k) {
    out.push_back(x);
    for (std::size_t i = 0; i < ngens(); ++i) {
      x[i] += 1;
      if (x[i] < orders_[i]) break;
      x[i] = 0;
    }
  }
  return out;
}

bool TorsionQuadraticModule::nondegenerate() const {
  std::vector<FqmElement> gens;
  for (std::size_t i = 0; i < ngens(); ++i) {
    FqmElement e(ngens());
    e[i] = 1;
    gens.push_back(e);
  }
  return orthogonal_subgroup(*this, subgroup(*this, gens)).order() == 1;
}

TqmWithMap tqm_from_presentation_mapped(const RatMat& qb,
                                        const IntMat& relations) {
  std::size_t k = qb.rows();
  if (qb.cols() != k)
    throw std::invalid_argument("presentation: q/b matrix must be square");
  if (relations.cols() != k)
    throw std::invalid_argument("presentation: relation width mismatch");
  if (relations.rows() < k)
    throw std::invalid_argument("presentation: the quotient is infinite");
  SmithResult s = smith_normal_form(relations);
  for (std::size_t i = 0; i < k; ++i)
    if (s.d(i, i) == 0)
      throw std::invalid_argument("presentation: the quotient is infinite");

  IntMat w = to_int(inverse(s.v));  // rows: new generators in old coordinates
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < k; ++i)
    if (s.d(i, i) > 1) keep.push_back(i);

  IntVec orders;
  IntMat new_to_old(keep.size(), k);
  for (std::size_t t = 0; t < keep.size(); ++t) {
    orders.push_back(s.d(keep[t], keep[t]));
    new_to_old.set_row(t, w.row(keep[t]));
  }
  RatMat nqb = to_rat(new_to_old) * qb * to_rat(transpose(new_to_old));
  TorsionQuadraticModule module(orders, nqb);

  IntMat old_to_new(k, keep.size());
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t t = 0; t < keep.size(); ++t)
      old_to_new(j, t) = positive_mod(s.v(j, keep[t]), orders[t]);
  return {std::move(module), std::move(old_to_new), std::move(new_to_old)};
}

TorsionQuadraticModule tqm_from_presentation(const RatMat& qb,
                                             const IntMat& relations) {
  return tqm_from_presentation_mapped(qb, relations).module;
}

TqmWithMap make_tqm_mapped(const IntVec& gen_orders, const RatMat& qb) {
  if (gen_orders.size() != qb.rows())
    throw std::invalid_argument("make_tqm: size mismatch");
  for (const Int& d : gen_orders)
    if (d < 1) throw std::invalid_argument("make_tqm: orders must be positive");
  return tqm_from_presentation_mapped(qb, diagonal(gen_orders));
}

TorsionQuadraticModule make_tqm(const IntVec& gen_orders, const RatMat& qb) {
  return make_tqm_mapped(gen_orders, qb).module;
}

DiscriminantData discriminant_data(const Lattice& l) {
  if (l.determinant() == 0)
    throw std::invalid_argument(
        "discriminant module: the Gram matrix is degenerate");
  SmithResult s = smith_normal_form(l.gram());
  DiscriminantData out{TorsionQuadraticModule::trivial(), l.gram(),
                       RatMat(0, 0),                      s.u,      {},
                       {}};
  for (std::size_t i = 0; i < l.rank(); ++i) {
    out.invariants.push_back(s.d(i, i));
    if (s.d(i, i) > 1) out.keep.push_back(i);
  }
  IntVec orders;
  // Generator t is column keep[t] of v divided by its invariant factor,
  // expressed in the rational span of the lattice basis.
  RatMat p(l.rank(), out.keep.size());
  for (std::size_t t = 0; t < out.keep.size(); ++t) {
    Int d = s.d(out.keep[t], out.keep[t]);
    orders.push_back(d);
    for (std::size_t i = 0; i < l.rank(); ++i)
      p(i, t) = frac(s.v(i, out.keep[t]), d);
  }
  RatMat qb = transpose(p) * to_rat(l.gram()) * p;
  out.generators = p;
  out.module = TorsionQuadraticModule(orders, qb);
  return out;
}

FqmElement DiscriminantData::class_of(const RatVec& dual_coords) const {
  if (dual_coords.size() != gram.rows())
    throw std::invalid_argument("class_of: coordinate size mismatch");
  // A dual vector y satisfies G y integral; the class of G y in Z^n / G Z^n,
  // read off through the Smith row transform, gives the coordinates.
  IntVec w(gram.rows(), 0);
  for (std::size_t i = 0; i < gram.rows(); ++i) {
    Rat acc = 0;
    for (std::size_t j = 0; j < gram.cols(); ++j)
      acc += Rat(gram(i, j)) * dual_coords[j];
    if (acc.get_den() != 1)
      throw std::invalid_argument("class_of: not a dual vector");
    w[i] = acc.get_num();
  }
  FqmElement out(keep.size(), 0);
  for (std::size_t t = 0; t < keep.size(); ++t) {
    Int z = 0;
    for (std::size_t j = 0; j < gram.rows(); ++j) z += u(keep[t], j) * w[j];
    out[t] = positive_mod(z, invariants[keep[t]]);
  }
  return out;
}

TorsionQuadraticModule discriminant_module(const Lattice& l) {
  return discriminant_data(l).module;
}

TorsionQuadraticModule direct_sum(const TorsionQuadraticModule& a,
                                  const TorsionQuadraticModule& b) {
  IntVec orders = a.orders();
  orders.insert(orders.end(), b.orders().begin(), b.orders().end());
  return make_tqm(orders, rat_block_diag(a.qb(), b.qb()));
}

TorsionQuadraticModule negated(const TorsionQuadraticModule& a) {
  RatMat qb = a.qb();
  for (std::size_t i = 0; i < qb.rows(); ++i)
    for (std::size_t j = 0; j < qb.cols(); ++j) qb(i, j) = -qb(i, j);
  return TorsionQuadraticModule(a.orders(), qb);
}

namespace {

// The p-primary component together with the bookkeeping needed to project
// arbitrary elements into it: generator h_t = cofactor[t] * g_{kept[t]} has
// order porder[t] = p^{a}, where d = porder * cofactor.
struct PrimaryData {
  TorsionQuadraticModule part = TorsionQuadraticModule::trivial();
  Int p = 0;
  std::vector<std::size_t> kept;
  std::vector<Int> cofactor;
  std::vector<Int> porder;
};

PrimaryData primary_data(const TorsionQuadraticModule& m, const Int& p) {
  PrimaryData out;
  out.p = p;
  for (std::size_t i = 0; i < m.ngens(); ++i) {
    Int d = m.orders()[i], pe = 1;
    while (d % p == 0) {
      d /= p;
      pe *= p;
    }
    if (pe > 1) {
      out.kept.push_back(i);
      out.cofactor.push_back(d);
      out.porder.push_back(pe);
    }
  }
  std::size_t t = out.kept.size();
  RatMat qb(t, t);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < t; ++j)
      qb(i, j) = out.cofactor[i] * out.cofactor[j] *
                 m.qb()(out.kept[i], out.kept[j]);
  out.part = TorsionQuadraticModule(IntVec(out.porder), qb);
  return out;
}

// Coordinates of the p-component of x in the basis of the primary part.
FqmElement project_primary(const TorsionQuadraticModule& m,
                           const PrimaryData& pd, const FqmElement& x) {
  Int e = m.exponent(), pa = 1;
  while (e % pd.p == 0) {
    e /= pd.p;
    pa *= pd.p;
  }
  // e is now the prime-to-p part of the exponent; x_p = (e * s) x with
  // e s = 1 mod pa.
  Int s;
  if (mpz_invert(s.get_mpz_t(), e.get_mpz_t(), pa.get_mpz_t()) == 0)
    throw std::logic_error("primary projection: no inverse");
  FqmElement out(pd.kept.size());
  for (std::size_t t = 0; t < pd.kept.size(); ++t) {
    Int c = (e / pd.cofactor[t]) * s * x[pd.kept[t]];
    out[t] = positive_mod(c, pd.porder[t]);
  }
  return out;
}

}  // namespace

TorsionQuadraticModule primary_part(const TorsionQuadraticModule& a,
                                    const Int& p) {
  return primary_data(a, p).part;
}

FqmElement PrimaryPart::to_ambient(const TorsionQuadraticModule& full,
                                   const FqmElement& x) const {
  if (x.size() != kept.size())
    throw std::invalid_argument("to_ambient: coordinate size mismatch");
  FqmElement out(full.ngens(), 0);
  for (std::size_t t = 0; t < kept.size(); ++t)
    out[kept[t]] = positive_mod(x[t] * cofactor[t], full.orders()[kept[t]]);
  return out;
}

std::vector<PrimaryPart> primary_decomposition(const TorsionQuadraticModule& m) {
  std::vector<PrimaryPart> out;
  for (const Int& p : prime_divisors(m.order())) {
    PrimaryData d = primary_data(m, p);
    out.push_back({p, d.part, d.kept, d.cofactor});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gauss-Milgram signatures, exactly: the Gauss sum of each primary part is
// compared against sqrt(|A_p|) zeta_8^sigma inside the cyclotomic ring
// Z[x]/Phi_N(x).

namespace {

using Poly = std::vector<Int>;  // coefficients, ascending degree

void poly_trim(Poly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

// Exact division by a monic polynomial (all cyclotomic polynomials are
// monic); throws if a remainder survives.
Poly poly_divexact(Poly num, const Poly& den) {
  poly_trim(num);
  if (den.empty() || den.back() != 1)
    throw std::logic_error("polynomial division: divisor must be monic");
  if (num.empty()) return {};
  if (num.size() < den.size())
    throw std::logic_error("polynomial division: inexact");
  Poly quot(num.size() - den.size() + 1);
  for (std::size_t i = quot.size(); i-- > 0;) {
    Int c = num[i + den.size() - 1];
    quot[i] = c;
    if (c == 0) continue;
    for (std::size_t j = 0; j < den.size(); ++j) num[i + j] -= c * den[j];
  }
  poly_trim(num);
  if (!num.empty()) throw std::logic_error("polynomial division: inexact");
  return quot;
}

const Poly& cyclotomic(unsigned long n) {
  static std::map<unsigned long, Poly> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Poly p(n + 1);
  p[0] = -1;
  p[n] = 1;  // x^n - 1
  for (unsigned long d = 1; d < n; ++d)
    if (n % d == 0) p = poly_divexact(std::move(p), cyclotomic(d));
  return cache.emplace(n, std::move(p)).first->second;
}

// Remainder of p modulo the monic polynomial phi.
Poly poly_mod(Poly p, const Poly& phi) {
  poly_trim(p);
  while (p.size() >= phi.size()) {
    Int c = p.back();
    std::size_t shift = p.size() - phi.size();
    for (std::size_t j = 0; j < phi.size(); ++j) p[shift + j] -= c * phi[j];
    poly_trim(p);
  }
  return p;
}

// Arithmetic in Z[x]/(x^N - 1): dense length-N coefficient vectors.
Poly cyc_mul(const Poly& a, const Poly& b, unsigned long n) {
  Poly out(n);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < b.size(); ++j)
      out[(i + j) % n] += a[i] * b[j];
  }
  return out;
}

Poly cyc_shift(const Poly& a, unsigned long k, unsigned long n) {
  Poly out(n);
  for (std::size_t i = 0; i < a.size(); ++i) out[(i + k) % n] = a[i];
  return out;
}

// Signature contribution of one nontrivial primary part.
int milgram_primary(const TorsionQuadraticModule& part, const Int& p) {
  std::vector<FqmElement> elems = part.all_elements(part.order());
  Int den = 1;
  std::vector<Rat> qs;
  qs.reserve(elems.size());
  for (const FqmElement& x : elems) {
    qs.push_back(part.q(x));
    den = lcm(den, Int(qs.back().get_den()));
  }
  Int nn = lcm(Int(8), 2 * den);
  if (p != 2) nn = lcm(nn, p);
  unsigned long n = nn.get_ui();

  Poly gauss(n);
  for (const Rat& qx : qs) {
    Rat idx = qx * Int(n) / 2;
    if (!is_integer(idx)) throw std::logic_error("gauss sum: bad exponent");
    gauss[positive_mod(idx.get_num(), n).get_ui()] += 1;
  }

  // sqrt(|A_p|), |A_p| = p^e: integer part times sqrt(p) when e is odd.
  unsigned long e = 0;
  for (Int o = part.order(); o > 1; o /= p) ++e;
  Poly root(n);
  Int ipart;
  mpz_pow_ui(ipart.get_mpz_t(), p.get_mpz_t(), e / 2);
  root[0] = ipart;
  if (e % 2 == 1) {
    if (p == 2) {
      Poly sqrt2(n);
      sqrt2[n / 8] = 1;
      sqrt2[7 * n / 8] = 1;  // zeta_8 + zeta_8^-1
      root = cyc_mul(root, sqrt2, n);
    } else {
      // The quadratic Gauss sum over Z/p equals sqrt(p) for p = 1 mod 4 and
      // i sqrt(p) for p = 3 mod 4.
      Poly gp(n);
      unsigned long pl = p.get_ui();
      for (unsigned long t = 0; t < pl; ++t) gp[(t * t * (n / pl)) % n] += 1;
      root = cyc_mul(root, gp, n);
      if (pl % 4 == 3) root = cyc_shift(root, 3 * n / 4, n);  // times -i
    }
  }

  const Poly& phi = cyclotomic(n);
  Poly lhs = poly_mod(gauss, phi);
  for (int sigma = 0; sigma < 8; ++sigma) {
    Poly rhs = poly_mod(cyc_shift(root, sigma * (n / 8), n), phi);
    if (rhs == lhs) return sigma;
  }
  throw std::runtime_error(
      "Gauss sum has no argument: the quadratic form is degenerate");
}

}  // namespace

int milgram_signature(const TorsionQuadraticModule& m) {
  int sigma = 0;
  for (const Int& p : prime_divisors(m.order()))
    sigma += milgram_primary(primary_data(m, p).part, p);
  return sigma % 8;
}

// ---------------------------------------------------------------------------
// Subgroups.

Int Subgroup::order() const {
  Int n = 1;
  for (const Int& d : orders) n *= d;
  return n;
}

Subgroup subgroup(const TorsionQuadraticModule& a,
                  const std::vector<FqmElement>& gens) {
  std::size_t n = a.ngens(), k = gens.size();
  if (k == 0) return Subgroup{{}, {}};
  IntMat s(k, n);
  for (std::size_t i = 0; i < k; ++i) s.set_row(i, a.reduce(gens[i]));

  // Relations r on the given generators: r S = t diag(orders) for some t,
  // i.e. (r, -t) lies in the kernel of [S^T | diag(orders)].
  IntMat m = hstack(transpose(s), diagonal(a.orders()));
  IntMat ker = kernel_basis(m);
  IntMat relations(ker.rows(), k);
  for (std::size_t i = 0; i < ker.rows(); ++i)
    for (std::size_t j = 0; j < k; ++j) relations(i, j) = ker(i, j);

  RatMat qb = to_rat(s) * a.qb() * to_rat(transpose(s));
  TqmWithMap t = tqm_from_presentation_mapped(qb, relations);

  Subgroup out;
  out.orders = t.module.orders();
  for (std::size_t i = 0; i < t.module.ngens(); ++i) {
    IntVec g(n);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t c = 0; c < n; ++c)
        g[c] += t.new_to_old(i, j) * s(j, c);
    out.gens.push_back(a.reduce(g));
  }
  return out;
}

std::vector<FqmElement> subgroup_elements(const TorsionQuadraticModule& a,
                                          const Subgroup& h,
                                          const Int& budget) {
  Int n = h.order();
  if (n > budget) {
    std::ostringstream os;
    os << "subgroup of order " << n << " exceeds the enumeration budget "
       << budget;
    throw budget_error(os.str(), budget);
  }
  std::vector<FqmElement> out;
  out.reserve(n.get_ui());
  IntVec c(h.orders.size());
  for (Int k = 0; k < n; ++k) {
    FqmElement x = a.zero();
    for (std::size_t i = 0; i < h.gens.size(); ++i)
      x = a.add(x, a.scale(h.gens[i], c[i]));
    out.push_back(x);
    for (std::size_t i = 0; i < c.size(); ++i) {
      c[i] += 1;
      if (c[i] < h.orders[i]) break;
      c[i] = 0;
    }
  }
  return out;
}

Subgroup orthogonal_subgroup(const TorsionQuadraticModule& a,
                             const Subgroup& h) {
  std::size_t n = a.ngens();
  std::vector<FqmElement> full;
  for (std::size_t i = 0; i < n; ++i) {
    FqmElement e(n);
    e[i] = 1;
    full.push_back(e);
  }
  if (h.gens.empty()) return subgroup(a, full);

  // b(x, s_j) = 0 mod 1 is the integer congruence (D b(e_i, s_j))_i x = 0
  // mod D; its solutions are the projection of the kernel of [C | D I].
  std::size_t k = h.gens.size();
  RatMat c(k, n);
  Int d = 1;
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      Rat acc = 0;
      for (std::size_t t = 0; t < n; ++t) acc += a.qb()(i, t) * h.gens[j][t];
      c(j, i) = rat_mod(acc, 1);
      d = lcm(d, Int(c(j, i).get_den()));
    }
  }
  IntMat ci(k, n);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      Rat v = c(j, i) * d;
      ci(j, i) = v.get_num();
    }
  IntMat scaled = IntMat::identity(k);
  for (std::size_t j = 0; j < k; ++j) scaled(j, j) = d;
  IntMat ker = kernel_basis(hstack(ci, scaled));
  std::vector<FqmElement> gens;
  for (std::size_t r = 0; r < ker.rows(); ++r) {
    IntVec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = ker(r, i);
    gens.push_back(a.reduce(x));
  }
  return subgroup(a, gens);
}

bool is_isotropic(const TorsionQuadraticModule& a, const Subgroup& h,
                  const Int& budget) {
  for (const FqmElement& x : subgroup_elements(a, h, budget))
    if (a.q(x) != 0) return false;
  return true;
}

std::optional<IntVec> subgroup_coordinates(const TorsionQuadraticModule& a,
                                           const Subgroup& h,
                                           const FqmElement& y) {
  std::size_t n = a.ngens(), k = h.gens.size();
  IntMat s(k, n);
  for (std::size_t i = 0; i < k; ++i) s.set_row(i, h.gens[i]);
  IntMat m = hstack(transpose(s), diagonal(a.orders()));
  std::optional<IntVec> sol = solve_integer(m, a.reduce(y));
  if (!sol) return std::nullopt;
  IntVec coords(k);
  for (std::size_t i = 0; i < k; ++i)
    coords[i] = positive_mod((*sol)[i], h.orders[i]);
  return coords;
}

TorsionQuadraticModule isotropic_quotient(const TorsionQuadraticModule& a,
                                          const Subgroup& gamma,
                                          const Int& budget) {
  if (!is_isotropic(a, gamma, budget))
    throw std::invalid_argument(
        "isotropic quotient: the subgroup is not isotropic");
  Subgroup perp = orthogonal_subgroup(a, gamma);
  std::size_t k = perp.gens.size();
  IntMat relations(k + gamma.gens.size(), k);
  for (std::size_t i = 0; i < k; ++i) relations(i, i) = perp.orders[i];
  for (std::size_t j = 0; j < gamma.gens.size(); ++j) {
    std::optional<IntVec> coords =
        subgroup_coordinates(a, perp, gamma.gens[j]);
    if (!coords)
      throw std::logic_error(
          "isotropic quotient: the subgroup is not inside its orthogonal "
          "complement");
    for (std::size_t i = 0; i < k; ++i) relations(k + j, i) = (*coords)[i];
  }
  IntMat s(k, a.ngens());
  for (std::size_t i = 0; i < k; ++i) s.set_row(i, perp.gens[i]);
  RatMat qb = to_rat(s) * a.qb() * to_rat(transpose(s));
  return tqm_from_presentation(qb, relations);
}

// ---------------------------------------------------------------------------
// Element searches, isomorphism testing and orbits.

std::vector<FqmElement> elements_with(const TorsionQuadraticModule& m,
                                      const Int& order, const Rat& square,
                                      const Int& budget) {
  Rat target = rat_mod(square, 2);
  std::vector<FqmElement> out;
  for (const FqmElement& x : m.all_elements(budget)) {
    if (m.element_order(x) == order && m.q(x) == target) out.push_back(x);
  }
  return out;
}

namespace {

// Thrown internally when a backtracking search runs out of nodes; converted
// into Tri::unknown by the callers.
struct SearchBudgetHit {};

// Order of the subgroup generated by the images: the index of the lattice
// spanned by the rows together with the order relations.
Int generated_order(const TorsionQuadraticModule& m,
                    const std::vector<FqmElement>& gens) {
  if (m.ngens() == 0) return 1;
  IntMat rows(gens.size(), m.ngens());
  for (std::size_t i = 0; i < gens.size(); ++i) rows.set_row(i, gens[i]);
  IntMat h = hnf(vstack(rows, diagonal(m.orders())));
  Int index = 1;
  for (std::size_t i = 0; i < m.ngens(); ++i) index *= h(i, i);
  return m.order() / index;
}

// Complete backtracking search for the form-preserving injective maps
// a -> b, decided generator by generator from the largest order down; with
// constraint pairs (x, y) the map is additionally required to send x to y.
// Every valid embedding is handed to visit until it returns true.
struct EmbeddingSearch {
  const TorsionQuadraticModule& a;
  const TorsionQuadraticModule& b;
  const std::vector<std::pair<FqmElement, FqmElement>>& constraints;
  Int& nodes;
  const Int& node_budget;
  const EmbeddingVisitor& visit;

  std::vector<FqmElement> belems;
  std::map<std::pair<Int, Rat>, std::vector<std::size_t>, OrderSquareLess>
      buckets;
  std::vector<FqmElement> images;  // indexed by generator, filled in reverse

  bool run() {
    belems = b.all_elements(b.order());
    for (std::size_t i = 0; i < belems.size(); ++i)
      buckets[{b.element_order(belems[i]), b.q(belems[i])}].push_back(i);
    images.assign(a.ngens(), FqmElement());
    return descend(a.ngens());
  }

  bool descend(std::size_t level) {
    if (level == 0) return leaf();
    std::size_t i = level - 1;
    auto it = buckets.find({a.orders()[i], a.qb()(i, i)});
    if (it == buckets.end()) return false;
    FqmElement gi(a.ngens());
    gi[i] = 1;
    for (std::size_t idx : it->second) {
      nodes += 1;
      if (nodes > node_budget) throw SearchBudgetHit{};
      const FqmElement& w = belems[idx];
      bool ok = true;
      for (std::size_t j = i + 1; j < a.ngens() && ok; ++j)
        ok = b.b(w, images[j]) == a.qb()(i, j);
      for (const auto& [x, y] : constraints) {
        if (!ok) break;
        ok = b.b(w, y) == a.b(gi, x);
      }
      if (!ok) continue;
      images[i] = w;
      if (descend(i)) return true;
    }
    return false;
  }

  bool leaf() const {
    // Injectivity: the images must span a subgroup as large as the source.
    if (generated_order(b, images) != a.order()) return false;
    for (const auto& [x, y] : constraints) {
      FqmElement fx = b.zero();
      for (std::size_t i = 0; i < a.ngens(); ++i)
        fx = b.add(fx, b.scale(images[i], x[i]));
      if (fx != y) return false;
      if (a.q(x) != b.q(y)) return false;
    }
    return visit(images);
  }
};

Tri match_generators(const TorsionQuadraticModule& a,
                     const TorsionQuadraticModule& b,
                     const std::vector<std::pair<FqmElement, FqmElement>>&
                         constraints,
                     Int& nodes, const Int& node_budget) {
  if (a.orders() != b.orders()) return Tri::no;
  EmbeddingVisitor accept_first = [](const std::vector<FqmElement>&) {
    return true;
  };
  try {
    EmbeddingSearch search{a,  b,  constraints, nodes,
                           node_budget, accept_first, {}, {}, {}};
    return search.run() ? Tri::yes : Tri::no;
  } catch (const SearchBudgetHit&) {
    return Tri::unknown;
  }
}

std::map<std::pair<Int, Rat>, long, OrderSquareLess> order_square_multiset(
    const TorsionQuadraticModule& m, const Int& budget) {
  std::map<std::pair<Int, Rat>, long, OrderSquareLess> out;
  for (const FqmElement& x : m.all_elements(budget))
    ++out[{m.element_order(x), m.q(x)}];
  return out;
}

}  // namespace

Tri for_each_isometric_embedding(
    const TorsionQuadraticModule& source, const TorsionQuadraticModule& target,
    const std::vector<std::pair<FqmElement, FqmElement>>& constraints,
    const Int& budget, const EmbeddingVisitor& visit, Int* nodes_used) {
  Int nodes = 0;
  struct Charge {
    Int* sink;
    const Int& nodes;
    ~Charge() {
      if (sink) *sink += nodes;
    }
  } charge{nodes_used, nodes};
  // An injective image needs at least as many elements per invariant
  // (order, square) class in the target as in the source; a cheap count
  // comparison often settles impossible instances without any descent.
  try {
    auto src = order_square_multiset(source, budget);
    auto tgt = order_square_multiset(target, budget);
    for (const auto& [key, count] : src) {
      auto it = tgt.find(key);
      if (it == tgt.end() || it->second < count) return Tri::no;
    }
  } catch (const budget_error&) {
    // Enumeration too large for the precheck; the search below still holds
    // the node budget.
  }
  try {
    EmbeddingSearch search{source, target, constraints, nodes,
                           budget,  visit,  {},          {},   {}};
    return search.run() ? Tri::yes : Tri::no;
  } catch (const SearchBudgetHit&) {
    return Tri::unknown;
  }
}

std::optional<std::vector<Subgroup>> all_subgroups_of_order(
    const TorsionQuadraticModule& a, const Int& m, const Int& budget) {
  std::vector<Subgroup> out;
  if (m < 1 || a.order() % m != 0) return out;
  if (m == 1) {
    out.push_back(subgroup(a, {}));
    return out;
  }
  if (m == a.order()) {
    std::vector<FqmElement> gens;
    for (std::size_t i = 0; i < a.ngens(); ++i) {
      FqmElement g(a.ngens(), 0);
      g[i] = 1;
      gens.push_back(g);
    }
    out.push_back(subgroup(a, gens));
    return out;
  }

  std::vector<FqmElement> elems;
  try {
    elems = a.all_elements(budget);
  } catch (const budget_error&) {
    return std::nullopt;
  }
  std::sort(elems.begin(), elems.end());

  // Breadth-first walk of the subgroup lattice: a subgroup of order s grows
  // to one of order p*s by adjoining any x outside it with p*x inside it.
  // Subgroups are carried as sorted element lists, which also serve as the
  // deduplication keys.
  using ElementSet = std::vector<FqmElement>;
  std::set<ElementSet> seen;
  std::deque<ElementSet> queue;
  ElementSet trivial_set{a.zero()};
  seen.insert(trivial_set);
  queue.push_back(trivial_set);
  Int stored = 1;

  while (!queue.empty()) {
    ElementSet s = std::move(queue.front());
    queue.pop_front();
    Int size(static_cast<unsigned long>(s.size()));
    if (size == m) {
      out.push_back(subgroup(a, s));
      continue;
    }
    for (const Int& p : prime_divisors(m / size)) {
      for (const FqmElement& x : elems) {
        if (std::binary_search(s.begin(), s.end(), x)) continue;
        if (!std::binary_search(s.begin(), s.end(),
                                a.scale(x, p)))
          continue;
        ElementSet t;
        t.reserve(s.size() * static_cast<std::size_t>(p.get_ui()));
        for (const FqmElement& y : s)
          for (Int k = 0; k < p; k += 1) t.push_back(a.add(y, a.scale(x, k)));
        std::sort(t.begin(), t.end());
        if (!seen.insert(t).second) continue;
        stored += 1;
        if (stored > budget) return std::nullopt;
        queue.push_back(std::move(t));
      }
    }
  }
  return out;
}

Tri fqm_isomorphic(const TorsionQuadraticModule& a,
                   const TorsionQuadraticModule& b, const Int& budget) {
  if (!a.nondegenerate() || !b.nondegenerate())
    throw std::invalid_argument(
        "isomorphism test: both forms must be nondegenerate");
  if (a.orders() != b.orders()) return Tri::no;
  if (a.order() > budget) return Tri::unknown;
  if (milgram_signature(a) != milgram_signature(b)) return Tri::no;
  if (order_square_multiset(a, budget) != order_square_multiset(b, budget))
    return Tri::no;

  Int nodes = 0;
  bool unknown = false;
  for (const Int& p : prime_divisors(a.order())) {
    Tri part = match_generators(primary_data(a, p).part,
                                primary_data(b, p).part, {}, nodes, budget);
    if (part == Tri::no) return Tri::no;
    if (part == Tri::unknown) unknown = true;
  }
  return unknown ? Tri::unknown : Tri::yes;
}

OrbitPartition fqm_orbits(const TorsionQuadraticModule& m,
                          const std::vector<FqmElement>& elems,
                          const Int& budget) {
  OrbitPartition out;
  std::size_t n = elems.size();
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };

  bool resolved = true;
  if (m.order() > budget) {
    resolved = false;
  } else {
    std::vector<FqmElement> all = m.all_elements(budget);
    using PairKey = std::pair<Rat, Rat>;
    struct PairLess {
      bool operator()(const PairKey& a, const PairKey& b) const {
        int c = cmp(a.first, b.first);
        if (c != 0) return c < 0;
        return cmp(a.second, b.second) < 0;
      }
    };
    struct Print {
      Int order;
      Rat square;
      std::map<PairKey, long, PairLess> pairs;
      bool operator==(const Print& o) const {
        return order == o.order && square == o.square && pairs == o.pairs;
      }
    };
    std::vector<Print> prints(n);
    for (std::size_t i = 0; i < n; ++i) {
      prints[i].order = m.element_order(elems[i]);
      prints[i].square = m.q(elems[i]);
      for (const FqmElement& z : all)
        ++prints[i].pairs[{m.q(z), m.b(elems[i], z)}];
    }

    std::vector<PrimaryData> parts;
    for (const Int& p : prime_divisors(m.order()))
      parts.push_back(primary_data(m, p));

    Int nodes = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (find(i) == find(j)) continue;
        if (!(prints[i] == prints[j])) continue;
        // A pointed isometry must exist in every primary part at once.
        Tri verdict = Tri::yes;
        for (const PrimaryData& pd : parts) {
          std::vector<std::pair<FqmElement, FqmElement>> cons = {
              {project_primary(m, pd, m.reduce(elems[i])),
               project_primary(m, pd, m.reduce(elems[j]))}};
          Tri part = match_generators(pd.part, pd.part, cons, nodes, budget);
          if (part == Tri::no) {
            verdict = Tri::no;
            break;
          }
          if (part == Tri::unknown) verdict = Tri::unknown;
        }
        if (verdict == Tri::yes) {
          parent[find(j)] = find(i);
        } else if (verdict == Tri::unknown) {
          resolved = false;
        }
      }
    }
  }

  std::map<std::size_t, std::size_t> root_to_class;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = find(i);
    auto it = root_to_class.find(r);
    if (it == root_to_class.end()) {
      root_to_class.emplace(r, out.classes.size());
      out.classes.push_back({elems[i]});
    } else {
      out.classes[it->second].push_back(elems[i]);
    }
  }
  out.resolved = resolved;
  return out;
}

}  // namespace latt
