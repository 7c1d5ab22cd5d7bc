// Implementation of the lattice layer.
#include <latt/lattice.hpp>

#include <algorithm>
#include <sstream>

namespace latt {

namespace {

std::string vec_to_string(const RatVec& v) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

Rat floor_rat(const Rat& x) {
  Int q;
  mpz_fdiv_q(q.get_mpz_t(), x.get_num().get_mpz_t(), x.get_den().get_mpz_t());
  return Rat(q);
}

bool rat_is_int(const Rat& x) { return x.get_den() == 1; }

}  // namespace

Lattice::Lattice(IntMat gram) : gram_(std::move(gram)) {
  if (!is_symmetric(gram_))
    throw std::invalid_argument("Lattice: Gram matrix not symmetric");
  for (std::size_t i = 0; i < gram_.rows(); ++i)
    if (gram_(i, i) % 2 != 0)
      throw std::invalid_argument("Lattice: odd diagonal entry, form not even");
}

Lattice direct_sum(const Lattice& a, const Lattice& b) {
  return Lattice(block_diag(a.gram(), b.gram()));
}

Lattice direct_sum(const std::vector<Lattice>& parts) {
  IntMat g(0, 0);
  for (const Lattice& p : parts) g = block_diag(g, p.gram());
  return Lattice(g);
}

Lattice rescale(const Lattice& l, const Rat& k) {
  if (k == 0) throw std::invalid_argument("rescale: zero scale");
  const IntMat& g = l.gram();
  IntMat out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) {
      Rat e = k * Rat(g(i, j));
      if (!rat_is_int(e))
        throw std::invalid_argument("rescale: result is not integral");
      out(i, j) = e.get_num();
    }
  return Lattice(std::move(out));  // ctor re-checks evenness
}

Lattice rescale(const Lattice& l, long k) { return rescale(l, Rat(k)); }

EmbeddedSublattice::EmbeddedSublattice(Lattice ambient_, IntMat basis_)
    : ambient(std::move(ambient_)), basis(std::move(basis_)), primitive(false) {
  if (basis.cols() != ambient.rank())
    throw std::invalid_argument("EmbeddedSublattice: coordinate length mismatch");
  if (latt::rank(basis) < basis.rows())
    throw std::invalid_argument("EmbeddedSublattice: dependent basis rows");
  SmithResult s = smith_normal_form(basis);
  primitive = true;
  for (std::size_t i = 0; i < basis.rows(); ++i)
    if (s.d(i, i) != 1) primitive = false;
}

Lattice EmbeddedSublattice::induced() const {
  return Lattice(basis * ambient.gram() * transpose(basis));
}

EmbeddedSublattice orthogonal_complement(const EmbeddedSublattice& s) {
  // x is in the complement iff (basis * G) x = 0; kernel_basis output is
  // saturated, so the complement is primitive by construction.
  IntMat m = s.basis * s.ambient.gram();
  return EmbeddedSublattice(s.ambient, kernel_basis(m));
}

EmbeddedSublattice saturation(const EmbeddedSublattice& s) {
  return EmbeddedSublattice(s.ambient, saturate(s.basis));
}

Overlattice overlattice(const GlueSpec& g) {
  Lattice dsum = direct_sum(g.summands);
  const std::size_t n = dsum.rank();
  const RatMat gq = to_rat(dsum.gram());

  // Generators: standard basis plus glue classes.
  std::vector<RatVec> gens;
  for (std::size_t i = 0; i < n; ++i) {
    RatVec e(n);
    e[i] = 1;
    gens.push_back(std::move(e));
  }
  for (const RatVec& v : g.glue) {
    if (v.size() != n)
      throw std::invalid_argument("overlattice: glue vector " + vec_to_string(v) +
                                  " has wrong length");
    bool integral = true;
    for (const Rat& x : v) integral = integral && rat_is_int(x);
    if (integral)
      throw std::invalid_argument("overlattice: glue vector " + vec_to_string(v) +
                                  " has order 1 in the discriminant group");
    gens.push_back(v);
  }

  // Integrality and evenness only need checking on generator pairs.
  for (std::size_t i = n; i < gens.size(); ++i) {
    for (std::size_t j = 0; j < gens.size(); ++j) {
      Rat p = bilinear(gq, gens[i], gens[j]);
      if (!rat_is_int(p))
        throw std::invalid_argument(
            "overlattice: glue vector " + vec_to_string(gens[i]) +
            " pairs non-integrally with " + vec_to_string(gens[j]));
    }
    Rat sq = bilinear(gq, gens[i], gens[i]);
    if (sq.get_num() % 2 != 0)
      throw std::invalid_argument("overlattice: glue vector " +
                                  vec_to_string(gens[i]) + " has odd square " +
                                  sq.get_str());
  }

  // Canonical basis of the generated module: HNF after clearing denominators.
  Int den = 1;
  for (const RatVec& v : gens)
    for (const Rat& x : v) den = lcm(den, Int(x.get_den()));
  IntMat stacked(gens.size(), n);
  for (std::size_t i = 0; i < gens.size(); ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Rat e = gens[i][j] * Rat(den);
      stacked(i, j) = e.get_num();
    }
  IntMat h = hnf(stacked);
  if (h.rows() != n)
    throw std::invalid_argument("overlattice: generators do not span full rank");
  RatMat basis(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) basis(i, j) = frac(h(i, j), den);

  RatMat gram_q = basis * gq * transpose(basis);
  IntMat gram = to_int(gram_q);  // integrality is guaranteed by the pair checks
  Lattice out(std::move(gram));

  // [new : old] = 1 / |det(new basis)| = den^n / |det(h)|.
  Int den_pow;
  mpz_pow_ui(den_pow.get_mpz_t(), den.get_mpz_t(), n);
  Rat idx = frac(den_pow, det(h));
  if (idx < 0) idx = -idx;
  if (!rat_is_int(idx))
    throw std::logic_error("overlattice: non-integral index");
  return Overlattice{std::move(out), std::move(basis), Int(idx.get_num())};
}

std::optional<IntVec> coords_in(const Overlattice& o, const RatVec& v) {
  const std::size_t n = o.basis.rows();
  if (v.size() != n) throw std::invalid_argument("coords_in: length mismatch");
  // x * basis = v  <=>  basis^T x^T = v^T
  RatMat bt = transpose(o.basis), rhs(n, 1);
  for (std::size_t i = 0; i < n; ++i) rhs(i, 0) = v[i];
  RatSolve s = solve(bt, rhs);
  if (!s.consistent) return std::nullopt;
  IntVec out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!rat_is_int(s.particular(i, 0))) return std::nullopt;
    out[i] = s.particular(i, 0).get_num();
  }
  return out;
}

Int divisibility(const Lattice& l, const IntVec& v) {
  IntVec p = mat_vec(l.gram(), v);
  Int g = 0;
  for (const Int& x : p) g = gcd(g, x);
  if (g == 0)
    throw std::invalid_argument("divisibility: vector pairs to zero with the lattice");
  return g;
}

namespace {

// Unit-upper-triangular decomposition P = U^T D U of a positive definite
// rational matrix: Q(x) = sum_i d_i (x_i + sum_{j>i} u_ij x_j)^2.
struct Ldl {
  RatVec d;
  RatMat u;
};

Ldl ldl_posdef(RatMat a) {
  const std::size_t n = a.rows();
  Ldl out{RatVec(n), RatMat::identity(n)};
  for (std::size_t i = 0; i < n; ++i) {
    if (a(i, i) <= 0)
      throw std::invalid_argument("ldl_posdef: matrix not positive definite");
    out.d[i] = a(i, i);
    for (std::size_t j = i + 1; j < n; ++j) out.u(i, j) = a(i, j) / a(i, i);
    for (std::size_t r = i + 1; r < n; ++r)
      for (std::size_t c = i + 1; c < n; ++c)
        a(r, c) -= a(r, i) * a(i, c) / a(i, i);
  }
  return out;
}

void enumerate(const Ldl& f, std::size_t level, const Rat& budget, IntVec& x,
               std::vector<IntVec>& out) {
  if (budget < 0) return;
  if (level == std::size_t(-1)) {
    bool nonzero = false;
    for (const Int& c : x) nonzero = nonzero || c != 0;
    if (nonzero) out.push_back(x);
    return;
  }
  // center c = sum_{j>level} u_{level,j} x_j
  Rat c = 0;
  for (std::size_t j = level + 1; j < x.size(); ++j)
    c += f.u(level, j) * Rat(x[j]);
  // |x_level + c| <= sqrt(budget / d_level); overshoot by one and filter.
  Rat t = budget / f.d[level];
  Int s;
  mpz_sqrt(s.get_mpz_t(), Int(floor_rat(t).get_num()).get_mpz_t());
  s += 1;
  Int lo = floor_rat(-c - Rat(s)).get_num();
  Int hi = floor_rat(-c + Rat(s)).get_num() + 1;
  for (Int v = lo; v <= hi; ++v) {
    Rat term = f.d[level] * (Rat(v) + c) * (Rat(v) + c);
    if (term > budget) continue;
    x[level] = v;
    enumerate(f, level - 1, budget - term, x, out);
  }
  x[level] = 0;
}

}  // namespace

std::vector<IntVec> short_vectors(const Lattice& l, const Int& bound) {
  const std::size_t n = l.rank();
  if (l.signature() != Signature{0, n, 0})
    throw std::invalid_argument("short_vectors: lattice not negative definite");
  if (bound <= 0) return {};
  RatMat p(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p(i, j) = Rat(-l.gram()(i, j));
  Ldl f = ldl_posdef(p);
  IntVec x(n);
  std::vector<IntVec> all;
  enumerate(f, n - 1, Rat(bound), x, all);
  // Canonical representatives: first nonzero coordinate positive.
  std::vector<IntVec> out;
  for (IntVec v : all) {
    for (std::size_t j = 0; j < n; ++j) {
      if (v[j] == 0) continue;
      if (v[j] < 0)
        for (std::size_t t = 0; t < n; ++t) v[t] = -v[t];
      break;
    }
    out.push_back(std::move(v));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace latt
