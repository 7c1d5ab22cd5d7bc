// catalog.cpp — loads the data/ JSON files into typed, immutable entries and
// re-verifies every entry's internal structure on the way in.  Checks that
// need genus computations or searches live in the verify targets and the
// test suite; everything cheap and structural is enforced here, so that a
// mistranscribed matrix or glue vector aborts the process with the offending
// key and provenance rather than surfacing later as a wrong verdict.

#include <latt/catalog.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace latt {

namespace {

using nlohmann::json;

Int jint(const json& j) {
  if (j.is_number_integer()) return Int(j.get<long>());
  if (j.is_string()) return Int(j.get<std::string>());
  throw CatalogError("expected an integer, got " + j.dump());
}

IntMat jmat(const json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw CatalogError("expected a matrix, got " + j.dump());
  IntMat m(j.size(), j.front().size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != m.cols())
      throw CatalogError("ragged matrix rows in " + j.dump());
    for (std::size_t k = 0; k < m.cols(); ++k) m(i, k) = jint(j[i][k]);
  }
  return m;
}

Affine jaffine(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw CatalogError("expected an affine pair [a, b], got " + j.dump());
  return Affine{jint(j[0]), jint(j[1])};
}

Congruence jcong(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw CatalogError("expected a congruence [res, mod], got " + j.dump());
  Congruence c{jint(j[0]), jint(j[1])};
  if (c.mod <= 0) throw CatalogError("congruence modulus must be positive");
  return c;
}

// "a" or "a/b", optionally signed; used by the system generators and the
// quotient-map rule coefficients.
Rat jrat(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) return Rat(Int(s));
  return frac(Int(s.substr(0, slash)), Int(s.substr(slash + 1)));
}

Term jterm(const json& j) {
  Term t;
  if (j.contains("ref")) {
    t.kind = Term::Kind::ref;
    t.key = j.at("ref").get<std::string>();
    if (j.contains("scale")) t.scale = jint(j.at("scale"));
    if (t.scale <= 0) throw CatalogError("term scale must be positive");
  } else if (j.contains("rank1")) {
    t.kind = Term::Kind::rank1;
    t.rank1 = jaffine(j.at("rank1"));
  } else if (j.contains("family")) {
    t.kind = Term::Kind::family;
    t.key = j.at("family").get<std::string>();
    if (j.contains("border")) t.border = jint(j.at("border"));
  } else if (j.contains("genus")) {
    t.kind = Term::Kind::genus;
    t.key = j.at("genus").get<std::string>();
  } else if (j.contains("gram")) {
    t.kind = Term::Kind::inline_gram;
    t.gram = jmat(j.at("gram"));
  } else {
    throw CatalogError("unrecognised summand term " + j.dump());
  }
  return t;
}

std::vector<Term> jterms(const json& j) {
  std::vector<Term> ts;
  ts.reserve(j.size());
  for (const auto& x : j) ts.push_back(jterm(x));
  return ts;
}

// Constant terms only: a parameter-free direct-sum formula may not contain a
// t-dependent rank-1 block or a family reference.
void require_constant(const std::vector<Term>& ts) {
  for (const auto& t : ts) {
    if (t.kind == Term::Kind::rank1 && t.rank1.b != 0)
      throw CatalogError("parameter-dependent rank-1 term in a constant sum");
    if (t.kind == Term::Kind::family)
      throw CatalogError("family term in a constant sum");
    if (t.kind == Term::Kind::genus)
      throw CatalogError("genus term in a constant sum");
  }
}

IntMat bordered(const IntMat& f, const Int& corner) {
  IntMat out(f.rows() + 1, f.cols() + 1);
  out(0, 0) = corner;
  if (f.rows() > 0) {
    out(0, 1) = 2;
    out(1, 0) = 2;
  }
  for (std::size_t i = 0; i < f.rows(); ++i)
    for (std::size_t j = 0; j < f.cols(); ++j) out(i + 1, j + 1) = f(i, j);
  return out;
}

json jfrom(const IntMat& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (!m(i, j).fits_slong_p())
        throw CatalogError("matrix entry does not fit a machine word");
      row.push_back(m(i, j).get_si());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Signature operator+(const Signature& a, const Signature& b) {
  return Signature{a.pos + b.pos, a.neg + b.neg, a.zero + b.zero};
}

template <typename Map>
const typename Map::mapped_type& find_or_throw(const Map& m,
                                               const std::string& key,
                                               const char* what) {
  auto it = m.find(key);
  if (it == m.end())
    throw CatalogError(std::string("no ") + what + " named '" + key + "'");
  return it->second;
}

}  // namespace

bool Congruence::admits(const Int& t) const {
  Int r = (t - res) % mod;
  return r == 0;
}

IntMat FamilySpec::at(const Int& t) const {
  IntMat out = cgram;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j)
      out(i, j) += t * coef(i, j);
  return out;
}

IntVec ClassSpec::at(const Int& t) const {
  IntVec v;
  v.reserve(coords.size());
  for (const auto& c : coords) v.push_back(c.at(t));
  return v;
}

FqmElement DiscformInstance::element(const std::string& expr,
                                     const Int& d) const {
  const auto star = expr.find('*');
  if (star == std::string::npos)
    return find_or_throw(named, expr, "discriminant-form generator");
  if (expr.substr(star + 1) != "d")
    throw CatalogError("unrecognised element expression '" + expr + "'");
  const FqmElement& base =
      find_or_throw(named, expr.substr(0, star), "discriminant-form generator");
  return module.scale(base, d);
}

// ---------------------------------------------------------------------------

struct Catalog::Impl {
  std::string dir;
  std::map<std::string, CatalogEntry> meta;
  std::map<std::string, json> raw;
  std::map<std::string, std::string> alias;
  std::map<std::string, IntMat> grams;
  std::map<std::string, Lattice> lattices;
  std::map<std::string, std::vector<Term>> formulas;
  std::map<std::string, FamilySpec> families;
  std::map<std::string, InvolutionSpec> involutions;
  std::map<std::string, GlueEntrySpec> glues;
  std::map<std::string, EmbeddingSpec> embeddings;
  std::map<std::string, PushforwardSpec> pushes;
  std::map<std::string, SystemSpec> systems;
  std::map<std::string, BasisSpec> bases;
  std::map<std::string, ClassSpec> classes;
  std::map<std::string, DiscformSpec> discforms;
  std::map<std::string, RowSpec> rows;
  std::map<std::string, GenusDescriptor> genera;

  std::string resolve(const std::string& key) const;
  const Lattice& lattice(const std::string& key) const;
  Lattice term_lattice(const Term& t, const Int& param) const;
  Lattice terms_lattice(const std::vector<Term>& ts, const Int& param) const;
  GenusDescriptor term_genus(const Term& t, const Int& param) const;
  GenusDescriptor terms_genus(const std::vector<Term>& ts,
                              const Int& param) const;
  GlueSpec build_glue(const GlueEntrySpec& g) const;
  DiscformInstance discform_at(const DiscformSpec& spec, const Int& d) const;

  void load(const std::string& data_dir);

 private:
  void load_gram(const CatalogEntry& e, const json& j);
  void load_family(const CatalogEntry& e, const json& j);
  void load_formula(const CatalogEntry& e, const json& j);
  void load_embedded(const CatalogEntry& e, const json& j);
  void load_involution(const CatalogEntry& e, const json& j);
  void load_glue(const CatalogEntry& e, const json& j);
  void load_basis(const CatalogEntry& e, const json& j);
  void load_class(const CatalogEntry& e, const json& j);
  void load_pushforward(const CatalogEntry& e, const json& j);
  void load_system(const CatalogEntry& e, const json& j);
  void load_discform(const CatalogEntry& e, const json& j);
  void load_row(const CatalogEntry& e, const json& j);
  void build_genera();
  void cross_checks();
};

std::string Catalog::Impl::resolve(const std::string& key) const {
  if (meta.count(key)) return key;
  auto it = alias.find(key);
  if (it != alias.end()) return it->second;
  throw CatalogError("no catalog entry named '" + key + "'");
}

const Lattice& Catalog::Impl::lattice(const std::string& key) const {
  const std::string k = resolve(key);
  auto it = lattices.find(k);
  if (it == lattices.end())
    throw CatalogError("catalog entry '" + k + "' is not Gram-backed");
  return it->second;
}

Lattice Catalog::Impl::term_lattice(const Term& t, const Int& param) const {
  switch (t.kind) {
    case Term::Kind::ref: {
      const Lattice& base = lattice(t.key);
      if (t.scale == 1) return base;
      return rescale(base, Rat(t.scale));
    }
    case Term::Kind::rank1: {
      IntMat m(1, 1);
      m(0, 0) = t.rank1.at(param);
      return Lattice(m);
    }
    case Term::Kind::family: {
      IntMat f = find_or_throw(families, t.key, "family").at(param);
      if (t.border) f = bordered(f, *t.border);
      return Lattice(f);
    }
    case Term::Kind::inline_gram:
      return Lattice(t.gram);
    case Term::Kind::genus:
      throw CatalogError("genus term '" + t.key +
                         "' has no pinned Gram matrix");
  }
  throw CatalogError("corrupt term");
}

Lattice Catalog::Impl::terms_lattice(const std::vector<Term>& ts,
                                     const Int& param) const {
  if (ts.empty()) throw CatalogError("empty direct sum");
  std::vector<Lattice> parts;
  parts.reserve(ts.size());
  for (const auto& t : ts) parts.push_back(term_lattice(t, param));
  return direct_sum(parts);
}

GenusDescriptor Catalog::Impl::term_genus(const Term& t,
                                          const Int& param) const {
  if (t.kind == Term::Kind::genus)
    return find_or_throw(genera, t.key, "derived genus");
  return genus_of(term_lattice(t, param));
}

GenusDescriptor Catalog::Impl::terms_genus(const std::vector<Term>& ts,
                                           const Int& param) const {
  if (ts.empty()) throw CatalogError("empty direct sum");
  GenusDescriptor g = term_genus(ts.front(), param);
  for (std::size_t i = 1; i < ts.size(); ++i) {
    GenusDescriptor h = term_genus(ts[i], param);
    g.signature = g.signature + h.signature;
    g.disc = direct_sum(g.disc, h.disc);
  }
  return g;
}

GlueSpec Catalog::Impl::build_glue(const GlueEntrySpec& g) const {
  GlueSpec spec;
  std::map<std::string, std::size_t> offset;
  std::size_t total = 0;
  for (const auto& s : g.summands) {
    Lattice l = term_lattice(s.term, 0);
    for (std::size_t i = 0; i < s.names.size(); ++i)
      offset.emplace(s.names[i], total + i);
    total += l.rank();
    spec.summands.push_back(std::move(l));
  }
  for (const auto& names : g.vectors) {
    RatVec v(total, Rat(0));
    for (const auto& n : names)
      v[find_or_throw(offset, n, "glue summand generator")] +=
          frac(Int(1), g.denominator);
    spec.glue.push_back(std::move(v));
  }
  return spec;
}

DiscformInstance Catalog::Impl::discform_at(const DiscformSpec& spec,
                                            const Int& d) const {
  if (d < 1) throw CatalogError("discriminant-form parameter must be >= 1");
  const std::size_t n = spec.gen_names.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(spec.gen_names[i], i);

  // Order strings: a literal integer, or "<coeff>d" for a d-multiple.
  IntVec orders;
  orders.reserve(n);
  for (const auto& s : spec.gen_orders) {
    if (!s.empty() && s.back() == 'd') {
      const std::string head = s.substr(0, s.size() - 1);
      orders.push_back((head.empty() ? Int(1) : Int(head)) * d);
    } else {
      orders.push_back(Int(s));
    }
  }

  // Value strings: a literal rational, or "a/(<coeff>d)".
  const auto value = [&](const std::string& s) -> Rat {
    const auto open = s.find("/(");
    if (open != std::string::npos) {
      std::string den = s.substr(open + 2);
      if (den.empty() || den.back() != ')' || den[den.size() - 2] != 'd')
        throw CatalogError("unrecognised value expression '" + s + "'");
      den = den.substr(0, den.size() - 2);
      return frac(Int(s.substr(0, open)),
                  (den.empty() ? Int(1) : Int(den)) * d);
    }
    return jrat(s);
  };

  RatMat qb(n, n);
  for (std::size_t i = 0; i < n; ++i)
    qb(i, i) = value(find_or_throw(spec.q, spec.gen_names[i],
                                   "discriminant-form q value"));
  for (const auto& triple : spec.b) {
    const std::size_t i = find_or_throw(index, triple[0], "generator");
    const std::size_t j = find_or_throw(index, triple[1], "generator");
    const Rat v = value(triple[2]);
    qb(i, j) = v;
    qb(j, i) = v;
  }

  TqmWithMap mapped = make_tqm_mapped(orders, qb);
  DiscformInstance inst{std::move(mapped.module), {}};
  for (std::size_t i = 0; i < n; ++i) {
    IntVec row(mapped.old_to_new.cols());
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = mapped.old_to_new(i, j);
    inst.named.emplace(spec.gen_names[i], inst.module.reduce(row));
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Loading & structural verification.

namespace {

const char* const kDataFiles[] = {
    "constants.json", "classes.json",      "involutions.json", "glue.json",
    "pushforwards.json", "systems.json",   "tables.json",
};

const std::set<std::string> kTables = {"thm-1.3", "thm-1.6",  "table-3",
                                       "table-4", "thm-3.3",  "thm-3.4"};

std::size_t ambient_rank_of(const std::string& table) {
  // Moduli tables live in the K3^[2] lattice (rank 23); the quotient and
  // orbifold tables in the Nikulin lattice (rank 16).
  return (table == "thm-1.3" || table == "thm-1.6") ? 23 : 16;
}

}  // namespace

void Catalog::Impl::load(const std::string& data_dir) {
  dir = data_dir;
  std::vector<std::pair<CatalogEntry, json>> staged;
  for (const char* name : kDataFiles) {
    const std::string path = dir + "/" + name;
    std::ifstream in(path);
    if (!in) throw CatalogError("cannot open data file '" + path + "'");
    json file;
    try {
      in >> file;
    } catch (const json::exception& ex) {
      throw CatalogError("cannot parse '" + path + "': " + ex.what());
    }
    if (!file.contains("entries") || !file["entries"].is_array())
      throw CatalogError("data file '" + path + "' has no entries array");
    for (auto& j : file["entries"]) {
      CatalogEntry e{j.at("key").get<std::string>(),
                     j.at("kind").get<std::string>(),
                     j.value("provenance", std::string{})};
      if (meta.count(e.key))
        throw CatalogError("duplicate catalog key '" + e.key + "'");
      meta.emplace(e.key, e);
      raw.emplace(e.key, j);
      staged.emplace_back(std::move(e), std::move(j));
    }
  }

  // Every failure below names the offending entry and its provenance.
  const auto pass_named = [&](const char* kind,
                              void (Impl::*fn)(const CatalogEntry&,
                                               const json&)) {
    for (const auto& [e, j] : staged) {
      if (e.kind != kind) continue;
      try {
        (this->*fn)(e, j);
      } catch (const std::exception& ex) {
        std::string msg = ex.what();
        if (msg.find("catalog entry '" + e.key + "'") == std::string::npos)
          msg = "catalog entry '" + e.key + "': " + msg + " [" +
                e.provenance + "]";
        throw CatalogError(msg);
      }
    }
  };

  pass_named("gram", &Impl::load_gram);
  pass_named("family", &Impl::load_family);
  pass_named("formula", &Impl::load_formula);

  alias.emplace("LambdaN", "lattice:LambdaN");
  build_genera();

  pass_named("embedded", &Impl::load_embedded);
  pass_named("involution", &Impl::load_involution);
  pass_named("glue", &Impl::load_glue);
  pass_named("basis", &Impl::load_basis);
  pass_named("class", &Impl::load_class);
  pass_named("pushforward", &Impl::load_pushforward);
  pass_named("system", &Impl::load_system);
  pass_named("discform-recipe", &Impl::load_discform);
  pass_named("row", &Impl::load_row);

  cross_checks();
}

void Catalog::Impl::load_gram(const CatalogEntry& e, const json& j) {
  IntMat m = jmat(j.at("matrix"));
  grams.emplace(e.key, m);
  lattices.emplace(e.key, Lattice(std::move(m)));  // enforces symmetric+even
}

void Catalog::Impl::load_family(const CatalogEntry& e, const json& j) {
  FamilySpec f{jmat(j.at("const")), jmat(j.at("coef"))};
  if (f.cgram.rows() != f.cgram.cols() || f.coef.rows() != f.coef.cols() ||
      f.cgram.rows() != f.coef.rows())
    throw CatalogError("family blocks must be square of equal size");
  if (!is_symmetric(f.cgram) || !is_symmetric(f.coef))
    throw CatalogError("family blocks must be symmetric");
  families.emplace(e.key, std::move(f));
}

void Catalog::Impl::load_formula(const CatalogEntry& e, const json& j) {
  std::vector<Term> ts = jterms(j.at("sum"));
  require_constant(ts);
  Lattice l = terms_lattice(ts, 0);
  formulas.emplace(e.key, std::move(ts));
  lattices.emplace(e.key, std::move(l));
}

void Catalog::Impl::build_genera() {
  const auto add = [&](const std::string& name, GenusDescriptor g) {
    if (!genus_consistent(g))
      throw CatalogError("derived genus '" + name +
                         "' fails the signature test");
    genera.emplace(name, std::move(g));
  };
  add("LambdaN", genus_of(lattice("lattice:LambdaN")));
  add("LambdaK3x2", genus_of(lattice("lattice:LambdaK3x2")));
  // The two co-invariant genera of the K3 lattice: signature is the
  // complement's, the form is the invariant part's negated.
  const Lattice& k3 = lattice("lattice:LambdaK3");
  const std::pair<const char*, const char*> pairs[] = {
      {"Omega4", "lattice:Z4-invariant-K3"},
      {"Omega22", "lattice:Klein-invariant-K3"},
  };
  for (const auto& [name, inv_key] : pairs) {
    const Lattice& inv = lattice(inv_key);
    const Signature sk = k3.signature(), si = inv.signature();
    if (sk.pos < si.pos || sk.neg < si.neg)
      throw CatalogError(std::string("invariant lattice '") + inv_key +
                         "' does not fit the K3 signature");
    add(name, GenusDescriptor{Signature{sk.pos - si.pos, sk.neg - si.neg, 0},
                              negated(discriminant_module(inv))});
  }
}

void Catalog::Impl::load_embedded(const CatalogEntry& e, const json& j) {
  EmbeddingSpec s{j.at("ambient").get<std::string>(), jmat(j.at("rows")),
                  j.at("gram").get<std::string>()};
  const Lattice& amb = lattice(s.ambient);
  if (s.rows.cols() != amb.rank())
    throw CatalogError("embedding rows do not match the ambient rank");
  EmbeddedSublattice sub(amb, s.rows);
  if (!sub.primitive)
    throw CatalogError("embedded sublattice is not primitive");
  if (!(sub.induced() == lattice(s.gram)))
    throw CatalogError("induced Gram differs from '" + s.gram + "'");
  embeddings.emplace(e.key, std::move(s));
}

void Catalog::Impl::load_involution(const CatalogEntry& e, const json& j) {
  InvolutionSpec s;
  s.matrix = jmat(j.at("matrix"));
  s.invariant_rank = j.at("invariant_rank").get<std::size_t>();
  s.coinvariant_rank = j.at("coinvariant_rank").get<std::size_t>();
  s.invariant_genus = jterms(j.at("invariant_genus"));
  s.coinvariant_gram = j.at("coinvariant_gram").get<std::string>();
  require_constant(s.invariant_genus);

  const Lattice& amb = lattice(j.at("ambient").get<std::string>());
  const std::size_t n = amb.rank();
  if (s.matrix.rows() != n || s.matrix.cols() != n)
    throw CatalogError("involution matrix does not match the ambient rank");
  if (!(s.matrix * s.matrix == IntMat::identity(n)))
    throw CatalogError("matrix squared is not the identity");
  if (!(transpose(s.matrix) * amb.gram() * s.matrix == amb.gram()))
    throw CatalogError("matrix does not preserve the ambient Gram");
  if (s.invariant_rank + s.coinvariant_rank != n)
    throw CatalogError("invariant + co-invariant ranks do not add up");
  IntMat diff = s.matrix - IntMat::identity(n);
  IntMat sum = s.matrix + IntMat::identity(n);
  if (kernel_basis(diff).rows() != s.invariant_rank)
    throw CatalogError("invariant sublattice has the wrong rank");
  if (kernel_basis(sum).rows() != s.coinvariant_rank)
    throw CatalogError("co-invariant sublattice has the wrong rank");
  if (terms_lattice(s.invariant_genus, 0).rank() != s.invariant_rank)
    throw CatalogError("declared invariant genus has the wrong rank");
  if (lattice(s.coinvariant_gram).rank() != s.coinvariant_rank)
    throw CatalogError("declared co-invariant Gram has the wrong rank");
  involutions.emplace(e.key, std::move(s));
}

void Catalog::Impl::load_glue(const CatalogEntry& e, const json& j) {
  GlueEntrySpec g;
  std::set<std::string> seen;
  for (const auto& sj : j.at("summands")) {
    GlueSummand s{jterm(sj.at("term")), {}};
    for (const auto& n : sj.at("names")) {
      const std::string name = n.get<std::string>();
      if (!seen.insert(name).second)
        throw CatalogError("duplicate summand generator '" + name + "'");
      s.names.push_back(name);
    }
    if (term_lattice(s.term, 0).rank() != s.names.size())
      throw CatalogError("summand name count does not match its rank");
    g.summands.push_back(std::move(s));
  }
  g.denominator = jint(j.at("denominator"));
  if (g.denominator <= 1)
    throw CatalogError("glue denominator must exceed 1");
  for (const auto& vj : j.at("vectors")) {
    std::vector<std::string> names;
    for (const auto& n : vj) names.push_back(n.get<std::string>());
    g.vectors.push_back(std::move(names));
  }
  g.expected_index = jint(j.at("expected_index"));
  g.target_genus = j.at("target_genus").get<std::string>();

  GlueSpec spec = build_glue(g);  // validates the generator names
  Overlattice o = overlattice(spec);  // throws if any class is not admissible
  if (o.index != g.expected_index) {
    std::ostringstream msg;
    msg << "glue group has index " << o.index << ", expected "
        << g.expected_index;
    throw CatalogError(msg.str());
  }
  if (o.lattice.rank() != lattice(g.target_genus).rank())
    throw CatalogError("overlattice rank differs from '" + g.target_genus +
                       "'");
  glues.emplace(e.key, std::move(g));
}

void Catalog::Impl::load_basis(const CatalogEntry& e, const json& j) {
  std::vector<Term> ts = jterms(j.at("lattice"));
  require_constant(ts);
  BasisSpec b{{}, terms_lattice(ts, 0)};
  for (const auto& n : j.at("names")) b.names.push_back(n.get<std::string>());
  if (b.names.size() != b.lattice.rank())
    throw CatalogError("basis name count does not match the lattice rank");
  std::set<std::string> uniq(b.names.begin(), b.names.end());
  if (uniq.size() != b.names.size())
    throw CatalogError("duplicate basis names");
  bases.emplace(e.key, std::move(b));
}

void Catalog::Impl::load_class(const CatalogEntry& e, const json& j) {
  ClassSpec c;
  c.basis = j.at("basis").get<std::string>();
  c.param = j.at("param").get<std::string>();
  c.d_of_param = jaffine(j.at("d_of_param"));
  const BasisSpec& b = find_or_throw(bases, c.basis, "basis");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < b.names.size(); ++i)
    index.emplace(b.names[i], i);
  c.coords.assign(b.names.size(), Affine{0, 0});
  for (const auto& [name, aj] : j.at("coords").items())
    c.coords[find_or_throw(index, name, "basis generator")] = jaffine(aj);
  // The printed square must equal 2 d(t) identically; three sample points
  // pin a quadratic polynomial in t.
  for (long t = 0; t <= 2; ++t) {
    IntVec x = c.at(t);
    if (bilinear(b.lattice.gram(), x, x) != 2 * c.d_of_param.at(t))
      throw CatalogError("class square differs from 2d at t = " +
                         std::to_string(t));
  }
  classes.emplace(e.key, std::move(c));
}

void Catalog::Impl::load_pushforward(const CatalogEntry& e, const json& j) {
  std::vector<Term> src_ts = jterms(j.at("source"));
  std::vector<Term> tgt_ts = jterms(j.at("target"));
  require_constant(src_ts);
  require_constant(tgt_ts);
  PushforwardSpec s{e.key,
                    jint(j.at("degree")),
                    {},
                    {},
                    terms_lattice(src_ts, 0),
                    terms_lattice(tgt_ts, 0),
                    {},
                    {},
                    {}};
  if (j.contains("target_genus")) {
    s.target_genus = jterms(j.at("target_genus"));
    require_constant(s.target_genus);
    if (terms_lattice(s.target_genus, 0).rank() != s.target.rank())
      throw CatalogError("declared target genus has the wrong rank");
  }
  for (const auto& n : j.at("source_basis"))
    s.source_names.push_back(n.get<std::string>());
  for (const auto& n : j.at("target_basis"))
    s.target_names.push_back(n.get<std::string>());
  if (s.source_names.size() != s.source.rank() ||
      s.target_names.size() != s.target.rank())
    throw CatalogError("basis name counts do not match the ranks");

  std::map<std::string, std::size_t> src_index, tgt_index;
  for (std::size_t i = 0; i < s.source_names.size(); ++i)
    src_index.emplace(s.source_names[i], i);
  for (std::size_t i = 0; i < s.target_names.size(); ++i)
    tgt_index.emplace(s.target_names[i], i);

  s.rules.assign(s.source_names.size(), {});
  for (const auto& [src, row] : j.at("rules").items()) {
    auto& rule = s.rules[find_or_throw(src_index, src, "source generator")];
    for (const auto& [tgt, cj] : row.items()) {
      const Rat c = jrat(cj.get<std::string>());
      if (c.get_den() != 1)
        throw CatalogError("non-integral transfer coefficient for '" + src +
                           "'");
      rule[find_or_throw(tgt_index, tgt, "target generator")] = c.get_num();
    }
  }
  if (j.contains("extra_vectors")) {
    for (const auto& [name, row] : j.at("extra_vectors").items()) {
      IntVec v(s.target_names.size(), Int(0));
      for (const auto& [tgt, cj] : row.items())
        v[find_or_throw(tgt_index, tgt, "target generator")] =
            Int(cj.get<std::string>());
      s.extra_vectors.emplace(name, std::move(v));
    }
  }

  // Transport identity: degree * <x,y>_source = <fx,fy>_target on all
  // generator pairs.
  const std::size_t n = s.source_names.size();
  std::vector<IntVec> images;
  images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    IntVec v(n, Int(0));
    v[i] = 1;
    images.push_back(pushforward(s, v));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i; k < n; ++k)
      if (s.degree * s.source.gram()(i, k) !=
          bilinear(s.target.gram(), images[i], images[k]))
        throw CatalogError("transport identity fails on generators '" +
                           s.source_names[i] + "', '" + s.source_names[k] +
                           "'");
  pushes.emplace(e.key, std::move(s));
}

void Catalog::Impl::load_system(const CatalogEntry& e, const json& j) {
  SystemSpec s;
  s.key = e.key;
  for (const auto& n : j.at("symbols")) s.symbols.push_back(n.get<std::string>());
  s.known_prefix = j.at("known_prefix").get<std::size_t>();
  s.cross_known_zero = j.at("cross_known_zero").get<bool>();
  s.target = j.at("target").get<std::string>();
  if (s.known_prefix > s.symbols.size())
    throw CatalogError("known prefix exceeds the symbol count");

  std::vector<Term> known_ts = jterms(j.at("known_gram"));
  require_constant(known_ts);
  s.known = terms_lattice(known_ts, 0).gram();
  if (s.known.rows() != s.known_prefix)
    throw CatalogError("known Gram does not match the known prefix");

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < s.symbols.size(); ++i)
    index.emplace(s.symbols[i], i);
  const auto& gens = j.at("generators");
  s.generators = RatMat(gens.size(), s.symbols.size());
  for (std::size_t g = 0; g < gens.size(); ++g)
    for (const auto& [sym, cj] : gens[g].items())
      s.generators(g, find_or_throw(index, sym, "system symbol")) =
          jrat(cj.get<std::string>());
  if (s.generators.rows() != lattice(s.target).rank())
    throw CatalogError("generator count differs from the target rank");
  systems.emplace(e.key, std::move(s));
}

void Catalog::Impl::load_discform(const CatalogEntry& e, const json& j) {
  DiscformSpec s;
  std::set<std::string> seen;
  for (const auto& g : j.at("generators")) {
    const std::string name = g.at("name").get<std::string>();
    if (!seen.insert(name).second)
      throw CatalogError("duplicate generator '" + name + "'");
    s.gen_names.push_back(name);
    s.gen_orders.push_back(g.at("order").get<std::string>());
  }
  for (const auto& [name, v] : j.at("q").items()) {
    if (!seen.count(name))
      throw CatalogError("q value for unknown generator '" + name + "'");
    s.q.emplace(name, v.get<std::string>());
  }
  if (s.q.size() != s.gen_names.size())
    throw CatalogError("q must assign a value to every generator");
  for (const auto& t : j.at("b")) {
    std::array<std::string, 3> triple{t.at(0).get<std::string>(),
                                      t.at(1).get<std::string>(),
                                      t.at(2).get<std::string>()};
    if (!seen.count(triple[0]) || !seen.count(triple[1]))
      throw CatalogError("b pairing names an unknown generator");
    s.b.push_back(std::move(triple));
  }
  for (const auto& [res, list] : j.at("witnesses_order2_square32").items()) {
    std::vector<std::string> exprs;
    for (const auto& x : list) exprs.push_back(x.get<std::string>());
    s.witnesses_order2_square32.emplace(std::stoi(res), std::move(exprs));
  }
  for (const auto& x : j.at("subgroup_Mtilde1"))
    s.subgroup_Mtilde1.push_back(x.get<std::string>());

  // Shape check: the recipe must instantiate, and every stored element
  // expression must parse against it.
  DiscformInstance inst = discform_at(s, 1);
  for (const auto& [res, exprs] : s.witnesses_order2_square32)
    for (const auto& x : exprs) (void)inst.element(x, 1);
  for (const auto& x : s.subgroup_Mtilde1) (void)inst.element(x, 1);
  discforms.emplace(e.key, std::move(s));
}

void Catalog::Impl::load_row(const CatalogEntry& e, const json& j) {
  RowSpec r;
  r.key = e.key;
  r.table = j.at("table").get<std::string>();
  r.section = j.value("section", std::string{});
  r.param = j.at("param").get<std::string>();
  if (j.contains("param_mod") && !j.at("param_mod").is_null())
    r.param_mod = jcong(j.at("param_mod"));
  if (j.contains("d_of_param") && !j.at("d_of_param").is_null())
    r.d_of_param = jaffine(j.at("d_of_param"));
  if (j.contains("e_of_k") && !j.at("e_of_k").is_null())
    r.e_of_k = jaffine(j.at("e_of_k"));
  if (j.contains("e_mod") && !j.at("e_mod").is_null())
    r.e_mod = jcong(j.at("e_mod"));
  r.k_display = j.value("k_display", std::string{});

  const json& nsj = j.at("ns");
  r.ns.summands = jterms(nsj.at("summands"));
  r.ns.glue_index = jint(nsj.at("glue_index"));
  if (nsj.contains("glue_span") && !nsj.at("glue_span").is_null()) {
    std::vector<std::size_t> span;
    for (const auto& x : nsj.at("glue_span"))
      span.push_back(x.get<std::size_t>());
    r.ns.glue_span = std::move(span);
  }
  r.ns.variant = nsj.value("variant", std::string{});
  r.ns.display = nsj.value("display", std::string{});
  r.t.summands = jterms(j.at("t").at("summands"));
  r.t.display = j.at("t").value("display", std::string{});

  if (j.contains("class_ref") && !j.at("class_ref").is_null())
    r.class_ref = j.at("class_ref").get<std::string>();
  r.halved = j.at("halved").get<bool>();
  if (j.contains("route") && !j.at("route").is_null())
    r.route = j.at("route").get<std::string>();
  if (j.contains("lsq") && !j.at("lsq").is_null()) r.lsq = jaffine(j.at("lsq"));
  if (j.contains("L_display") && !j.at("L_display").is_null())
    r.L_display = j.at("L_display").get<std::string>();
  r.provenance = e.provenance;

  // -- structural coherence ------------------------------------------------
  if (!kTables.count(r.table))
    throw CatalogError("unknown table '" + r.table + "'");
  const bool orbifold = r.table == "thm-3.3" || r.table == "thm-3.4";
  if (orbifold) {
    if (!r.e_of_k || !r.e_mod || r.d_of_param || r.lsq)
      throw CatalogError("orbifold rows carry e_of_k/e_mod, not d/lsq");
  } else {
    if (!r.d_of_param || !r.lsq || r.e_of_k || r.e_mod)
      throw CatalogError("moduli rows carry d_of_param and lsq");
  }

  static const std::map<std::string, std::set<std::string>> kRoutes = {
      {"thm-1.3", {""}},
      {"thm-1.6", {""}},
      {"table-3", {"pi_z4"}},
      {"table-4", {"pi_tau", "pi_phi", "pi_iota"}},
      {"thm-3.3", {""}},
      {"thm-3.4", {""}},
  };
  if (!kRoutes.at(r.table).count(r.route))
    throw CatalogError("route '" + r.route + "' is not valid for this table");

  static const std::set<std::string> kVariants = {"", "(1)", "(2)", "star"};
  if (!kVariants.count(r.ns.variant))
    throw CatalogError("unknown NS variant '" + r.ns.variant + "'");
  if (r.ns.glue_index != 1 && r.ns.glue_index != 2 && r.ns.glue_index != 4)
    throw CatalogError("glue index must be 1, 2 or 4");
  if (r.ns.variant == "star" && r.ns.glue_index != 4)
    throw CatalogError("a starred NS cell must have glue index 4");
  if (r.ns.glue_index == 1 && (r.ns.glue_span || r.ns.variant != ""))
    throw CatalogError("an unprimed NS cell cannot carry a span or variant");
  if (r.ns.glue_span) {
    for (std::size_t i : *r.ns.glue_span)
      if (i >= r.ns.summands.size())
        throw CatalogError("glue span index out of range");
    if (r.ns.glue_span->size() < 2)
      throw CatalogError("glue span must name at least two summands");
  }

  // The printed NS cell must contain the printed square as a rank-1 block:
  // <L^2> for the moduli tables, <H^2> for the quotient tables, <2e> or
  // <4e> (possibly inside a family block) for the orbifold tables.
  const auto has_rank1 = [&](const Affine& a) {
    for (const auto& t : r.ns.summands)
      if (t.kind == Term::Kind::rank1 && t.rank1 == a) return true;
    return false;
  };
  if (!orbifold) {
    if (!has_rank1(*r.lsq))
      throw CatalogError("NS cell does not contain the printed square");
  } else {
    const Affine e2{2 * r.e_of_k->a, 2 * r.e_of_k->b};
    const Affine e4{4 * r.e_of_k->a, 4 * r.e_of_k->b};
    const bool has_family =
        std::any_of(r.ns.summands.begin(), r.ns.summands.end(),
                    [](const Term& t) { return t.kind == Term::Kind::family; });
    if (!has_rank1(e2) && !has_rank1(e4) && !has_family)
      throw CatalogError("orbifold NS cell does not mention e");
  }

  // Printed-square conventions per table (see the schema notes): the moduli
  // tables print L^2 = 2d; the first quotient table prints H^2 = 4d (plain)
  // or d (halved) in terms of the source degree d.
  if (r.table == "thm-1.3" || r.table == "thm-1.6") {
    if (!(*r.lsq == Affine{2 * r.d_of_param->a, 2 * r.d_of_param->b}))
      throw CatalogError("printed square is not 2d");
  } else if (r.table == "table-3") {
    const Affine want = r.halved
                            ? *r.d_of_param
                            : Affine{4 * r.d_of_param->a, 4 * r.d_of_param->b};
    if (!(*r.lsq == want))
      throw CatalogError("printed square does not match the source degree");
  }

  if (!r.class_ref.empty()) {
    const ClassSpec& c = find_or_throw(classes, r.class_ref, "class");
    if (c.param != r.param)
      throw CatalogError("row and class sweep different parameters");
    if ((r.table == "thm-1.3" || r.table == "thm-1.6") &&
        !(c.d_of_param == *r.d_of_param))
      throw CatalogError("row degree differs from the class degree");
  }
  if (r.halved && r.route.empty())
    throw CatalogError("a halved row must name its quotient route");

  // -- instantiation at the first admissible parameter ----------------------
  const auto admissible = [&](const Int& t) {
    if (r.param_mod && !r.param_mod->admits(t)) return false;
    if (orbifold) {
      const Int e2 = r.e_of_k->at(t);
      if (e2 < 1 || !r.e_mod->admits(e2)) return false;
    }
    return true;
  };
  bool instantiated = false;
  for (long t0 = 1; t0 <= 200 && !instantiated; ++t0) {
    const Int t(t0);
    if (!admissible(t)) continue;
    std::size_t ns_rank = 0;
    bool degenerate = false;
    for (const auto& term : r.ns.summands) {
      if (term.kind == Term::Kind::genus) {
        const GenusDescriptor& g = find_or_throw(genera, term.key, "genus");
        ns_rank += g.signature.pos + g.signature.neg + g.signature.zero;
      } else {
        Lattice l = term_lattice(term, t);
        if (l.determinant() == 0) {
          degenerate = true;
          break;
        }
        ns_rank += l.rank();
      }
    }
    if (degenerate) continue;
    Lattice tl = terms_lattice(r.t.summands, t);
    if (tl.determinant() == 0) continue;
    if (ns_rank + tl.rank() != ambient_rank_of(r.table))
      throw CatalogError("NS and T ranks do not fill the ambient lattice");
    instantiated = true;
  }
  if (!instantiated)
    throw CatalogError("no admissible parameter value instantiates the row");

  rows.emplace(e.key, std::move(r));
}

void Catalog::Impl::cross_checks() {
  // The explicit co-invariant embedding must be the (-1)-eigenlattice of
  // the order-4 involution: every row anti-invariant and the spans equal.
  {
    const EmbeddingSpec& emb =
        find_or_throw(embeddings, "embedding:phiD6", "embedding");
    const InvolutionSpec& inv = find_or_throw(involutions, "Z4", "involution");
    const std::size_t n = inv.matrix.rows();
    for (std::size_t i = 0; i < emb.rows.rows(); ++i) {
      IntVec v(n), want(n);
      for (std::size_t k = 0; k < n; ++k) {
        v[k] = emb.rows(i, k);
        want[k] = -emb.rows(i, k);
      }
      if (mat_vec(inv.matrix, v) != want)
        throw CatalogError(
            "embedding:phiD6 row " + std::to_string(i) +
            " is not anti-invariant under the Z4 involution");
    }
    IntMat sum = inv.matrix + IntMat::identity(n);
    if (!(saturate(emb.rows) == kernel_basis(sum)))
      throw CatalogError(
          "embedding:phiD6 does not span the Z4 co-invariant lattice");
  }

  // The order-4 transfer must factor through the two squares: pi4 equals
  // pi-iota-z4 after pi2, coordinatewise on the shared generators.
  {
    const PushforwardSpec& p2 =
        find_or_throw(pushes, "pushforward:pi2", "pushforward");
    const PushforwardSpec& p4 =
        find_or_throw(pushes, "pushforward:pi4", "pushforward");
    const PushforwardSpec& pz =
        find_or_throw(pushes, "pushforward:pi-iota-z4", "pushforward");
    if (p2.degree * pz.degree != p4.degree)
      throw CatalogError("transfer degrees do not compose: pi4 != pi-iota-z4 o pi2");
    const std::size_t n = p2.source.rank();
    const std::size_t mid = p2.target.rank();
    if (pz.source.rank() < mid || p4.source.rank() != n ||
        pz.target.rank() < p4.target.rank())
      throw CatalogError("transfer ranks do not compose");
    for (std::size_t i = 0; i < mid; ++i)
      for (std::size_t k = 0; k < mid; ++k)
        if (pz.source.gram()(i, k) != p2.target.gram()(i, k))
          throw CatalogError("pi-iota-z4 source does not extend pi2's target");
    for (std::size_t i = 0; i < p4.target.rank(); ++i)
      for (std::size_t k = 0; k < p4.target.rank(); ++k)
        if (pz.target.gram()(i, k) != p4.target.gram()(i, k))
          throw CatalogError("pi-iota-z4 target does not extend pi4's target");
    for (std::size_t i = 0; i < n; ++i) {
      IntVec v(n, Int(0));
      v[i] = 1;
      IntVec step = pushforward(p2, v);
      step.resize(pz.source.rank(), Int(0));
      const IntVec composed = pushforward(pz, step);
      const IntVec direct = pushforward(p4, v);
      for (std::size_t k = 0; k < composed.size(); ++k) {
        const Int want = k < direct.size() ? direct[k] : Int(0);
        if (composed[k] != want)
          throw CatalogError("pi4 differs from pi-iota-z4 o pi2 on '" +
                             p2.source_names[i] + "'");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Public surface.

Catalog::Catalog(const std::string& data_dir) {
  auto impl = std::make_shared<Impl>();
  impl->load(data_dir);
  impl_ = std::move(impl);
}

const Catalog& Catalog::get() {
  static const Catalog instance(default_data_dir());
  return instance;
}

std::string Catalog::default_data_dir() {
  if (const char* env = std::getenv("LATCHECK_DATA")) return env;
#ifdef LATT_DATA_DIR
  return LATT_DATA_DIR;
#else
  return "data";
#endif
}

std::size_t Catalog::size() const { return impl_->meta.size(); }

std::vector<std::string> Catalog::keys() const {
  std::vector<std::string> out;
  out.reserve(impl_->meta.size());
  for (const auto& [k, e] : impl_->meta) out.push_back(k);
  return out;
}

bool Catalog::has(const std::string& key) const {
  return impl_->meta.count(key) || impl_->alias.count(key);
}

const CatalogEntry& Catalog::entry(const std::string& key) const {
  return impl_->meta.at(impl_->resolve(key));
}

std::string Catalog::dump(const std::string& key) const {
  const std::string k = impl_->resolve(key);
  const CatalogEntry& e = impl_->meta.at(k);
  json out;
  if (e.kind == "gram" || e.kind == "formula") {
    out = json{{"label", k}, {"gram", jfrom(impl_->lattices.at(k).gram())}};
  } else if (e.kind == "embedded") {
    const json& r = impl_->raw.at(k);
    EmbeddedSublattice sub(impl_->lattice(r.at("ambient").get<std::string>()),
                           jmat(r.at("rows")));
    out = json{{"label", k},
               {"ambient", r.at("ambient")},
               {"basis", r.at("rows")},
               {"gram", jfrom(sub.induced().gram())}};
  } else {
    out = impl_->raw.at(k);
  }
  return out.dump(1);
}

const Lattice& Catalog::lattice(const std::string& key) const {
  return impl_->lattice(key);
}

Lattice Catalog::term_lattice(const Term& t, const Int& param) const {
  return impl_->term_lattice(t, param);
}

Lattice Catalog::terms_lattice(const std::vector<Term>& ts,
                               const Int& param) const {
  return impl_->terms_lattice(ts, param);
}

GenusDescriptor Catalog::term_genus(const Term& t, const Int& param) const {
  return impl_->term_genus(t, param);
}

GenusDescriptor Catalog::terms_genus(const std::vector<Term>& ts,
                                     const Int& param) const {
  return impl_->terms_genus(ts, param);
}

const GenusDescriptor& Catalog::genus(const std::string& name) const {
  return find_or_throw(impl_->genera, name, "derived genus");
}

const FamilySpec& Catalog::family(const std::string& key) const {
  return find_or_throw(impl_->families, key, "family");
}

IntMat Catalog::induced_involution(const std::string& which) const {
  return involution(which).matrix;
}

const InvolutionSpec& Catalog::involution(const std::string& which) const {
  return find_or_throw(impl_->involutions, which, "involution");
}

const GlueEntrySpec& Catalog::glue(const std::string& key) const {
  return find_or_throw(impl_->glues, key, "glue entry");
}

GlueSpec Catalog::glue_spec(const std::string& key) const {
  return impl_->build_glue(glue(key));
}

const EmbeddingSpec& Catalog::embedding(const std::string& key) const {
  return find_or_throw(impl_->embeddings, key, "embedding");
}

const PushforwardSpec& Catalog::pushforward_spec(const std::string& key) const {
  return find_or_throw(impl_->pushes, key, "pushforward");
}

const SystemSpec& Catalog::system(const std::string& key) const {
  return find_or_throw(impl_->systems, key, "system");
}

const BasisSpec& Catalog::basis(const std::string& key) const {
  return find_or_throw(impl_->bases, key, "basis");
}

const ClassSpec& Catalog::class_vec(const std::string& key) const {
  return find_or_throw(impl_->classes, key, "class");
}

const DiscformSpec& Catalog::discform(const std::string& key) const {
  return find_or_throw(impl_->discforms, key, "discriminant form");
}

DiscformInstance Catalog::discform_at(const std::string& key,
                                      const Int& d) const {
  return impl_->discform_at(discform(key), d);
}

const RowSpec& Catalog::row(const std::string& key) const {
  return find_or_throw(impl_->rows, key, "table row");
}

std::vector<const RowSpec*> Catalog::rows_of(const std::string& table) const {
  std::vector<const RowSpec*> out;
  for (const auto& [k, r] : impl_->rows)
    if (r.table == table) out.push_back(&r);
  if (out.empty())
    throw CatalogError("no table named '" + table + "'");
  return out;
}

IntVec pushforward(const PushforwardSpec& spec, const IntVec& v) {
  if (v.size() != spec.rules.size())
    throw CatalogError(
        "vector is outside the source span of '" + spec.key + "': expected " +
        std::to_string(spec.rules.size()) + " coordinates, got " +
        std::to_string(v.size()));
  IntVec out(spec.target.rank(), Int(0));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0) continue;
    for (const auto& [t, c] : spec.rules[i]) out[t] += v[i] * c;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Partial-Gram completion.

PartialGramResult solve_partial_gram(const IntMat& known,
                                     bool cross_known_zero,
                                     const RatMat& generators,
                                     const Lattice& target) {
  const std::size_t n = generators.cols();
  const std::size_t k = known.rows();
  if (k > n) throw CatalogError("known block larger than the symbol space");
  if (generators.rows() != target.rank())
    throw CatalogError("generator count differs from the target rank");
  const std::size_t u = n - k;
  const std::size_t g = generators.rows();

  // Unknowns: the known-unknown pairings y(i,a) (unless pinned to zero),
  // then the upper triangle x(a,b) of the unknown block.
  const std::size_t ybase = cross_known_zero ? 0 : k * u;
  const auto idx_y = [&](std::size_t i, std::size_t a) { return i * u + a; };
  const auto idx_x = [&](std::size_t a, std::size_t b) {
    return ybase + a * u - a * (a - 1) / 2 + (b - a);
  };
  const std::size_t nvar = ybase + u * (u + 1) / 2;

  const std::size_t m = g * (g + 1) / 2;
  RatMat A(m, nvar);
  RatMat rhs(m, 1);
  std::size_t eq = 0;
  for (std::size_t p = 0; p < g; ++p) {
    for (std::size_t q = p; q < g; ++q, ++eq) {
      Rat r = Rat(target.gram()(p, q));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const Rat c = generators(p, i) * generators(q, j);
          if (c == 0) continue;
          if (i < k && j < k) {
            r -= c * Rat(known(i, j));
          } else if (i < k || j < k) {
            if (!cross_known_zero) {
              const std::size_t kk = std::min(i, j);
              const std::size_t uu = std::max(i, j) - k;
              A(eq, idx_y(kk, uu)) += c;
            }
          } else {
            const std::size_t a = std::min(i, j) - k;
            const std::size_t b = std::max(i, j) - k;
            A(eq, idx_x(a, b)) += c;
          }
        }
      }
      rhs(eq, 0) = r;
    }
  }

  PartialGramResult out;
  RatSolve sol = solve(A, rhs);
  if (!sol.consistent) {
    out.detail =
        "the generator pairings are mutually inconsistent with the target "
        "Gram: no assignment of the unknown products satisfies all " +
        std::to_string(m) + " equations";
    return out;
  }
  out.consistent = true;
  if (sol.kernel.rows() != 0) {
    out.detail = "the unknown pairings are underdetermined: solution space "
                 "of dimension " +
                 std::to_string(sol.kernel.rows());
    return out;
  }
  out.unique = true;

  RatMat S(n, n);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) S(i, j) = Rat(known(i, j));
  if (!cross_known_zero) {
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t a = 0; a < u; ++a) {
        S(i, k + a) = sol.particular(idx_y(i, a), 0);
        S(k + a, i) = S(i, k + a);
      }
  }
  for (std::size_t a = 0; a < u; ++a)
    for (std::size_t b = a; b < u; ++b) {
      S(k + a, k + b) = sol.particular(idx_x(a, b), 0);
      S(k + b, k + a) = S(k + a, k + b);
    }

  if (!is_integral(S)) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        if (S(i, j).get_den() != 1) {
          std::ostringstream msg;
          msg << "the completed pairing at (" << i << ", " << j << ") is "
              << S(i, j) << ", not an integer";
          out.detail = msg.str();
          return out;
        }
  }
  IntMat si = to_int(S);
  for (std::size_t i = 0; i < n; ++i)
    if (si(i, i) % 2 != 0) {
      std::ostringstream msg;
      msg << "the completed square at (" << i << ", " << i << ") is "
          << si(i, i) << ", which is odd";
      out.detail = msg.str();
      return out;
    }
  if (!(generators * S * transpose(generators) == to_rat(target.gram())))
    throw CatalogError("internal error: completed Gram fails verification");
  out.gram = std::move(si);
  return out;
}

PartialGramResult solve_partial_gram(const Catalog& cat, const SystemSpec& s) {
  return solve_partial_gram(s.known, s.cross_known_zero, s.generators,
                            cat.lattice(s.target));
}

}  // namespace latt
