#pragma once

// Exact arithmetic over discrete base fields (Q, F_p) and triangular tower
// quotients F[x1,...,xl]/(P1(x1), P2(x1,x2), ...).  Towers are not assumed
// to be fields: every inversion is attempted, and failure is reified as a
// ZeroDivisorWitness that callers may use to split the tower into two
// nonzero quotient branches.

#include <gmpxx.h>

#include <cstddef>
#include <exception>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace csa {

class FieldDesc;
using FieldDescPtr = std::shared_ptr<const FieldDesc>;

enum class FieldKind { Rationals, PrimeField, Tower };

class field_mismatch : public std::invalid_argument {
 public:
  explicit field_mismatch(const std::string& what) : std::invalid_argument(what) {}
};

class contract_violation : public std::logic_error {
 public:
  explicit contract_violation(const std::string& what) : std::logic_error(what) {}
};

// ---------------------------------------------------------------------------
// FieldElem

class FieldElem {
 public:
  FieldElem() = default;  // invalid placeholder; any arithmetic throws

  static FieldElem zero(const FieldDescPtr& d);
  static FieldElem one(const FieldDescPtr& d);
  static FieldElem from_rational(const FieldDescPtr& d, const mpq_class& q);
  static FieldElem from_int(const FieldDescPtr& d, long n);
  // Element of a Tower desc given coefficients over the parent (ascending powers).
  static FieldElem from_coeffs(const FieldDescPtr& tower, std::vector<FieldElem> coeffs);
  // The adjoined variable of the top relation of a Tower desc.
  static FieldElem generator(const FieldDescPtr& tower);

  bool valid() const { return desc_ != nullptr; }
  const FieldDescPtr& field() const { return desc_; }

  bool is_zero() const;
  bool is_one() const;

  // Base-field value (Rationals or PrimeField residue).
  const mpq_class& scalar() const { return scalar_; }
  // Tower coordinates over the parent, ascending powers, trailing zeros trimmed.
  const std::vector<FieldElem>& coeffs() const { return coeffs_; }
  // Padded coefficient access for Tower elements.
  FieldElem coeff(std::size_t i) const;
  std::size_t top_size() const { return coeffs_.size(); }

  // When this element is constant in every tower variable, its base scalar.
  std::optional<mpq_class> as_base_rational() const;

  FieldElem& operator+=(const FieldElem& o);
  FieldElem& operator-=(const FieldElem& o);
  FieldElem& operator*=(const FieldElem& o);
  friend FieldElem operator+(FieldElem a, const FieldElem& b) { return a += b; }
  friend FieldElem operator-(FieldElem a, const FieldElem& b) { return a -= b; }
  friend FieldElem operator*(FieldElem a, const FieldElem& b) { return a *= b; }
  FieldElem operator-() const;

  bool operator==(const FieldElem& o) const;
  bool operator!=(const FieldElem& o) const { return !(*this == o); }

  // Embeds into a taller tower whose chain contains this element's field.
  FieldElem lifted_to(const FieldDescPtr& taller) const;

  std::string to_string() const;

 private:
  FieldDescPtr desc_;
  mpq_class scalar_;               // base kinds
  std::vector<FieldElem> coeffs_;  // Tower kind

  void trim();
  friend class FieldDesc;
};

// ---------------------------------------------------------------------------
// Poly: dense univariate polynomial over a FieldDesc, canonical (no trailing
// zero coefficients; the zero polynomial has an empty coefficient vector).

struct Poly {
  FieldDescPtr field;
  std::vector<FieldElem> c;  // ascending degree

  static Poly zero(const FieldDescPtr& d) { return Poly{d, {}}; }
  static Poly one(const FieldDescPtr& d);
  static Poly x(const FieldDescPtr& d);
  static Poly from_coeffs(const FieldDescPtr& d, std::vector<FieldElem> cs);
  static Poly from_ints(const FieldDescPtr& d, const std::vector<long>& cs);

  int degree() const { return static_cast<int>(c.size()) - 1; }
  bool is_zero() const { return c.empty(); }
  FieldElem coeff(std::size_t i) const;
  const FieldElem& lc() const;
  bool is_monic() const;

  void trim();
  std::string to_string(const std::string& var = "X") const;

  bool operator==(const Poly& o) const;
  bool operator!=(const Poly& o) const { return !(*this == o); }
};

Poly operator+(const Poly& a, const Poly& b);
Poly operator-(const Poly& a, const Poly& b);
Poly operator*(const Poly& a, const Poly& b);
Poly operator*(const FieldElem& s, const Poly& a);
Poly operator-(const Poly& a);

// ---------------------------------------------------------------------------
// FieldDesc: a chain of tower nodes over a base field.  Each Tower node
// carries one monic relation over its parent; relation k may mention only
// the variables of levels < k through its coefficients.

class FieldDesc : public std::enable_shared_from_this<FieldDesc> {
 public:
  static FieldDescPtr rationals();
  static FieldDescPtr prime_field(const mpz_class& p);
  static FieldDescPtr tower(const FieldDescPtr& parent, Poly relation);

  FieldKind kind() const { return kind_; }
  const mpz_class& modulus() const { return p_; }
  const FieldDescPtr& parent() const { return parent_; }
  const Poly& relation() const { return relation_; }
  const std::string& var_name() const { return var_; }

  std::size_t height() const { return height_; }  // number of tower nodes
  mpz_class characteristic() const;
  // Product of the relation degrees: the dimension over the base field.
  unsigned long total_degree() const;
  // The sub-tower with the first k relations (k = 0 is the base field).
  FieldDescPtr level(std::size_t k) const;

  bool same(const FieldDescPtr& o) const;

  std::string to_string() const;

 private:
  FieldDesc() = default;
  FieldKind kind_ = FieldKind::Rationals;
  mpz_class p_;
  FieldDescPtr parent_;
  Poly relation_;
  std::string var_;
  std::size_t height_ = 0;
};

inline void check_same_field(const FieldDescPtr& a, const FieldDescPtr& b, const char* where) {
  if (!a || !b) throw contract_violation(std::string(where) + ": uninitialized field element");
  if (!a->same(b))
    throw field_mismatch(std::string(where) + ": field descriptor mismatch (" + a->to_string() +
                         " vs " + b->to_string() + ")");
}

// ---------------------------------------------------------------------------
// Zero-divisor witnesses and the dynamical error channel.

struct ZeroDivisorWitness {
  FieldElem element;                  // nonzero, noninvertible at `node`
  std::optional<FieldElem> cofactor;  // element * cofactor == 0 when present
  FieldDescPtr node;                  // tower node whose relation was obstructed
  Poly relation_gcd;                  // monic proper factor of node->relation(); may be zero
  std::string context;
};

// Internal propagation channel for witnesses discovered inside linear or
// polynomial algebra; public operations catch it and return the witness.
class zero_divisor_error : public std::exception {
 public:
  explicit zero_divisor_error(ZeroDivisorWitness w) : w_(std::move(w)) {}
  const ZeroDivisorWitness& witness() const { return w_; }
  const char* what() const noexcept override { return "zero divisor encountered"; }

 private:
  ZeroDivisorWitness w_;
};

struct InvertZero {};  // the input was 0
using InvertResult = std::variant<FieldElem, InvertZero, ZeroDivisorWitness>;

InvertResult invert_or_witness(const FieldElem& a);

// Inversion that throws zero_divisor_error on a witness and contract_violation
// on division by zero; the workhorse of all internal linear algebra.
FieldElem inv_or_throw(const FieldElem& a);

FieldElem operator/(const FieldElem& a, const FieldElem& b);

// ---------------------------------------------------------------------------
// Polynomial division, gcd, xgcd (dynamical: may throw zero_divisor_error).

struct PolyDivMod {
  Poly quot, rem;
};

// Division by a monic divisor: exact, never needs an inversion.
PolyDivMod poly_divmod_monic(const Poly& a, const Poly& b);
// General division; inverts lc(b) and may throw zero_divisor_error.
PolyDivMod poly_divmod(const Poly& a, const Poly& b);

struct XgcdResult {
  Poly g, u, v;  // g monic (or zero), u*f + v*h == g
};
XgcdResult poly_xgcd(const Poly& f, const Poly& h);

// Public gcd with the witness folded into the return value.
std::variant<Poly, ZeroDivisorWitness> poly_gcd(const Poly& f, const Poly& g);

FieldElem poly_eval(const Poly& p, const FieldElem& x);
Poly poly_pow(const Poly& p, unsigned long e);

// ---------------------------------------------------------------------------
// Tower construction and splitting.

// Appends f (monic, degree >= 1, coefficients over `desc`) as a new relation.
FieldDescPtr adjoin_root(const FieldDescPtr& desc, const Poly& f);

struct TowerSplit {
  FieldDescPtr lo, hi;  // relation d resp. P/d at the split level
  std::size_t level;    // 1-based index of the split relation
  Poly factor_lo, factor_hi;

  FieldElem to_lo(const FieldElem& e) const;
  FieldElem to_hi(const FieldElem& e) const;
};

std::variant<TowerSplit, ZeroDivisorWitness> split_tower(const FieldDescPtr& desc,
                                                         const ZeroDivisorWitness& w);

// Maps an element of `src` into the structurally parallel tower `dst`
// (same base, same height, relations of dst divide the reductions of src's).
FieldElem reduce_into(const FieldElem& e, const FieldDescPtr& dst);
Poly reduce_poly_into(const Poly& p, const FieldDescPtr& dst);

// Optional normalization pass: eliminates degree-1 relations X - c by
// substituting the variable.  Returns the collapsed descriptor together with
// the value of every original variable inside it, which determines the
// reduction map old -> new.
struct CollapsedTower {
  FieldDescPtr desc;
  std::vector<FieldElem> var_values;  // per original level, element of `desc`
  std::vector<bool> kept;             // per original level
  FieldElem map(const FieldElem& e) const;
};
CollapsedTower collapse_linear_relations(const FieldDescPtr& desc);

// ===========================================================================
// Implementation
// ===========================================================================

// ------------------------------ FieldDesc ---------------------------------

inline FieldDescPtr FieldDesc::rationals() {
  static FieldDescPtr q = [] {
    auto d = std::shared_ptr<FieldDesc>(new FieldDesc());
    d->kind_ = FieldKind::Rationals;
    return FieldDescPtr(d);
  }();
  return q;
}

inline FieldDescPtr FieldDesc::prime_field(const mpz_class& p) {
  if (p < 2 || mpz_probab_prime_p(p.get_mpz_t(), 40) == 0)
    throw contract_violation("prime_field: modulus " + p.get_str() + " is not prime");
  auto d = std::shared_ptr<FieldDesc>(new FieldDesc());
  d->kind_ = FieldKind::PrimeField;
  d->p_ = p;
  return d;
}

inline FieldDescPtr FieldDesc::tower(const FieldDescPtr& parent, Poly relation) {
  if (!parent) throw contract_violation("tower: null parent");
  if (relation.is_zero() || relation.degree() < 1 || !relation.is_monic())
    throw contract_violation("tower: relation must be monic of degree >= 1");
  check_same_field(relation.field, parent, "tower relation");
  auto d = std::shared_ptr<FieldDesc>(new FieldDesc());
  d->kind_ = FieldKind::Tower;
  d->parent_ = parent;
  d->relation_ = std::move(relation);
  d->height_ = parent->height() + 1;
  d->var_ = "x" + std::to_string(d->height_);
  return d;
}

inline mpz_class FieldDesc::characteristic() const {
  const FieldDesc* d = this;
  while (d->kind_ == FieldKind::Tower) d = d->parent_.get();
  return d->kind_ == FieldKind::PrimeField ? d->p_ : mpz_class(0);
}

inline unsigned long FieldDesc::total_degree() const {
  unsigned long deg = 1;
  const FieldDesc* d = this;
  while (d->kind_ == FieldKind::Tower) {
    deg *= static_cast<unsigned long>(d->relation_.degree());
    d = d->parent_.get();
  }
  return deg;
}

inline FieldDescPtr FieldDesc::level(std::size_t k) const {
  if (k > height_) throw contract_violation("level: index exceeds tower height");
  FieldDescPtr d = shared_from_this();
  while (d->height() > k) d = d->parent();
  return d;
}

inline bool FieldDesc::same(const FieldDescPtr& o) const {
  if (!o) return false;
  if (o.get() == this) return true;
  if (kind_ != o->kind_) return false;
  switch (kind_) {
    case FieldKind::Rationals:
      return true;
    case FieldKind::PrimeField:
      return p_ == o->p_;
    case FieldKind::Tower:
      return relation_ == o->relation_ && parent_->same(o->parent_);
  }
  return false;
}

inline std::string FieldDesc::to_string() const {
  switch (kind_) {
    case FieldKind::Rationals:
      return "Q";
    case FieldKind::PrimeField:
      return "F" + p_.get_str();
    case FieldKind::Tower:
      return parent_->to_string() + "[" + var_ + "]/(" + relation_.to_string(var_) + ")";
  }
  return "?";
}

// ------------------------------ FieldElem ---------------------------------

inline void FieldElem::trim() {
  while (!coeffs_.empty() && coeffs_.back().is_zero()) coeffs_.pop_back();
}

inline FieldElem FieldElem::zero(const FieldDescPtr& d) {
  if (!d) throw contract_violation("FieldElem::zero: null descriptor");
  FieldElem e;
  e.desc_ = d;
  return e;  // base scalar 0 / empty coeff vector are both canonical zeros
}

inline FieldElem FieldElem::from_rational(const FieldDescPtr& d, const mpq_class& q) {
  FieldElem e = zero(d);
  if (d->kind() == FieldKind::Rationals) {
    e.scalar_ = q;
    e.scalar_.canonicalize();
  } else if (d->kind() == FieldKind::PrimeField) {
    if (q.get_den() == 1) {
      mpz_class r = q.get_num() % d->modulus();
      if (r < 0) r += d->modulus();
      e.scalar_ = mpq_class(r);
    } else {
      mpz_class inv;
      if (mpz_invert(inv.get_mpz_t(), mpq_class(q.get_den()).get_num().get_mpz_t(),
                     d->modulus().get_mpz_t()) == 0)
        throw contract_violation("from_rational: denominator not invertible mod p");
      mpz_class r = (q.get_num() * inv) % d->modulus();
      if (r < 0) r += d->modulus();
      e.scalar_ = mpq_class(r);
    }
  } else {
    if (!(q == 0)) e.coeffs_ = {from_rational(d->parent(), q)};
  }
  return e;
}

inline FieldElem FieldElem::from_int(const FieldDescPtr& d, long n) {
  return from_rational(d, mpq_class(n));
}

inline FieldElem FieldElem::one(const FieldDescPtr& d) { return from_int(d, 1); }

inline FieldElem FieldElem::from_coeffs(const FieldDescPtr& tower, std::vector<FieldElem> coeffs) {
  if (!tower || tower->kind() != FieldKind::Tower)
    throw contract_violation("from_coeffs: descriptor is not a tower");
  for (const auto& c : coeffs) check_same_field(c.field(), tower->parent(), "from_coeffs");
  FieldElem e;
  e.desc_ = tower;
  e.coeffs_ = std::move(coeffs);
  // reduce modulo the relation so the representation is canonical
  const Poly& rel = tower->relation();
  if (static_cast<int>(e.coeffs_.size()) - 1 >= rel.degree()) {
    Poly p = Poly::from_coeffs(tower->parent(), e.coeffs_);
    e.coeffs_ = poly_divmod_monic(p, rel).rem.c;
  }
  e.trim();
  return e;
}

inline FieldElem FieldElem::generator(const FieldDescPtr& tower) {
  if (!tower || tower->kind() != FieldKind::Tower)
    throw contract_violation("generator: descriptor is not a tower");
  return from_coeffs(tower,
                     {zero(tower->parent()), one(tower->parent())});
}

inline bool FieldElem::is_zero() const {
  if (!valid()) throw contract_violation("is_zero on uninitialized element");
  return desc_->kind() == FieldKind::Tower ? coeffs_.empty() : scalar_ == 0;
}

inline bool FieldElem::is_one() const {
  if (desc_->kind() != FieldKind::Tower) return scalar_ == 1;
  return coeffs_.size() == 1 && coeffs_[0].is_one();
}

inline FieldElem FieldElem::coeff(std::size_t i) const {
  if (desc_->kind() != FieldKind::Tower) throw contract_violation("coeff on base element");
  if (i < coeffs_.size()) return coeffs_[i];
  return zero(desc_->parent());
}

inline std::optional<mpq_class> FieldElem::as_base_rational() const {
  const FieldElem* e = this;
  while (e->desc_->kind() == FieldKind::Tower) {
    if (e->coeffs_.empty()) return mpq_class(0);
    if (e->coeffs_.size() > 1) return std::nullopt;
    e = &e->coeffs_[0];
  }
  return e->scalar_;
}

inline FieldElem& FieldElem::operator+=(const FieldElem& o) {
  check_same_field(desc_, o.desc_, "field_add");
  if (desc_->kind() == FieldKind::Tower) {
    if (coeffs_.size() < o.coeffs_.size()) coeffs_.resize(o.coeffs_.size(), zero(desc_->parent()));
    for (std::size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    trim();
  } else {
    scalar_ += o.scalar_;
    if (desc_->kind() == FieldKind::PrimeField) {
      mpz_class r = scalar_.get_num() % desc_->modulus();
      if (r < 0) r += desc_->modulus();
      scalar_ = mpq_class(r);
    }
  }
  return *this;
}

inline FieldElem FieldElem::operator-() const {
  FieldElem r = *this;
  if (desc_->kind() == FieldKind::Tower) {
    for (auto& c : r.coeffs_) c = -c;
  } else if (desc_->kind() == FieldKind::PrimeField) {
    if (r.scalar_ != 0) r.scalar_ = mpq_class(desc_->modulus() - r.scalar_.get_num());
  } else {
    r.scalar_ = -r.scalar_;
  }
  return r;
}

inline FieldElem& FieldElem::operator-=(const FieldElem& o) { return *this += -o; }

inline FieldElem& FieldElem::operator*=(const FieldElem& o) {
  check_same_field(desc_, o.desc_, "field_mul");
  if (desc_->kind() == FieldKind::Tower) {
    if (coeffs_.empty() || o.coeffs_.empty()) {
      coeffs_.clear();
      return *this;
    }
    Poly a = Poly::from_coeffs(desc_->parent(), coeffs_);
    Poly b = Poly::from_coeffs(desc_->parent(), o.coeffs_);
    Poly prod = a * b;
    coeffs_ = poly_divmod_monic(prod, desc_->relation()).rem.c;
    trim();
  } else {
    scalar_ *= o.scalar_;
    if (desc_->kind() == FieldKind::PrimeField) {
      mpz_class r = scalar_.get_num() % desc_->modulus();
      if (r < 0) r += desc_->modulus();
      scalar_ = mpq_class(r);
    }
  }
  return *this;
}

inline bool FieldElem::operator==(const FieldElem& o) const {
  if (!valid() || !o.valid()) return valid() == o.valid();
  check_same_field(desc_, o.desc_, "field_eq");
  if (desc_->kind() == FieldKind::Tower) return coeffs_ == o.coeffs_;
  return scalar_ == o.scalar_;
}

inline FieldElem FieldElem::lifted_to(const FieldDescPtr& taller) const {
  if (desc_->same(taller)) {
    FieldElem e = *this;
    e.desc_ = taller;
    return e;
  }
  if (!taller || taller->kind() != FieldKind::Tower)
    throw contract_violation("lifted_to: target does not contain source field");
  FieldElem inner = lifted_to(taller->parent());
  if (inner.is_zero()) return zero(taller);
  FieldElem e;
  e.desc_ = taller;
  e.coeffs_ = {std::move(inner)};
  return e;
}

inline std::string FieldElem::to_string() const {
  if (!valid()) return "<uninit>";
  if (desc_->kind() != FieldKind::Tower) return scalar_.get_str();
  if (coeffs_.empty()) return "0";
  std::ostringstream os;
  const std::string& v = desc_->var_name();
  bool first = true;
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    if (coeffs_[i].is_zero()) continue;
    if (!first) os << " + ";
    first = false;
    std::string cs = coeffs_[i].to_string();
    bool simple = cs.find_first_of("+ ") == std::string::npos;
    if (i == 0) {
      os << cs;
    } else {
      if (coeffs_[i].is_one())
        os << v;
      else
        os << (simple ? cs : "(" + cs + ")") << "*" << v;
      if (i > 1) os << "^" << i;
    }
  }
  return os.str();
}

// ------------------------------ Poly ---------------------------------------

inline void Poly::trim() {
  while (!c.empty() && c.back().is_zero()) c.pop_back();
}

inline Poly Poly::one(const FieldDescPtr& d) { return Poly{d, {FieldElem::one(d)}}; }

inline Poly Poly::x(const FieldDescPtr& d) {
  return Poly{d, {FieldElem::zero(d), FieldElem::one(d)}};
}

inline Poly Poly::from_coeffs(const FieldDescPtr& d, std::vector<FieldElem> cs) {
  for (const auto& e : cs) check_same_field(e.field(), d, "Poly::from_coeffs");
  Poly p{d, std::move(cs)};
  p.trim();
  return p;
}

inline Poly Poly::from_ints(const FieldDescPtr& d, const std::vector<long>& cs) {
  std::vector<FieldElem> v;
  v.reserve(cs.size());
  for (long n : cs) v.push_back(FieldElem::from_int(d, n));
  return from_coeffs(d, std::move(v));
}

inline FieldElem Poly::coeff(std::size_t i) const {
  return i < c.size() ? c[i] : FieldElem::zero(field);
}

inline const FieldElem& Poly::lc() const {
  if (c.empty()) throw contract_violation("lc of zero polynomial");
  return c.back();
}

inline bool Poly::is_monic() const { return !c.empty() && c.back().is_one(); }

inline bool Poly::operator==(const Poly& o) const {
  if (!field || !o.field) return c.empty() && o.c.empty();
  check_same_field(field, o.field, "poly_eq");
  return c == o.c;
}

inline std::string Poly::to_string(const std::string& var) const {
  if (c.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (std::size_t i = c.size(); i-- > 0;) {
    if (c[i].is_zero()) continue;
    if (!first) os << " + ";
    first = false;
    std::string cs = c[i].to_string();
    bool simple = cs.find_first_of("+ ") == std::string::npos;
    if (i == 0) {
      os << cs;
      continue;
    }
    if (c[i].is_one())
      os << var;
    else
      os << (simple ? cs : "(" + cs + ")") << "*" << var;
    if (i > 1) os << "^" << i;
  }
  return os.str();
}

inline Poly operator+(const Poly& a, const Poly& b) {
  check_same_field(a.field, b.field, "poly_add");
  Poly r = a.c.size() >= b.c.size() ? a : b;
  const Poly& s = a.c.size() >= b.c.size() ? b : a;
  for (std::size_t i = 0; i < s.c.size(); ++i) r.c[i] += s.c[i];
  r.trim();
  return r;
}

inline Poly operator-(const Poly& a) {
  Poly r = a;
  for (auto& e : r.c) e = -e;
  return r;
}

inline Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }

inline Poly operator*(const Poly& a, const Poly& b) {
  check_same_field(a.field, b.field, "poly_mul");
  if (a.is_zero() || b.is_zero()) return Poly::zero(a.field);
  std::vector<FieldElem> r(a.c.size() + b.c.size() - 1, FieldElem::zero(a.field));
  for (std::size_t i = 0; i < a.c.size(); ++i)
    for (std::size_t j = 0; j < b.c.size(); ++j) r[i + j] += a.c[i] * b.c[j];
  Poly p{a.field, std::move(r)};
  p.trim();
  return p;
}

inline Poly operator*(const FieldElem& s, const Poly& a) {
  Poly r = a;
  for (auto& e : r.c) e *= s;
  r.trim();
  return r;
}

inline PolyDivMod poly_divmod_monic(const Poly& a, const Poly& b) {
  if (b.is_zero() || !b.is_monic()) throw contract_violation("poly_divmod_monic: divisor not monic");
  check_same_field(a.field, b.field, "poly_divmod_monic");
  Poly rem = a;
  int db = b.degree();
  std::vector<FieldElem> quot;
  int dq = a.degree() - db;
  if (dq < 0) return {Poly::zero(a.field), rem};
  quot.assign(static_cast<std::size_t>(dq) + 1, FieldElem::zero(a.field));
  while (rem.degree() >= db) {
    int k = rem.degree() - db;
    FieldElem f = rem.lc();
    quot[static_cast<std::size_t>(k)] = f;
    for (int i = 0; i <= db; ++i)
      rem.c[static_cast<std::size_t>(k + i)] -= f * b.c[static_cast<std::size_t>(i)];
    rem.trim();
  }
  Poly q{a.field, std::move(quot)};
  q.trim();
  return {std::move(q), std::move(rem)};
}

inline PolyDivMod poly_divmod(const Poly& a, const Poly& b) {
  if (b.is_zero()) throw contract_violation("poly_divmod: division by zero polynomial");
  if (b.is_monic()) return poly_divmod_monic(a, b);
  FieldElem li = inv_or_throw(b.lc());
  Poly bm = li * b;
  PolyDivMod dm = poly_divmod_monic(a, bm);
  dm.quot = li * dm.quot;
  return dm;
}

inline XgcdResult poly_xgcd(const Poly& f, const Poly& h) {
  check_same_field(f.field, h.field, "poly_xgcd");
  const FieldDescPtr& d = f.field;
  Poly r0 = f, r1 = h;
  Poly u0 = Poly::one(d), v0 = Poly::zero(d);
  Poly u1 = Poly::zero(d), v1 = Poly::one(d);
  while (!r1.is_zero()) {
    PolyDivMod dm = poly_divmod(r0, r1);  // may throw zero_divisor_error
    Poly r2 = dm.rem;
    Poly u2 = u0 - dm.quot * u1;
    Poly v2 = v0 - dm.quot * v1;
    r0 = std::move(r1);
    u0 = std::move(u1);
    v0 = std::move(v1);
    r1 = std::move(r2);
    u1 = std::move(u2);
    v1 = std::move(v2);
  }
  if (r0.is_zero()) return {r0, u0, v0};
  FieldElem li = inv_or_throw(r0.lc());
  return {li * r0, li * u0, li * v0};
}

inline std::variant<Poly, ZeroDivisorWitness> poly_gcd(const Poly& f, const Poly& g) {
  try {
    return poly_xgcd(f, g).g;
  } catch (const zero_divisor_error& e) {
    return e.witness();
  }
}

inline FieldElem poly_eval(const Poly& p, const FieldElem& x) {
  FieldElem r = FieldElem::zero(x.field());
  for (std::size_t i = p.c.size(); i-- > 0;) r = r * x + p.c[i].lifted_to(x.field());
  return r;
}

inline Poly poly_pow(const Poly& p, unsigned long e) {
  Poly r = Poly::one(p.field);
  Poly b = p;
  while (e > 0) {
    if (e & 1UL) r = r * b;
    b = b * b;
    e >>= 1UL;
  }
  return r;
}

// ------------------------------ inversion ---------------------------------

inline InvertResult invert_or_witness(const FieldElem& a) {
  if (!a.valid()) throw contract_violation("invert_or_witness: uninitialized element");
  const FieldDescPtr& d = a.field();
  switch (d->kind()) {
    case FieldKind::Rationals: {
      if (a.is_zero()) return InvertZero{};
      return FieldElem::from_rational(d, 1 / a.scalar());
    }
    case FieldKind::PrimeField: {
      if (a.is_zero()) return InvertZero{};
      mpz_class inv;
      mpz_invert(inv.get_mpz_t(), a.scalar().get_num().get_mpz_t(), d->modulus().get_mpz_t());
      return FieldElem::from_rational(d, mpq_class(inv));
    }
    case FieldKind::Tower: {
      if (a.is_zero()) return InvertZero{};
      Poly lift = Poly::from_coeffs(d->parent(), a.coeffs());
      XgcdResult xg;
      try {
        xg = poly_xgcd(lift, d->relation());
      } catch (const zero_divisor_error& e) {
        return e.witness();  // obstruction at a lower level
      }
      if (xg.g.degree() == 0) {
        // u * a == 1 modulo the relation
        Poly u = poly_divmod_monic(xg.u, d->relation()).rem;
        return FieldElem::from_coeffs(d, u.c);
      }
      // proper factor: a * (rel / g) == 0 in the quotient
      Poly cof = poly_divmod_monic(d->relation(), xg.g).quot;
      ZeroDivisorWitness w;
      w.element = a;
      w.cofactor = FieldElem::from_coeffs(d, cof.c);
      w.node = d;
      w.relation_gcd = xg.g;
      w.context = "inversion against " + d->relation().to_string(d->var_name());
      return w;
    }
  }
  throw contract_violation("invert_or_witness: unreachable");
}

inline FieldElem inv_or_throw(const FieldElem& a) {
  InvertResult r = invert_or_witness(a);
  if (std::holds_alternative<FieldElem>(r)) return std::get<FieldElem>(r);
  if (std::holds_alternative<InvertZero>(r)) throw contract_violation("division by zero");
  throw zero_divisor_error(std::get<ZeroDivisorWitness>(r));
}

inline FieldElem operator/(const FieldElem& a, const FieldElem& b) { return a * inv_or_throw(b); }

// ------------------------------ towers ------------------------------------

inline FieldDescPtr adjoin_root(const FieldDescPtr& desc, const Poly& f) {
  return FieldDesc::tower(desc, f);
}

inline Poly reduce_poly_into(const Poly& p, const FieldDescPtr& dst) {
  std::vector<FieldElem> cs;
  cs.reserve(p.c.size());
  for (const auto& e : p.c) cs.push_back(reduce_into(e, dst));
  return Poly::from_coeffs(dst, std::move(cs));
}

inline FieldElem reduce_into(const FieldElem& e, const FieldDescPtr& dst) {
  if (!e.valid()) throw contract_violation("reduce_into: uninitialized element");
  if (e.field()->kind() != FieldKind::Tower) {
    if (dst->kind() != FieldKind::Tower) {
      if (!e.field()->same(dst)) throw contract_violation("reduce_into: base field mismatch");
      return e;
    }
    throw contract_violation("reduce_into: height mismatch");
  }
  if (dst->kind() != FieldKind::Tower) throw contract_violation("reduce_into: height mismatch");
  std::vector<FieldElem> cs;
  cs.reserve(e.coeffs().size());
  for (const auto& ce : e.coeffs()) cs.push_back(reduce_into(ce, dst->parent()));
  return FieldElem::from_coeffs(dst, std::move(cs));  // from_coeffs reduces mod dst relation
}

inline FieldElem TowerSplit::to_lo(const FieldElem& e) const { return reduce_into(e, lo); }
inline FieldElem TowerSplit::to_hi(const FieldElem& e) const { return reduce_into(e, hi); }

inline std::variant<TowerSplit, ZeroDivisorWitness> split_tower(const FieldDescPtr& desc,
                                                                const ZeroDivisorWitness& w) {
  if (!w.node || w.node->kind() != FieldKind::Tower)
    throw contract_violation("split_tower: witness has no tower node");
  // locate the witness node within desc's chain
  std::vector<FieldDescPtr> chain;  // top .. node
  FieldDescPtr cur = desc;
  while (cur && cur->kind() == FieldKind::Tower && !cur->same(w.node)) {
    chain.push_back(cur);
    cur = cur->parent();
  }
  if (!cur || !cur->same(w.node))
    throw contract_violation("split_tower: witness node is not part of the tower");

  Poly d = w.relation_gcd;
  if (d.is_zero()) {
    Poly lift = Poly::from_coeffs(cur->parent(), w.element.coeffs());
    try {
      d = poly_xgcd(lift, cur->relation()).g;
    } catch (const zero_divisor_error& e) {
      return e.witness();  // deeper witness; caller recurses on it first
    }
  }
  const Poly& rel = cur->relation();
  if (d.degree() < 1 || d.degree() >= rel.degree())
    throw contract_violation("split_tower: gcd is not a nontrivial factor");
  Poly other = poly_divmod_monic(rel, d).quot;

  TowerSplit s;
  s.level = cur->height();
  s.factor_lo = d;
  s.factor_hi = other;
  FieldDescPtr lo = FieldDesc::tower(cur->parent(), d);
  FieldDescPtr hi = FieldDesc::tower(cur->parent(), other);
  // rebuild the relations above the split level, reducing coefficients
  for (std::size_t i = chain.size(); i-- > 0;) {
    lo = FieldDesc::tower(lo, reduce_poly_into(chain[i]->relation(), lo));
    hi = FieldDesc::tower(hi, reduce_poly_into(chain[i]->relation(), hi));
  }
  s.lo = lo;
  s.hi = hi;
  return s;
}

namespace detail {
// Evaluates an element of an original sub-tower in the collapsed tower,
// substituting every variable by its recorded value.
inline FieldElem substitute_vars(const FieldElem& e, const std::vector<FieldElem>& var_values,
                                 const FieldDescPtr& target) {
  if (e.field()->kind() != FieldKind::Tower) return FieldElem::from_rational(target, e.scalar());
  if (e.is_zero()) return FieldElem::zero(target);
  const FieldElem& xv = var_values[e.field()->height() - 1];
  FieldElem acc = FieldElem::zero(target);
  for (std::size_t k = e.coeffs().size(); k-- > 0;)
    acc = acc * xv + substitute_vars(e.coeffs()[k], var_values, target);
  return acc;
}
}  // namespace detail

inline FieldElem CollapsedTower::map(const FieldElem& e) const {
  return detail::substitute_vars(e, var_values, desc);
}

inline CollapsedTower collapse_linear_relations(const FieldDescPtr& desc) {
  CollapsedTower out;
  out.desc = desc;
  if (!desc || desc->kind() != FieldKind::Tower) return out;
  std::vector<FieldDescPtr> nodes;  // top .. bottom
  FieldDescPtr cur = desc;
  while (cur->kind() == FieldKind::Tower) {
    nodes.push_back(cur);
    cur = cur->parent();
  }
  FieldDescPtr nd = cur;  // collapsed tower built bottom-up
  std::vector<FieldElem> subs;
  std::vector<bool> kept;
  for (std::size_t i = nodes.size(); i-- > 0;) {
    Poly rel = nodes[i]->relation();
    std::vector<FieldElem> cs;
    cs.reserve(rel.c.size());
    for (const auto& ce : rel.c) cs.push_back(detail::substitute_vars(ce, subs, nd));
    Poly new_rel = Poly::from_coeffs(nd, std::move(cs));
    if (new_rel.degree() == 1) {
      subs.push_back(-new_rel.coeff(0));
      kept.push_back(false);
    } else {
      nd = FieldDesc::tower(nd, new_rel);
      for (auto& s : subs) s = s.lifted_to(nd);
      subs.push_back(FieldElem::generator(nd));
      kept.push_back(true);
    }
  }
  out.desc = nd;
  out.var_values = std::move(subs);
  out.kept = std::move(kept);
  return out;
}

}  // namespace csa
