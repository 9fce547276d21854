#include <csa/field.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace csa;
using csatest::random_elem;
using csatest::random_nonzero;

namespace {
FieldDescPtr Q() { return FieldDesc::rationals(); }

FieldDescPtr quad_ext(long c0, long c1 = 0) {
  // Q[x]/(x^2 + c1 x + c0)
  return adjoin_root(Q(), Poly::from_ints(Q(), {c0, c1, 1}));
}
}  // namespace

TEST_CASE("rational arithmetic is exact and canonical") {
  auto q = Q();
  FieldElem a = FieldElem::from_rational(q, mpq_class(1, 2));
  FieldElem b = FieldElem::from_rational(q, mpq_class(1, 3));
  CHECK((a + b).scalar() == mpq_class(5, 6));
  CHECK((a * b).scalar() == mpq_class(1, 6));
  CHECK((-a).scalar() == mpq_class(-1, 2));
  CHECK(FieldElem::from_rational(q, mpq_class(2, 4)) == a);
}

TEST_CASE("prime field arithmetic reduces mod p") {
  auto f5 = FieldDesc::prime_field(5);
  FieldElem three = FieldElem::from_int(f5, 3);
  FieldElem four = FieldElem::from_int(f5, 4);
  CHECK((three * four) == FieldElem::from_int(f5, 2));
  CHECK((three + four) == FieldElem::from_int(f5, 2));
  CHECK((-three) == FieldElem::from_int(f5, 2));
  CHECK_THROWS_AS(FieldDesc::prime_field(6), contract_violation);
}

TEST_CASE("tower reduction by the relation") {
  auto k = quad_ext(-2);  // x^2 = 2
  FieldElem x = FieldElem::generator(k);
  CHECK(x * x == FieldElem::from_int(k, 2));
  CHECK((x + x) == FieldElem::from_coeffs(k, {FieldElem::zero(Q()), FieldElem::from_int(Q(), 2)}));
}

TEST_CASE("descriptor mismatch is rejected") {
  auto q = Q();
  auto f5 = FieldDesc::prime_field(5);
  FieldElem a = FieldElem::one(q);
  FieldElem b = FieldElem::one(f5);
  CHECK_THROWS_AS(a + b, field_mismatch);
}

TEST_CASE("invert_or_witness trichotomy on the spec instances") {
  SECTION("rational inverse") {
    auto r = invert_or_witness(FieldElem::from_rational(Q(), mpq_class(2, 3)));
    REQUIRE(std::holds_alternative<FieldElem>(r));
    CHECK(std::get<FieldElem>(r).scalar() == mpq_class(3, 2));
  }
  SECTION("zero maps to Zero") {
    auto r = invert_or_witness(FieldElem::zero(Q()));
    CHECK(std::holds_alternative<InvertZero>(r));
  }
  SECTION("x-1 in Q[x]/(x^2-1) is a zero divisor with cofactor x+1") {
    auto k = quad_ext(-1);  // x^2 = 1
    FieldElem x = FieldElem::generator(k);
    FieldElem a = x - FieldElem::one(k);
    auto r = invert_or_witness(a);
    REQUIRE(std::holds_alternative<ZeroDivisorWitness>(r));
    const auto& w = std::get<ZeroDivisorWitness>(r);
    CHECK(w.element == a);
    REQUIRE(w.cofactor.has_value());
    CHECK(*w.cofactor == x + FieldElem::one(k));
    CHECK((w.element * *w.cofactor).is_zero());
  }
  SECTION("x in Q[x]/(x^2-2) inverts to x/2") {
    auto k = quad_ext(-2);
    FieldElem x = FieldElem::generator(k);
    auto r = invert_or_witness(x);
    REQUIRE(std::holds_alternative<FieldElem>(r));
    FieldElem inv = std::get<FieldElem>(r);
    CHECK((x * inv).is_one());
    CHECK(inv == x * FieldElem::from_rational(k, mpq_class(1, 2)));
  }
}

TEST_CASE("split_tower produces two nonzero branches") {
  SECTION("Q[x]/(x^2-1) splits at x-1") {
    auto k = quad_ext(-1);
    FieldElem x = FieldElem::generator(k);
    auto r = invert_or_witness(x - FieldElem::one(k));
    auto& w = std::get<ZeroDivisorWitness>(r);
    auto sp = split_tower(k, w);
    REQUIRE(std::holds_alternative<TowerSplit>(sp));
    const auto& s = std::get<TowerSplit>(sp);
    CHECK(s.lo->total_degree() + s.hi->total_degree() == k->total_degree());
    CHECK(s.lo->total_degree() == 1);
    // witness element dies in one branch, its cofactor in the other
    CHECK(s.to_lo(w.element).is_zero());
    CHECK(s.to_hi(*w.cofactor).is_zero());
    CHECK_FALSE(s.to_hi(w.element).is_zero());
  }
  SECTION("F5[x]/(x^2-4) splits into x-2 and x+2") {
    auto f5 = FieldDesc::prime_field(5);
    auto k = adjoin_root(f5, Poly::from_ints(f5, {-4, 0, 1}));
    FieldElem x = FieldElem::generator(k);
    FieldElem a = x - FieldElem::from_int(k, 2);
    auto r = invert_or_witness(a);
    REQUIRE(std::holds_alternative<ZeroDivisorWitness>(r));
    auto sp = split_tower(k, std::get<ZeroDivisorWitness>(r));
    REQUIRE(std::holds_alternative<TowerSplit>(sp));
    const auto& s = std::get<TowerSplit>(sp);
    CHECK(s.factor_lo == Poly::from_ints(f5, {-2, 1}));
    CHECK(s.factor_hi == Poly::from_ints(f5, {2, 1}));
  }
}

TEST_CASE("poly_gcd on the spec instances") {
  auto q = Q();
  SECTION("gcd(X^2-1, X-1) = X-1") {
    auto g = poly_gcd(Poly::from_ints(q, {-1, 0, 1}), Poly::from_ints(q, {-1, 1}));
    REQUIRE(std::holds_alternative<Poly>(g));
    CHECK(std::get<Poly>(g) == Poly::from_ints(q, {-1, 1}));
  }
  SECTION("gcd(X^2-2, X^2-3) = 1") {
    auto g = poly_gcd(Poly::from_ints(q, {-2, 0, 1}), Poly::from_ints(q, {-3, 0, 1}));
    REQUIRE(std::holds_alternative<Poly>(g));
    CHECK(std::get<Poly>(g) == Poly::one(q));
  }
  SECTION("a leading coefficient that is a zero divisor surfaces the witness") {
    auto k = quad_ext(-1);  // y^2 = 1, y-1 is a zero divisor
    FieldElem y = FieldElem::generator(k);
    FieldElem zd = y - FieldElem::one(k);
    // f has leading coefficient y-1; the Euclidean step must invert it
    Poly f = Poly::from_coeffs(k, {FieldElem::one(k), FieldElem::zero(k), zd});
    Poly g = Poly::from_coeffs(k, {FieldElem::one(k), FieldElem::one(k)});
    auto r = poly_gcd(f, g);
    REQUIRE(std::holds_alternative<ZeroDivisorWitness>(r));
    CHECK(std::get<ZeroDivisorWitness>(r).element == zd);
  }
  SECTION("gcd divides both inputs whenever it returns a polynomial") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 25; ++t) {
      Poly a = csatest::random_poly(q, rng, 4);
      Poly b = csatest::random_poly(q, rng, 3);
      if (a.is_zero() || b.is_zero()) continue;
      auto g = poly_gcd(a, b);
      REQUIRE(std::holds_alternative<Poly>(g));
      const Poly& d = std::get<Poly>(g);
      CHECK(poly_divmod(a, d).rem.is_zero());
      CHECK(poly_divmod(b, d).rem.is_zero());
    }
  }
}

TEST_CASE("adjoin_root stacks triangular relations") {
  auto k1 = quad_ext(-2);
  CHECK(k1->total_degree() == 2);
  auto k0 = adjoin_root(Q(), Poly::from_ints(Q(), {-3, 1}));  // X - 3
  CHECK(k0->total_degree() == 1);
  CHECK(FieldElem::generator(k0) == FieldElem::from_int(k0, 3));
  // X^2 - x1 over Q[x1]/(x1^2-2): total degree 4
  Poly rel = Poly::from_coeffs(k1, {-FieldElem::generator(k1), FieldElem::zero(k1), FieldElem::one(k1)});
  auto k2 = adjoin_root(k1, rel);
  CHECK(k2->total_degree() == 4);
  FieldElem x2 = FieldElem::generator(k2);
  CHECK(x2 * x2 == FieldElem::generator(k1).lifted_to(k2));
  CHECK_THROWS_AS(adjoin_root(Q(), Poly::from_ints(Q(), {1, 0, 2})), contract_violation);
}

TEST_CASE("field axioms hold on random canonical representatives") {
  std::mt19937_64 rng(42);
  std::vector<FieldDescPtr> fields = {
      Q(), FieldDesc::prime_field(7), quad_ext(-2), quad_ext(1, 1),  // x^2+x+1
      adjoin_root(quad_ext(-2),
                  Poly::from_coeffs(quad_ext(-2), {-FieldElem::generator(quad_ext(-2)),
                                                   FieldElem::zero(quad_ext(-2)),
                                                   FieldElem::one(quad_ext(-2))})),
  };
  for (const auto& d : fields) {
    for (int t = 0; t < 20; ++t) {
      FieldElem a = random_elem(d, rng), b = random_elem(d, rng), c = random_elem(d, rng);
      CHECK((a + b) + c == a + (b + c));
      CHECK((a * b) * c == a * (b * c));
      CHECK(a * (b + c) == a * b + a * c);
      CHECK(a * b == b * a);
      CHECK(a + FieldElem::zero(d) == a);
      CHECK(a * FieldElem::one(d) == a);
      auto inv = invert_or_witness(a);
      if (std::holds_alternative<FieldElem>(inv)) {
        CHECK((a * std::get<FieldElem>(inv)).is_one());
        CHECK_FALSE(a.is_zero());
      } else if (std::holds_alternative<InvertZero>(inv)) {
        CHECK(a.is_zero());
      } else {
        const auto& w = std::get<ZeroDivisorWitness>(inv);
        CHECK_FALSE(a.is_zero());
        REQUIRE(w.cofactor.has_value());
        CHECK_FALSE(w.cofactor->is_zero());
        CHECK((w.element * *w.cofactor).is_zero());
      }
    }
  }
}

TEST_CASE("collapse_linear_relations eliminates degree-1 levels") {
  auto q = Q();
  auto k1 = adjoin_root(q, Poly::from_ints(q, {-3, 1}));          // x1 = 3
  auto k2 = adjoin_root(k1, Poly::from_ints(k1, {-2, 0, 1}));     // x2^2 = 2
  auto k3 = adjoin_root(k2, Poly::from_coeffs(k2, {-FieldElem::generator(k2), FieldElem::one(k2)}));
  // x3 = x2
  CHECK(k3->total_degree() == 2);
  auto col = collapse_linear_relations(k3);
  CHECK(col.desc->height() == 1);
  CHECK(col.desc->total_degree() == 2);
  CHECK(col.kept == std::vector<bool>{false, true, false});
  // x1 -> 3, x3 -> x2
  FieldElem x3 = FieldElem::generator(k3);
  FieldElem mapped = col.map(x3 * x3);
  CHECK(mapped == FieldElem::from_int(col.desc, 2));
  FieldElem x1v = col.map(FieldElem::generator(k1).lifted_to(k3));
  CHECK(x1v == FieldElem::from_int(col.desc, 3));
}

TEST_CASE("element printing stays readable") {
  auto k = quad_ext(-2);
  FieldElem e = FieldElem::generator(k) + FieldElem::from_int(k, 1);
  CHECK(e.to_string() == "1 + x1");
  CHECK(k->to_string() == "Q[x1]/(-2 + x1^2)");
}
