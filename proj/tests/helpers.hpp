#pragma once

// Shared test utilities: seeded random generators for field elements,
// polynomials and algebra elements.

#include <csa/field.hpp>

#include <random>

namespace csatest {

using namespace csa;

inline FieldElem random_elem(const FieldDescPtr& d, std::mt19937_64& rng, int height_bound = 10) {
  switch (d->kind()) {
    case FieldKind::Rationals: {
      std::uniform_int_distribution<long> num(-height_bound, height_bound);
      std::uniform_int_distribution<long> den(1, height_bound);
      return FieldElem::from_rational(d, mpq_class(num(rng), den(rng)));
    }
    case FieldKind::PrimeField: {
      std::uniform_int_distribution<long> r(0, d->modulus().get_si() - 1);
      return FieldElem::from_int(d, r(rng));
    }
    case FieldKind::Tower: {
      std::vector<FieldElem> cs;
      int deg = d->relation().degree();
      for (int i = 0; i < deg; ++i) cs.push_back(random_elem(d->parent(), rng, height_bound));
      return FieldElem::from_coeffs(d, std::move(cs));
    }
  }
  throw contract_violation("random_elem: unreachable");
}

inline FieldElem random_nonzero(const FieldDescPtr& d, std::mt19937_64& rng,
                                int height_bound = 10) {
  for (int i = 0; i < 1000; ++i) {
    FieldElem e = random_elem(d, rng, height_bound);
    if (!e.is_zero()) return e;
  }
  throw contract_violation("random_nonzero: generator stuck at zero");
}

inline Poly random_poly(const FieldDescPtr& d, std::mt19937_64& rng, int deg,
                        bool monic = false) {
  std::vector<FieldElem> cs;
  for (int i = 0; i <= deg; ++i) cs.push_back(random_elem(d, rng, 5));
  if (monic) cs.back() = FieldElem::one(d);
  return Poly::from_coeffs(d, std::move(cs));
}

}  // namespace csatest
