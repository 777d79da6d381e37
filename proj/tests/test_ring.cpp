#include "esafl/ring.hpp"

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

using namespace esafl;

namespace {

RingElem random_elem(uint32_t n, uint32_t log_mod, Rng& rng) {
  return RingElem::uniform(n, log_mod, rng);
}

}  // namespace

TEST_SUITE("ring") {

TEST_CASE("additive identity and wraparound") {
  Rng rng(1);
  for (uint32_t log_mod : {16u, 64u, 478u}) {
    RingElem a = random_elem(8, log_mod, rng);
    RingElem zero(8, log_mod);
    CHECK(add(a, zero) == a);
    CHECK(sub(a, a) == zero);

    // (q-1) + 1 wraps to zero in every slot
    RingElem qm1(8, log_mod);
    RingElem one(8, log_mod);
    for (uint32_t i = 0; i < 8; ++i) {
      std::vector<uint64_t> ff(qm1.limbs(), ~uint64_t(0));
      qm1.set_coeff(i, ff);  // masked to q-1
      one.set_coeff_u64(i, 1);
    }
    CHECK(add(qm1, one) == RingElem(8, log_mod));
    // 0 - 1 wraps to q-1
    CHECK(sub(RingElem(8, log_mod), one) == qm1);
  }
}

TEST_CASE("add and sub match the bignum oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    uint32_t log_mod = trial % 2 ? 16 : 478;
    RingElem a = random_elem(8, log_mod, rng);
    RingElem b = random_elem(8, log_mod, rng);
    RingElem s = add(a, b);
    RingElem d = sub(a, b);
    for (uint32_t i = 0; i < 8; ++i) {
      auto ea = oracle::coeff_to_int(a, i);
      auto eb = oracle::coeff_to_int(b, i);
      CHECK(oracle::coeff_to_int(s, i) == oracle::mod_pow2(ea + eb, log_mod));
      CHECK(oracle::coeff_to_int(d, i) == oracle::mod_pow2(ea - eb, log_mod));
    }
  }
}

TEST_CASE("group laws at several dimensions") {
  Rng rng(3);
  for (uint32_t n : {4u, 8u, 1024u}) {
    RingElem a = random_elem(n, 478, rng);
    RingElem b = random_elem(n, 478, rng);
    RingElem c = random_elem(n, 478, rng);
    CHECK(add(a, b) == add(b, a));
    CHECK(add(add(a, b), c) == add(a, add(b, c)));
    CHECK(sub(add(a, b), b) == a);
  }
}

TEST_CASE("multiplication by the unit key is the identity") {
  Rng rng(4);
  RingElem a = random_elem(16, 478, rng);
  SparseTernaryKey s;
  s.n = 16;
  s.plus = {0};
  CHECK(mul_sparse(a, s) == a);
}

TEST_CASE("negacyclic wrap flips the sign") {
  // n=4: X^3 * X = X^4 = -1
  RingElem a(4, 16);
  a.set_coeff_u64(3, 1);
  SparseTernaryKey s;
  s.n = 4;
  s.plus = {1};
  RingElem r = mul_sparse(a, s);
  CHECK(r.coeff_u64(0) == 0xffff);  // q - 1
  CHECK(r.coeff_u64(1) == 0);
  CHECK(r.coeff_u64(2) == 0);
  CHECK(r.coeff_u64(3) == 0);
}

TEST_CASE("mul_sparse matches the schoolbook oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    uint32_t n = trial % 2 ? 8 : 16;
    uint32_t log_mod = trial % 3 ? 478 : 16;
    RingElem a = random_elem(n, log_mod, rng);
    SparseTernaryKey s = sample_ternary(rng, n, 4);
    auto dense = oracle::ternary_dense(s);
    auto expect = oracle::negacyclic_schoolbook(a, dense, log_mod);
    CHECK(oracle::ring_equals(mul_sparse(a, s), expect));
  }
}

TEST_CASE("mul_small matches the schoolbook oracle") {
  Rng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    uint32_t n = 8;
    uint32_t log_mod = trial % 3 ? 478 : 63;
    RingElem a = random_elem(n, log_mod, rng);
    SmallPoly s;
    s.coeffs.resize(n);
    for (auto& c : s.coeffs) c = int64_t(rng.below(19)) - 9;
    s.bound = 9;
    auto expect = oracle::negacyclic_schoolbook(a, s.coeffs, log_mod);
    CHECK(oracle::ring_equals(mul_small(a, s), expect));
  }
}

TEST_CASE("mul_small of an all-zero polynomial is zero") {
  Rng rng(7);
  RingElem a = random_elem(8, 478, rng);
  SmallPoly z;
  z.coeffs.assign(8, 0);
  CHECK(mul_small(a, z) == RingElem(8, 478));
}

TEST_CASE("distributivity over a sum of sparse keys is exact") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    RingElem a = random_elem(16, 478, rng);
    SparseTernaryKey k1 = sample_ternary(rng, 16, 4);
    SparseTernaryKey k2 = sample_ternary(rng, 16, 4);
    SparseTernaryKey keys[] = {k1, k2};
    SmallPoly s = key_sum(keys);
    CHECK(mul_small(a, s) == add(mul_sparse(a, k1), mul_sparse(a, k2)));
  }
}

TEST_CASE("error lifting shifts by log_p with signed wrap") {
  SmallPoly e;
  e.coeffs.assign(4, 0);
  CHECK(lift_and_scale_error(e, 460, 478) == RingElem(4, 478));

  e.coeffs[0] = 1;
  RingElem r = lift_and_scale_error(e, 460, 478);
  auto v = oracle::coeff_to_int(r, 0);
  CHECK(v == (oracle::cpp_int(1) << 460));

  e.coeffs[0] = -1;
  r = lift_and_scale_error(e, 460, 478);
  v = oracle::coeff_to_int(r, 0);
  CHECK(v == (oracle::cpp_int(1) << 478) - (oracle::cpp_int(1) << 460));
}

TEST_CASE("mod_p keeps only the low log_p bits") {
  RingElem a(4, 478);
  std::vector<uint64_t> limbs(a.limbs(), 0);
  // coefficient 2^460 + 5
  limbs[0] = 5;
  limbs[460 / 64] |= uint64_t(1) << (460 % 64);
  a.set_coeff(0, limbs);
  a.set_coeff_u64(1, 12345);
  RingElem r = mod_p(a, 460);
  CHECK(r.log_mod() == 460);
  CHECK(oracle::coeff_to_int(r, 0) == 5);
  CHECK(oracle::coeff_to_int(r, 1) == 12345);
}

TEST_CASE("ternary sampler: exhaustion and emptiness") {
  Rng rng(9);
  SparseTernaryKey empty = sample_ternary(rng, 4, 0);
  CHECK(empty.weight() == 0);
  SparseTernaryKey all = sample_ternary(rng, 4, 4);
  CHECK(all.weight() == 4);
  std::vector<uint32_t> seen = all.plus;
  seen.insert(seen.end(), all.minus.begin(), all.minus.end());
  std::sort(seen.begin(), seen.end());
  CHECK(seen == std::vector<uint32_t>{0, 1, 2, 3});
  CHECK_THROWS_AS(sample_ternary(rng, 4, 5), RingError);
}

TEST_CASE("ternary sampler statistics") {
  Rng rng(10);
  const int draws = 10000;
  uint64_t plus_total = 0;
  for (int i = 0; i < draws; ++i) {
    SparseTernaryKey k = sample_ternary(rng, 64, 8);
    REQUIRE(k.weight() == 8);
    // plus and minus index sets must be disjoint
    for (uint32_t p : k.plus)
      CHECK(std::find(k.minus.begin(), k.minus.end(), p) == k.minus.end());
    plus_total += k.plus.size();
  }
  // sign balance within 4 sigma of Binomial(draws*8, 1/2)
  double mean = draws * 8 / 2.0;
  double sigma = std::sqrt(draws * 8 * 0.25);
  CHECK(std::abs(double(plus_total) - mean) < 4.0 * sigma);
}

TEST_CASE("gaussian sampler: variance and truncation") {
  Rng rng(11);
  const uint32_t n = 100000;
  double sigma = std::sqrt(1.22);
  SmallPoly e = sample_gaussian(rng, n, sigma);
  CHECK(e.bound == 7);
  double sum = 0, sq = 0;
  for (int64_t v : e.coeffs) {
    CHECK(std::abs(v) <= 7);
    sum += double(v);
    sq += double(v) * double(v);
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  CHECK(var == doctest::Approx(1.22).epsilon(0.05));
  CHECK(std::abs(mean) < 0.05);
}

TEST_CASE("serialization roundtrips and rejects non-canonical bytes") {
  Rng rng(12);
  for (uint32_t log_mod : {16u, 63u, 64u, 478u}) {
    RingElem a = random_elem(8, log_mod, rng);
    auto bytes = a.serialize();
    CHECK(bytes.size() == a.serialized_size());
    CHECK(RingElem::deserialize(bytes, 8, log_mod) == a);
  }
  // set an unused high bit at log_q = 478: top 2 bits of byte 59
  RingElem a = random_elem(2, 478, rng);
  auto bytes = a.serialize();
  bytes[59] |= 0x80;
  CHECK_THROWS_AS(RingElem::deserialize(bytes, 2, 478), RingError);
  CHECK_THROWS_AS(RingElem::deserialize(std::span(bytes).subspan(1), 2, 478),
                  RingError);
}

TEST_CASE("samplers are deterministic under a fixed seed") {
  Rng r1(42), r2(42);
  CHECK(sample_ternary(r1, 64, 8) == sample_ternary(r2, 64, 8));
  CHECK(sample_gaussian(r1, 64, 1.1) == sample_gaussian(r2, 64, 1.1));
  CHECK(RingElem::uniform(8, 478, r1) == RingElem::uniform(8, 478, r2));
}

}  // TEST_SUITE
