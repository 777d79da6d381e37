#include "esafl/params.hpp"

#include "doctest.h"

using namespace esafl;

TEST_SUITE("params") {

TEST_CASE("defaults derive pad=4 and T=23 at N=9") {
  SchemeParams p = setup(1u << 15, 478, 460, 16, 9);
  CHECK(p.pad == 4);
  CHECK(p.slots_T == 23);
  CHECK(p.capacity() == 22u * 16384u);
}

TEST_CASE("two clients derive pad=1 and T=27") {
  SchemeParams p = setup(1u << 15, 478, 460, 16, 2);
  CHECK(p.pad == 1);
  CHECK(p.slots_T == 460 / 17);
  CHECK(p.slots_T == 27);
}

TEST_CASE("absurd pad override is rejected with a named invariant") {
  ParamOverrides ov;
  ov.pad = 500;
  CHECK_THROWS_AS(setup(1u << 15, 478, 460, 16, 9, ov), ParamsError);
  try {
    setup(1u << 15, 478, 460, 16, 9, ov);
  } catch (const ParamsError& e) {
    CHECK(std::string(e.what()).find("slots_T") != std::string::npos);
  }
}

TEST_CASE("a stricter pad than the carry bound is accepted via override") {
  ParamOverrides ov;
  ov.pad = 5;  // one bit beyond the ceil(log2 N) minimum
  SchemeParams p = setup(1u << 15, 478, 460, 16, 9, ov);
  CHECK(p.pad == 5);
  CHECK(p.slots_T == 460 / 21);
}

TEST_CASE("capacity reproduces the published ciphertext counts") {
  SchemeParams p = full_profile();
  uint64_t cap = p.capacity();
  CHECK(cap == 360448);
  auto count = [cap](uint64_t L) { return (L + cap - 1) / cap; };
  CHECK(count(101770) == 1);
  CHECK(count(1250000) == 4);
  CHECK(count(4020000) == 12);

  uint64_t per_poly = p.n / 2;
  auto unpk = [per_poly](uint64_t L) {
    return (L + per_poly - 1) / per_poly;
  };
  CHECK(unpk(101770) == 7);
  CHECK(unpk(1250000) == 77);
  CHECK(unpk(4020000) == 246);
}

TEST_CASE("tiny geometry capacity") {
  ParamOverrides ov;
  ov.slots_T = 2;
  ov.ternary_weight = 2;
  SchemeParams p = setup(4, 40, 36, 4, 2, ov);
  CHECK(p.capacity() == 2);  // one data slot, two reals
}

TEST_CASE("setup is deterministic") {
  CHECK(setup(1u << 10, 478, 460, 16, 9) == setup(1u << 10, 478, 460, 16, 9));
}

TEST_CASE("capacity is at least one and slots_T at least two") {
  for (uint32_t n : {4u, 64u, 1u << 10}) {
    for (uint32_t nc : {2u, 3u, 9u, 16u}) {
      ParamOverrides ov;
      ov.ternary_weight = std::min(n, 64u);
      SchemeParams p = setup(n, 478, 460, 16, nc, ov);
      CHECK(p.slots_T >= 2);
      CHECK(p.capacity() >= 1);
    }
  }
}

TEST_CASE("constraint violations name the invariant") {
  CHECK_THROWS_AS(setup(1000, 478, 460, 16, 9), ParamsError);  // not a power of two
  CHECK_THROWS_AS(setup(1u << 10, 460, 460, 16, 9), ParamsError);  // p == q
  CHECK_THROWS_AS(setup(1u << 10, 478, 460, 16, 1), ParamsError);  // N < 2
  ParamOverrides bad_pad;
  bad_pad.pad = 3;  // below ceil(log2(9)) = 4
  CHECK_THROWS_AS(setup(1u << 10, 478, 460, 16, 9, bad_pad), ParamsError);
  ParamOverrides bad_sigma;
  bad_sigma.gaussian_sigma = -1.0;
  CHECK_THROWS_AS(setup(1u << 10, 478, 460, 16, 9, bad_sigma), ParamsError);
  // noise headroom: N * ceil(6 sigma) must stay below 2^(log_q - log_p)
  ParamOverrides big_sigma;
  big_sigma.gaussian_sigma = 6000.0;  // 9 * 36000 > 2^18
  CHECK_THROWS_AS(setup(1u << 10, 478, 460, 16, 9, big_sigma), ParamsError);
}

TEST_CASE("error bound is ceil of six sigma") {
  SchemeParams p = desk_profile();
  CHECK(p.error_bound() == 7);  // 6 * sqrt(1.22) = 6.627
}

TEST_CASE("profile text roundtrips") {
  SchemeParams p = setup(1u << 10, 478, 460, 16, 9);
  SchemeParams q = SchemeParams::from_profile(p.to_profile());
  CHECK(p == q);

  ParamOverrides ov;
  ov.pad = 5;
  ov.gaussian_sigma = 2.25;
  ov.reals_per_slot = 2;
  SchemeParams r = setup(1u << 12, 478, 400, 20, 5, ov);
  CHECK(SchemeParams::from_profile(r.to_profile()) == r);
}

TEST_CASE("profile parsing rejects malformed input") {
  CHECK_THROWS_AS(SchemeParams::from_profile("n=1024\nbogus_key=3\n"),
                  ParamsError);
  CHECK_THROWS_AS(SchemeParams::from_profile("n=abc\n"), ParamsError);
  CHECK_THROWS_AS(SchemeParams::from_profile("n 1024\n"), ParamsError);
  CHECK_THROWS_AS(SchemeParams::from_profile("n=1024\nn=2048\n"), ParamsError);
  // values must still satisfy the invariants
  CHECK_THROWS_AS(SchemeParams::from_profile("num_clients=1\n"), ParamsError);
}

TEST_CASE("partial profile recomputes derived fields") {
  SchemeParams p = SchemeParams::from_profile("n=1024\nnum_clients=2\n");
  CHECK(p.pad == 1);
  CHECK(p.slots_T == 27);
  CHECK(p.log_q == 478);
}

}  // TEST_SUITE
