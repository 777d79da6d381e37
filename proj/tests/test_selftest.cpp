#include "esafl/selftest.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "esafl/eshe.hpp"
#include "esafl/prg.hpp"

using namespace esafl;

TEST_SUITE("selftest") {

TEST_CASE("all suites pass on the desk profile") {
  auto results = selftest::run_all(desk_profile(), 30, ESAFL_GOLDEN_DIR, 1);
  for (const auto& r : results) {
    INFO(r.name, ": ", r.detail);
    CHECK(r.passed);
  }
  CHECK(selftest::all_passed(results));
}

TEST_CASE("zero trials is a vacuous pass with a warning") {
  auto results = selftest::run_all(desk_profile(), 0, "", 1);
  CHECK(selftest::all_passed(results));
  bool warned = false;
  for (const auto& r : results)
    if (r.skipped && r.detail.find("vacuous") != std::string::npos)
      warned = true;
  CHECK(warned);
}

TEST_CASE("a corrupted golden vector fails with the suite named") {
  // copy the fixtures, flip one byte of the codec golden
  std::string dir = "corrupted_golden_tmp";
  std::string src = ESAFL_GOLDEN_DIR;
  REQUIRE(std::system(("rm -rf " + dir + " && cp -r " + src + " " + dir).c_str()) == 0);
  {
    std::ifstream in(dir + "/codec_encode_n8.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    auto pos = text.rfind("40448");
    REQUIRE(pos != std::string::npos);
    text[pos] = '5';
    std::ofstream out(dir + "/codec_encode_n8.txt");
    out << text;
  }
  auto results = selftest::run_all(desk_profile(), 5, dir, 1);
  bool golden_failed = false;
  for (const auto& r : results)
    if (r.name == "golden_vectors" && !r.passed) golden_failed = true;
  CHECK(golden_failed);
  CHECK_FALSE(selftest::all_passed(results));
  CHECK(std::system(("rm -rf " + dir).c_str()) == 0);
}

TEST_CASE("missing golden directory is skipped with a warning") {
  auto results = selftest::run_all(desk_profile(), 5, "no_such_dir_xyz", 1);
  bool skipped = false;
  for (const auto& r : results)
    if (r.name == "golden_vectors" && r.skipped) skipped = true;
  CHECK(skipped);
  CHECK(selftest::all_passed(results));  // skip is not failure
}

TEST_CASE("ciphertext bodies look uniform to the aggregator") {
  // the aggregator's entire observable state is ciphertext bodies; a monobit
  // smoke test over them should sit at one-half
  SchemeParams p = desk_profile();
  Rng rng(99);
  KeyMaterial km = keygen(p, rng);
  RingElem a1 = round_public(1, km.seed_b, km.a0, p);
  uint64_t ones = 0, bits = 0;
  for (uint32_t i = 0; i < p.num_clients; ++i) {
    PackedPlain m;
    m.poly = RingElem(p.n, p.log_p);  // worst case: all-zero plaintext
    m.slots_T = p.slots_T;
    m.pad = p.pad;
    m.log_q0 = p.log_q0;
    Ciphertext ct = encrypt(a1, 1, km.enc_keys[i], m, p, rng);
    for (uint8_t b : ct.body.serialize()) ones += uint64_t(std::popcount(b));
    bits += ct.body.serialized_size() * 8;
  }
  // serialized bytes include 2 zero pad bits per 478-bit coefficient
  double expected = double(p.log_q) / (8.0 * SchemeParams::coeff_bytes(p.log_q));
  double frac = double(ones) / double(bits);
  CHECK(frac == doctest::Approx(0.5 * expected).epsilon(0.01));
}

}  // TEST_SUITE
