#include "esafl/codec.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"

using namespace esafl;

namespace {

SchemeParams tiny_params(uint32_t n, uint32_t log_q0 = 16,
                         uint32_t num_clients = 9) {
  ParamOverrides ov;
  ov.ternary_weight = std::min(n, 64u);
  return setup(n, 478, 460, log_q0, num_clients, ov);
}

std::vector<double> random_unit_vector(size_t len, Rng& rng) {
  std::vector<double> v(len);
  for (auto& x : v) x = rng.next_unit();
  return v;
}

// Encode reference: direct inverse embedding, scale, round, offset.
std::vector<uint64_t> encode_oracle(std::span<const double> chunk,
                                    const SchemeParams& p) {
  std::vector<std::complex<double>> slots(p.n / 2, {0.0, 0.0});
  for (size_t j = 0; j < chunk.size(); ++j) slots[j] = {chunk[j], 0.0};
  std::vector<double> coeffs = oracle::embed_inverse_direct(slots, p.n);
  double delta = codec_delta(p);
  int64_t offset = codec_offset(p);
  std::vector<uint64_t> out(p.n);
  for (uint32_t k = 0; k < p.n; ++k)
    out[k] = uint64_t(int64_t(std::nearbyint(delta * coeffs[k])) + offset);
  return out;
}

}  // namespace

TEST_SUITE("codec") {

TEST_CASE("all-zero chunk encodes to pure offsets") {
  SchemeParams p = tiny_params(8);
  std::vector<double> zeros(4, 0.0);
  EncodedPoly e = encode(zeros, p);
  for (uint64_t c : e.coeffs) CHECK(c == uint64_t(codec_offset(p)));
}

TEST_CASE("constant chunk maps to the constant coefficient") {
  SchemeParams p = tiny_params(8);
  double v = 0.8125;
  std::vector<double> chunk(4, v);
  EncodedPoly e = encode(chunk, p);
  int64_t offset = codec_offset(p);
  CHECK(int64_t(e.coeffs[0]) - offset ==
        int64_t(std::nearbyint(codec_delta(p) * v)));
  for (uint32_t k = 1; k < 8; ++k) CHECK(e.coeffs[k] == uint64_t(offset));
}

TEST_CASE("encode matches the direct-evaluation oracle") {
  Rng rng(21);
  for (uint32_t n : {8u, 16u, 64u}) {
    SchemeParams p = tiny_params(n);
    for (int trial = 0; trial < 20; ++trial) {
      auto chunk = random_unit_vector(n / 2, rng);
      EncodedPoly fast = encode(chunk, p);
      auto slow = encode_oracle(chunk, p);
      CHECK(fast.coeffs == slow);
    }
  }
}

TEST_CASE("fft path agrees with the direct oracle to 2^-40 relative") {
  Rng rng(22);
  for (uint32_t n : {256u, 1024u}) {
    SchemeParams p = tiny_params(n);
    auto chunk = random_unit_vector(n / 2, rng);
    // compare pre-rounding values through decode of an exact encode
    EncodedPoly e = encode(chunk, p);
    std::vector<double> coeffs(p.n);
    int64_t offset = codec_offset(p);
    for (uint32_t k = 0; k < p.n; ++k)
      coeffs[k] = double(int64_t(e.coeffs[k]) - offset);
    auto direct = oracle::embed_direct(coeffs);
    std::vector<double> fast = decode(e, 1, p);
    double delta = codec_delta(p);
    for (uint32_t j = 0; j < n / 2; ++j) {
      double want = direct[j].real() / delta;
      CHECK(std::abs(fast[j] - want) <=
            std::ldexp(1.0, -40) * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("roundtrip error stays within the worst-case bound") {
  Rng rng(23);
  SchemeParams p = tiny_params(8);
  double bound = roundtrip_error_bound(p, 1);  // n / (2 Delta)
  for (int trial = 0; trial < 100; ++trial) {
    auto chunk = random_unit_vector(4, rng);
    std::vector<double> back = decode(encode(chunk, p), 1, p);
    for (uint32_t j = 0; j < 4; ++j)
      CHECK(std::abs(back[j] - chunk[j]) <= bound);
  }
}

TEST_CASE("encoding is additive") {
  Rng rng(24);
  SchemeParams p = tiny_params(64);
  auto u = random_unit_vector(32, rng);
  auto v = random_unit_vector(32, rng);
  EncodedPoly eu = encode(u, p);
  EncodedPoly ev = encode(v, p);
  EncodedPoly sum;
  sum.delta = eu.delta;
  sum.coeffs.resize(p.n);
  for (uint32_t k = 0; k < p.n; ++k)
    sum.coeffs[k] = eu.coeffs[k] + ev.coeffs[k];
  std::vector<double> back = decode(sum, 2, p);
  double bound = roundtrip_error_bound(p, 2);
  for (uint32_t j = 0; j < 32; ++j)
    CHECK(std::abs(back[j] - (u[j] + v[j])) <= bound);
}

TEST_CASE("slot-wise sum of nine encodings decodes to the sum") {
  Rng rng(25);
  SchemeParams p = tiny_params(64);
  const uint32_t N = 9;
  std::vector<double> expect(32, 0.0);
  EncodedPoly acc;
  acc.coeffs.assign(p.n, 0);
  for (uint32_t i = 0; i < N; ++i) {
    auto v = random_unit_vector(32, rng);
    EncodedPoly e = encode(v, p);
    for (uint32_t k = 0; k < p.n; ++k) acc.coeffs[k] += e.coeffs[k];
    for (uint32_t j = 0; j < 32; ++j) expect[j] += v[j];
  }
  std::vector<double> back = decode(acc, N, p);
  double bound = roundtrip_error_bound(p, N);
  for (uint32_t j = 0; j < 32; ++j)
    CHECK(std::abs(back[j] - expect[j]) <= bound);
}

TEST_CASE("count mismatch shows up as a constant bias") {
  SchemeParams p = tiny_params(64);
  std::vector<double> zeros(32, 0.5);
  EncodedPoly e = encode(zeros, p);
  std::vector<double> biased = decode(e, 2, p);
  double bias = double(codec_offset(p)) / codec_delta(p);
  for (uint32_t j = 0; j < 32; ++j)
    CHECK(biased[j] == doctest::Approx(0.5 - bias).epsilon(1e-6));
}

TEST_CASE("decode rejects fields that overflow the count") {
  SchemeParams p = tiny_params(8);
  EncodedPoly e;
  e.coeffs.assign(p.n, 0);
  e.coeffs[3] = uint64_t(2) << p.log_q0;  // needs count >= 3
  CHECK_THROWS_AS(decode(e, 2, p), CodecError);
}

TEST_CASE("encode rejects oversize and non-finite input") {
  SchemeParams p = tiny_params(8);
  std::vector<double> too_long(5, 0.0);
  CHECK_THROWS_AS(encode(too_long, p), CodecError);
  std::vector<double> nan = {0.0, std::nan(""), 0.0, 0.0};
  CHECK_THROWS_AS(encode(nan, p), CodecError);
  std::vector<double> oob = {0.0, 1.5, 0.0, 0.0};
  CHECK_THROWS_AS(encode(oob, p), CodecError);
}

TEST_CASE("pack assembles the documented bit layout") {
  // log_q0 = 4, pad = 2, T = 3: alpha_1 = 10, alpha_2 = 3 -> 41152
  ParamOverrides ov;
  ov.ternary_weight = 4;
  ov.pad = 2;
  ov.slots_T = 3;
  SchemeParams p = setup(4, 478, 460, 4, 3, ov);
  std::vector<EncodedPoly> polys(2);
  for (auto& q : polys) q.coeffs.assign(4, 0);
  polys[0].coeffs[1] = 10;
  polys[1].coeffs[1] = 3;
  PackedPlain packed = pack(polys, p);
  CHECK(oracle::coeff_to_int(packed.poly, 1) == 41152);
  CHECK(oracle::coeff_to_int(packed.poly, 0) == 0);
  uint64_t fields[] = {10, 3};
  CHECK(oracle::pack_bits(fields, 2, 4, 3) == 41152);

  auto polys_back = unpack(packed, p);
  CHECK(polys_back.size() == 3);
  CHECK(polys_back[0].coeffs[1] == 10);
  CHECK(polys_back[1].coeffs[1] == 3);
  CHECK(polys_back[2].coeffs[1] == 0);
}

TEST_CASE("all-zero inputs pack to the zero plaintext") {
  SchemeParams p = tiny_params(8);
  std::vector<EncodedPoly> polys(p.slots_T - 1);
  for (auto& q : polys) q.coeffs.assign(8, 0);
  PackedPlain packed = pack(polys, p);
  CHECK(packed.poly == RingElem(8, 460));
}

TEST_CASE("unpack is the exact inverse of pack") {
  Rng rng(26);
  // near-exhaustive at the small width
  {
    ParamOverrides ov;
    ov.ternary_weight = 4;
    ov.pad = 2;
    ov.slots_T = 3;
    SchemeParams p = setup(4, 478, 460, 4, 3, ov);
    for (int trial = 0; trial < 2000; ++trial) {
      std::vector<EncodedPoly> polys(2);
      for (auto& q : polys) {
        q.coeffs.resize(4);
        for (auto& c : q.coeffs) c = rng.below(16);
      }
      PackedPlain packed = pack(polys, p);
      auto back = unpack(packed, p);
      CHECK(back[0].coeffs == polys[0].coeffs);
      CHECK(back[1].coeffs == polys[1].coeffs);
      for (uint64_t c : back[2].coeffs) CHECK(c == 0);
      // cross-check a coefficient against the bit-string oracle
      uint64_t fields[] = {polys[0].coeffs[2], polys[1].coeffs[2]};
      CHECK(oracle::coeff_to_int(packed.poly, 2) ==
            oracle::pack_bits(fields, 2, 4, 3));
    }
  }
  // random at full width
  {
    SchemeParams p = tiny_params(8);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<EncodedPoly> polys(p.slots_T - 1);
      for (auto& q : polys) {
        q.coeffs.resize(8);
        for (auto& c : q.coeffs) c = rng.below(uint64_t(1) << p.log_q0);
      }
      PackedPlain packed = pack(polys, p);
      auto back = unpack(packed, p);
      for (uint32_t i = 0; i + 1 < p.slots_T; ++i)
        CHECK(back[i].coeffs == polys[i].coeffs);
    }
  }
}

TEST_CASE("pad bits isolate carries for up to 2^pad summands") {
  Rng rng(27);
  ParamOverrides ov;
  ov.ternary_weight = 4;
  ov.pad = 2;
  ov.slots_T = 3;
  SchemeParams p = setup(4, 478, 460, 4, 3, ov);
  for (uint32_t N = 1; N <= 4; ++N) {
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::vector<uint64_t>> fields(
          N, std::vector<uint64_t>(2 * 4));  // 2 data slots x 4 coeffs
      std::vector<std::vector<PackedPlain>> seqs(N);
      for (uint32_t i = 0; i < N; ++i) {
        std::vector<EncodedPoly> polys(2);
        for (uint32_t s = 0; s < 2; ++s) {
          polys[s].coeffs.resize(4);
          for (uint32_t j = 0; j < 4; ++j) {
            uint64_t v = rng.below(16);
            polys[s].coeffs[j] = v;
            fields[i][s * 4 + j] = v;
          }
        }
        seqs[i].push_back(pack(polys, p));
      }
      auto agg = ep_eval(seqs, p);
      auto back = unpack(agg[0], p);
      for (uint32_t s = 0; s < 2; ++s)
        for (uint32_t j = 0; j < 4; ++j) {
          uint64_t want = 0;
          for (uint32_t i = 0; i < N; ++i) want += fields[i][s * 4 + j];
          CHECK(back[s].coeffs[j] == want);
        }
    }
  }
}

TEST_CASE("pack rejects bad shapes") {
  SchemeParams p = tiny_params(8);
  std::vector<EncodedPoly> wrong_count(p.slots_T);
  for (auto& q : wrong_count) q.coeffs.assign(8, 0);
  CHECK_THROWS_AS(pack(wrong_count, p), CodecError);
  std::vector<EncodedPoly> overflow(p.slots_T - 1);
  for (auto& q : overflow) q.coeffs.assign(8, 0);
  overflow[0].coeffs[0] = uint64_t(1) << p.log_q0;
  CHECK_THROWS_AS(pack(overflow, p), CodecError);
}

TEST_CASE("ecd_pack emits ceil(L / capacity) plaintexts") {
  SchemeParams p = tiny_params(8);  // capacity = 22 * 4 = 88
  Rng rng(28);
  CHECK(ecd_pack(std::vector<double>{}, p).empty());
  CHECK(ecd_pack(random_unit_vector(1, rng), p).size() == 1);
  CHECK(ecd_pack(random_unit_vector(88, rng), p).size() == 1);
  CHECK(ecd_pack(random_unit_vector(89, rng), p).size() == 2);
  CHECK(ecd_pack(random_unit_vector(881, rng), p).size() == 11);
}

TEST_CASE("dcd_unpk inverts ecd_pack") {
  Rng rng(29);
  SchemeParams p = tiny_params(64);
  for (size_t L : {size_t(1), size_t(31), size_t(32), size_t(700), size_t(0)}) {
    auto g = random_unit_vector(L, rng);
    auto plains = ecd_pack(g, p);
    auto back = dcd_unpk(plains, 1, L, p);
    REQUIRE(back.size() == L);
    double bound = roundtrip_error_bound(p, 1);
    for (size_t j = 0; j < L; ++j) CHECK(std::abs(back[j] - g[j]) <= bound);
  }
}

TEST_CASE("nine summed plaintexts decode to the elementwise sums") {
  Rng rng(30);
  SchemeParams p = tiny_params(64);
  const uint32_t N = 9;
  const size_t L = 500;
  std::vector<double> expect(L, 0.0);
  std::vector<std::vector<PackedPlain>> seqs(N);
  for (uint32_t i = 0; i < N; ++i) {
    auto g = random_unit_vector(L, rng);
    for (size_t j = 0; j < L; ++j) expect[j] += g[j];
    seqs[i] = ecd_pack(g, p);
  }
  auto agg = ep_eval(seqs, p);
  auto sums = dcd_unpk(agg, N, L, p);
  double bound = roundtrip_error_bound(p, N);
  for (size_t j = 0; j < L; ++j) CHECK(std::abs(sums[j] - expect[j]) <= bound);
}

TEST_CASE("ep_eval with one input is the identity") {
  Rng rng(31);
  SchemeParams p = tiny_params(8);
  std::vector<std::vector<PackedPlain>> one(1);
  one[0] = ecd_pack(random_unit_vector(40, rng), p);
  auto out = ep_eval(one, p);
  CHECK(out == one[0]);
}

TEST_CASE("ep_eval rejects more than 2^pad summands") {
  Rng rng(32);
  ParamOverrides ov;
  ov.ternary_weight = 4;
  ov.pad = 2;
  ov.slots_T = 3;
  SchemeParams p = setup(4, 478, 460, 4, 3, ov);
  std::vector<std::vector<PackedPlain>> five(
      5, ecd_pack(random_unit_vector(4, rng), p));
  CHECK_THROWS_AS(ep_eval(five, p), CodecError);
}

TEST_CASE("dcd_unpk rejects an impossible declared length") {
  Rng rng(33);
  SchemeParams p = tiny_params(8);
  auto plains = ecd_pack(random_unit_vector(10, rng), p);
  CHECK_THROWS_AS(dcd_unpk(plains, 1, p.capacity() + 1, p), CodecError);
}

TEST_CASE("two reals per slot double the capacity") {
  Rng rng(34);
  ParamOverrides ov;
  ov.ternary_weight = 16;
  ov.reals_per_slot = 2;
  SchemeParams p = setup(16, 478, 460, 16, 9, ov);
  CHECK(p.capacity() == uint64_t(p.slots_T - 1) * 16);
  auto g = random_unit_vector(100, rng);
  auto back = dcd_unpk(ecd_pack(g, p), 1, g.size(), p);
  // looser bound: |z| can reach sqrt(2), still inside the slot width
  double bound = 2.0 * roundtrip_error_bound(p, 1);
  for (size_t j = 0; j < g.size(); ++j)
    CHECK(std::abs(back[j] - g[j]) <= bound);
}

TEST_CASE("mean roundtrip error grows like sqrt(n)") {
  Rng rng(35);
  std::vector<double> xs, ys;
  for (uint32_t n = 256; n <= 4096; n *= 2) {
    SchemeParams p = tiny_params(n);
    auto g = random_unit_vector(n / 2, rng);
    auto back = decode(encode(g, p), 1, p);
    double acc = 0.0;
    for (uint32_t j = 0; j < n / 2; ++j) acc += std::abs(back[j] - g[j]);
    xs.push_back(double(n));
    ys.push_back(acc / (n / 2));
  }
  double slope = oracle::loglog_slope(xs, ys);
  CHECK(slope > 0.4);
  CHECK(slope < 0.6);
}

TEST_CASE("published field-concatenation vectors") {
  std::ifstream in(std::string(ESAFL_GOLDEN_DIR) + "/pack_fields.txt");
  REQUIRE(in.good());
  std::string line;
  size_t cases = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    uint32_t log_q0, pad, T;
    is >> log_q0 >> pad >> T;
    std::vector<uint64_t> fields(T - 1);
    for (auto& f : fields) is >> f;
    std::string beta_hex;
    is >> beta_hex;
    REQUIRE(is);
    CHECK(oracle::pack_bits(fields, pad, log_q0, T) ==
          oracle::cpp_int("0x" + beta_hex));
    // and the production packer agrees
    ParamOverrides ov;
    ov.ternary_weight = 4;
    ov.pad = pad;
    ov.slots_T = T;
    SchemeParams p = setup(4, 478, 460, log_q0, 2, ov);
    std::vector<EncodedPoly> polys(T - 1);
    for (uint32_t i = 0; i + 1 < T; ++i) {
      polys[i].coeffs.assign(4, 0);
      polys[i].coeffs[0] = fields[i];
    }
    CHECK(oracle::coeff_to_int(pack(polys, p).poly, 0) ==
          oracle::cpp_int("0x" + beta_hex));
    ++cases;
  }
  CHECK(cases == 4);
}

TEST_CASE("published golden encode vector") {
  std::ifstream in(std::string(ESAFL_GOLDEN_DIR) + "/codec_encode_n8.txt");
  REQUIRE(in.good());
  std::string line;
  std::vector<double> inputs;
  std::vector<uint64_t> expected;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (inputs.size() < 4)
      inputs.push_back(std::stod(line));
    else
      expected.push_back(std::stoull(line));
  }
  REQUIRE(inputs.size() == 4);
  REQUIRE(expected.size() == 8);
  SchemeParams p = tiny_params(8);
  EncodedPoly e = encode(inputs, p);
  CHECK(e.coeffs == expected);
}

}  // TEST_SUITE
