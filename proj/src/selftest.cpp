#include "esafl/selftest.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "esafl/codec.hpp"
#include "esafl/eshe.hpp"
#include "esafl/prg.hpp"
#include "esafl/wire.hpp"

namespace esafl::selftest {

namespace {

// Independent schoolbook negacyclic convolution for moduli up to 63 bits,
// written without the limb machinery it is checking.
std::vector<uint64_t> school_mul(const std::vector<uint64_t>& a,
                                 const std::vector<int64_t>& b,
                                 uint32_t log_mod) {
  size_t n = a.size();
  std::vector<__int128> acc(n, 0);
  for (size_t i = 0; i < n; ++i) {
    if (a[i] == 0) continue;
    for (size_t j = 0; j < n; ++j) {
      if (b[j] == 0) continue;
      __int128 term = (__int128)a[i] * b[j];
      size_t k = i + j;
      if (k < n)
        acc[k] += term;
      else
        acc[k - n] -= term;
    }
  }
  uint64_t mask = (uint64_t(1) << log_mod) - 1;
  std::vector<uint64_t> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = uint64_t(acc[i]) & mask;
  return out;
}

SuiteResult ring_oracle_suite(uint32_t trials, uint64_t seed) {
  SuiteResult r{"ring_oracle", true, false, ""};
  Rng rng(seed);
  for (uint32_t trial = 0; trial < trials; ++trial) {
    uint32_t n = trial % 2 ? 8 : 16;
    uint32_t log_mod = 16 + uint32_t(rng.below(48));  // 16..63
    RingElem a = RingElem::uniform(n, log_mod, rng);
    std::vector<uint64_t> av(n);
    for (uint32_t i = 0; i < n; ++i) av[i] = a.coeff_u64(i);

    SparseTernaryKey key = sample_ternary(rng, n, 1 + uint32_t(rng.below(n)));
    std::vector<int64_t> dense(n, 0);
    for (uint32_t j : key.plus) dense[j] = 1;
    for (uint32_t j : key.minus) dense[j] = -1;
    RingElem got = mul_sparse(a, key);
    auto want = school_mul(av, dense, log_mod);
    for (uint32_t i = 0; i < n; ++i)
      if (got.coeff_u64(i) != want[i]) {
        r.passed = false;
        r.detail = "mul_sparse mismatch vs schoolbook";
        return r;
      }

    SmallPoly s;
    s.coeffs.resize(n);
    for (auto& c : s.coeffs) c = int64_t(rng.below(19)) - 9;
    s.bound = 9;
    RingElem got2 = mul_small(a, s);
    auto want2 = school_mul(av, s.coeffs, log_mod);
    for (uint32_t i = 0; i < n; ++i)
      if (got2.coeff_u64(i) != want2[i]) {
        r.passed = false;
        r.detail = "mul_small mismatch vs schoolbook";
        return r;
      }

    RingElem b = RingElem::uniform(n, log_mod, rng);
    RingElem sum = add(a, b);
    RingElem diff = sub(a, b);
    uint64_t mask = (uint64_t(1) << log_mod) - 1;
    for (uint32_t i = 0; i < n; ++i) {
      if (sum.coeff_u64(i) != ((a.coeff_u64(i) + b.coeff_u64(i)) & mask) ||
          diff.coeff_u64(i) != ((a.coeff_u64(i) - b.coeff_u64(i)) & mask)) {
        r.passed = false;
        r.detail = "add/sub mismatch";
        return r;
      }
    }
  }
  r.detail = std::to_string(trials) + " randomized instances";
  return r;
}

SuiteResult codec_suite(const SchemeParams& params, uint32_t trials,
                        uint64_t seed) {
  SuiteResult r{"codec_roundtrip", true, false, ""};
  Rng rng(seed + 1);
  double bound = roundtrip_error_bound(params, 1);
  uint64_t field_limit = uint64_t(1) << params.log_q0;
  for (uint32_t trial = 0; trial < trials; ++trial) {
    // pipeline roundtrip on a short vector
    size_t len = 1 + rng.below(2 * params.reals_per_poly());
    std::vector<double> g(len);
    for (auto& v : g) v = rng.next_unit();
    auto back = dcd_unpk(ecd_pack(g, params), 1, len, params);
    for (size_t j = 0; j < len; ++j)
      if (std::abs(back[j] - g[j]) > bound) {
        r.passed = false;
        r.detail = "roundtrip error above bound";
        return r;
      }
    // pack/unpack exact inverse
    std::vector<EncodedPoly> polys(params.slots_T - 1);
    for (auto& p : polys) {
      p.coeffs.resize(params.n);
      for (auto& c : p.coeffs) c = rng.below(field_limit);
    }
    auto split = unpack(pack(polys, params), params);
    for (uint32_t i = 0; i + 1 < params.slots_T; ++i)
      if (split[i].coeffs != polys[i].coeffs) {
        r.passed = false;
        r.detail = "pack/unpack not inverse";
        return r;
      }
  }
  // carry isolation at the configured pad
  uint32_t count = params.num_clients;
  std::vector<std::vector<PackedPlain>> seqs(count);
  std::vector<double> expect(8, 0.0);
  for (uint32_t i = 0; i < count; ++i) {
    std::vector<double> g(8);
    for (size_t j = 0; j < 8; ++j) {
      g[j] = rng.next_unit();
      expect[j] += g[j];
    }
    seqs[i] = ecd_pack(g, params);
  }
  auto sums = dcd_unpk(ep_eval(seqs, params), count, 8, params);
  for (size_t j = 0; j < 8; ++j)
    if (std::abs(sums[j] - expect[j]) > roundtrip_error_bound(params, count)) {
      r.passed = false;
      r.detail = "aggregated roundtrip error above bound";
      return r;
    }
  r.detail = std::to_string(trials) + " randomized roundtrips";
  return r;
}

PackedPlain random_plain(const SchemeParams& p, Rng& rng) {
  PackedPlain m;
  m.poly = RingElem::uniform(p.n, p.log_p, rng);
  m.slots_T = p.slots_T;
  m.pad = p.pad;
  m.log_q0 = p.log_q0;
  return m;
}

SuiteResult identity_suite(const SchemeParams& params, uint32_t trials,
                           uint64_t seed) {
  SuiteResult r{"scheme_identity", true, false, ""};
  Rng rng(seed + 2);
  KeyMaterial km = keygen(params, rng);
  for (uint32_t trial = 0; trial < trials; ++trial) {
    uint64_t t = 1 + trial;
    RingElem a_t = round_public(t, km.seed_b, km.a0, params);
    std::vector<Ciphertext> cts;
    RingElem expect(params.n, params.log_p);
    for (uint32_t i = 0; i < params.num_clients; ++i) {
      PackedPlain m = random_plain(params, rng);
      expect = add(expect, m.poly);
      cts.push_back(encrypt(a_t, t, km.enc_keys[i], m, params, rng));
    }
    PackedPlain out = decrypt(a_t, km.dec_key, eval_add(cts, params), params);
    if (!(out.poly == expect)) {
      r.passed = false;
      r.detail = "aggregate did not decrypt to the exact plaintext sum";
      return r;
    }
  }
  r.detail = std::to_string(trials) + " exact homomorphic-sum identities";
  return r;
}

SuiteResult negative_suite(const SchemeParams& params, uint32_t trials,
                           uint64_t seed) {
  SuiteResult r{"negative_aggregates", true, false, ""};
  Rng rng(seed + 3);
  KeyMaterial km = keygen(params, rng);
  uint32_t runs = std::max(1u, trials / 10);
  uint64_t slot_matches = 0, slot_total = 0;
  for (uint32_t trial = 0; trial < runs; ++trial) {
    uint64_t t = 1 + trial;
    RingElem a_t = round_public(t, km.seed_b, km.a0, params);
    // partial aggregate of N-1 ciphertexts vs the partial plaintext sum
    std::vector<Ciphertext> cts;
    RingElem partial_sum(params.n, params.log_p);
    for (uint32_t i = 0; i + 1 < params.num_clients; ++i) {
      PackedPlain m = random_plain(params, rng);
      partial_sum = add(partial_sum, m.poly);
      cts.push_back(encrypt(a_t, t, km.enc_keys[i], m, params, rng));
    }
    PackedPlain leak = decrypt(a_t, km.dec_key, eval_add(cts, params), params,
                               /*allow_partial=*/true);
    PackedPlain truth;
    truth.poly = partial_sum;
    truth.slots_T = params.slots_T;
    truth.pad = params.pad;
    truth.log_q0 = params.log_q0;
    auto leak_fields = unpack(leak, params);
    auto truth_fields = unpack(truth, params);
    for (uint32_t i = 0; i + 1 < params.slots_T; ++i)
      for (uint32_t j = 0; j < params.n; ++j) {
        slot_total += 1;
        if (leak_fields[i].coeffs[j] == truth_fields[i].coeffs[j])
          slot_matches += 1;
      }
  }
  if (double(slot_matches) > 0.001 * double(slot_total)) {
    r.passed = false;
    r.detail = "partial aggregate matched the plaintext sum too often";
    return r;
  }
  r.detail = std::to_string(runs) + " partial-aggregate decryptions, " +
             std::to_string(slot_matches) + "/" + std::to_string(slot_total) +
             " slot matches";
  return r;
}

SuiteResult golden_suite(const std::string& golden_dir) {
  SuiteResult r{"golden_vectors", true, false, ""};
  if (golden_dir.empty()) {
    r.skipped = true;
    r.detail = "no golden directory given";
    return r;
  }
  auto read_file = [](const std::string& path,
                      std::vector<uint8_t>& out) -> bool {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) return false;
    out.assign((std::istreambuf_iterator<char>(in)),
               std::istreambuf_iterator<char>());
    return true;
  };

  // pseudorandom polynomial fixture
  {
    std::ifstream prof(golden_dir + "/n16.profile");
    std::vector<uint8_t> want;
    if (!prof.good() || !read_file(golden_dir + "/prpg_n16_t5.bin", want)) {
      r.skipped = true;
      r.detail = "golden files not found under " + golden_dir;
      return r;
    }
    std::stringstream ss;
    ss << prof.rdbuf();
    SchemeParams p = SchemeParams::from_profile(ss.str());
    RingElem a = prpg(5, 0x0123456789abcdefull, p);
    if (a.serialize() != want) {
      r.passed = false;
      r.detail = "prpg_n16_t5.bin mismatch";
      return r;
    }
  }

  // codec encode fixture
  {
    std::ifstream in(golden_dir + "/codec_encode_n8.txt");
    if (!in.good()) {
      r.passed = false;
      r.detail = "codec_encode_n8.txt missing";
      return r;
    }
    std::string line;
    std::vector<double> inputs;
    std::vector<uint64_t> expect;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (inputs.size() < 4)
        inputs.push_back(std::stod(line));
      else
        expect.push_back(std::stoull(line));
    }
    ParamOverrides ov;
    ov.ternary_weight = 8;
    SchemeParams p = setup(8, 478, 460, 16, 9, ov);
    if (expect.size() != 8 || encode(inputs, p).coeffs != expect) {
      r.passed = false;
      r.detail = "codec_encode_n8.txt mismatch";
      return r;
    }
  }

  // wire frame fixtures: parse and re-serialize byte-identically
  {
    ParamOverrides ov;
    ov.ternary_weight = 4;
    SchemeParams p = setup(4, 478, 460, 16, 9, ov);
    for (const char* name : {"wire_keyissue.bin", "wire_roundsubmit.bin",
                             "wire_roundresult.bin", "wire_abort.bin"}) {
      std::vector<uint8_t> bytes;
      if (!read_file(golden_dir + "/" + std::string(name), bytes)) {
        r.passed = false;
        r.detail = std::string(name) + " missing";
        return r;
      }
      try {
        wire::MemoryStream s;
        s.write_all(bytes);
        wire::Frame f = wire::read_frame(s);
        auto msg = wire::deserialize(f.type, f.payload, p);
        wire::MemoryStream out;
        wire::send_message(out, msg);
        std::vector<uint8_t> again(out.pending());
        out.read_some(again);
        if (again != bytes) {
          r.passed = false;
          r.detail = std::string(name) + " re-serialization mismatch";
          return r;
        }
      } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string(name) + ": " + e.what();
        return r;
      }
    }
  }
  r.detail = "prpg, codec, and wire fixtures verified";
  return r;
}

}  // namespace

std::vector<SuiteResult> run_all(const SchemeParams& params, uint32_t trials,
                                 const std::string& golden_dir, uint64_t seed) {
  std::vector<SuiteResult> results;
  if (trials == 0) {
    results.push_back(
        {"all", true, true, "trials=0: vacuous pass, nothing exercised"});
    results.push_back(golden_suite(golden_dir));
    return results;
  }
  results.push_back(ring_oracle_suite(trials, seed));
  results.push_back(codec_suite(params, std::max(1u, trials / 10), seed));
  results.push_back(identity_suite(params, std::max(1u, trials / 10), seed));
  results.push_back(negative_suite(params, trials, seed));
  results.push_back(golden_suite(golden_dir));
  return results;
}

bool all_passed(const std::vector<SuiteResult>& results) {
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

}  // namespace esafl::selftest
