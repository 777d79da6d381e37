#include "esafl/eshe.hpp"

#include <cmath>

namespace esafl {

KeyMaterial keygen(const SchemeParams& params, Rng& rng) {
  KeyMaterial km;
  km.enc_keys.reserve(params.num_clients);
  for (uint32_t i = 0; i < params.num_clients; ++i)
    km.enc_keys.push_back(sample_ternary(rng, params.n, params.ternary_weight));
  km.dec_key = key_sum(km.enc_keys);
  km.a0 = RingElem::uniform(params.n, params.log_q, rng);
  uint64_t b = rng.next();
  if (params.seed_bits_k < 64) b &= (uint64_t(1) << params.seed_bits_k) - 1;
  km.seed_b = b;
  return km;
}

namespace {

void check_plain(const PackedPlain& m, const SchemeParams& params) {
  if (!m.geometry_matches(params))
    throw EsheError("encrypt: plaintext geometry does not match params");
}

void check_round_poly(const RingElem& a_t, const SchemeParams& params) {
  if (a_t.n() != params.n || a_t.log_mod() != params.log_q)
    throw EsheError("encrypt: round polynomial does not match params");
}

}  // namespace

Ciphertext encrypt_with_error(const RingElem& a_t, uint64_t round,
                              const SparseTernaryKey& s_i, const PackedPlain& m,
                              const SmallPoly& e, const SchemeParams& params) {
  check_plain(m, params);
  check_round_poly(a_t, params);
  if (e.n() != params.n) throw EsheError("encrypt: error dimension mismatch");
  RingElem body = mul_sparse(a_t, s_i);
  body = add(body, lift_and_scale_error(e, params.log_p, params.log_q));
  body = add(body, widen(m.poly, params.log_q));
  Ciphertext ct;
  ct.body = std::move(body);
  ct.round = round;
  ct.agg_count = 1;
  return ct;
}

Ciphertext encrypt(const RingElem& a_t, uint64_t round,
                   const SparseTernaryKey& s_i, const PackedPlain& m,
                   const SchemeParams& params, Rng& rng) {
  SmallPoly e = sample_gaussian(rng, params.n, params.gaussian_sigma);
  return encrypt_with_error(a_t, round, s_i, m, e, params);
}

Ciphertext eval_add(std::span<const Ciphertext> cts, const SchemeParams& params,
                    bool allow_spanning_rounds) {
  if (cts.empty()) throw EsheError("eval_add: no ciphertexts");
  uint64_t round = cts.front().round;
  uint32_t total = 0;
  for (const Ciphertext& ct : cts) {
    if (ct.round != round && !allow_spanning_rounds)
      throw EsheError(
          "eval_add: round mismatch (spanning-round aggregates decrypt to "
          "noise; use the explicit test hook)");
    total += ct.agg_count;
  }
  if (total > params.num_clients)
    throw EsheError("eval_add: aggregate count exceeds num_clients");
  Ciphertext out;
  out.body = cts.front().body;
  for (size_t i = 1; i < cts.size(); ++i)
    out.body = add(out.body, cts[i].body);
  out.round = round;
  out.agg_count = uint16_t(total);
  out.client_tag = std::nullopt;
  return out;
}

namespace {

// Signed content of the noise band, bits [log_p, log_q) of one coefficient.
int64_t noise_band(std::span<const uint64_t> limbs, uint32_t log_p,
                   uint32_t log_q) {
  uint32_t width = log_q - log_p;
  uint64_t band = 0;
  for (uint32_t b = 0; b < width && b < 63; ++b) {
    uint32_t bit = log_p + b;
    band |= ((limbs[bit / 64] >> (bit % 64)) & 1u) << b;
  }
  if (width < 64 && (band >> (width - 1)) & 1u)
    return int64_t(band) - (int64_t(1) << width);
  return int64_t(band);
}

}  // namespace

PackedPlain decrypt(const RingElem& a_t, const SmallPoly& s,
                    const Ciphertext& ct, const SchemeParams& params,
                    bool allow_partial, bool skip_noise_check) {
  check_round_poly(a_t, params);
  if (ct.agg_count != params.num_clients && !allow_partial)
    throw EsheError(
        "decrypt: partial aggregate (agg_count != N); output would be "
        "unrelated to any partial sum");
  RingElem masked = sub(ct.body, mul_small(a_t, s));
  if (!allow_partial && !skip_noise_check &&
      params.log_q - params.log_p < 63) {
    // the band above log_p holds the aggregate noise plus message-sum
    // carries; anything beyond N * (error_bound + 1) means the parameters
    // did not leave enough q/p headroom
    int64_t limit =
        int64_t(params.num_clients) * (int64_t(params.error_bound()) + 1);
    for (uint32_t i = 0; i < params.n; ++i) {
      int64_t band = noise_band(masked.coeff(i), params.log_p, params.log_q);
      if (band > limit || band < -limit)
        throw EsheError("decrypt: noise overflowed the q/p headroom "
                        "(coefficient in the forbidden band)");
    }
  }
  PackedPlain out;
  out.poly = mod_p(masked, params.log_p);
  out.slots_T = params.slots_T;
  out.pad = params.pad;
  out.log_q0 = params.log_q0;
  return out;
}

int32_t noise_margin(const SchemeParams& params) {
  uint64_t total = uint64_t(params.num_clients) * params.error_bound();
  int32_t bits = 0;
  while ((uint64_t(1) << bits) < total) ++bits;
  return int32_t(params.log_q - params.log_p) - bits;
}

size_t ciphertext_wire_size(const SchemeParams& params) {
  return 8 + 2 + size_t(params.n) * SchemeParams::coeff_bytes(params.log_q);
}

void serialize_ciphertext(const Ciphertext& ct, std::vector<uint8_t>& out) {
  for (int i = 0; i < 8; ++i) out.push_back(uint8_t(ct.round >> (8 * i)));
  out.push_back(uint8_t(ct.agg_count));
  out.push_back(uint8_t(ct.agg_count >> 8));
  ct.body.serialize_to(out);
}

Ciphertext deserialize_ciphertext(std::span<const uint8_t> bytes,
                                  const SchemeParams& params) {
  if (bytes.size() != ciphertext_wire_size(params))
    throw EsheError("ciphertext: wrong wire size");
  Ciphertext ct;
  ct.round = 0;
  for (int i = 0; i < 8; ++i) ct.round |= uint64_t(bytes[i]) << (8 * i);
  ct.agg_count = uint16_t(bytes[8]) | uint16_t(uint16_t(bytes[9]) << 8);
  ct.body = RingElem::deserialize(bytes.subspan(10), params.n, params.log_q);
  return ct;
}

}  // namespace esafl
