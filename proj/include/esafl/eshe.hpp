/**
 * @file eshe.hpp
 * @brief The additively homomorphic scheme: key generation, single-key
 *        encryption under the shared round polynomial, additive evaluation,
 *        one-step decryption.
 *
 * Correctness: for the full aggregate of all N clients' round-t ciphertexts,
 *   [[C - a^t * s]_q]_p  =  sum of the N plaintexts in R_p, exactly.
 * Partial aggregates and spanning-round aggregates decrypt to values
 * unrelated to any plaintext sum; both are reachable only through explicit
 * test hooks.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "esafl/codec.hpp"
#include "esafl/params.hpp"
#include "esafl/prg.hpp"
#include "esafl/ring.hpp"

namespace esafl {

struct EsheError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Dealer output: per-client encryption keys, the joint decryption key
/// (their exact signed sum), the round-0 public polynomial, and the seed B.
struct KeyMaterial {
  std::vector<SparseTernaryKey> enc_keys;
  SmallPoly dec_key;
  RingElem a0;
  uint64_t seed_b = 0;
};

struct Ciphertext {
  RingElem body;  // canonically reduced mod q
  uint64_t round = 0;
  uint16_t agg_count = 1;                 ///< number of summed contributions
  std::optional<uint16_t> client_tag;     ///< origin id, unset on aggregates

  bool operator==(const Ciphertext&) const = default;
};

KeyMaterial keygen(const SchemeParams& params, Rng& rng);

/// c = [a^t * s_i + p * e + m]_q with fresh Gaussian noise.
Ciphertext encrypt(const RingElem& a_t, uint64_t round,
                   const SparseTernaryKey& s_i, const PackedPlain& m,
                   const SchemeParams& params, Rng& rng);

/// Test hook: encryption with an injected error polynomial.
Ciphertext encrypt_with_error(const RingElem& a_t, uint64_t round,
                              const SparseTernaryKey& s_i, const PackedPlain& m,
                              const SmallPoly& e, const SchemeParams& params);

/// Exact modular sum of ciphertexts; associative and order-independent.
/// Mixed rounds are rejected unless allow_spanning_rounds (test hook; such
/// aggregates decrypt to noise).
Ciphertext eval_add(std::span<const Ciphertext> cts, const SchemeParams& params,
                    bool allow_spanning_rounds = false);

/// One-step decryption of a full aggregate (agg_count == N) with the joint
/// key. allow_partial is a test hook; partial output is unrelated to any
/// partial sum. The noise band above log_p is sanity-checked against the
/// worst honest aggregate (N * (error_bound + 1)); a violation means the
/// parameters left too little q/p headroom. skip_noise_check disables that
/// for tests that decrypt deliberately malformed aggregates.
PackedPlain decrypt(const RingElem& a_t, const SmallPoly& s,
                    const Ciphertext& ct, const SchemeParams& params,
                    bool allow_partial = false, bool skip_noise_check = false);

/// Bits of q/p headroom left above the worst-case aggregate noise:
/// (log_q - log_p) - ceil(log2(N * error_bound)).
int32_t noise_margin(const SchemeParams& params);

/// Ciphertext wire form: round t (8-byte LE), agg_count (2-byte LE), body in
/// RingElem layout. Framing is owned by the wire module.
size_t ciphertext_wire_size(const SchemeParams& params);
void serialize_ciphertext(const Ciphertext& ct, std::vector<uint8_t>& out);
Ciphertext deserialize_ciphertext(std::span<const uint8_t> bytes,
                                  const SchemeParams& params);

}  // namespace esafl
