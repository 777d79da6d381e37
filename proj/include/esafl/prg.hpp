/**
 * @file prg.hpp
 * @brief Deterministic expansion of (round t, secret seed B) into the shared
 *        public polynomial a^t, bit-exact across all parties.
 *
 * Stream expander (normative): ChaCha20 with the 32-byte derived key, 12-byte
 * all-zero nonce, initial block counter 0. Coefficient i consumes bytes
 * [i*cb, (i+1)*cb) of the keystream, cb = ceil(log_q/8), little-endian, high
 * bits masked. Masking to log_q bits gives exact uniformity because q is a
 * power of two.
 */
#pragma once

#include <array>
#include <cstdint>

#include "esafl/params.hpp"
#include "esafl/ring.hpp"

namespace esafl {

struct PrgError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// One 64-byte ChaCha20 block (RFC 8439 construction, counter-prefix layout).
void chacha20_block(const uint8_t key[32], const uint8_t nonce[12],
                    uint32_t counter, uint8_t out[64]);

/// Sequential ChaCha20 keystream reader.
class ChaChaStream {
 public:
  explicit ChaChaStream(const std::array<uint8_t, 32>& key);
  void fill(uint8_t* out, size_t len);

 private:
  std::array<uint8_t, 32> key_;
  uint8_t block_[64];
  uint32_t counter_ = 0;
  size_t pos_ = 64;
};

/// Expansion key for round t: the k-bit XOR t ^ B packed little-endian into
/// ceil(k/8) bytes, zero-padded to 32.
std::array<uint8_t, 32> derive_seed(uint64_t t, uint64_t B, uint32_t k);

/// The shared pseudorandom polynomial a^t; deterministic in (t, B, params).
RingElem prpg(uint64_t t, uint64_t B, const SchemeParams& params);

/// Round polynomial dispatch: the dealer's a^0 serves rounds 0 and 1
/// (a^1 <- a^0 bootstrap); prpg governs t >= 2.
RingElem round_public(uint64_t t, uint64_t B, const RingElem& a0,
                      const SchemeParams& params);

}  // namespace esafl
