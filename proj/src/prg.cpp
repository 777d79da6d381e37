#include "esafl/prg.hpp"

#include <cstring>
#include <vector>

namespace esafl {

namespace {

inline uint32_t rotl32(uint32_t x, int k) { return (x << k) | (x >> (32 - k)); }

inline uint32_t load_le32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}

inline void store_le32(uint8_t* p, uint32_t v) {
  p[0] = uint8_t(v);
  p[1] = uint8_t(v >> 8);
  p[2] = uint8_t(v >> 16);
  p[3] = uint8_t(v >> 24);
}

inline void quarter_round(uint32_t& a, uint32_t& b, uint32_t& c, uint32_t& d) {
  a += b; d ^= a; d = rotl32(d, 16);
  c += d; b ^= c; b = rotl32(b, 12);
  a += b; d ^= a; d = rotl32(d, 8);
  c += d; b ^= c; b = rotl32(b, 7);
}

}  // namespace

void chacha20_block(const uint8_t key[32], const uint8_t nonce[12],
                    uint32_t counter, uint8_t out[64]) {
  uint32_t st[16] = {0x61707865u, 0x3320646eu, 0x79622d32u, 0x6b206574u};
  for (int i = 0; i < 8; ++i) st[4 + i] = load_le32(key + 4 * i);
  st[12] = counter;
  for (int i = 0; i < 3; ++i) st[13 + i] = load_le32(nonce + 4 * i);

  uint32_t x[16];
  std::memcpy(x, st, sizeof(x));
  for (int round = 0; round < 10; ++round) {
    quarter_round(x[0], x[4], x[8], x[12]);
    quarter_round(x[1], x[5], x[9], x[13]);
    quarter_round(x[2], x[6], x[10], x[14]);
    quarter_round(x[3], x[7], x[11], x[15]);
    quarter_round(x[0], x[5], x[10], x[15]);
    quarter_round(x[1], x[6], x[11], x[12]);
    quarter_round(x[2], x[7], x[8], x[13]);
    quarter_round(x[3], x[4], x[9], x[14]);
  }
  for (int i = 0; i < 16; ++i) store_le32(out + 4 * i, x[i] + st[i]);
}

ChaChaStream::ChaChaStream(const std::array<uint8_t, 32>& key) : key_(key) {}

void ChaChaStream::fill(uint8_t* out, size_t len) {
  static const uint8_t kZeroNonce[12] = {};
  while (len > 0) {
    if (pos_ == 64) {
      chacha20_block(key_.data(), kZeroNonce, counter_++, block_);
      pos_ = 0;
    }
    size_t take = std::min(len, size_t(64) - pos_);
    std::memcpy(out, block_ + pos_, take);
    pos_ += take;
    out += take;
    len -= take;
  }
}

std::array<uint8_t, 32> derive_seed(uint64_t t, uint64_t B, uint32_t k) {
  if (k == 0 || k > 64) throw PrgError("derive_seed: k must be in [1, 64]");
  if (k < 64) {
    uint64_t limit = uint64_t(1) << k;
    if (t >= limit) throw PrgError("derive_seed: round counter exceeds k bits");
    if (B >= limit) throw PrgError("derive_seed: seed exceeds k bits");
  }
  uint64_t x = t ^ B;
  std::array<uint8_t, 32> key{};
  uint32_t bytes = (k + 7) / 8;
  for (uint32_t i = 0; i < bytes; ++i) key[i] = uint8_t(x >> (8 * i));
  return key;
}

RingElem prpg(uint64_t t, uint64_t B, const SchemeParams& params) {
  ChaChaStream stream(derive_seed(t, B, params.seed_bits_k));
  uint32_t cb = SchemeParams::coeff_bytes(params.log_q);
  std::vector<uint8_t> buf(cb);
  RingElem a(params.n, params.log_q);
  std::vector<uint64_t> limbs(a.limbs());
  for (uint32_t i = 0; i < params.n; ++i) {
    stream.fill(buf.data(), cb);
    std::fill(limbs.begin(), limbs.end(), 0);
    for (uint32_t b = 0; b < cb; ++b)
      limbs[b >> 3] |= uint64_t(buf[b]) << ((b & 7) * 8);
    a.set_coeff(i, limbs);  // masks the high bits beyond log_q
  }
  return a;
}

RingElem round_public(uint64_t t, uint64_t B, const RingElem& a0,
                      const SchemeParams& params) {
  if (a0.n() != params.n || a0.log_mod() != params.log_q)
    throw PrgError("round_public: a0 does not match params");
  if (t <= 1) return a0;
  return prpg(t, B, params);
}

}  // namespace esafl
