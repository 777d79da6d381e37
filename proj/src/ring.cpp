#include "esafl/ring.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace esafl {

namespace {

constexpr uint32_t limbs_for(uint32_t log_mod) { return (log_mod + 63) / 64; }

uint64_t top_limb_mask(uint32_t log_mod) {
  uint32_t r = log_mod & 63;
  return r == 0 ? ~uint64_t(0) : ((uint64_t(1) << r) - 1);
}

// dst += src over nl limbs, wrapping mod 2^(64*nl).
inline void coeff_add(uint64_t* dst, const uint64_t* src, uint32_t nl) {
  uint64_t carry = 0;
  for (uint32_t i = 0; i < nl; ++i) {
    uint64_t a = dst[i];
    uint64_t s = a + src[i];
    uint64_t c = s < a;
    uint64_t s2 = s + carry;
    c += s2 < s;
    dst[i] = s2;
    carry = c;
  }
}

// dst -= src over nl limbs, wrapping mod 2^(64*nl).
inline void coeff_sub(uint64_t* dst, const uint64_t* src, uint32_t nl) {
  uint64_t borrow = 0;
  for (uint32_t i = 0; i < nl; ++i) {
    uint64_t a = dst[i];
    uint64_t b = src[i];
    uint64_t d = a - b;
    uint64_t c = a < b;
    uint64_t d2 = d - borrow;
    c += d < borrow;
    dst[i] = d2;
    borrow = c;
  }
}

// dst += src * mag over nl limbs, wrapping mod 2^(64*nl).
inline void coeff_addmul(uint64_t* dst, const uint64_t* src, uint32_t nl,
                         uint64_t mag) {
  uint64_t mul_carry = 0;
  uint64_t add_carry = 0;
  for (uint32_t i = 0; i < nl; ++i) {
    unsigned __int128 prod = (unsigned __int128)src[i] * mag + mul_carry;
    uint64_t lo = (uint64_t)prod;
    mul_carry = (uint64_t)(prod >> 64);
    uint64_t a = dst[i];
    uint64_t s = a + lo;
    uint64_t c = s < a;
    uint64_t s2 = s + add_carry;
    c += s2 < s;
    dst[i] = s2;
    add_carry = c;
  }
}

// dst -= src * mag over nl limbs, wrapping mod 2^(64*nl).
inline void coeff_submul(uint64_t* dst, const uint64_t* src, uint32_t nl,
                         uint64_t mag) {
  uint64_t mul_carry = 0;
  uint64_t sub_borrow = 0;
  for (uint32_t i = 0; i < nl; ++i) {
    unsigned __int128 prod = (unsigned __int128)src[i] * mag + mul_carry;
    uint64_t lo = (uint64_t)prod;
    mul_carry = (uint64_t)(prod >> 64);
    uint64_t a = dst[i];
    uint64_t d = a - lo;
    uint64_t c = a < lo;
    uint64_t d2 = d - sub_borrow;
    c += d < sub_borrow;
    dst[i] = d2;
    sub_borrow = c;
  }
}

void mask_all(uint64_t* w, uint32_t n, uint32_t nl, uint32_t log_mod) {
  uint64_t mask = top_limb_mask(log_mod);
  for (uint32_t i = 0; i < n; ++i) w[size_t(i) * nl + nl - 1] &= mask;
}

// scratch += sign * X^j * a (negacyclic wrap: X^n = -1). `accum` adds one
// source coefficient into one destination coefficient with the given sign.
template <typename Accum>
void rotate_accumulate(uint64_t* scratch, const uint64_t* a, uint32_t n,
                       uint32_t nl, uint32_t j, int sign, Accum&& accum) {
  // result[j+k] += a[k] for k in [0, n-j)
  for (uint32_t k = 0; k + j < n; ++k)
    accum(scratch + size_t(j + k) * nl, a + size_t(k) * nl, sign);
  // result[m] -= a[m+n-j] for m in [0, j)
  for (uint32_t m = 0; m < j; ++m)
    accum(scratch + size_t(m) * nl, a + size_t(m + n - j) * nl, -sign);
}

uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t rotl64(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed) {
  uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

uint64_t Rng::next() {
  // xoshiro256**
  uint64_t result = rotl64(s_[1] * 5, 7) * 9;
  uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl64(s_[3], 45);
  return result;
}

uint64_t Rng::below(uint64_t bound) {
  if (bound == 0) throw RingError("Rng::below: zero bound");
  uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t r;
  do {
    r = next();
  } while (r >= limit);
  return r % bound;
}

double Rng::next_unit() { return double(next() >> 11) * 0x1.0p-53; }

RingElem::RingElem(uint32_t n, uint32_t log_mod)
    : n_(n), log_mod_(log_mod), limbs_(limbs_for(log_mod)),
      w_(size_t(n) * limbs_for(log_mod), 0) {}

RingElem RingElem::uniform(uint32_t n, uint32_t log_mod, Rng& rng) {
  RingElem e(n, log_mod);
  uint64_t mask = top_limb_mask(log_mod);
  for (uint32_t i = 0; i < n; ++i) {
    uint64_t* c = e.w_.data() + size_t(i) * e.limbs_;
    for (uint32_t l = 0; l < e.limbs_; ++l) c[l] = rng.next();
    c[e.limbs_ - 1] &= mask;
  }
  return e;
}

void RingElem::set_coeff(uint32_t i, std::span<const uint64_t> limbs) {
  uint64_t* c = w_.data() + size_t(i) * limbs_;
  for (uint32_t l = 0; l < limbs_; ++l) c[l] = l < limbs.size() ? limbs[l] : 0;
  c[limbs_ - 1] &= top_limb_mask(log_mod_);
}

void RingElem::set_coeff_u64(uint32_t i, uint64_t v) {
  uint64_t* c = w_.data() + size_t(i) * limbs_;
  std::fill(c, c + limbs_, 0);
  c[0] = v;
  c[limbs_ - 1] &= top_limb_mask(log_mod_);
}

size_t RingElem::serialized_size() const {
  return size_t(n_) * ((log_mod_ + 7) / 8);
}

void RingElem::serialize_to(std::vector<uint8_t>& out) const {
  uint32_t cb = (log_mod_ + 7) / 8;
  out.reserve(out.size() + size_t(n_) * cb);
  for (uint32_t i = 0; i < n_; ++i) {
    const uint64_t* c = w_.data() + size_t(i) * limbs_;
    for (uint32_t b = 0; b < cb; ++b)
      out.push_back(uint8_t(c[b >> 3] >> ((b & 7) * 8)));
  }
}

std::vector<uint8_t> RingElem::serialize() const {
  std::vector<uint8_t> out;
  serialize_to(out);
  return out;
}

RingElem RingElem::deserialize(std::span<const uint8_t> bytes, uint32_t n,
                               uint32_t log_mod) {
  uint32_t cb = (log_mod + 7) / 8;
  if (bytes.size() != size_t(n) * cb)
    throw RingError("RingElem::deserialize: wrong byte count");
  RingElem e(n, log_mod);
  uint64_t mask = top_limb_mask(log_mod);
  for (uint32_t i = 0; i < n; ++i) {
    uint64_t* c = e.w_.data() + size_t(i) * e.limbs_;
    const uint8_t* src = bytes.data() + size_t(i) * cb;
    for (uint32_t b = 0; b < cb; ++b)
      c[b >> 3] |= uint64_t(src[b]) << ((b & 7) * 8);
    if ((c[e.limbs_ - 1] & ~mask) != 0)
      throw RingError("RingElem::deserialize: unused high bits set");
  }
  return e;
}

namespace {
void require_same_desc(const RingElem& a, const RingElem& b, const char* op) {
  if (a.n() != b.n() || a.log_mod() != b.log_mod())
    throw RingError(std::string(op) + ": modulus descriptor mismatch");
}
}  // namespace

RingElem add(const RingElem& a, const RingElem& b) {
  require_same_desc(a, b, "ring add");
  RingElem r = a;
  uint32_t nl = r.limbs_;
  for (uint32_t i = 0; i < r.n_; ++i)
    coeff_add(r.w_.data() + size_t(i) * nl, b.w_.data() + size_t(i) * nl, nl);
  mask_all(r.w_.data(), r.n_, nl, r.log_mod_);
  return r;
}

RingElem sub(const RingElem& a, const RingElem& b) {
  require_same_desc(a, b, "ring sub");
  RingElem r = a;
  uint32_t nl = r.limbs_;
  for (uint32_t i = 0; i < r.n_; ++i)
    coeff_sub(r.w_.data() + size_t(i) * nl, b.w_.data() + size_t(i) * nl, nl);
  mask_all(r.w_.data(), r.n_, nl, r.log_mod_);
  return r;
}

RingElem mul_sparse(const RingElem& a, const SparseTernaryKey& s) {
  if (a.n() != s.n)
    throw RingError("mul_sparse: dimension mismatch");
  RingElem r(a.n(), a.log_mod());
  uint32_t nl = r.limbs();
  uint64_t* scratch = r.raw().data();
  const uint64_t* src = a.raw().data();
  auto accum = [nl](uint64_t* dst, const uint64_t* c, int sign) {
    if (sign > 0)
      coeff_add(dst, c, nl);
    else
      coeff_sub(dst, c, nl);
  };
  for (uint32_t j : s.plus)
    rotate_accumulate(scratch, src, a.n(), nl, j, +1, accum);
  for (uint32_t j : s.minus)
    rotate_accumulate(scratch, src, a.n(), nl, j, -1, accum);
  mask_all(scratch, a.n(), nl, a.log_mod());
  return r;
}

RingElem mul_small(const RingElem& a, const SmallPoly& s) {
  if (a.n() != s.n())
    throw RingError("mul_small: dimension mismatch");
  RingElem r(a.n(), a.log_mod());
  uint32_t nl = r.limbs();
  uint64_t* scratch = r.raw().data();
  const uint64_t* src = a.raw().data();
  for (uint32_t j = 0; j < a.n(); ++j) {
    int64_t v = s.coeffs[j];
    if (v == 0) continue;
    uint64_t mag = v > 0 ? uint64_t(v) : uint64_t(-v);
    int base_sign = v > 0 ? +1 : -1;
    auto accum = [nl, mag](uint64_t* dst, const uint64_t* c, int sign) {
      if (sign > 0)
        coeff_addmul(dst, c, nl, mag);
      else
        coeff_submul(dst, c, nl, mag);
    };
    rotate_accumulate(scratch, src, a.n(), nl, j, base_sign, accum);
  }
  mask_all(scratch, a.n(), nl, a.log_mod());
  return r;
}

RingElem lift_and_scale_error(const SmallPoly& e, uint32_t log_p,
                              uint32_t log_q) {
  if (log_p >= log_q)
    throw RingError("lift_and_scale_error: requires log_p < log_q");
  RingElem r(e.n(), log_q);
  uint32_t nl = r.limbs();
  uint32_t li = log_p / 64;
  uint32_t lo = log_p % 64;
  for (uint32_t i = 0; i < e.n(); ++i) {
    int64_t v = e.coeffs[i];
    if (v == 0) continue;
    uint64_t mag = v > 0 ? uint64_t(v) : uint64_t(-v);
    uint64_t* c = r.raw().data() + size_t(i) * nl;
    unsigned __int128 shifted = (unsigned __int128)mag << lo;
    c[li] = (uint64_t)shifted;
    if (li + 1 < nl) c[li + 1] = (uint64_t)(shifted >> 64);
    if (v < 0) {
      // two's complement negate over the limb array
      uint64_t carry = 1;
      for (uint32_t l = 0; l < nl; ++l) {
        uint64_t t = ~c[l] + carry;
        carry = carry != 0 && t == 0;
        c[l] = t;
      }
    }
    c[nl - 1] &= top_limb_mask(log_q);
  }
  return r;
}

RingElem mod_p(const RingElem& a, uint32_t log_p) {
  if (log_p >= a.log_mod())
    throw RingError("mod_p: requires log_p < log_mod");
  RingElem r(a.n(), log_p);
  uint32_t src_nl = a.limbs();
  uint32_t dst_nl = r.limbs();
  for (uint32_t i = 0; i < a.n(); ++i) {
    const uint64_t* s = a.raw().data() + size_t(i) * src_nl;
    uint64_t* d = r.raw().data() + size_t(i) * dst_nl;
    for (uint32_t l = 0; l < dst_nl; ++l) d[l] = s[l];
    d[dst_nl - 1] &= top_limb_mask(log_p);
  }
  return r;
}

RingElem widen(const RingElem& a, uint32_t log_q) {
  if (log_q < a.log_mod())
    throw RingError("widen: target modulus narrower than source");
  RingElem r(a.n(), log_q);
  uint32_t src_nl = a.limbs();
  uint32_t dst_nl = r.limbs();
  for (uint32_t i = 0; i < a.n(); ++i) {
    const uint64_t* s = a.raw().data() + size_t(i) * src_nl;
    uint64_t* d = r.raw().data() + size_t(i) * dst_nl;
    for (uint32_t l = 0; l < src_nl; ++l) d[l] = s[l];
  }
  return r;
}

SparseTernaryKey sample_ternary(Rng& rng, uint32_t n, uint32_t h) {
  if (h > n) throw RingError("sample_ternary: weight exceeds dimension");
  std::vector<uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  SparseTernaryKey key;
  key.n = n;
  for (uint32_t i = 0; i < h; ++i) {
    uint32_t j = i + uint32_t(rng.below(n - i));
    std::swap(idx[i], idx[j]);
    if (rng.next() & 1)
      key.plus.push_back(idx[i]);
    else
      key.minus.push_back(idx[i]);
  }
  std::sort(key.plus.begin(), key.plus.end());
  std::sort(key.minus.begin(), key.minus.end());
  return key;
}

SmallPoly sample_gaussian(Rng& rng, uint32_t n, double sigma) {
  if (!(sigma > 0.0)) throw RingError("sample_gaussian: sigma must be > 0");
  int64_t bound = int64_t(std::ceil(6.0 * sigma));
  // Cumulative table of the truncated discrete Gaussian on [-bound, bound].
  std::vector<double> cum(size_t(2 * bound + 1));
  double total = 0.0;
  for (int64_t x = -bound; x <= bound; ++x) {
    total += std::exp(-double(x) * double(x) / (2.0 * sigma * sigma));
    cum[size_t(x + bound)] = total;
  }
  SmallPoly e;
  e.bound = bound;
  e.coeffs.resize(n);
  for (uint32_t i = 0; i < n; ++i) {
    double u = rng.next_unit() * total;
    size_t k = 0;
    while (k + 1 < cum.size() && cum[k] <= u) ++k;
    e.coeffs[i] = int64_t(k) - bound;
  }
  return e;
}

SmallPoly key_sum(std::span<const SparseTernaryKey> keys) {
  if (keys.empty()) throw RingError("key_sum: no keys");
  uint32_t n = keys.front().n;
  SmallPoly s;
  s.coeffs.assign(n, 0);
  s.bound = int64_t(keys.size());
  for (const auto& k : keys) {
    if (k.n != n) throw RingError("key_sum: dimension mismatch");
    for (uint32_t j : k.plus) s.coeffs[j] += 1;
    for (uint32_t j : k.minus) s.coeffs[j] -= 1;
  }
  return s;
}

}  // namespace esafl
