/**
 * @file ring.hpp
 * @brief Exact arithmetic in R_q = Z_q[X]/(X^n+1) for power-of-two q up to
 *        2^478-scale, plus the key and error samplers.
 *
 * Coefficients are fixed-width little-endian limb arrays sized for log_q
 * bits. q is always a power of two, so every reduction is a bit mask and
 * no division is ever performed. ESHE never multiplies two generic ring
 * elements: the only products are (dense a) x (sparse ternary key) and
 * (dense a) x (small dense polynomial), both done as signed sparse
 * convolutions.
 *
 * No constant-time guarantees: this is a research artifact and side-channel
 * hardening is out of scope.
 */
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace esafl {

struct RingError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Seedable deterministic generator handle. All samplers take one
/// explicitly; there is no global randomness.
class Rng {
 public:
  explicit Rng(uint64_t seed);
  /// Raw 64 uniform bits.
  uint64_t next();
  /// Uniform in [0, bound), unbiased via rejection.
  uint64_t below(uint64_t bound);
  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit();

 private:
  uint64_t s_[4];  // xoshiro256** state
};

/// Degree-(n-1) polynomial with coefficients canonically reduced modulo
/// 2^log_mod. Immutable value semantics; safe to share across threads.
class RingElem {
 public:
  RingElem() = default;
  /// Zero element.
  RingElem(uint32_t n, uint32_t log_mod);
  /// Uniform element of R_{2^log_mod}, drawn from rng.
  static RingElem uniform(uint32_t n, uint32_t log_mod, Rng& rng);

  uint32_t n() const { return n_; }
  uint32_t log_mod() const { return log_mod_; }
  uint32_t limbs() const { return limbs_; }
  bool empty() const { return n_ == 0; }

  std::span<const uint64_t> coeff(uint32_t i) const {
    return {w_.data() + size_t(i) * limbs_, limbs_};
  }
  /// Sets coefficient i from little-endian limbs, masked to log_mod bits.
  void set_coeff(uint32_t i, std::span<const uint64_t> limbs);
  /// Convenience for small moduli (log_mod <= 64).
  uint64_t coeff_u64(uint32_t i) const { return w_[size_t(i) * limbs_]; }
  void set_coeff_u64(uint32_t i, uint64_t v);

  bool operator==(const RingElem&) const = default;

  /// Wire layout: n coefficients in index order, each ceil(log_mod/8)
  /// little-endian bytes with unused high bits zero.
  size_t serialized_size() const;
  void serialize_to(std::vector<uint8_t>& out) const;
  std::vector<uint8_t> serialize() const;
  /// Rejects inputs whose unused high bits are nonzero (non-canonical).
  static RingElem deserialize(std::span<const uint8_t> bytes, uint32_t n,
                              uint32_t log_mod);

  std::span<uint64_t> raw() { return w_; }
  std::span<const uint64_t> raw() const { return w_; }

 private:
  uint32_t n_ = 0;
  uint32_t log_mod_ = 0;
  uint32_t limbs_ = 0;
  std::vector<uint64_t> w_;  // n_ * limbs_ little-endian limbs

  friend RingElem add(const RingElem&, const RingElem&);
  friend RingElem sub(const RingElem&, const RingElem&);
};

/// Sparse ternary encryption key s_i: disjoint +1 / -1 position sets,
/// |plus| + |minus| = ternary_weight.
struct SparseTernaryKey {
  uint32_t n = 0;
  std::vector<uint32_t> plus;   // sorted, coefficient +1
  std::vector<uint32_t> minus;  // sorted, coefficient -1

  uint32_t weight() const { return uint32_t(plus.size() + minus.size()); }
  bool operator==(const SparseTernaryKey&) const = default;
};

/// Dense polynomial with small signed coefficients (errors, joint keys).
struct SmallPoly {
  std::vector<int64_t> coeffs;
  int64_t bound = 0;  ///< declared max |coefficient|

  uint32_t n() const { return uint32_t(coeffs.size()); }
  bool operator==(const SmallPoly&) const = default;
};

RingElem add(const RingElem& a, const RingElem& b);
RingElem sub(const RingElem& a, const RingElem& b);

/// Exact negacyclic product a * s for sparse ternary s: one signed rotation
/// accumulation per nonzero, O(h*n) limb additions.
RingElem mul_sparse(const RingElem& a, const SparseTernaryKey& s);

/// Exact negacyclic product a * s for a dense small-coefficient s,
/// as a signed sparse convolution over the nonzeros of s.
RingElem mul_small(const RingElem& a, const SmallPoly& s);

/// Coefficient-wise p * e mod q: signed shift left by log_p bits, masked to
/// log_q bits.
RingElem lift_and_scale_error(const SmallPoly& e, uint32_t log_p,
                              uint32_t log_q);

/// Low log_p bits of every coefficient; result lives in R_{2^log_p}.
RingElem mod_p(const RingElem& a, uint32_t log_p);

/// Reinterprets an element of R_p inside R_q (log_mod widens, values keep).
RingElem widen(const RingElem& a, uint32_t log_q);

/// h positions chosen uniformly without replacement, each sign +-1 with
/// probability 1/2.
SparseTernaryKey sample_ternary(Rng& rng, uint32_t n, uint32_t h);

/// Discrete Gaussian on the integers with standard deviation sigma,
/// truncated at bound ceil(6*sigma).
SmallPoly sample_gaussian(Rng& rng, uint32_t n, double sigma);

/// Exact coefficient-wise signed sum of sparse ternary keys; declared bound
/// is the number of keys.
SmallPoly key_sum(std::span<const SparseTernaryKey> keys);

}  // namespace esafl
