/**
 * @file params.hpp
 * @brief Scheme parameters, their mutual constraints, and the derived
 *        packing geometry (pad, T, per-ciphertext capacity).
 */
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace esafl {

/// Thrown when a parameter set violates one of its mutual constraints.
/// The message names the violated invariant.
struct ParamsError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Optional overrides for the derived or defaulted fields of setup().
struct ParamOverrides {
  std::optional<uint32_t> pad;
  std::optional<uint32_t> slots_T;
  std::optional<uint32_t> ternary_weight;
  std::optional<double> gaussian_sigma;
  std::optional<uint32_t> seed_bits_k;
  std::optional<uint32_t> reals_per_slot;
};

/// Immutable after construction; freely shareable across threads.
struct SchemeParams {
  uint32_t n = 1u << 15;         ///< ring dimension, power of two
  uint32_t log_q = 478;          ///< ciphertext modulus q = 2^log_q
  uint32_t log_p = 460;          ///< plaintext modulus p = 2^log_p
  uint32_t log_q0 = 16;          ///< per-slot message precision in bits
  uint32_t num_clients = 9;      ///< N
  uint32_t ternary_weight = 64;  ///< Hamming weight h of each encryption key
  double gaussian_sigma = kDefaultSigma;  ///< std dev of the error distribution
  uint32_t pad = 4;              ///< zero-padding bits per slot (carry headroom)
  uint32_t slots_T = 23;         ///< slot count T per packed coefficient
  uint32_t seed_bits_k = 64;     ///< bit-length of the secret seed B
  uint32_t reals_per_slot = 1;   ///< 1: imaginary parts held at zero; 2: pairs

  /// Default error distribution has variance 1.22.
  static constexpr double kDefaultSigma = 1.1045361017187261;  // sqrt(1.22)

  uint32_t slot_width() const { return pad + log_q0; }
  /// Truncation bound of the error sampler, ceil(6*sigma).
  uint32_t error_bound() const;
  /// Real messages carried by one encoded polynomial (n/2 or n).
  uint64_t reals_per_poly() const { return reals_per_slot == 1 ? n / 2 : n; }
  /// Real messages per ciphertext: (T-1) data slots times reals per polynomial.
  uint64_t capacity() const { return uint64_t(slots_T - 1) * reals_per_poly(); }
  /// Serialized bytes per coefficient at a given modulus bit length.
  static uint32_t coeff_bytes(uint32_t log_mod) { return (log_mod + 7) / 8; }

  /// Throws ParamsError naming the first violated invariant.
  void validate() const;

  /// Flat key=value text profile, one field per line, ASCII.
  std::string to_profile() const;
  /// Parses a profile; omitted derived fields are recomputed, then validated.
  static SchemeParams from_profile(const std::string& text);

  bool operator==(const SchemeParams&) const = default;
};

/// Builds a validated parameter set. pad defaults to ceil(log2(num_clients)),
/// slots_T to floor(log_p / (log_q0 + pad)); both can be overridden.
SchemeParams setup(uint32_t n, uint32_t log_q, uint32_t log_p, uint32_t log_q0,
                   uint32_t num_clients, const ParamOverrides& ov = {});

/// n=2^10 test configuration (correctness only, no security claim).
SchemeParams desk_profile();
/// Full n=2^15 benchmark configuration.
SchemeParams full_profile();

}  // namespace esafl
