// Copyright 2026 The fedaudit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================
//
// Additive ElGamal over Z_p* with a Paillier-style plaintext encoding.
//
// A plaintext level m in Z_n is first mapped to g_p^m mod n^2 and that residue
// is ElGamal-encrypted under (p, g, y). Multiplying ciphertexts multiplies the
// encoded residues as integers, and as long as the integer product stays below
// p the decryptor can reduce mod n^2 and read the plaintext sum back through
// the L-function. The depth counter on each ciphertext tracks how many encoded
// residues have been multiplied together so that bound is never crossed.

#ifndef FEDAUDIT_CRYPTO_HPP_
#define FEDAUDIT_CRYPTO_HPP_

#include <gmpxx.h>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fedaudit/error.hpp"
#include "fedaudit/random.hpp"

namespace fedaudit::crypto {

using BigInt = mpz_class;

/// Groups at or above this size use a prime-order Schnorr subgroup.
inline constexpr unsigned kSchnorrMinBits = 256;
inline constexpr unsigned kSubgroupOrderBits = 160;
inline constexpr int kPrimalityReps = 30;
inline constexpr int kMaxPrimeAttempts = 1'000'000;

struct SecurityParams {
  unsigned plaintext_prime_bits = 8;
  /// 0 selects the smallest size that satisfies p > n^(2 * max_aggregation_terms).
  unsigned elgamal_prime_bits = 0;
  unsigned max_aggregation_terms = 1;
};

/// Smallest ElGamal modulus size that is guaranteed to exceed n^(2 N_agg)
/// for any n built from two primes of plaintext_prime_bits bits.
inline unsigned required_elgamal_bits(unsigned plaintext_prime_bits,
                                      unsigned max_aggregation_terms) {
  return 2u * (2u * plaintext_prime_bits) * max_aggregation_terms + 1u;
}

inline void validate(const SecurityParams& params) {
  if (params.plaintext_prime_bits < 8) {
    throw Error(ErrorCode::kInvalidArgument, "plaintext_prime_bits must be >= 8");
  }
  if (params.max_aggregation_terms < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_aggregation_terms must be >= 1");
  }
  const unsigned need =
      required_elgamal_bits(params.plaintext_prime_bits, params.max_aggregation_terms);
  if (params.elgamal_prime_bits != 0 && params.elgamal_prime_bits < need) {
    throw Error(ErrorCode::kParameterInfeasible,
                "elgamal_prime_bits=" + std::to_string(params.elgamal_prime_bits) +
                    " cannot satisfy p > n^(2*" +
                    std::to_string(params.max_aggregation_terms) + "); need >= " +
                    std::to_string(need));
  }
}

struct PublicKey {
  BigInt p;      // ElGamal modulus
  BigInt order;  // order of g (subgroup order q, or p - 1 for small groups)
  BigInt g;
  BigInt y;      // g^x mod p
  BigInt n;      // plaintext modulus p_p * q_p
  BigInt n_squared;
  BigInt g_p;    // plaintext-space generator mod n^2
  unsigned max_aggregation_terms = 1;
};

struct SecretKey {
  BigInt x;
  BigInt lambda;                     // lcm(p_p - 1, q_p - 1)
  BigInt lfunc_denominator_inverse;  // L(g_p^lambda mod n^2)^-1 mod n
};

struct KeyMaterial {
  PublicKey pub;
  SecretKey sec;
};

struct Ciphertext {
  BigInt c1;
  BigInt c2;
  unsigned depth = 1;

  friend bool operator==(const Ciphertext& a, const Ciphertext& b) {
    return a.c1 == b.c1 && a.c2 == b.c2 && a.depth == b.depth;
  }
};

// ---------------------------------------------------------------------------
// Number-theory helpers.

/// Uniform integer in [0, bound) drawn from rng by rejection sampling.
inline BigInt random_below(Rng& rng, const BigInt& bound) {
  if (sgn(bound) <= 0) throw Error(ErrorCode::kInvalidArgument, "random_below: bound must be positive");
  const size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
  const size_t words = (bits + 63) / 64;
  const unsigned top_bits = static_cast<unsigned>(bits - (words - 1) * 64);
  std::vector<std::uint64_t> buf(words);
  BigInt v;
  do {
    for (auto& w : buf) w = rng();
    if (top_bits < 64) buf.back() &= (std::uint64_t{1} << top_bits) - 1;
    mpz_import(v.get_mpz_t(), words, -1, sizeof(std::uint64_t), 0, 0, buf.data());
  } while (v >= bound);
  return v;
}

/// Random integer with exactly `bits` bits (top bit set).
inline BigInt random_bits(Rng& rng, unsigned bits) {
  BigInt top = BigInt(1) << (bits - 1);
  return top + random_below(rng, top);
}

inline bool is_probable_prime(const BigInt& v) {
  return mpz_probab_prime_p(v.get_mpz_t(), kPrimalityReps) > 0;
}

inline BigInt random_prime(Rng& rng, unsigned bits) {
  if (bits < 2) throw Error(ErrorCode::kInvalidArgument, "prime bit length must be >= 2");
  for (int attempt = 0; attempt < kMaxPrimeAttempts; ++attempt) {
    BigInt c = random_bits(rng, bits);
    if (bits > 2) c |= 1;
    if (is_probable_prime(c)) return c;
  }
  throw Error(ErrorCode::kPrimeGenerationFailure,
              "no " + std::to_string(bits) + "-bit prime found");
}

inline BigInt powm(const BigInt& base, const BigInt& exp, const BigInt& mod) {
  BigInt r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return r;
}

inline BigInt invert(const BigInt& a, const BigInt& mod) {
  BigInt r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0) {
    throw Error(ErrorCode::kInvalidArgument, "value is not invertible");
  }
  return r;
}

inline BigInt lcm(const BigInt& a, const BigInt& b) {
  BigInt r;
  mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

inline BigInt gcd(const BigInt& a, const BigInt& b) {
  BigInt r;
  mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

inline unsigned bit_length(const BigInt& v) {
  return static_cast<unsigned>(mpz_sizeinbase(v.get_mpz_t(), 2));
}

/// L(u) = (u - 1) / n. Throws lfunction-not-integral when n does not divide u - 1.
inline BigInt lfunction(const BigInt& u, const BigInt& n) {
  BigInt t = u - 1;
  if (!mpz_divisible_p(t.get_mpz_t(), n.get_mpz_t())) {
    throw Error(ErrorCode::kLFunctionNotIntegral,
                "(u - 1) is not divisible by n; plaintext sum or depth bound violated");
  }
  BigInt q;
  mpz_divexact(q.get_mpz_t(), t.get_mpz_t(), n.get_mpz_t());
  return q;
}

// ---------------------------------------------------------------------------
// Key generation.

namespace detail {

struct ElGamalGroup {
  BigInt p;
  BigInt order;
  BigInt g;
};

// p = 2q + 1 with g generating all of Z_p*.
inline ElGamalGroup safe_prime_group(Rng& rng, unsigned bits) {
  for (int attempt = 0; attempt < kMaxPrimeAttempts; ++attempt) {
    BigInt q = random_bits(rng, bits - 1) | 1;
    if (mpz_probab_prime_p(q.get_mpz_t(), 1) == 0) continue;
    BigInt p = 2 * q + 1;
    if (bit_length(p) != bits) continue;
    if (!is_probable_prime(q) || !is_probable_prime(p)) continue;
    const BigInt pm1 = p - 1;
    for (;;) {
      BigInt g = random_below(rng, p - 3) + 2;
      if (powm(g, 2, p) != 1 && powm(g, q, p) != 1) return {p, pm1, g};
    }
  }
  throw Error(ErrorCode::kPrimeGenerationFailure,
              "no " + std::to_string(bits) + "-bit safe prime found");
}

// p = k q + 1 with g of prime order q.
inline ElGamalGroup schnorr_group(Rng& rng, unsigned bits) {
  const BigInt q = random_prime(rng, kSubgroupOrderBits);
  const BigInt lo = (BigInt(1) << (bits - 1)) / q + 1;
  const BigInt hi = ((BigInt(1) << bits) - 1) / q;
  for (int attempt = 0; attempt < kMaxPrimeAttempts; ++attempt) {
    BigInt k = lo + random_below(rng, hi - lo);
    if (mpz_odd_p(k.get_mpz_t())) k += 1;
    BigInt p = k * q + 1;
    if (bit_length(p) != bits || !is_probable_prime(p)) continue;
    for (;;) {
      BigInt h = random_below(rng, p - 3) + 2;
      BigInt g = powm(h, k, p);
      if (g != 1) return {p, q, g};
    }
  }
  throw Error(ErrorCode::kPrimeGenerationFailure,
              "no " + std::to_string(bits) + "-bit Schnorr prime found");
}

inline BigInt plaintext_prime(Rng& rng, unsigned bits) {
  // Top two bits set so n = p_p q_p has exactly 2 * bits bits.
  for (int attempt = 0; attempt < kMaxPrimeAttempts; ++attempt) {
    BigInt c = random_bits(rng, bits);
    c |= BigInt(1) << (bits - 2);
    c |= 1;
    if (is_probable_prime(c)) return c;
  }
  throw Error(ErrorCode::kPrimeGenerationFailure, "plaintext prime search exhausted");
}

}  // namespace detail

/// Key generation with caller-chosen plaintext primes. Used directly by tests
/// that need a tiny, enumerable plaintext space (e.g. p_p = 3, q_p = 5).
inline KeyMaterial keygen_with_plaintext_primes(const SecurityParams& params,
                                                const BigInt& pp, const BigInt& qp,
                                                std::uint64_t seed) {
  if (params.max_aggregation_terms < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_aggregation_terms must be >= 1");
  }
  if (pp == qp || !is_probable_prime(pp) || !is_probable_prime(qp)) {
    throw Error(ErrorCode::kInvalidArgument, "plaintext primes must be distinct primes");
  }
  Rng rng(derive_seed(seed, {stream::kKeygen}));

  KeyMaterial km;
  PublicKey& pub = km.pub;
  SecretKey& sec = km.sec;
  pub.max_aggregation_terms = params.max_aggregation_terms;
  pub.n = pp * qp;
  pub.n_squared = pub.n * pub.n;
  sec.lambda = lcm(pp - 1, qp - 1);
  pub.g_p = pub.n + 1;

  const BigInt denom = lfunction(powm(pub.g_p, sec.lambda, pub.n_squared), pub.n);
  if (gcd(denom, pub.n) != 1) {
    throw Error(ErrorCode::kParameterInfeasible, "gcd(L(g_p^lambda mod n^2), n) != 1");
  }
  sec.lfunc_denominator_inverse = invert(denom, pub.n);

  const unsigned need = 2u * params.max_aggregation_terms * bit_length(pub.n) + 1u;
  unsigned bits = params.elgamal_prime_bits == 0 ? need : params.elgamal_prime_bits;
  if (bits < need) {
    throw Error(ErrorCode::kParameterInfeasible,
                "elgamal_prime_bits=" + std::to_string(bits) + " < " + std::to_string(need) +
                    " required for p > n^(2*" + std::to_string(params.max_aggregation_terms) + ")");
  }
  bits = std::max(bits, 16u);

  detail::ElGamalGroup grp =
      bits >= kSchnorrMinBits ? detail::schnorr_group(rng, bits) : detail::safe_prime_group(rng, bits);
  pub.p = grp.p;
  pub.order = grp.order;
  pub.g = grp.g;

  BigInt bound;
  mpz_pow_ui(bound.get_mpz_t(), pub.n.get_mpz_t(), 2ul * params.max_aggregation_terms);
  if (!(pub.p > bound)) {
    throw Error(ErrorCode::kParameterInfeasible, "generated p does not exceed n^(2 N_agg)");
  }

  sec.x = random_below(rng, pub.order - 1) + 1;
  pub.y = powm(pub.g, sec.x, pub.p);
  return km;
}

inline KeyMaterial keygen(const SecurityParams& params, std::uint64_t seed) {
  validate(params);
  Rng rng(derive_seed(seed, {stream::kKeygen, 0x706c61696eULL}));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    BigInt pp = detail::plaintext_prime(rng, params.plaintext_prime_bits);
    BigInt qp = detail::plaintext_prime(rng, params.plaintext_prime_bits);
    if (pp == qp) continue;
    // gcd(lambda, n) = 1 is exactly the gcd condition for g_p = n + 1.
    if (gcd(lcm(pp - 1, qp - 1), pp * qp) != 1) continue;
    SecurityParams effective = params;
    if (effective.elgamal_prime_bits == 0) {
      effective.elgamal_prime_bits = required_elgamal_bits(params.plaintext_prime_bits,
                                                           params.max_aggregation_terms);
    }
    return keygen_with_plaintext_primes(effective, pp, qp, seed);
  }
  throw Error(ErrorCode::kPrimeGenerationFailure, "plaintext prime pair search exhausted");
}

// ---------------------------------------------------------------------------
// Encryption and homomorphic operations.

inline BigInt encode_plaintext(const PublicKey& pub, const BigInt& m) {
  return powm(pub.g_p, m, pub.n_squared);
}

inline void check_plaintext(const PublicKey& pub, const BigInt& m) {
  if (sgn(m) < 0 || m >= pub.n) {
    throw Error(ErrorCode::kPlaintextOutOfRange,
                "plaintext " + m.get_str() + " not in [0, " + pub.n.get_str() + ")");
  }
}

inline BigInt random_exponent(const PublicKey& pub, Rng& rng) {
  return random_below(rng, pub.order - 1) + 1;
}

inline Ciphertext encrypt(const PublicKey& pub, const BigInt& m, Rng& rng) {
  check_plaintext(pub, m);
  const BigInt r = random_exponent(pub, rng);
  Ciphertext c;
  c.c1 = powm(pub.g, r, pub.p);
  c.c2 = (encode_plaintext(pub, m) * powm(pub.y, r, pub.p)) % pub.p;
  c.depth = 1;
  return c;
}

inline Ciphertext encrypt(const PublicKey& pub, const BigInt& m, std::uint64_t seed) {
  Rng rng(seed);
  return encrypt(pub, m, rng);
}

inline void check_wellformed(const PublicKey& pub, const Ciphertext& c) {
  if (sgn(c.c1) < 0 || c.c1 >= pub.p || sgn(c.c2) < 0 || c.c2 >= pub.p) {
    throw Error(ErrorCode::kInvalidArgument, "ciphertext component outside [0, p)");
  }
}

inline Ciphertext hom_add(const PublicKey& pub, const Ciphertext& a, const Ciphertext& b) {
  check_wellformed(pub, a);
  check_wellformed(pub, b);
  if (std::uint64_t{a.depth} + b.depth > pub.max_aggregation_terms) {
    throw Error(ErrorCode::kDepthExceeded,
                "depth " + std::to_string(a.depth) + " + " + std::to_string(b.depth) + " > " +
                    std::to_string(pub.max_aggregation_terms));
  }
  Ciphertext c;
  c.c1 = (a.c1 * b.c1) % pub.p;
  c.c2 = (a.c2 * b.c2) % pub.p;
  c.depth = a.depth + b.depth;
  return c;
}

/// Raises both components to k. k = 0 returns a fresh encryption of zero
/// (depth 1) drawn from rng instead of the degenerate pair (1, 1).
inline Ciphertext scalar_mul(const PublicKey& pub, const Ciphertext& a, std::uint64_t k,
                             Rng& rng) {
  check_wellformed(pub, a);
  if (k == 0) return encrypt(pub, BigInt(0), rng);
  if (std::uint64_t{a.depth} * k > pub.max_aggregation_terms) {
    throw Error(ErrorCode::kDepthExceeded,
                "depth " + std::to_string(a.depth) + " * " + std::to_string(k) + " > " +
                    std::to_string(pub.max_aggregation_terms));
  }
  Ciphertext c;
  const BigInt e(static_cast<unsigned long>(k));
  c.c1 = powm(a.c1, e, pub.p);
  c.c2 = powm(a.c2, e, pub.p);
  c.depth = static_cast<unsigned>(a.depth * k);
  return c;
}

inline BigInt decrypt(const KeyMaterial& km, const Ciphertext& c) {
  const PublicKey& pub = km.pub;
  check_wellformed(pub, c);
  const BigInt shared = powm(c.c1, km.sec.x, pub.p);
  const BigInt encoded = (c.c2 * invert(shared, pub.p)) % pub.p;
  const BigInt reduced = encoded % pub.n_squared;
  const BigInt u = powm(reduced, km.sec.lambda, pub.n_squared);
  return (lfunction(u, pub.n) * km.sec.lfunc_denominator_inverse) % pub.n;
}

// ---------------------------------------------------------------------------
// Fixed-base exponentiation for bulk encryption.

/// Precomputed 8-bit comb table for base^e mod m with e < 2^max_exp_bits.
class FixedBasePow {
 public:
  FixedBasePow(const BigInt& base, const BigInt& mod, unsigned max_exp_bits)
      : mod_(mod), windows_((max_exp_bits + 7) / 8), table_(windows_ * 256) {
    BigInt b = base % mod;
    for (unsigned w = 0; w < windows_; ++w) {
      table_[w * 256] = 1;
      for (unsigned j = 1; j < 256; ++j) table_[w * 256 + j] = (table_[w * 256 + j - 1] * b) % mod_;
      b = (table_[w * 256 + 255] * b) % mod_;
    }
  }

  BigInt pow(const BigInt& e) const {
    const size_t nbytes = (mpz_sizeinbase(e.get_mpz_t(), 2) + 7) / 8;
    if (nbytes > windows_) return powm(table_[1], e, mod_);
    std::vector<unsigned char> bytes(nbytes);
    size_t count = 0;
    mpz_export(bytes.data(), &count, -1, 1, 0, 0, e.get_mpz_t());
    BigInt r = 1;
    for (size_t i = 0; i < count; ++i) {
      if (bytes[i] != 0) {
        r *= table_[i * 256 + bytes[i]];
        r %= mod_;
      }
    }
    return r;
  }

 private:
  BigInt mod_;
  unsigned windows_;
  std::vector<BigInt> table_;
};

/// Encryptor bound to one public key with precomputed tables for g and y.
/// Produces ciphertexts identical to encrypt() for the same rng stream.
class Encryptor {
 public:
  explicit Encryptor(const PublicKey& pub)
      : pub_(pub),
        g_pow_(pub.g, pub.p, bit_length(pub.order)),
        y_pow_(pub.y, pub.p, bit_length(pub.order)) {}

  Ciphertext encrypt(const BigInt& m, Rng& rng) const {
    check_plaintext(pub_, m);
    const BigInt r = random_exponent(pub_, rng);
    Ciphertext c;
    c.c1 = g_pow_.pow(r);
    c.c2 = (encode_plaintext(pub_, m) * y_pow_.pow(r)) % pub_.p;
    c.depth = 1;
    return c;
  }

  const PublicKey& public_key() const { return pub_; }

 private:
  PublicKey pub_;
  FixedBasePow g_pow_;
  FixedBasePow y_pow_;
};

// ---------------------------------------------------------------------------
// Text serialization: one "name=decimal" field per line.

inline std::string serialize(const KeyMaterial& km) {
  std::ostringstream os;
  os << "p=" << km.pub.p << '\n'
     << "order=" << km.pub.order << '\n'
     << "g=" << km.pub.g << '\n'
     << "y=" << km.pub.y << '\n'
     << "x=" << km.sec.x << '\n'
     << "n=" << km.pub.n << '\n'
     << "lambda=" << km.sec.lambda << '\n'
     << "g_p=" << km.pub.g_p << '\n'
     << "lfunc_denominator_inverse=" << km.sec.lfunc_denominator_inverse << '\n'
     << "max_aggregation_terms=" << km.pub.max_aggregation_terms << '\n';
  return os.str();
}

inline KeyMaterial parse_key_material(const std::string& text) {
  std::map<std::string, std::string> fields;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParseError, "key material line " + std::to_string(lineno) + ": missing '='");
    }
    fields[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const char* name) {
    auto it = fields.find(name);
    if (it == fields.end()) throw Error(ErrorCode::kParseError, std::string("key material missing field ") + name);
    BigInt v;
    if (v.set_str(it->second, 10) != 0) {
      throw Error(ErrorCode::kParseError, std::string("key material field ") + name + " is not a decimal integer");
    }
    return v;
  };
  KeyMaterial km;
  km.pub.p = get("p");
  km.pub.order = get("order");
  km.pub.g = get("g");
  km.pub.y = get("y");
  km.sec.x = get("x");
  km.pub.n = get("n");
  km.pub.n_squared = km.pub.n * km.pub.n;
  km.sec.lambda = get("lambda");
  km.pub.g_p = get("g_p");
  km.sec.lfunc_denominator_inverse = get("lfunc_denominator_inverse");
  km.pub.max_aggregation_terms = static_cast<unsigned>(get("max_aggregation_terms").get_ui());
  if (powm(km.pub.g, km.sec.x, km.pub.p) != km.pub.y) {
    throw Error(ErrorCode::kParseError, "key material inconsistent: y != g^x mod p");
  }
  return km;
}

inline std::string serialize(const Ciphertext& c) {
  std::ostringstream os;
  os << c.c1 << ' ' << c.c2 << ' ' << c.depth;
  return os.str();
}

inline Ciphertext parse_ciphertext(const std::string& text) {
  std::istringstream is(text);
  std::string a, b;
  long long depth = -1;
  if (!(is >> a >> b >> depth) || depth < 1) {
    throw Error(ErrorCode::kParseError, "ciphertext must be 'c1 c2 depth'");
  }
  Ciphertext c;
  if (c.c1.set_str(a, 10) != 0 || c.c2.set_str(b, 10) != 0) {
    throw Error(ErrorCode::kParseError, "ciphertext components must be decimal integers");
  }
  c.depth = static_cast<unsigned>(depth);
  return c;
}

}  // namespace fedaudit::crypto

#endif  // FEDAUDIT_CRYPTO_HPP_
