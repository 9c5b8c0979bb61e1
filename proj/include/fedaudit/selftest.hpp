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


#ifndef FEDAUDIT_SELFTEST_HPP_
#define FEDAUDIT_SELFTEST_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "fedaudit/crypto.hpp"

namespace fedaudit::selftest {

struct Report {
  int checks = 0;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
  void expect(bool cond, const std::string& what) {
    ++checks;
    if (!cond) failures.push_back(what);
  }
};

namespace detail {

/// (n + 1)^m mod n^2 by repeated multiplication, independent of powm.
inline std::uint64_t encode_by_enumeration(std::uint64_t n, std::uint64_t m) {
  const std::uint64_t n2 = n * n;
  std::uint64_t acc = 1;
  for (std::uint64_t i = 0; i < m; ++i) acc = acc * (n + 1) % n2;
  return acc;
}

/// Discrete log of u = (n + 1)^m mod n^2 by enumerating m in [0, n).
inline std::int64_t log_by_enumeration(std::uint64_t n, std::uint64_t u) {
  for (std::uint64_t m = 0; m < n; ++m) {
    if (encode_by_enumeration(n, m) == u) return static_cast<std::int64_t>(m);
  }
  return -1;
}

}  // namespace detail

/// Exhaustive checks of every operation on the p_p = 3, q_p = 5 instance
/// against an oracle that tracks plaintexts directly.
inline Report run_crypto_selftest(std::uint64_t seed = 7) {
  Report rep;
  const unsigned depth = 14;
  const auto km = crypto::keygen_with_plaintext_primes({8, 0, depth}, 3, 5, seed);
  const auto& pub = km.pub;
  const std::uint64_t n = 15;
  rep.expect(pub.n == 15, "n = 15");
  rep.expect(km.sec.lambda == 4, "lambda = lcm(2, 4) = 4");
  rep.expect(pub.g_p == 16, "g_p = n + 1 = 16");
  rep.expect(crypto::lfunction(crypto::powm(pub.g_p, km.sec.lambda, pub.n_squared), pub.n) == 4,
             "L(g_p^lambda mod n^2) = 4");
  rep.expect(crypto::powm(pub.g, km.sec.x, pub.p) == pub.y, "y = g^x mod p");

  Rng rng(seed);
  std::vector<crypto::Ciphertext> cts;
  for (std::uint64_t m = 0; m < n; ++m) {
    const auto c = crypto::encrypt(pub, crypto::BigInt(static_cast<unsigned long>(m)), rng);
    cts.push_back(c);
    // Recover the encoded residue with the secret key and compare to the oracle.
    const crypto::BigInt shared = crypto::powm(c.c1, km.sec.x, pub.p);
    const crypto::BigInt encoded = (c.c2 * crypto::invert(shared, pub.p)) % pub.p;
    rep.expect(encoded.get_ui() == detail::encode_by_enumeration(n, m), "encoding of m=" + std::to_string(m));
    rep.expect(detail::log_by_enumeration(n, encoded.get_ui()) == static_cast<std::int64_t>(m),
               "oracle log of m=" + std::to_string(m));
    rep.expect(crypto::decrypt(km, c) == static_cast<unsigned long>(m), "roundtrip m=" + std::to_string(m));
  }
  for (std::uint64_t a = 0; a < n; ++a) {
    for (std::uint64_t b = 0; a + b < n; ++b) {
      const auto s = crypto::hom_add(pub, cts[a], cts[b]);
      rep.expect(crypto::decrypt(km, s) == static_cast<unsigned long>(a + b),
                 "hom_add " + std::to_string(a) + "+" + std::to_string(b));
    }
  }
  for (std::uint64_t m = 0; m < n; ++m) {
    for (std::uint64_t k = 0; k * m < n && k <= depth; ++k) {
      const auto s = crypto::scalar_mul(pub, cts[m], k, rng);
      rep.expect(crypto::decrypt(km, s) == static_cast<unsigned long>(k * m),
                 "scalar_mul " + std::to_string(k) + "*" + std::to_string(m));
    }
  }
  // Folding ones up to the depth bound in both orders.
  crypto::Ciphertext fwd = cts[1];
  for (unsigned i = 1; i < depth; ++i) {
    fwd = crypto::hom_add(pub, fwd, cts[1]);
    rep.expect(crypto::decrypt(km, fwd) == i + 1, "fold of " + std::to_string(i + 1) + " ones");
  }
  try {
    crypto::hom_add(pub, fwd, cts[0]);
    rep.expect(false, "depth bound enforced");
  } catch (const Error& e) {
    rep.expect(e.code() == ErrorCode::kDepthExceeded, "depth bound enforced");
  }
  return rep;
}

}  // namespace fedaudit::selftest

#endif  // FEDAUDIT_SELFTEST_HPP_
