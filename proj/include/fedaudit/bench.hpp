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


#ifndef FEDAUDIT_BENCH_HPP_
#define FEDAUDIT_BENCH_HPP_

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <vector>

#include "fedaudit/crypto.hpp"

namespace fedaudit::bench {

struct KeySizeTiming {
  unsigned bits = 0;
  double keygen_seconds = 0;
  double encrypt_ops_per_sec = 0;
  double decrypt_ops_per_sec = 0;
  double add_ops_per_sec = 0;
};

namespace detail {

template <typename Fn>
double ops_per_sec(Fn&& fn, double min_seconds, int min_ops) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  int ops = 0;
  double elapsed = 0;
  do {
    fn();
    ++ops;
    elapsed = std::chrono::duration<double>(clock::now() - t0).count();
  } while (ops < min_ops || elapsed < min_seconds);
  return ops / elapsed;
}

}  // namespace detail

/// Times keygen, encryption, decryption and homomorphic addition for each
/// ElGamal modulus size. Encryption uses the generic (table-free) path.
inline std::vector<KeySizeTiming> keygen_bench(const std::vector<unsigned>& sizes, std::uint64_t seed,
                                               double min_seconds = 0.25, int min_ops = 20) {
  std::vector<KeySizeTiming> out;
  for (unsigned bits : sizes) {
    KeySizeTiming row;
    row.bits = bits;
    const crypto::SecurityParams params{8, bits, std::max(1u, (bits - 1) / 32)};
    const auto t0 = std::chrono::steady_clock::now();
    const auto km = crypto::keygen(params, seed + bits);
    row.keygen_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Rng rng(seed);
    std::uint64_t m = 0;
    const auto n = km.pub.n.get_ui();
    row.encrypt_ops_per_sec = detail::ops_per_sec(
        [&] { crypto::encrypt(km.pub, crypto::BigInt(static_cast<unsigned long>(m++ % n)), rng); }, min_seconds, min_ops);
    const auto c = crypto::encrypt(km.pub, crypto::BigInt(1), rng);
    row.decrypt_ops_per_sec = detail::ops_per_sec([&] { crypto::decrypt(km, c); }, min_seconds, min_ops);
    row.add_ops_per_sec = detail::ops_per_sec([&] { crypto::hom_add(km.pub, c, c); }, min_seconds, min_ops);
    out.push_back(row);
  }
  return out;
}

/// True when encryption throughput strictly decreases with key size.
inline bool encryption_strictly_decreasing(const std::vector<KeySizeTiming>& rows) {
  for (size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].encrypt_ops_per_sec < rows[i - 1].encrypt_ops_per_sec)) return false;
  }
  return true;
}

}  // namespace fedaudit::bench

#endif  // FEDAUDIT_BENCH_HPP_
