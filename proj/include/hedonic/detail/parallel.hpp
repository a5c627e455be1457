// Copyright 2026 The Hedonic Index Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HEDONIC_DETAIL_PARALLEL_HPP_
#define HEDONIC_DETAIL_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace hedonic::detail {

/// Thread cap from HEDONIC_THREADS; 1 when unset or unparsable.
inline std::size_t env_thread_count() {
  const char* v = std::getenv("HEDONIC_THREADS");
  if (v == nullptr) return 1;
  try {
    const long n = std::stol(v);
    return n > 0 ? static_cast<std::size_t>(n) : 1;
  } catch (...) {
    return 1;
  }
}

/// Splits [0, n) into `threads` contiguous chunks, runs `work(chunk, begin,
/// end)` for each, and hands the per-chunk results to `combine` in chunk
/// order. The chunking depends only on n and the thread count, so the
/// reduction is bitwise reproducible for a fixed thread count.
template <typename Acc, typename Work, typename Combine>
Acc ordered_reduce(std::size_t n, std::size_t threads, Acc init, Work work,
                   Combine combine) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    Acc acc = init;
    work(acc, std::size_t{0}, n);
    return acc;
  }
  std::vector<Acc> partial(threads, init);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t step = (n + threads - 1) / threads;
  for (std::size_t c = 0; c < threads; ++c) {
    const std::size_t b = std::min(n, c * step);
    const std::size_t e = std::min(n, b + step);
    pool.emplace_back([&, c, b, e] { work(partial[c], b, e); });
  }
  for (auto& th : pool) th.join();
  Acc acc = std::move(partial[0]);
  for (std::size_t c = 1; c < threads; ++c) combine(acc, partial[c]);
  return acc;
}

}  // namespace hedonic::detail

#endif  // HEDONIC_DETAIL_PARALLEL_HPP_
