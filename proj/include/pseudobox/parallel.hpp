// Copyright 2026 The pseudobox Authors
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

#ifndef PSEUDOBOX__PARALLEL_HPP_
#define PSEUDOBOX__PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace pseudobox
{

inline constexpr const char * kThreadsEnvVar = "PSEUDOBOX_THREADS";

/// requested > 0 wins; otherwise PSEUDOBOX_THREADS, otherwise all cores.
inline unsigned resolve_thread_count(int requested)
{
  if (requested > 0) {
    return static_cast<unsigned>(requested);
  }
  if (const char * env = std::getenv(kThreadsEnvVar)) {
    try {
      const int v = std::stoi(env);
      if (v > 0) {
        return static_cast<unsigned>(v);
      }
    } catch (const std::exception &) {
      // fall through to hardware concurrency
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Run fn(i) for i in [0, n) on up to `threads` workers. Work items are
/// claimed dynamically; callers write results into per-index slots so the
/// output does not depend on scheduling. The first exception is rethrown.
template<class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn && fn)
{
  if (n == 0) {
    return;
  }
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) {
          return;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) {
            error = std::current_exception();
          }
          next.store(n);
          return;
        }
      }
    };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned t = 1; t < workers; ++t) {
      pool.emplace_back(body);
    }
    body();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__PARALLEL_HPP_
