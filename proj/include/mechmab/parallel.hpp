// Copyright 2026 The mechmab Authors. All rights reserved.
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

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mechmab {

/// Trials are processed in fixed-size blocks; each block folds its trials in
/// index order and blocks are merged in index order, so the result does not
/// depend on the number of workers or on scheduling.
inline constexpr std::size_t kTrialBlock = 4096;

std::size_t default_workers();

/// `fold(acc, trial)` accumulates one trial; `merge(acc, other)` joins blocks.
template <class Acc, class Fold, class Merge>
Acc reduce_trials(std::size_t trials, const Acc& init, Fold fold, Merge merge,
                  std::size_t workers = 0) {
  const std::size_t blocks = (trials + kTrialBlock - 1) / kTrialBlock;
  std::vector<Acc> partial(blocks, init);
  if (workers == 0) workers = default_workers();
  workers = std::max<std::size_t>(1, std::min(workers, blocks));

  auto do_block = [&](std::size_t b) {
    const std::size_t begin = b * kTrialBlock;
    const std::size_t end = std::min(trials, begin + kTrialBlock);
    for (std::size_t t = begin; t < end; ++t) fold(partial[b], t);
  };

  if (workers == 1) {
    for (std::size_t b = 0; b < blocks; ++b) do_block(b);
  } else {
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t b = w; b < blocks; b += workers) do_block(b);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }

  Acc total = init;
  for (const Acc& p : partial) merge(total, p);
  return total;
}

/// Collects one result per trial, indexed by trial.
template <class Result, class Fn>
std::vector<Result> map_trials(std::size_t trials, Fn fn, std::size_t workers = 0) {
  std::vector<Result> out(trials);
  struct Unit {};
  reduce_trials(
      trials, Unit{}, [&](Unit&, std::size_t t) { out[t] = fn(t); }, [](Unit&, const Unit&) {},
      workers);
  return out;
}

}  // namespace mechmab
