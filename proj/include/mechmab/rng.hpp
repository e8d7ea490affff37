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

#include <cstdint>
#include <limits>

namespace mechmab {

/// Purpose tags keep the environment, the allocation rule and the bid
/// rescaling on disjoint random streams.
enum class StreamTag : std::uint64_t {
  kEnvironment = 1,
  kRule = 2,
  kRescale = 3,
  kSampling = 4,
};

std::uint64_t mix64(std::uint64_t x);

/// Key of the stream for (experiment seed, trial index, purpose).
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t trial, StreamTag tag);

/// Counter-based generator: the n-th output is mix64(key + n * golden).
/// Satisfies UniformRandomBitGenerator; copies replay the same sequence.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) : key_(key) {}
  Stream(std::uint64_t seed, std::uint64_t trial, StreamTag tag)
      : key_(stream_key(seed, trial, tag)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform on {0, ..., n-1}; n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mechmab
