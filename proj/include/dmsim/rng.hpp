// Copyright 2026 The dmsim Authors
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

#include <array>
#include <cstdint>

namespace dmsim {

// Philox4x32-10 counter-based generator (Salmon et al., Random123). A block is
// a pure function of (counter, key), so any stream can be regenerated from
// its coordinates alone.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

// Named streams. The numeric values are part of the reproducibility contract.
enum class Stream : std::uint32_t {
  Trajectory = 1,
  InitialSample = 2,
  CollapseSchedule = 3,
  CollapseCenter = 4,
  MixtureChoice = 5,
  StatisticalPostulate = 6,
  Pipeline = 7,
};

/// Sequential view of one named stream.
///
/// Stream derivation: key = (seed low 32 bits, seed high 32 bits);
/// counter = (block low, block high, index low 32 bits,
/// stream tag << 24 | index bits 32..55). Each block yields two 64-bit
/// words, consumed in order.
class RngStream {
 public:
  RngStream(std::uint64_t seed, Stream stream, std::uint64_t index) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer on [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;
  double exponential(double rate) noexcept;
  double normal() noexcept;

  std::uint64_t index() const noexcept { return index_; }
  Stream stream() const noexcept { return stream_; }

 private:
  void refill() noexcept;

  PhiloxKey key_;
  Stream stream_;
  std::uint64_t index_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int used_ = 2;
};

}  // namespace dmsim
