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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <shared_mutex>
#include <unordered_map>

#include "dmsim/hilbert.hpp"

namespace dmsim {

/// Unitaries keyed by quantized time. Safe for concurrent lookup and insert;
/// an entry is computed from its key alone, so racing writers store equal
/// matrices.
class PropagatorCache {
 public:
  using Entry = std::shared_ptr<const CMatrix>;

  explicit PropagatorCache(std::size_t capacity) : capacity_(capacity) {}

  Entry get_or_compute(std::int64_t key, const std::function<CMatrix()>& compute);
  std::size_t size() const;
  void clear();

 private:
  std::size_t capacity_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::int64_t, Entry> entries_;
};

}  // namespace dmsim
