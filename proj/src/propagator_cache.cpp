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

#include "dmsim/propagator_cache.hpp"

#include <mutex>

namespace dmsim {

PropagatorCache::Entry PropagatorCache::get_or_compute(std::int64_t key,
                                                       const std::function<CMatrix()>& compute) {
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  auto value = std::make_shared<const CMatrix>(compute());
  std::unique_lock lock(mutex_);
  if (entries_.size() >= capacity_) entries_.clear();
  entries_[key] = value;
  return value;
}

std::size_t PropagatorCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void PropagatorCache::clear() {
  std::unique_lock lock(mutex_);
  entries_.clear();
}

}  // namespace dmsim
