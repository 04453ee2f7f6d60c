/*
 * Copyright 2026 The klc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <list>
#include <memory>
#include <vector>

#include "klc/common.hpp"
#include "klc/kernels.hpp"

namespace klc {

/// LRU cache of full kernel rows K(x_i, x_t), t = 0..p-1, bounded by a byte budget.
/// At least two rows are always kept so that a working pair stays resident.
/// `shift` is added to every entry.
class KernelRowCache {
public:
    KernelRowCache(const KernelSpec& spec, const PointMatrix& x, std::size_t budget_bytes, double shift = 0.0);

    /// Row i. The pointer stays valid until the next call that has to evict.
    const double* row(Index i);

    [[nodiscard]] double diag(Index i) const { return diag_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] Index size() const { return x_.rows(); }
    [[nodiscard]] std::size_t capacity_rows() const { return capacity_; }
    [[nodiscard]] std::size_t rows_computed() const { return computed_; }

private:
    void fill(Index i, double* out) const;

    KernelSpec spec_;
    const PointMatrix& x_;
    double shift_;
    std::vector<double> diag_;
    std::size_t capacity_;
    std::size_t computed_ = 0;
    std::list<Index> lru_;  // front = most recent
    std::vector<std::list<Index>::iterator> where_;
    std::vector<std::unique_ptr<double[]>> rows_;
};

}  // namespace klc
