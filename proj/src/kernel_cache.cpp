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

#include "klc/kernel_cache.hpp"

#include <algorithm>

namespace klc {

KernelRowCache::KernelRowCache(const KernelSpec& spec, const PointMatrix& x, std::size_t budget_bytes, double shift)
    : spec_(spec), x_(x), shift_(shift) {
    spec_.validate_for_dimension(x.cols());
    const auto p = static_cast<std::size_t>(x.rows());
    const std::size_t row_bytes = std::max<std::size_t>(1, p * sizeof(double));
    capacity_ = std::clamp<std::size_t>(budget_bytes / row_bytes, 2, std::max<std::size_t>(p, 2));
    diag_.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
        const double* xi = x.row(static_cast<Index>(i)).data();
        diag_[i] = eval_kernel(spec_, kernel_distance(spec_, xi, xi, x.cols())) + shift_;
    }
    where_.resize(p, lru_.end());
    rows_.resize(p);
}

const double* KernelRowCache::row(Index i) {
    const auto k = static_cast<std::size_t>(i);
    if (rows_[k]) {
        lru_.splice(lru_.begin(), lru_, where_[k]);
        return rows_[k].get();
    }
    std::unique_ptr<double[]> buf;
    if (lru_.size() >= capacity_) {
        const Index victim = lru_.back();
        lru_.pop_back();
        buf = std::move(rows_[static_cast<std::size_t>(victim)]);
        where_[static_cast<std::size_t>(victim)] = lru_.end();
    } else {
        buf = std::make_unique<double[]>(static_cast<std::size_t>(x_.rows()));
    }
    fill(i, buf.get());
    ++computed_;
    rows_[k] = std::move(buf);
    lru_.push_front(i);
    where_[k] = lru_.begin();
    return rows_[k].get();
}

void KernelRowCache::fill(Index i, double* out) const {
    const Index d = x_.cols();
    const double* xi = x_.row(i).data();
    for (Index t = 0; t < x_.rows(); ++t) {
        out[t] = eval_kernel(spec_, kernel_distance(spec_, xi, x_.row(t).data(), d)) + shift_;
    }
}

}  // namespace klc
