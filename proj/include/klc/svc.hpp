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
#include <string>
#include <vector>

#include "klc/common.hpp"
#include "klc/kernels.hpp"

namespace klc {

struct SolverParams {
    double c_cap = 1e10;
    double kkt_tol = 1e-3;
    int max_passes = 2000;  // iteration budget is max_passes * p
    bool shrink = true;
    std::size_t cache_bytes = std::size_t{1} << 30;
    /// Solve with K - K(0). The dual is unchanged on the charge-neutral set and
    /// the gradient loses far less precision when K is nearly constant.
    bool center_kernel = true;

    void validate() const;
};

struct SvcProblem {
    KernelSpec kernel;
    PointMatrix x;
    Vector y;  // +-1
    SolverParams params;
    double kernel_offset = 0.0;  // constant added to K

    void validate() const;
};

struct SvcDiagnostics {
    long long iterations = 0;
    long long passes = 0;  // iterations / p, rounded up
    double final_kkt_violation = 0.0;
    bool cap_active = false;
    double sv_threshold = 0.0;
    std::size_t kernel_rows_computed = 0;
};

struct SvcSolution {
    Vector alpha;
    double bias = 0.0;
    std::vector<Index> sv_indices;
    double objective = 0.0;  // L(alpha) = sum alpha - 1/2 alpha^T Q alpha
    SvcDiagnostics diagnostics;
};

/// Hard-margin dual by two-variable working-set ascent with second-order pair
/// selection. `warm_start`, if given, must be feasible (alpha >= 0, sum alpha y = 0).
/// Throws ConvergenceError when the iteration budget runs out.
SvcSolution svc_fit(const SvcProblem& problem, const Vector* warm_start = nullptr);

/// f(x) = sum alpha y K(x_mu, x) + b.
Vector decision_function(const SvcSolution& solution, const SvcProblem& problem, const PointMatrix& x_query,
                         bool include_bias = true);

struct KktReport {
    double max_primal_violation = 0.0;     // max(0, 1 - y f)
    double charge_residual = 0.0;          // |sum alpha y| / sum alpha
    double complementarity_residual = 0.0; // max over SVs of |y f - 1|
    double canonical_residual = 0.0;       // |min y f - 1|
};

KktReport verify_kkt(const SvcSolution& solution, const SvcProblem& problem);

struct TruncationRow {
    double sigma = 0.0;
    double relative_difference = 0.0;
};

/// For each sigma, compares the duals of `full_kernel` with those of the truncated
/// power kernel of matching cusp, rescaled by the cusp coefficient.
std::vector<TruncationRow> truncation_convergence_test(const KernelSpec& full_kernel, const PointMatrix& x,
                                                       const Vector& y, const std::vector<double>& sigma_grid,
                                                       const SolverParams& params = {});

/// index,alpha,y,is_sv rows plus a trailing bias line.
void write_solution_csv(const SvcSolution& solution, const SvcProblem& problem, const std::string& path);

}  // namespace klc
