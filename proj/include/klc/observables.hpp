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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "klc/common.hpp"
#include "klc/datagen.hpp"
#include "klc/svc.hpp"

namespace klc {

struct ObservableRecord {
    Index p = 0;
    int replica = 0;
    double epsilon = 0.0;
    double delta = 0.0;
    double alpha_bar = 0.0;
    std::optional<double> r_c;
    Index n_sv = 0;
    std::map<std::string, double> extras;

    void validate() const;
};

/// Fraction of test points with sign(f) != y; f = 0 counts as +1.
double test_error(const SvcSolution& solution, const SvcProblem& problem, const PointMatrix& x_test,
                  const Vector& y_test, bool zero_bias = false);

/// Mean distance of the support vectors to the nearest label interface.
double band_thickness(const SvcSolution& solution, const SvcProblem& problem, const TaskSpec& task);

/// Mean dual variable over the support vectors.
double mean_dual(const SvcSolution& solution);

struct RcParams {
    double c_threshold = 0.9;
    int n_probes = 5;
    double refit_kkt_tol = 1e-6;
    int max_retries = 50;  // per probe
};

struct RcResult {
    double r_c = 0.0;  // mean over probes
    std::vector<double> per_probe;
    int redraws = 0;
};

/// Minimal-disturbance scale. Each probe is drawn from the task's sampler
/// conditioned on |distance to interface| <= delta / 2, added to the training
/// set, and the dual is refit from a warm start. r_c is the distance to the probe
/// at which the cumulative |d alpha| of the original points reaches c_threshold
/// of its total.
RcResult rc_minimal_disturbance(const SvcProblem& problem, const SvcSolution& solution, const TaskSpec& task,
                                const RcParams& params, std::uint64_t seed);

/// r at which the |d alpha| mass sorted by distance first reaches `c` of its total.
double cumulative_threshold_distance(const std::vector<double>& distance, const std::vector<double>& weight, double c);

struct StructureFactor {
    std::vector<double> k;
    std::vector<double> q2;  // mean |sum alpha y exp(-i k.x_perp)|^2
    double q2_inf = 0.0;     // alpha_bar^2 p delta / gamma
};

/// Charge structure factor over random transverse directions (coordinates 2..d).
StructureFactor charge_structure_factor(const SvcSolution& solution, const SvcProblem& problem, const TaskSpec& task,
                                        const std::vector<double>& k_magnitudes, int n_wavevectors,
                                        std::uint64_t seed);

}  // namespace klc
