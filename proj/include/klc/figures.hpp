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

#include <string>
#include <vector>

#include <json.hpp>

#include "klc/harness.hpp"

namespace klc {

enum class Scale { Desk, Paper };

Scale scale_from_string(const std::string& name);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct FigureReport {
    std::string figure_id;
    std::vector<CheckResult> checks;
    nlohmann::json json;

    [[nodiscard]] bool pass() const;
};

/// regression_fig2, stripe_single, stripe_double, gap_collapse, sphere,
/// compression, small_sigma, structure_factor, matern_svc.
const std::vector<std::string>& figure_ids();

/// The experiment configs behind a figure, with output paths under out_dir/figure_id.
std::vector<ExperimentConfig> figure_configs(const std::string& figure_id, Scale scale, const std::string& out_dir);

/// Evaluates the figure's checks on finished runs (one result set per config).
FigureReport analyze_figure(const std::string& figure_id, const std::vector<ExperimentConfig>& configs,
                            const std::vector<std::vector<ResultRow>>& results);

/// Runs (or resumes) every config of the figure, analyzes, and writes
/// report.json and report.txt next to the CSVs.
FigureReport reproduce_figure(const std::string& figure_id, Scale scale, const std::string& out_dir,
                              const RunOptions& options = {});

std::string format_report(const FigureReport& report);

/// 2^k grid from lo to hi inclusive.
std::vector<Index> pow2_grid(Index lo, Index hi);

/// n_per_decade log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int n_per_decade);

}  // namespace klc
