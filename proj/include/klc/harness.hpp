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
#include <utility>
#include <vector>

#include <json.hpp>

#include "klc/common.hpp"
#include "klc/datagen.hpp"
#include "klc/kernels.hpp"
#include "klc/svc.hpp"

namespace klc {

inline constexpr int kConfigSchemaVersion = 1;

enum class Pipeline { Regression, Svc };
enum class SweepVariable { P, Lambda, Sigma };

std::string to_string(Pipeline pipeline);
std::string to_string(SweepVariable variable);

/// Per-cell RNG stream ids.
enum class Stream : std::uint64_t { Train = 0, Test = 1, Teacher = 2, Probes = 3, StructureFactor = 4 };

struct RcConfig {
    bool enabled = false;
    double c_threshold = 0.9;
    int n_probes = 5;
    Index p_max = 2048;  // probes only for p <= p_max
    double refit_kkt_tol = 1e-6;
    int max_retries = 50;
};

struct StructureFactorConfig {
    bool enabled = false;
    int n_wavevectors = 2000;
    std::vector<double> k;
};

struct ExperimentConfig {
    std::string name = "experiment";
    Pipeline pipeline = Pipeline::Svc;
    TaskSpec task;
    KernelSpec kernel;  // student
    std::vector<Index> p_grid;
    int replicas = 1;
    Index p_test = 10000;
    SweepVariable sweep_variable = SweepVariable::P;
    std::vector<double> sweep_values;  // lambda or sigma grid
    RcConfig rc;
    StructureFactorConfig structure_factor;
    bool zero_bias = false;
    SolverParams solver;
    std::uint64_t seed = 1;
    std::string output_path = "results.csv";

    void validate() const;
    /// Number of sweep points (1 for a plain p sweep).
    [[nodiscard]] std::size_t n_sweep() const;
    [[nodiscard]] double sweep_value(std::size_t index) const;
    /// Task and kernel with the sweep value applied.
    [[nodiscard]] std::pair<TaskSpec, KernelSpec> cell_setup(std::size_t sweep_index) const;
};

nlohmann::json to_json(const KernelSpec& kernel);
KernelSpec kernel_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys take their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Applies one `a.b.c=value` assignment. The value is parsed as JSON when it
/// parses, otherwise taken as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

struct CellKey {
    std::size_t sweep_index = 0;
    Index p = 0;
    int replica = 0;

    auto operator<=>(const CellKey&) const = default;
};

struct StructureFactorRow {
    double k = 0.0;
    double q2 = 0.0;
};

struct ResultRow {
    CellKey key;
    double sigma = 0.0;
    double lambda = 1.0;
    double epsilon = 0.0;
    std::optional<double> delta;
    std::optional<double> alpha_bar;
    std::optional<double> r_c;
    std::optional<Index> n_sv;
    long long solver_passes = 0;
    double wall_ms = 0.0;
    std::string status = "ok";
    std::vector<std::pair<std::string, double>> extras;
    std::vector<StructureFactorRow> structure_factor;

    [[nodiscard]] bool ok() const { return status == "ok"; }
};

/// Fixed column order of the result CSV.
const std::vector<std::string>& result_columns();

/// Seed of a per-cell stream, stable under changes of the replica count.
std::uint64_t cell_seed(std::uint64_t base, Index p, int replica, Stream stream);

/// Computes one grid cell. Module errors are caught and reported in `status`.
ResultRow run_cell(const ExperimentConfig& config, const CellKey& key);

struct RunOptions {
    int jobs = 0;  // 0 = hardware concurrency
    bool resume = true;
    bool verbose = false;
};

struct RunResult {
    std::vector<ResultRow> rows;  // canonical order
    int reused = 0;
    int computed = 0;
    int failed = 0;
};

/// Runs every cell, streaming rows to output_path (plus .extras.csv, .sf.csv and
/// .json sidecar) in canonical order. With resume, ok rows of a previous run with
/// the same config are reused.
RunResult run(const ExperimentConfig& config, const RunOptions& options = {});

/// Paths of the files written next to the main CSV.
std::string extras_path(const std::string& csv_path);
std::string structure_factor_path(const std::string& csv_path);
std::string sidecar_path(const std::string& csv_path);

/// Reads a result CSV with its extras and structure-factor files when present.
std::vector<ResultRow> read_results(const std::string& csv_path);

/// Mean and standard error over ok replicas, per (sweep_index, p).
struct Aggregate {
    std::size_t sweep_index = 0;
    double sweep_value = 0.0;
    Index p = 0;
    int n = 0;
    double mean = 0.0;
    double stderr_mean = 0.0;
};

enum class Observable { Epsilon, Delta, AlphaBar, Rc };
std::string to_string(Observable observable);

std::vector<Aggregate> aggregate(const std::vector<ResultRow>& rows, const ExperimentConfig& config,
                                 Observable observable);

std::string git_describe();

}  // namespace klc
