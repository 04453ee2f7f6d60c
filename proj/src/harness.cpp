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

#include "klc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "klc/observables.hpp"
#include "klc/regression.hpp"

#ifndef KLC_GIT_DESCRIBE
#define KLC_GIT_DESCRIBE "unknown"
#endif

namespace klc {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) throw std::invalid_argument("config: unknown key '" + where + "." + key + "'");
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<T>();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
    }
    return s;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::optional<double> parse_opt(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
}

json config_identity(const ExperimentConfig& config) {
    json j = to_json(config);
    j.erase("output_path");
    return j;
}

std::optional<double> xi_or_nu(const ExperimentConfig& c) {
    if (c.pipeline == Pipeline::Regression) {
        const KernelSpec& t = *c.task.geometry.teacher;
        if (t.family == KernelFamily::Matern) return t.nu;
        if (t.family == KernelFamily::Gaussian) return std::nullopt;
        return regression_cusp_exponent(t);
    }
    if (c.kernel.family == KernelFamily::Matern) return c.kernel.nu;
    return cusp_exponent(c.kernel);
}

std::optional<double> d_parallel_column(const ExperimentConfig& c) {
    const auto kind = c.task.geometry.kind;
    if (kind == GeometryKind::RegressionField || kind == GeometryKind::Cylinder) return c.task.geometry.d_parallel;
    return std::nullopt;
}

std::optional<double> n_interfaces_column(const ExperimentConfig& c) {
    switch (c.task.geometry.kind) {
        case GeometryKind::StripeSingle: return 1.0;
        case GeometryKind::StripeDouble: return 2.0;
        case GeometryKind::StripeMultiple: return c.task.geometry.n_interfaces;
        default: return std::nullopt;
    }
}

std::optional<double> w_column(const ExperimentConfig& c) {
    switch (c.task.geometry.kind) {
        case GeometryKind::StripeDouble: return double_interface_xmax(c.task.geometry.x_min) - c.task.geometry.x_min;
        case GeometryKind::StripeMultiple: return c.task.geometry.w;
        default: return std::nullopt;
    }
}

std::string csv_line(const ExperimentConfig& c, const ResultRow& r) {
    std::ostringstream os;
    const bool ok = r.ok() || r.status == "cap_active";
    os << to_string(c.pipeline) << ',' << c.task.d << ',' << fmt(d_parallel_column(c)) << ',' << fmt(xi_or_nu(c)) << ','
       << fmt(r.sigma) << ',' << fmt(r.lambda) << ',' << fmt(n_interfaces_column(c)) << ',' << fmt(w_column(c)) << ','
       << r.key.p << ',' << r.key.replica << ',' << (ok ? fmt(r.epsilon) : std::string()) << ',' << fmt(r.delta)
       << ',' << fmt(r.alpha_bar) << ',' << fmt(r.r_c) << ','
       << (r.n_sv ? std::to_string(*r.n_sv) : std::string()) << ',' << r.solver_passes << ',' << fmt(r.wall_ms)
       << ',' << sanitize(r.status) << '\n';
    return os.str();
}

std::vector<CellKey> canonical_cells(const ExperimentConfig& c) {
    std::vector<CellKey> cells;
    for (std::size_t s = 0; s < c.n_sweep(); ++s) {
        for (Index p : c.p_grid) {
            for (int r = 0; r < c.replicas; ++r) cells.push_back({s, p, r});
        }
    }
    return cells;
}

std::optional<std::size_t> sweep_index_of(const ExperimentConfig& c, double lambda, double sigma) {
    if (c.sweep_variable == SweepVariable::P) return 0;
    const double v = c.sweep_variable == SweepVariable::Lambda ? lambda : sigma;
    for (std::size_t s = 0; s < c.sweep_values.size(); ++s) {
        if (c.sweep_values[s] == v) return s;
    }
    return std::nullopt;
}

void ensure_parent(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

ResultRow svc_cell(const ExperimentConfig& c, const TaskSpec& spec, const KernelSpec& kernel, ResultRow row) {
    const CellKey& key = row.key;
    Rng train_rng(cell_seed(c.seed, key.p, key.replica, Stream::Train));
    Rng test_rng(cell_seed(c.seed, key.p, key.replica, Stream::Test));
    Task train = make_classification_task(spec, key.p, train_rng);
    Task test = make_classification_task(spec, c.p_test, test_rng);

    SvcProblem problem{kernel, std::move(train.x), std::move(*train.y), c.solver, 0.0};
    const SvcSolution sol = svc_fit(problem);
    row.epsilon = test_error(sol, problem, test.x, *test.y, c.zero_bias);
    row.delta = band_thickness(sol, problem, spec);
    row.alpha_bar = mean_dual(sol);
    row.n_sv = static_cast<Index>(sol.sv_indices.size());
    row.solver_passes = sol.diagnostics.passes;

    const KktReport kkt = verify_kkt(sol, problem);
    auto& ex = row.extras;
    ex.emplace_back("iterations", static_cast<double>(sol.diagnostics.iterations));
    ex.emplace_back("final_kkt_violation", sol.diagnostics.final_kkt_violation);
    ex.emplace_back("cap_active", sol.diagnostics.cap_active ? 1.0 : 0.0);
    ex.emplace_back("sv_threshold", sol.diagnostics.sv_threshold);
    ex.emplace_back("kernel_rows_computed", static_cast<double>(sol.diagnostics.kernel_rows_computed));
    ex.emplace_back("bias", sol.bias);
    ex.emplace_back("objective", sol.objective);
    ex.emplace_back("sum_alpha", sol.alpha.sum());
    ex.emplace_back("sv_fraction", static_cast<double>(sol.sv_indices.size()) / static_cast<double>(key.p));
    ex.emplace_back("kkt_max_primal_violation", kkt.max_primal_violation);
    ex.emplace_back("kkt_charge_residual", kkt.charge_residual);
    ex.emplace_back("kkt_complementarity_residual", kkt.complementarity_residual);

    if (c.rc.enabled && key.p <= c.rc.p_max) {
        RcParams rp;
        rp.c_threshold = c.rc.c_threshold;
        rp.n_probes = c.rc.n_probes;
        rp.refit_kkt_tol = c.rc.refit_kkt_tol;
        rp.max_retries = c.rc.max_retries;
        const RcResult rc = rc_minimal_disturbance(problem, sol, spec, rp,
                                                   cell_seed(c.seed, key.p, key.replica, Stream::Probes));
        row.r_c = rc.r_c;
        for (std::size_t k = 0; k < rc.per_probe.size(); ++k) {
            ex.emplace_back("rc_probe_" + std::to_string(k), rc.per_probe[k]);
        }
        ex.emplace_back("rc_redraws", rc.redraws);
    }
    if (c.structure_factor.enabled) {
        const StructureFactor sf =
            charge_structure_factor(sol, problem, spec, c.structure_factor.k, c.structure_factor.n_wavevectors,
                                    cell_seed(c.seed, key.p, key.replica, Stream::StructureFactor));
        for (std::size_t k = 0; k < sf.k.size(); ++k) row.structure_factor.push_back({sf.k[k], sf.q2[k]});
        ex.emplace_back("q2_inf", sf.q2_inf);
    }
    if (sol.diagnostics.cap_active) row.status = "cap_active";
    return row;
}

ResultRow regression_cell(const ExperimentConfig& c, const TaskSpec& spec, const KernelSpec& kernel, ResultRow row) {
    const CellKey& key = row.key;
    Rng train_rng(cell_seed(c.seed, key.p, key.replica, Stream::Train));
    Rng test_rng(cell_seed(c.seed, key.p, key.replica, Stream::Test));
    const auto axes = compression_axes(spec);
    const PointMatrix x_train = compress(sample_points(spec, key.p, train_rng), spec.lambda, axes);
    const PointMatrix x_test = compress(sample_points(spec, c.p_test, test_rng), spec.lambda, axes);
    PointMatrix stacked(key.p + c.p_test, spec.d);
    stacked << x_train, x_test;

    KernelSpec teacher = *spec.geometry.teacher;
    teacher.d_parallel = spec.geometry.d_parallel;
    const Vector z = sample_teacher_field(teacher, stacked, cell_seed(c.seed, key.p, key.replica, Stream::Teacher));
    const KrrModel model = krr_fit(kernel, x_train, z.head(key.p));
    row.epsilon = mse_test(model, x_test, z.tail(c.p_test));
    row.extras.emplace_back("jitter_used", model.jitter_used);
    row.extras.emplace_back("teacher_test_variance", z.tail(c.p_test).squaredNorm() / static_cast<double>(c.p_test));
    return row;
}

}  // namespace

std::string to_string(Pipeline pipeline) { return pipeline == Pipeline::Svc ? "svc" : "regression"; }

std::string to_string(SweepVariable variable) {
    switch (variable) {
        case SweepVariable::P: return "p";
        case SweepVariable::Lambda: return "lambda";
        case SweepVariable::Sigma: return "sigma";
    }
    return "unknown";
}

std::string to_string(Observable observable) {
    switch (observable) {
        case Observable::Epsilon: return "epsilon";
        case Observable::Delta: return "delta";
        case Observable::AlphaBar: return "alpha_bar";
        case Observable::Rc: return "r_c";
    }
    return "unknown";
}

std::size_t ExperimentConfig::n_sweep() const {
    return sweep_variable == SweepVariable::P ? 1 : sweep_values.size();
}

double ExperimentConfig::sweep_value(std::size_t index) const {
    switch (sweep_variable) {
        case SweepVariable::P: return 0.0;
        case SweepVariable::Lambda:
        case SweepVariable::Sigma: return sweep_values.at(index);
    }
    return 0.0;
}

std::pair<TaskSpec, KernelSpec> ExperimentConfig::cell_setup(std::size_t sweep_index) const {
    TaskSpec t = task;
    KernelSpec k = kernel;
    t.seed = seed;
    if (sweep_variable == SweepVariable::Lambda) t.lambda = sweep_values.at(sweep_index);
    if (sweep_variable == SweepVariable::Sigma) k = k.with_sigma(sweep_values.at(sweep_index));
    return {t, k};
}

void ExperimentConfig::validate() const {
    if (p_grid.empty()) throw std::invalid_argument("config: p_grid is empty");
    for (std::size_t i = 0; i < p_grid.size(); ++i) {
        if (p_grid[i] < 1) throw std::invalid_argument("config: p_grid entries must be >= 1");
        if (i > 0 && p_grid[i] <= p_grid[i - 1]) throw std::invalid_argument("config: p_grid must be strictly increasing");
    }
    if (replicas < 1) throw std::invalid_argument("config: replicas must be >= 1");
    if (p_test < 1) throw std::invalid_argument("config: p_test must be >= 1");
    if (sweep_variable == SweepVariable::P) {
        if (!sweep_values.empty()) throw std::invalid_argument("config: a p sweep takes no sweep values");
    } else {
        if (sweep_values.empty()) throw std::invalid_argument("config: sweep values are missing");
        for (double v : sweep_values) {
            if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("config: sweep values must be finite and > 0");
        }
    }
    kernel.validate();
    solver.validate();
    if (pipeline == Pipeline::Regression) {
        if (task.geometry.kind != GeometryKind::RegressionField) {
            throw std::invalid_argument("config: regression pipeline needs the regression_field geometry");
        }
        if (!kernel.strictly_positive_definite()) {
            throw std::invalid_argument("config: truncated power kernel is only valid with the svc pipeline");
        }
        if (zero_bias) throw std::invalid_argument("config: zero_bias is only valid with the svc pipeline");
        if (rc.enabled || structure_factor.enabled) {
            throw std::invalid_argument("config: r_c and structure factor need the svc pipeline");
        }
    } else {
        if (task.geometry.kind == GeometryKind::RegressionField) {
            throw std::invalid_argument("config: svc pipeline needs a labeled geometry");
        }
    }
    if (rc.enabled && (rc.n_probes < 1 || !(rc.c_threshold > 0.0 && rc.c_threshold <= 1.0))) {
        throw std::invalid_argument("config: invalid r_c settings");
    }
    if (structure_factor.enabled) {
        if (!task.is_stripe()) throw std::invalid_argument("config: structure factor needs a stripe geometry");
        if (structure_factor.k.empty() || structure_factor.n_wavevectors < 1) {
            throw std::invalid_argument("config: structure factor needs k values and n_wavevectors >= 1");
        }
    }
    for (std::size_t s = 0; s < n_sweep(); ++s) {
        const auto [t, k] = cell_setup(s);
        t.validate();
        k.validate_for_dimension(t.d);
    }
}

json to_json(const KernelSpec& k) {
    json j{{"family", to_string(k.family)}, {"sigma", k.sigma}};
    if (k.family == KernelFamily::Matern) j["nu"] = k.nu;
    if (k.family == KernelFamily::TruncatedPower) j["xi"] = k.xi;
    j["d_parallel"] = k.d_parallel ? json(*k.d_parallel) : json(nullptr);
    return j;
}

KernelSpec kernel_from_json(const json& j) {
    check_keys(j, {"family", "sigma", "nu", "xi", "d_parallel"}, "kernel");
    KernelSpec k;
    k.family = kernel_family_from_string(j.at("family").get<std::string>());
    k.sigma = j.at("sigma").get<double>();
    k.nu = get_or(j, "nu", 0.5);
    k.xi = get_or(j, "xi", 1.0);
    if (j.contains("d_parallel") && !j["d_parallel"].is_null()) k.d_parallel = j["d_parallel"].get<int>();
    k.validate();
    return k;
}

json to_json(const ExperimentConfig& c) {
    const Geometry& g = c.task.geometry;
    json geometry{{"kind", to_string(g.kind)},   {"x_min", g.x_min},   {"n_interfaces", g.n_interfaces},
                  {"w", g.w},                    {"center", g.center}, {"radius", g.radius ? json(*g.radius) : json(nullptr)},
                  {"d_parallel", g.d_parallel}};
    json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["name"] = c.name;
    j["pipeline"] = to_string(c.pipeline);
    j["task"] = {{"d", c.task.d},
                 {"lambda", c.task.lambda},
                 {"geometry", geometry},
                 {"sampler", {{"kind", to_string(c.task.sampler.kind)}, {"gamma", c.task.sampler.gamma}}}};
    j["kernel"] = to_json(c.kernel);
    j["teacher"] = g.teacher ? to_json(*g.teacher) : json(nullptr);
    j["p_grid"] = c.p_grid;
    j["replicas"] = c.replicas;
    j["p_test"] = c.p_test;
    j["sweep"] = {{"variable", to_string(c.sweep_variable)}, {"values", c.sweep_values}};
    j["rc"] = {{"enabled", c.rc.enabled},         {"c_threshold", c.rc.c_threshold}, {"n_probes", c.rc.n_probes},
               {"p_max", c.rc.p_max},             {"refit_kkt_tol", c.rc.refit_kkt_tol},
               {"max_retries", c.rc.max_retries}};
    j["structure_factor"] = {{"enabled", c.structure_factor.enabled},
                             {"n_wavevectors", c.structure_factor.n_wavevectors},
                             {"k", c.structure_factor.k}};
    j["zero_bias"] = c.zero_bias;
    j["solver"] = {{"c_cap", c.solver.c_cap},           {"kkt_tol", c.solver.kkt_tol},
                   {"max_passes", c.solver.max_passes}, {"shrink", c.solver.shrink},
                   {"cache_mb", static_cast<double>(c.solver.cache_bytes) / (1024.0 * 1024.0)}};
    j["seed"] = c.seed;
    j["output_path"] = c.output_path;
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    check_keys(j, {"schema_version", "name", "pipeline", "task", "kernel", "teacher", "p_grid", "replicas", "p_test",
                   "sweep", "rc", "structure_factor", "zero_bias", "solver", "seed", "output_path"},
               "config");
    const int version = get_or(j, "schema_version", kConfigSchemaVersion);
    if (version != kConfigSchemaVersion) {
        throw std::invalid_argument("config: unsupported schema_version " + std::to_string(version));
    }
    ExperimentConfig c;
    c.name = get_or<std::string>(j, "name", c.name);
    const std::string pipeline = get_or<std::string>(j, "pipeline", "svc");
    if (pipeline == "svc") c.pipeline = Pipeline::Svc;
    else if (pipeline == "regression") c.pipeline = Pipeline::Regression;
    else throw std::invalid_argument("config: unknown pipeline '" + pipeline + "'");

    const json& task = j.at("task");
    check_keys(task, {"d", "lambda", "geometry", "sampler"}, "task");
    c.task.d = get_or(task, "d", 2);
    c.task.lambda = get_or(task, "lambda", 1.0);
    if (task.contains("geometry")) {
        const json& g = task["geometry"];
        check_keys(g, {"kind", "x_min", "n_interfaces", "w", "center", "radius", "d_parallel"}, "task.geometry");
        c.task.geometry.kind = geometry_kind_from_string(get_or<std::string>(g, "kind", "stripe_single"));
        c.task.geometry.x_min = get_or(g, "x_min", c.task.geometry.x_min);
        c.task.geometry.n_interfaces = get_or(g, "n_interfaces", c.task.geometry.n_interfaces);
        c.task.geometry.w = get_or(g, "w", c.task.geometry.w);
        c.task.geometry.center = get_or(g, "center", c.task.geometry.center);
        if (g.contains("radius") && !g["radius"].is_null()) c.task.geometry.radius = g["radius"].get<double>();
        c.task.geometry.d_parallel = get_or(g, "d_parallel", c.task.geometry.d_parallel);
    }
    if (task.contains("sampler")) {
        const json& s = task["sampler"];
        check_keys(s, {"kind", "gamma"}, "task.sampler");
        c.task.sampler.kind = sampler_kind_from_string(get_or<std::string>(s, "kind", "gaussian"));
        c.task.sampler.gamma = get_or(s, "gamma", 1.0);
    }
    c.kernel = kernel_from_json(j.at("kernel"));
    if (j.contains("teacher") && !j["teacher"].is_null()) c.task.geometry.teacher = kernel_from_json(j["teacher"]);
    c.p_grid = j.at("p_grid").get<std::vector<Index>>();
    c.replicas = get_or(j, "replicas", c.replicas);
    c.p_test = get_or(j, "p_test", c.p_test);
    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        check_keys(s, {"variable", "values"}, "sweep");
        const std::string v = get_or<std::string>(s, "variable", "p");
        if (v == "p") c.sweep_variable = SweepVariable::P;
        else if (v == "lambda") c.sweep_variable = SweepVariable::Lambda;
        else if (v == "sigma") c.sweep_variable = SweepVariable::Sigma;
        else throw std::invalid_argument("config: unknown sweep variable '" + v + "'");
        c.sweep_values = get_or(s, "values", std::vector<double>{});
    }
    if (j.contains("rc")) {
        const json& r = j["rc"];
        check_keys(r, {"enabled", "c_threshold", "n_probes", "p_max", "refit_kkt_tol", "max_retries"}, "rc");
        c.rc.enabled = get_or(r, "enabled", c.rc.enabled);
        c.rc.c_threshold = get_or(r, "c_threshold", c.rc.c_threshold);
        c.rc.n_probes = get_or(r, "n_probes", c.rc.n_probes);
        c.rc.p_max = get_or(r, "p_max", c.rc.p_max);
        c.rc.refit_kkt_tol = get_or(r, "refit_kkt_tol", c.rc.refit_kkt_tol);
        c.rc.max_retries = get_or(r, "max_retries", c.rc.max_retries);
    }
    if (j.contains("structure_factor")) {
        const json& s = j["structure_factor"];
        check_keys(s, {"enabled", "n_wavevectors", "k"}, "structure_factor");
        c.structure_factor.enabled = get_or(s, "enabled", false);
        c.structure_factor.n_wavevectors = get_or(s, "n_wavevectors", c.structure_factor.n_wavevectors);
        c.structure_factor.k = get_or(s, "k", std::vector<double>{});
    }
    c.zero_bias = get_or(j, "zero_bias", false);
    if (j.contains("solver")) {
        const json& s = j["solver"];
        check_keys(s, {"c_cap", "kkt_tol", "max_passes", "shrink", "cache_mb"}, "solver");
        c.solver.c_cap = get_or(s, "c_cap", c.solver.c_cap);
        c.solver.kkt_tol = get_or(s, "kkt_tol", c.solver.kkt_tol);
        c.solver.max_passes = get_or(s, "max_passes", c.solver.max_passes);
        c.solver.shrink = get_or(s, "shrink", c.solver.shrink);
        if (s.contains("cache_mb")) {
            c.solver.cache_bytes = static_cast<std::size_t>(s["cache_mb"].get<double>() * 1024.0 * 1024.0);
        }
    }
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.output_path = get_or<std::string>(j, "output_path", c.output_path);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    return config_from_json(json::parse(in));
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("override '" + assignment + "' is not key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw std::invalid_argument("override '" + assignment + "' has an empty path segment");
        if (!node->is_object()) throw std::invalid_argument("override '" + assignment + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

const std::vector<std::string>& result_columns() {
    static const std::vector<std::string> cols{"pipeline", "d",       "d_parallel", "xi_or_nu",  "sigma",   "lambda",
                                               "n_interfaces", "w",   "p",          "replica",   "epsilon", "delta",
                                               "alpha_bar", "r_c",    "n_sv",       "solver_passes", "wall_ms",
                                               "status"};
    return cols;
}

std::uint64_t cell_seed(std::uint64_t base, Index p, int replica, Stream stream) {
    return mix_seed(base, {static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(replica),
                           static_cast<std::uint64_t>(stream)});
}

ResultRow run_cell(const ExperimentConfig& config, const CellKey& key) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [spec, kernel] = config.cell_setup(key.sweep_index);
    ResultRow row;
    row.key = key;
    row.sigma = kernel.sigma;
    row.lambda = spec.lambda;
    try {
        row = config.pipeline == Pipeline::Svc ? svc_cell(config, spec, kernel, row)
                                               : regression_cell(config, spec, kernel, row);
    } catch (const std::exception& e) {
        row.status = "failed: " + sanitize(e.what());
        row.delta.reset();
        row.alpha_bar.reset();
        row.r_c.reset();
        row.n_sv.reset();
        row.extras.clear();
        row.structure_factor.clear();
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

std::string extras_path(const std::string& csv_path) { return csv_path + ".extras.csv"; }
std::string structure_factor_path(const std::string& csv_path) { return csv_path + ".sf.csv"; }
std::string sidecar_path(const std::string& csv_path) { return csv_path + ".json"; }

std::vector<ResultRow> read_results(const std::string& csv_path) {
    std::vector<ResultRow> rows;
    std::ifstream in(csv_path);
    if (!in) return rows;
    std::string line;
    if (!std::getline(in, line)) return rows;
    const auto header = split_csv(line);
    if (header != result_columns()) throw std::runtime_error(csv_path + ": unexpected header");
    std::map<std::tuple<std::string, std::string, Index, int>, std::size_t> index;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != header.size()) continue;  // torn last line
        ResultRow r;
        r.sigma = std::stod(f[4]);
        r.lambda = std::stod(f[5]);
        r.key.p = std::stol(f[8]);
        r.key.replica = std::stoi(f[9]);
        r.epsilon = parse_opt(f[10]).value_or(0.0);
        r.delta = parse_opt(f[11]);
        r.alpha_bar = parse_opt(f[12]);
        r.r_c = parse_opt(f[13]);
        if (!f[14].empty()) r.n_sv = std::stol(f[14]);
        r.solver_passes = std::stoll(f[15]);
        r.wall_ms = std::stod(f[16]);
        r.status = f[17];
        index[{f[4], f[5], r.key.p, r.key.replica}] = rows.size();
        rows.push_back(std::move(r));
    }
    auto lookup = [&](const std::string& lambda, const std::string& sigma, Index p, int rep) -> ResultRow* {
        const auto it = index.find({sigma, lambda, p, rep});
        return it == index.end() ? nullptr : &rows[it->second];
    };
    // extras and structure factor: lambda,sigma,p,replica,...
    if (std::ifstream ex(extras_path(csv_path)); ex && std::getline(ex, line)) {
        while (std::getline(ex, line)) {
            const auto f = split_csv(line);
            if (f.size() != 6) continue;
            if (ResultRow* r = lookup(f[0], f[1], std::stol(f[2]), std::stoi(f[3]))) {
                r->extras.emplace_back(f[4], std::stod(f[5]));
            }
        }
    }
    if (std::ifstream sf(structure_factor_path(csv_path)); sf && std::getline(sf, line)) {
        while (std::getline(sf, line)) {
            const auto f = split_csv(line);
            if (f.size() != 6) continue;
            if (ResultRow* r = lookup(f[0], f[1], std::stol(f[2]), std::stoi(f[3]))) {
                r->structure_factor.push_back({std::stod(f[4]), std::stod(f[5])});
            }
        }
    }
    return rows;
}

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
    config.validate();
    const std::vector<CellKey> cells = canonical_cells(config);
    std::vector<std::optional<ResultRow>> done(cells.size());
    RunResult result;

    const std::string& out = config.output_path;
    ensure_parent(out);
    const json identity = config_identity(config);

    if (options.resume && std::filesystem::exists(out) && std::filesystem::exists(sidecar_path(out))) {
        json side;
        try {
            std::ifstream s(sidecar_path(out));
            side = json::parse(s);
        } catch (const std::exception&) {
            side = json();
        }
        if (side.is_object() && side.contains("config") && side["config"] == identity) {
            std::map<CellKey, std::size_t> pos;
            for (std::size_t i = 0; i < cells.size(); ++i) pos[cells[i]] = i;
            for (ResultRow& r : read_results(out)) {
                if (!r.ok()) continue;
                const auto s = sweep_index_of(config, r.lambda, r.sigma);
                if (!s) continue;
                r.key.sweep_index = *s;
                const auto it = pos.find(r.key);
                if (it == pos.end() || done[it->second]) continue;
                done[it->second] = std::move(r);
                ++result.reused;
            }
        }
    }

    std::ofstream csv(out, std::ios::trunc);
    std::ofstream extras(extras_path(out), std::ios::trunc);
    std::ofstream sf(structure_factor_path(out), std::ios::trunc);
    if (!csv || !extras || !sf) throw std::runtime_error("cannot open output files at " + out);
    for (std::size_t k = 0; k < result_columns().size(); ++k) csv << (k ? "," : "") << result_columns()[k];
    csv << '\n';
    extras << "lambda,sigma,p,replica,key,value\n";
    sf << "lambda,sigma,p,replica,k,q2\n";

    auto write_sidecar = [&](bool complete) {
        json side{{"schema_version", kConfigSchemaVersion},
                  {"config", identity},
                  {"output_path", out},
                  {"git_describe", git_describe()},
                  {"columns", result_columns()},
                  {"complete", complete}};
        if (complete) {
            side["n_rows"] = cells.size();
            side["n_failed"] = result.failed;
            side["n_reused"] = result.reused;
        }
        std::ofstream s(sidecar_path(out), std::ios::trunc);
        s << side.dump(2) << '\n';
    };
    write_sidecar(false);

    std::mutex mu;
    std::size_t written = 0;
    auto flush_prefix = [&] {
        while (written < done.size() && done[written]) {
            const ResultRow& r = *done[written];
            csv << csv_line(config, r);
            const std::string prefix = fmt(r.lambda) + "," + fmt(r.sigma) + "," + std::to_string(r.key.p) + "," +
                                       std::to_string(r.key.replica) + ",";
            for (const auto& [k, v] : r.extras) extras << prefix << k << ',' << fmt(v) << '\n';
            for (const auto& s : r.structure_factor) sf << prefix << fmt(s.k) << ',' << fmt(s.q2) << '\n';
            ++written;
        }
        csv.flush();
        extras.flush();
        sf.flush();
    };
    flush_prefix();

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!done[i]) pending.push_back(i);
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t n = next.fetch_add(1);
            if (n >= pending.size()) return;
            const std::size_t i = pending[n];
            ResultRow row = run_cell(config, cells[i]);
            std::lock_guard lock(mu);
            if (options.verbose) {
                std::cerr << config.name << " [" << config.sweep_value(row.key.sweep_index) << "] p=" << row.key.p
                          << " rep=" << row.key.replica << " " << row.status << " (" << row.wall_ms << " ms)\n";
            }
            ++result.computed;
            done[i] = std::move(row);
            flush_prefix();
        }
    };
    int jobs = options.jobs > 0 ? options.jobs : static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(pending.size(), 1))));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    }
    flush_prefix();

    for (auto& r : done) {
        if (!r->ok()) ++result.failed;
        result.rows.push_back(std::move(*r));
    }
    write_sidecar(true);
    return result;
}

std::vector<Aggregate> aggregate(const std::vector<ResultRow>& rows, const ExperimentConfig& config,
                                 Observable observable) {
    std::map<std::pair<std::size_t, Index>, std::vector<double>> groups;
    for (const ResultRow& r : rows) {
        if (!r.ok()) continue;
        std::optional<double> v;
        switch (observable) {
            case Observable::Epsilon: v = r.epsilon; break;
            case Observable::Delta: v = r.delta; break;
            case Observable::AlphaBar: v = r.alpha_bar; break;
            case Observable::Rc: v = r.r_c; break;
        }
        if (v) groups[{r.key.sweep_index, r.key.p}].push_back(*v);
    }
    std::vector<Aggregate> out;
    for (const auto& [key, values] : groups) {
        Aggregate a;
        a.sweep_index = key.first;
        a.sweep_value = config.sweep_value(key.first);
        a.p = key.second;
        a.n = static_cast<int>(values.size());
        for (double v : values) a.mean += v;
        a.mean /= a.n;
        if (a.n > 1) {
            double ss = 0.0;
            for (double v : values) ss += (v - a.mean) * (v - a.mean);
            a.stderr_mean = std::sqrt(ss / (a.n - 1) / a.n);
        }
        out.push_back(a);
    }
    return out;
}

std::string git_describe() { return KLC_GIT_DESCRIBE; }

}  // namespace klc
