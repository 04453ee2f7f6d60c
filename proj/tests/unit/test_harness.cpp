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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "klc/harness.hpp"

using namespace klc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "klc_harness_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ExperimentConfig small_svc(const fs::path& dir) {
    ExperimentConfig c;
    c.name = "small";
    c.task.d = 2;
    c.kernel = KernelSpec::laplace(10.0);
    c.p_grid = {16, 32, 64};
    c.replicas = 2;
    c.p_test = 500;
    c.seed = 11;
    c.output_path = (dir / "small.csv").string();
    return c;
}

ExperimentConfig small_regression(const fs::path& dir) {
    ExperimentConfig c;
    c.name = "reg";
    c.pipeline = Pipeline::Regression;
    c.task.d = 3;
    c.task.sampler.kind = SamplerKind::UniformSphere;
    c.task.geometry.kind = GeometryKind::RegressionField;
    c.task.geometry.teacher = KernelSpec::matern(1.0, 2.0);
    c.kernel = KernelSpec::laplace(2.0);
    c.p_grid = {16, 32};
    c.p_test = 100;
    c.output_path = (dir / "reg.csv").string();
    return c;
}

// CSV text with the wall_ms column blanked.
std::string without_wall_time(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream out;
    std::string line;
    const auto& cols = result_columns();
    const auto wall = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), "wall_ms") - cols.begin());
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::size_t i = 0;
        while (std::getline(ss, cell, ',')) {
            out << (i == wall ? "" : cell) << ',';
            ++i;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace

TEST_CASE("config json round trip") {
    const fs::path dir = scratch("roundtrip");
    for (ExperimentConfig c : {small_svc(dir), small_regression(dir)}) {
        c.rc.enabled = c.pipeline == Pipeline::Svc;
        const auto j = to_json(c);
        CHECK(to_json(config_from_json(j)) == j);
    }
    auto j = to_json(small_svc(dir));
    j["bogus"] = 1;
    CHECK_THROWS_AS(config_from_json(j), std::invalid_argument);
    j = to_json(small_svc(dir));
    j["task"]["nope"] = 1;
    CHECK_THROWS_AS(config_from_json(j), std::invalid_argument);
    j = to_json(small_svc(dir));
    j["schema_version"] = 99;
    CHECK_THROWS(config_from_json(j));
}

TEST_CASE("overrides") {
    const fs::path dir = scratch("override");
    auto j = to_json(small_svc(dir));
    apply_override(j, "task.d=5");
    apply_override(j, "kernel.sigma=3.5");
    apply_override(j, "name=other");
    apply_override(j, "p_grid=[8,16]");
    const ExperimentConfig c = config_from_json(j);
    CHECK(c.task.d == 5);
    CHECK(c.kernel.sigma == 3.5);
    CHECK(c.name == "other");
    CHECK(c.p_grid == std::vector<Index>{8, 16});
    CHECK_THROWS(apply_override(j, "no_equals_sign"));
}

TEST_CASE("config validation") {
    const fs::path dir = scratch("validate");
    auto c = small_regression(dir);
    CHECK_NOTHROW(c.validate());
    c.kernel = KernelSpec::truncated_power(1.0, 1.0);
    CHECK_THROWS_WITH(c.validate(), doctest::Contains("truncated power"));
    c = small_regression(dir);
    c.zero_bias = true;
    CHECK_THROWS_WITH(c.validate(), doctest::Contains("zero_bias"));
    auto s = small_svc(dir);
    s.p_grid = {32, 16};
    CHECK_THROWS_WITH(s.validate(), doctest::Contains("strictly increasing"));
    s = small_svc(dir);
    s.sweep_values = {1.0};
    CHECK_THROWS(s.validate());
    s = small_svc(dir);
    s.sweep_variable = SweepVariable::Lambda;
    CHECK_THROWS(s.validate());
    s.sweep_values = {0.1, 1.0};
    CHECK_NOTHROW(s.validate());
    CHECK(s.n_sweep() == 2);
    CHECK(s.cell_setup(0).first.lambda == 0.1);
}

TEST_CASE("runs are deterministic") {
    const fs::path dir = scratch("determinism");
    auto a = small_svc(dir);
    auto b = a;
    b.output_path = (dir / "again.csv").string();
    const RunResult ra = run(a, {.jobs = 2});
    const RunResult rb = run(b, {.jobs = 1});
    CHECK(ra.failed == 0);
    CHECK(ra.rows.size() == 6);
    CHECK(without_wall_time(a.output_path) == without_wall_time(b.output_path));
    for (std::size_t i = 0; i < ra.rows.size(); ++i) CHECK(ra.rows[i].key == rb.rows[i].key);
}

TEST_CASE("resume reuses finished cells and matches a fresh run") {
    const fs::path dir = scratch("resume");
    auto partial = small_svc(dir);
    partial.output_path = (dir / "r.csv").string();
    const RunResult first = run(partial);
    CHECK(first.computed == 6);
    const RunResult second = run(partial);
    CHECK(second.reused == 6);
    CHECK(second.computed == 0);

    auto fresh = partial;
    fresh.output_path = (dir / "fresh.csv").string();
    run(fresh, {.resume = false});
    CHECK(without_wall_time(partial.output_path) == without_wall_time(fresh.output_path));

    // A changed config is not reused.
    auto changed = partial;
    changed.kernel.sigma = 20.0;
    CHECK(run(changed).reused == 0);
}

TEST_CASE("cell seeds do not depend on the replica count") {
    const fs::path dir = scratch("seeds");
    auto two = small_svc(dir);
    auto three = two;
    three.replicas = 3;
    three.output_path = (dir / "three.csv").string();
    const auto r2 = run(two).rows;
    const auto r3 = run(three).rows;
    for (const ResultRow& a : r2) {
        const auto it = std::find_if(r3.begin(), r3.end(), [&](const ResultRow& b) { return b.key == a.key; });
        REQUIRE(it != r3.end());
        CHECK(it->epsilon == a.epsilon);
        CHECK(it->delta == a.delta);
    }
    CHECK(cell_seed(1, 16, 0, Stream::Train) != cell_seed(1, 16, 0, Stream::Test));
    CHECK(cell_seed(1, 16, 0, Stream::Train) != cell_seed(1, 16, 1, Stream::Train));
}

TEST_CASE("one dimensional stripe learns quickly") {
    const fs::path dir = scratch("stripe1d");
    auto c = small_svc(dir);
    c.task.d = 1;
    c.p_grid = {32};
    const RunResult r = run(c);
    for (const auto& row : r.rows) CHECK(row.epsilon < 0.2);
}

TEST_CASE("result files") {
    const fs::path dir = scratch("files");
    auto c = small_svc(dir);
    c.rc.enabled = true;
    c.rc.n_probes = 2;
    c.structure_factor.enabled = true;
    c.structure_factor.k = {0.0, 1.0};
    c.structure_factor.n_wavevectors = 10;
    const RunResult r = run(c);
    CHECK(r.failed == 0);

    std::ifstream in(c.output_path);
    std::string header;
    std::getline(in, header);
    std::string joined;
    for (const auto& col : result_columns()) joined += (joined.empty() ? "" : ",") + col;
    CHECK(header == joined);
    CHECK(fs::exists(sidecar_path(c.output_path)));
    CHECK(fs::exists(extras_path(c.output_path)));
    CHECK(fs::exists(structure_factor_path(c.output_path)));

    const auto rows = read_results(c.output_path);
    REQUIRE(rows.size() == r.rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].key == r.rows[i].key);
        CHECK(rows[i].epsilon == doctest::Approx(r.rows[i].epsilon));
        CHECK(rows[i].r_c.has_value());
        CHECK(rows[i].structure_factor.size() == 2);
    }

    const auto agg = aggregate(rows, c, Observable::Epsilon);
    REQUIRE(agg.size() == 3);
    CHECK(agg[0].n == 2);
    CHECK(agg[0].p == 16);
    CHECK(agg[0].mean == doctest::Approx((rows[0].epsilon + rows[1].epsilon) / 2));
    CHECK(agg[0].stderr_mean == doctest::Approx(std::abs(rows[0].epsilon - rows[1].epsilon) / 2));
}

TEST_CASE("regression pipeline") {
    const fs::path dir = scratch("regression");
    const RunResult r = run(small_regression(dir));
    CHECK(r.failed == 0);
    for (const auto& row : r.rows) {
        CHECK(row.epsilon > 0.0);
        CHECK_FALSE(row.delta.has_value());
        CHECK_FALSE(row.n_sv.has_value());
    }
}
