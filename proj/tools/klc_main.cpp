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

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "acceptance/criteria.hpp"
#include "klc/figures.hpp"
#include "klc/harness.hpp"
#include "klc/scaling.hpp"

namespace {

using nlohmann::json;

int cmd_run(const std::string& config_path, const std::vector<std::string>& sets, int jobs, const std::string& out,
            bool fresh) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config '" + config_path + "'");
    json doc = json::parse(in);
    for (const auto& s : sets) klc::apply_override(doc, s);
    klc::ExperimentConfig config = klc::config_from_json(doc);
    if (!out.empty()) config.output_path = out;
    config.validate();
    klc::RunOptions opts;
    opts.jobs = jobs;
    opts.resume = !fresh;
    opts.verbose = true;
    const klc::RunResult res = klc::run(config, opts);
    std::cerr << "cells: " << res.rows.size() << " computed " << res.computed << " reused " << res.reused
              << " failed " << res.failed << "\n";
    return res.failed == 0 ? 0 : 1;
}

int cmd_reproduce(const std::string& id, const std::string& scale, const std::string& out, int jobs) {
    klc::RunOptions opts;
    opts.jobs = jobs;
    opts.verbose = true;
    const auto report = klc::reproduce_figure(id, klc::scale_from_string(scale), out, opts);
    std::cout << klc::format_report(report);
    return report.pass() ? 0 : 1;
}

int cmd_predict(const std::string& regime, int d, double xi, int n, int d_perp) {
    klc::RegimeParams rp;
    rp.regime = klc::regime_from_string(regime);
    rp.n_interfaces = n;
    rp.d_perp = d_perp;
    const auto pred = klc::predicted_svc_exponents(d, xi, rp);
    std::cout << klc::to_json(pred).dump(2) << "\n";
    return 0;
}

int cmd_check(const std::vector<std::string>& names, const std::string& out, int jobs) {
    klc::acceptance::Options opts;
    opts.out_dir = out;
    opts.jobs = jobs;
    const auto selected = names.empty() ? klc::acceptance::criterion_names() : names;
    bool all = true;
    for (const auto& name : selected) {
        const auto res = klc::acceptance::run_criterion(name, opts);
        std::cout << klc::acceptance::format(res) << std::flush;
        all = all && res.pass;
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kernel learning curves: experiment runner and exponent predictor"};
    app.require_subcommand(1);

    std::string config_path, out, figure, scale = "desk", regime = "large_sigma";
    std::vector<std::string> sets, criteria;
    int jobs = 0, d = 2, n = 1, d_perp = 1;
    double xi = 1.0;
    bool fresh = false;

    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "config JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--set", sets, "override a field, e.g. task.d=5");
    run->add_option("--jobs", jobs, "worker threads (0 = all cores)");
    run->add_option("--out", out, "result CSV path");
    run->add_flag("--fresh", fresh, "ignore any previous partial output");

    auto* rep = app.add_subcommand("reproduce", "run and check one figure");
    rep->add_option("figure_id", figure, "figure id")->required()->check(CLI::IsMember(klc::figure_ids()));
    rep->add_option("--scale", scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    std::string rep_out = "figures";
    rep->add_option("--out", rep_out, "output directory");
    rep->add_option("--jobs", jobs, "worker threads (0 = all cores)");

    auto* pred = app.add_subcommand("predict", "print predicted exponents as JSON");
    pred->add_option("--regime", regime, "large_sigma, intermediate_sigma, small_sigma, multiple_interfaces, "
                                         "compression_stripe, compression_cylinder");
    pred->add_option("--d", d, "dimension")->required();
    pred->add_option("--xi", xi, "kernel cusp exponent")->required();
    pred->add_option("--n", n, "number of interfaces");
    pred->add_option("--d-perp", d_perp, "compressed dimensions of a cylinder");

    auto* check = app.add_subcommand("check", "run acceptance suites");
    check->add_option("--criterion", criteria, "criterion name (repeatable; default all)")
        ->check(CLI::IsMember(klc::acceptance::criterion_names()));
    std::string check_out = "acceptance_runs";
    check->add_option("--out", check_out, "directory for experiment outputs");
    check->add_option("--jobs", jobs, "worker threads (0 = all cores)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config_path, sets, jobs, out, fresh);
        if (*rep) return cmd_reproduce(figure, scale, rep_out, jobs);
        if (*pred) return cmd_predict(regime, d, xi, n, d_perp);
        if (*check) return cmd_check(criteria, check_out, jobs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
