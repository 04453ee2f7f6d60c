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

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "acceptance/criteria.hpp"

int main(int argc, char** argv) {
    CLI::App app{"acceptance suite"};
    std::vector<std::string> names;
    klc::acceptance::Options opts;
    app.add_option("--criterion", names, "criterion to run (repeatable; default all)")
        ->check(CLI::IsMember(klc::acceptance::criterion_names()));
    app.add_option("--out", opts.out_dir, "directory for experiment outputs");
    app.add_option("--jobs", opts.jobs, "worker threads (0 = all cores)");
    CLI11_PARSE(app, argc, argv);

    if (names.empty()) names = klc::acceptance::criterion_names();
    bool all = true;
    for (const auto& name : names) {
        const auto res = klc::acceptance::run_criterion(name, opts);
        std::cout << klc::acceptance::format(res) << std::flush;
        all = all && res.pass;
    }
    return all ? 0 : 1;
}
