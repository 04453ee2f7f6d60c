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

#include "klc/observables.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <stdexcept>

namespace klc {
namespace {

void require_svs(const SvcSolution& solution, const char* who) {
    if (solution.sv_indices.empty()) throw std::invalid_argument(std::string(who) + ": empty support-vector set");
}

}  // namespace

void ObservableRecord::validate() const {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("ObservableRecord: epsilon outside [0, 1]");
    if (!(delta >= 0.0)) throw std::invalid_argument("ObservableRecord: negative delta");
    if (n_sv > p) throw std::invalid_argument("ObservableRecord: n_sv exceeds p");
}

double test_error(const SvcSolution& solution, const SvcProblem& problem, const PointMatrix& x_test,
                  const Vector& y_test, bool zero_bias) {
    if (x_test.rows() < 1) throw std::invalid_argument("test_error: empty test set");
    if (y_test.size() != x_test.rows()) throw std::invalid_argument("test_error: y_test has wrong length");
    const Vector f = decision_function(solution, problem, x_test, !zero_bias);
    Index wrong = 0;
    for (Index i = 0; i < f.size(); ++i) {
        const double predicted = f(i) >= 0.0 ? 1.0 : -1.0;
        if (predicted != y_test(i)) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(f.size());
}

double band_thickness(const SvcSolution& solution, const SvcProblem& problem, const TaskSpec& task) {
    require_svs(solution, "band_thickness");
    double s = 0.0;
    for (Index t : solution.sv_indices) s += interface_distance(task, problem.x.row(t).data());
    return s / static_cast<double>(solution.sv_indices.size());
}

double mean_dual(const SvcSolution& solution) {
    require_svs(solution, "mean_dual");
    double s = 0.0;
    for (Index t : solution.sv_indices) s += solution.alpha(t);
    return s / static_cast<double>(solution.sv_indices.size());
}

double cumulative_threshold_distance(const std::vector<double>& distance, const std::vector<double>& weight,
                                     double c) {
    if (distance.size() != weight.size() || distance.empty()) {
        throw std::invalid_argument("cumulative_threshold_distance: size mismatch or empty input");
    }
    std::vector<std::size_t> order(distance.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return distance[a] < distance[b]; });
    const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
    if (!(total > 0.0)) throw std::invalid_argument("cumulative_threshold_distance: zero total weight");
    double acc = 0.0;
    double last_nonzero = distance[order.front()];
    for (std::size_t k : order) {
        acc += weight[k];
        if (weight[k] > 0.0) last_nonzero = distance[k];
        if (acc >= c * total) return distance[k];
    }
    return last_nonzero;
}

RcResult rc_minimal_disturbance(const SvcProblem& problem, const SvcSolution& solution, const TaskSpec& task,
                                const RcParams& params, std::uint64_t seed) {
    if (params.n_probes < 1) throw std::invalid_argument("rc_minimal_disturbance: n_probes must be >= 1");
    if (!(params.c_threshold > 0.0 && params.c_threshold <= 1.0)) {
        throw std::invalid_argument("rc_minimal_disturbance: c_threshold must lie in (0, 1]");
    }
    const double half_band = 0.5 * band_thickness(solution, problem, task);
    const Index p = problem.x.rows();
    const Index d = problem.x.cols();

    SvcProblem base = problem;
    base.params.kkt_tol = params.refit_kkt_tol;
    const SvcSolution tight = svc_fit(base, &solution.alpha);

    SvcProblem grown = base;
    grown.x.conservativeResize(p + 1, d);
    grown.y.conservativeResize(p + 1);
    Vector warm(p + 1);
    warm.head(p) = tight.alpha;
    warm(p) = 0.0;

    const auto axes = compression_axes(task);
    Rng rng(seed);
    RcResult out;
    while (static_cast<int>(out.per_probe.size()) < params.n_probes) {
        int attempts = 0;
        for (;;) {
            if (attempts++ > params.max_retries) {
                throw NumericalError("rc_minimal_disturbance: probe did not become a support vector after " +
                                     std::to_string(params.max_retries) + " redraws");
            }
            PointMatrix raw;
            do {
                raw = sample_points(task, 1, rng);
            } while (interface_distance(task, raw.row(0).data()) > half_band);
            const double y_probe = label_point(task, raw.row(0).data());
            const PointMatrix probe = compress(raw, task.lambda, axes);
            grown.x.row(p) = probe.row(0);
            grown.y(p) = y_probe;

            const SvcSolution refit = svc_fit(grown, &warm);
            if (refit.alpha(p) <= refit.diagnostics.sv_threshold) {
                ++out.redraws;
                continue;
            }
            std::vector<double> dist(static_cast<std::size_t>(p));
            std::vector<double> dalpha(static_cast<std::size_t>(p));
            for (Index t = 0; t < p; ++t) {
                dist[static_cast<std::size_t>(t)] = (grown.x.row(t) - grown.x.row(p)).norm();
                dalpha[static_cast<std::size_t>(t)] = std::abs(refit.alpha(t) - tight.alpha(t));
            }
            out.per_probe.push_back(cumulative_threshold_distance(dist, dalpha, params.c_threshold));
            break;
        }
    }
    out.r_c = std::accumulate(out.per_probe.begin(), out.per_probe.end(), 0.0) /
              static_cast<double>(out.per_probe.size());
    return out;
}

StructureFactor charge_structure_factor(const SvcSolution& solution, const SvcProblem& problem, const TaskSpec& task,
                                        const std::vector<double>& k_magnitudes, int n_wavevectors,
                                        std::uint64_t seed) {
    if (!task.is_stripe()) throw std::invalid_argument("charge_structure_factor: stripe geometry required");
    if (n_wavevectors < 1) throw std::invalid_argument("charge_structure_factor: n_wavevectors must be >= 1");
    const Index d = problem.x.cols();
    const Index dt = d - 1;
    if (dt < 1) throw std::invalid_argument("charge_structure_factor: need d >= 2");

    std::vector<Index> charged;
    for (Index t = 0; t < solution.alpha.size(); ++t) {
        if (solution.alpha(t) > 0.0) charged.push_back(t);
    }

    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix directions(n_wavevectors, dt);
    for (int n = 0; n < n_wavevectors; ++n) {
        for (Index k = 0; k < dt; ++k) directions(n, k) = normal(rng);
        directions.row(n).normalize();
    }

    StructureFactor out;
    out.k = k_magnitudes;
    out.q2.reserve(k_magnitudes.size());
    for (double kmag : k_magnitudes) {
        double acc = 0.0;
        for (int n = 0; n < n_wavevectors; ++n) {
            std::complex<double> s(0.0, 0.0);
            for (Index t : charged) {
                double phase = 0.0;
                for (Index k = 0; k < dt; ++k) phase += directions(n, k) * problem.x(t, k + 1);
                phase *= kmag;
                s += solution.alpha(t) * problem.y(t) * std::complex<double>(std::cos(phase), -std::sin(phase));
            }
            acc += std::norm(s);
        }
        out.q2.push_back(acc / n_wavevectors);
    }
    const double abar = mean_dual(solution);
    out.q2_inf = abar * abar * static_cast<double>(problem.x.rows()) * band_thickness(solution, problem, task) /
                 task.sampler.gamma;
    return out;
}

}  // namespace klc
