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

#include "klc/svc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "klc/kernel_cache.hpp"

namespace klc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTau = 1e-12;

enum class Bound : unsigned char { Lower, Free, Upper };

// Two-variable ascent on min 1/2 a^T Q a - 1^T a, 0 <= a <= C, y^T a = 0,
// Q_it = y_i y_t K_it. G = Q a - 1 is the gradient.
class SmoSolver {
public:
    SmoSolver(const SvcProblem& prob, double shift)
        : prob_(prob),
          p_(prob.x.rows()),
          c_(prob.params.c_cap),
          eps_(prob.params.kkt_tol),
          cache_(prob.kernel, prob.x, prob.params.cache_bytes, shift),
          y_(prob.y) {}

    void run(const Vector* warm) {
        alpha_ = warm ? *warm : Vector::Zero(p_);
        status_.resize(static_cast<std::size_t>(p_));
        for (Index t = 0; t < p_; ++t) update_status(t);
        recompute_gradient();

        active_.resize(static_cast<std::size_t>(p_));
        for (Index t = 0; t < p_; ++t) active_[static_cast<std::size_t>(t)] = t;
        unshrunk_ = false;

        const long long max_iter = static_cast<long long>(prob_.params.max_passes) * std::max<Index>(p_, 1);
        const Index shrink_every = std::min<Index>(p_, 1000);
        Index counter = shrink_every;
        int restarts = 0;

        for (;;) {
            if (iter_ >= max_iter) {
                recompute_gradient();
                const double gap = kkt_gap();
                throw ConvergenceError("svc_fit: no convergence after " + std::to_string(iter_) +
                                           " iterations, KKT gap " + std::to_string(gap),
                                       gap);
            }
            if (--counter == 0) {
                counter = shrink_every;
                if (prob_.params.shrink) shrink();
            }
            Index i = -1;
            Index j = -1;
            bool found = select_pair(i, j);
            if (!found && static_cast<Index>(active_.size()) < p_) {
                reconstruct_gradient();
                reset_active();
                counter = 1;
                found = select_pair(i, j);
            }
            if (!found) {
                // Final check on a gradient free of accumulated rounding.
                recompute_gradient();
                if (kkt_gap() < eps_ || ++restarts > 8) break;
                counter = shrink_every;
                continue;
            }
            ++iter_;
            take_step(i, j);
        }
    }

    SvcSolution finish() {
        SvcSolution sol;
        sol.alpha = alpha_;
        sol.bias = bias();
        double obj = 0.0;
        for (Index t = 0; t < p_; ++t) obj += alpha_(t) * (g_(t) - 1.0);
        sol.objective = -0.5 * obj;
        const double amax = alpha_.size() ? alpha_.maxCoeff() : 0.0;
        auto& dg = sol.diagnostics;
        dg.sv_threshold = 1e-8 * amax;
        for (Index t = 0; t < p_; ++t) {
            if (alpha_(t) > dg.sv_threshold) sol.sv_indices.push_back(t);
            if (status_[static_cast<std::size_t>(t)] == Bound::Upper) dg.cap_active = true;
        }
        dg.iterations = iter_;
        dg.passes = p_ > 0 ? (iter_ + p_ - 1) / p_ : 0;
        dg.final_kkt_violation = kkt_gap();
        dg.kernel_rows_computed = cache_.rows_computed();
        return sol;
    }

private:
    [[nodiscard]] bool is_upper(Index t) const { return status_[static_cast<std::size_t>(t)] == Bound::Upper; }
    [[nodiscard]] bool is_lower(Index t) const { return status_[static_cast<std::size_t>(t)] == Bound::Lower; }

    void update_status(Index t) {
        auto& s = status_[static_cast<std::size_t>(t)];
        if (alpha_(t) >= c_) s = Bound::Upper;
        else if (alpha_(t) <= 0.0) s = Bound::Lower;
        else s = Bound::Free;
    }

    void reset_active() {
        active_.resize(static_cast<std::size_t>(p_));
        for (Index t = 0; t < p_; ++t) active_[static_cast<std::size_t>(t)] = t;
    }

    void recompute_gradient() {
        g_ = Vector::Constant(p_, -1.0);
        gbar_ = Vector::Zero(p_);
        for (Index i = 0; i < p_; ++i) {
            const double a = alpha_(i);
            if (a == 0.0) continue;
            const double* k = cache_.row(i);
            const double ay = a * y_(i);
            for (Index t = 0; t < p_; ++t) g_(t) += ay * y_(t) * k[t];
            if (is_upper(i)) {
                for (Index t = 0; t < p_; ++t) gbar_(t) += c_ * y_(i) * y_(t) * k[t];
            }
        }
    }

    // Restores G on shrunk variables from the free ones plus the cached bound part.
    void reconstruct_gradient() {
        if (static_cast<Index>(active_.size()) == p_) return;
        std::vector<char> is_active(static_cast<std::size_t>(p_), 0);
        for (Index t : active_) is_active[static_cast<std::size_t>(t)] = 1;
        std::vector<Index> inactive;
        for (Index t = 0; t < p_; ++t) {
            if (!is_active[static_cast<std::size_t>(t)]) {
                inactive.push_back(t);
                g_(t) = gbar_(t) - 1.0;
            }
        }
        for (Index i = 0; i < p_; ++i) {
            if (status_[static_cast<std::size_t>(i)] != Bound::Free) continue;
            const double* k = cache_.row(i);
            const double ay = alpha_(i) * y_(i);
            for (Index t : inactive) g_(t) += ay * y_(t) * k[t];
        }
    }

    [[nodiscard]] double kkt_gap() const {
        double up = -kInf;
        double low = kInf;
        for (Index t = 0; t < p_; ++t) {
            const double v = -y_(t) * g_(t);
            const bool in_up = y_(t) > 0 ? !is_upper(t) : !is_lower(t);
            const bool in_low = y_(t) > 0 ? !is_lower(t) : !is_upper(t);
            if (in_up) up = std::max(up, v);
            if (in_low) low = std::min(low, v);
        }
        if (up == -kInf || low == kInf) return 0.0;
        return std::max(0.0, up - low);
    }

    bool select_pair(Index& out_i, Index& out_j) {
        double gmax = -kInf;
        Index imax = -1;
        for (Index t : active_) {
            if (y_(t) > 0) {
                if (!is_upper(t) && -g_(t) > gmax) { gmax = -g_(t); imax = t; }
            } else {
                if (!is_lower(t) && g_(t) > gmax) { gmax = g_(t); imax = t; }
            }
        }
        if (imax < 0) return false;
        const double* ki = cache_.row(imax);
        const double kii = cache_.diag(imax);
        const double yi = y_(imax);

        double gmax2 = -kInf;
        double best = kInf;
        Index jmin = -1;
        for (Index t : active_) {
            if (y_(t) > 0) {
                if (is_lower(t)) continue;
                gmax2 = std::max(gmax2, g_(t));
                const double diff = gmax + g_(t);
                if (diff > 0.0) {
                    // y_i Q_it = y_t K_it
                    double quad = kii + cache_.diag(t) - 2.0 * yi * yi * y_(t) * ki[t];
                    if (quad <= 0.0) quad = kTau;
                    const double gain = -(diff * diff) / quad;
                    if (gain < best) { best = gain; jmin = t; }
                }
            } else {
                if (is_upper(t)) continue;
                gmax2 = std::max(gmax2, -g_(t));
                const double diff = gmax - g_(t);
                if (diff > 0.0) {
                    double quad = kii + cache_.diag(t) + 2.0 * yi * yi * y_(t) * ki[t];
                    if (quad <= 0.0) quad = kTau;
                    const double gain = -(diff * diff) / quad;
                    if (gain < best) { best = gain; jmin = t; }
                }
            }
        }
        if (gmax + gmax2 < eps_ || jmin < 0) return false;
        out_i = imax;
        out_j = jmin;
        return true;
    }

    void take_step(Index i, Index j) {
        const double* ki = cache_.row(i);
        const double* kj = cache_.row(j);
        const double kii = cache_.diag(i);
        const double kjj = cache_.diag(j);
        const double kij = ki[j];
        const double ai_old = alpha_(i);
        const double aj_old = alpha_(j);
        double ai = ai_old;
        double aj = aj_old;

        if (y_(i) != y_(j)) {
            double quad = kii + kjj + 2.0 * kij * (y_(i) * y_(j));
            if (quad <= 0.0) quad = kTau;
            const double delta = (-g_(i) - g_(j)) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) { aj = 0.0; ai = diff; }
            } else {
                if (ai < 0.0) { ai = 0.0; aj = -diff; }
            }
            if (diff > 0.0) {
                if (ai > c_) { ai = c_; aj = c_ - diff; }
            } else {
                if (aj > c_) { aj = c_; ai = c_ + diff; }
            }
        } else {
            double quad = kii + kjj - 2.0 * kij * (y_(i) * y_(j));
            if (quad <= 0.0) quad = kTau;
            const double delta = (g_(i) - g_(j)) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > c_) {
                if (ai > c_) { ai = c_; aj = sum - c_; }
            } else {
                if (aj < 0.0) { aj = 0.0; ai = sum; }
            }
            if (sum > c_) {
                if (aj > c_) { aj = c_; ai = sum - c_; }
            } else {
                if (ai < 0.0) { ai = 0.0; aj = sum; }
            }
        }
        alpha_(i) = ai;
        alpha_(j) = aj;

        const double dai = (ai - ai_old) * y_(i);
        const double daj = (aj - aj_old) * y_(j);
        for (Index t : active_) g_(t) += y_(t) * (ki[t] * dai + kj[t] * daj);

        const bool ui = is_upper(i);
        const bool uj = is_upper(j);
        update_status(i);
        update_status(j);
        if (ui != is_upper(i)) {
            const double s = (ui ? -c_ : c_) * y_(i);
            for (Index t = 0; t < p_; ++t) gbar_(t) += s * y_(t) * ki[t];
        }
        if (uj != is_upper(j)) {
            const double s = (uj ? -c_ : c_) * y_(j);
            for (Index t = 0; t < p_; ++t) gbar_(t) += s * y_(t) * kj[t];
        }
    }

    [[nodiscard]] bool be_shrunk(Index t, double gmax1, double gmax2) const {
        if (is_upper(t)) return y_(t) > 0 ? -g_(t) > gmax1 : -g_(t) > gmax2;
        if (is_lower(t)) return y_(t) > 0 ? g_(t) > gmax2 : g_(t) > gmax1;
        return false;
    }

    void shrink() {
        double gmax1 = -kInf;  // max over I_up of -y G
        double gmax2 = -kInf;  // max over I_low of y G
        for (Index t : active_) {
            if (y_(t) > 0) {
                if (!is_upper(t)) gmax1 = std::max(gmax1, -g_(t));
                if (!is_lower(t)) gmax2 = std::max(gmax2, g_(t));
            } else {
                if (!is_upper(t)) gmax2 = std::max(gmax2, -g_(t));
                if (!is_lower(t)) gmax1 = std::max(gmax1, g_(t));
            }
        }
        if (!unshrunk_ && gmax1 + gmax2 <= 10.0 * eps_) {
            unshrunk_ = true;
            reconstruct_gradient();
            reset_active();
        }
        std::erase_if(active_, [&](Index t) { return be_shrunk(t, gmax1, gmax2); });
    }

    [[nodiscard]] double bias() const {
        double ub = kInf;
        double lb = -kInf;
        double sum = 0.0;
        long long n_free = 0;
        for (Index t = 0; t < p_; ++t) {
            const double yg = y_(t) * g_(t);
            if (is_upper(t)) {
                if (y_(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
            } else if (is_lower(t)) {
                if (y_(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
            } else {
                ++n_free;
                sum += yg;
            }
        }
        const double rho = n_free > 0 ? sum / static_cast<double>(n_free) : 0.5 * (ub + lb);
        return -rho;
    }

    const SvcProblem& prob_;
    Index p_;
    double c_;
    double eps_;
    KernelRowCache cache_;
    const Vector& y_;
    Vector alpha_;
    Vector g_;
    Vector gbar_;
    std::vector<Bound> status_;
    std::vector<Index> active_;
    bool unshrunk_ = false;
    long long iter_ = 0;
};

double solver_shift(const SvcProblem& problem) {
    const double k0 = eval_kernel(problem.kernel, 0.0) + problem.kernel_offset;
    return problem.kernel_offset - (problem.params.center_kernel ? k0 : 0.0);
}

}  // namespace

void SolverParams::validate() const {
    if (!(c_cap >= 1e8)) throw std::invalid_argument("SolverParams: c_cap must be >= 1e8");
    if (!(kkt_tol > 0.0 && kkt_tol <= 1e-2)) throw std::invalid_argument("SolverParams: kkt_tol must lie in (0, 1e-2]");
    if (max_passes < 1) throw std::invalid_argument("SolverParams: max_passes must be >= 1");
}

void SvcProblem::validate() const {
    params.validate();
    kernel.validate();
    kernel.validate_for_dimension(x.cols());
    if (y.size() != x.rows()) throw std::invalid_argument("SvcProblem: y has wrong length");
    bool pos = false;
    bool neg = false;
    for (Index t = 0; t < y.size(); ++t) {
        if (y(t) == 1.0) pos = true;
        else if (y(t) == -1.0) neg = true;
        else throw std::invalid_argument("SvcProblem: labels must be +1 or -1");
    }
    if (!pos || !neg) throw std::invalid_argument("SvcProblem: both labels must be present");
    if (!std::isfinite(kernel_offset)) throw std::invalid_argument("SvcProblem: kernel_offset must be finite");
}

SvcSolution svc_fit(const SvcProblem& problem, const Vector* warm_start) {
    problem.validate();
    if (warm_start) {
        const Vector& a = *warm_start;
        if (a.size() != problem.x.rows()) throw std::invalid_argument("svc_fit: warm start has wrong length");
        if ((a.array() < 0.0).any() || (a.array() > problem.params.c_cap).any()) {
            throw std::invalid_argument("svc_fit: warm start outside [0, c_cap]");
        }
        const double charge = a.dot(problem.y);
        if (std::abs(charge) > 1e-9 * std::max(1.0, a.sum())) {
            throw std::invalid_argument("svc_fit: warm start violates charge conservation");
        }
    }
    SmoSolver solver(problem, solver_shift(problem));
    solver.run(warm_start);
    return solver.finish();
}

Vector decision_function(const SvcSolution& solution, const SvcProblem& problem, const PointMatrix& x_query,
                         bool include_bias) {
    if (x_query.cols() != problem.x.cols()) throw std::invalid_argument("decision_function: dimension mismatch");
    // Without the bias the uncentered expansion is returned; the centered form
    // would leave K(0) * sum(alpha y) behind.
    const double shift = include_bias ? solver_shift(problem) : problem.kernel_offset;
    const Index d = problem.x.cols();
    std::vector<Index> support;
    for (Index t = 0; t < solution.alpha.size(); ++t) {
        if (solution.alpha(t) > 0.0) support.push_back(t);
    }
    Vector f = Vector::Constant(x_query.rows(), include_bias ? solution.bias : 0.0);
    for (Index q = 0; q < x_query.rows(); ++q) {
        const double* xq = x_query.row(q).data();
        double s = 0.0;
        for (Index t : support) {
            const double k = eval_kernel(problem.kernel, kernel_distance(problem.kernel, problem.x.row(t).data(), xq, d));
            s += solution.alpha(t) * problem.y(t) * (k + shift);
        }
        f(q) += s;
    }
    return f;
}

KktReport verify_kkt(const SvcSolution& solution, const SvcProblem& problem) {
    KktReport r;
    const Vector f = decision_function(solution, problem, problem.x);
    const Vector& a = solution.alpha;
    const double total = a.cwiseAbs().sum();
    r.charge_residual = total > 0.0 ? std::abs(a.dot(problem.y)) / total : 0.0;
    double min_margin = kInf;
    for (Index t = 0; t < a.size(); ++t) {
        const double m = problem.y(t) * f(t);
        r.max_primal_violation = std::max(r.max_primal_violation, 1.0 - m);
        min_margin = std::min(min_margin, m);
        if (a(t) < 0.0) r.max_primal_violation = std::max(r.max_primal_violation, -a(t));
    }
    for (Index t : solution.sv_indices) {
        r.complementarity_residual = std::max(r.complementarity_residual, std::abs(problem.y(t) * f(t) - 1.0));
    }
    r.canonical_residual = std::abs(min_margin - 1.0);
    return r;
}

std::vector<TruncationRow> truncation_convergence_test(const KernelSpec& full_kernel, const PointMatrix& x,
                                                       const Vector& y, const std::vector<double>& sigma_grid,
                                                       const SolverParams& params) {
    if (full_kernel.family != KernelFamily::Laplace && full_kernel.family != KernelFamily::Matern) {
        throw std::invalid_argument("truncation_convergence_test: full kernel must be Laplace or Matern");
    }
    for (std::size_t k = 1; k < sigma_grid.size(); ++k) {
        if (!(sigma_grid[k] > sigma_grid[k - 1])) {
            throw std::invalid_argument("truncation_convergence_test: sigma grid must be increasing");
        }
    }
    const double coef = cusp_coefficient(full_kernel);
    const double xi = cusp_exponent(full_kernel);
    std::vector<TruncationRow> out;
    for (double sigma : sigma_grid) {
        SvcProblem full{full_kernel.with_sigma(sigma), x, y, params, 0.0};
        SvcProblem trunc{KernelSpec::truncated_power(xi, sigma), x, y, params, 0.0};
        const SvcSolution a = svc_fit(full);
        const SvcSolution b = svc_fit(trunc);
        // full ~ K(0) - coef (r/sigma)^xi, so its duals match truncated ones divided by coef
        const Vector diff = a.alpha - b.alpha / coef;
        out.push_back({sigma, diff.norm() / a.alpha.norm()});
    }
    return out;
}

void write_solution_csv(const SvcSolution& solution, const SvcProblem& problem, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.precision(17);
    os << "index,alpha,y,is_sv\n";
    std::vector<char> is_sv(static_cast<std::size_t>(solution.alpha.size()), 0);
    for (Index t : solution.sv_indices) is_sv[static_cast<std::size_t>(t)] = 1;
    for (Index t = 0; t < solution.alpha.size(); ++t) {
        os << t << ',' << solution.alpha(t) << ',' << problem.y(t) << ',' << int(is_sv[static_cast<std::size_t>(t)]) << '\n';
    }
    os << "bias," << solution.bias << ",,\n";
}

}  // namespace klc
