#pragma once

// Bounded nonlinear least squares on a black-box residual function.
//
// Levenberg-Marquardt with Marquardt diagonal scaling, forward-difference
// Jacobians, and bound handling in the spirit of trust-region-reflective
// methods: variables pinned at a bound by the gradient are frozen for the
// step, the remaining step is projected onto the box, and a reflected
// step is tried before the damping is increased. Cost is 0.5 * |r|^2.

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "brdfremap/core.hpp"

namespace brdfremap {

using ResidualFn = std::function<std::vector<double>(std::span<const double>)>;
using TraceFn = std::function<void(int iteration, double cost, std::span<const double> x)>;

struct OptimizerSettings {
    double step_tol = 1e-8;
    double cost_tol = 1e-10;  // relative cost reduction
    double grad_tol = 1e-14;  // projected gradient, relative to max(1, cost)
    int max_evals = 400;
    double fd_rel_step = 1e-4;
    double initial_damping = 1e-3;
};

struct OptimizationProblem {
    ResidualFn residual_fn;
    std::vector<double> x0;
    std::vector<double> lower;
    std::vector<double> upper;
    OptimizerSettings settings;
    TraceFn trace;  // optional, called for x0 and every accepted iterate
};

enum class Termination { StepTol, GradTol, CostTol, MaxEvals };

inline const char* termination_name(Termination t) {
    switch (t) {
        case Termination::StepTol: return "step_tol";
        case Termination::GradTol: return "grad_tol";
        case Termination::CostTol: return "cost_tol";
        case Termination::MaxEvals: return "max_evals";
    }
    return "?";
}

struct OptimizationOutcome {
    std::vector<double> x_final;
    double initial_cost = 0;
    double final_cost = 0;
    int n_evals = 0;
    int iterations = 0;
    Termination termination = Termination::MaxEvals;
    bool converged = false;
};

namespace detail {

inline double half_squared_norm(const std::vector<double>& r) {
    double s = 0;
    for (double v : r) s += v * v;
    return 0.5 * s;
}

inline bool all_finite(const std::vector<double>& r) {
    for (double v : r)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace detail

// Forward-difference Jacobian; the step for x_j is rel * max(1, |x_j|),
// taken backwards when the forward point would leave the box.
inline Eigen::MatrixXd finite_difference_jacobian(const ResidualFn& f, std::span<const double> x,
                                                  const std::vector<double>& r0, std::span<const double> lower,
                                                  std::span<const double> upper, double rel_step, int* evals = nullptr) {
    const std::size_t n = x.size();
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(r0.size()), static_cast<Eigen::Index>(n));
    std::vector<double> xp(x.begin(), x.end());
    for (std::size_t j = 0; j < n; ++j) {
        double h = rel_step * std::max(1.0, std::abs(x[j]));
        if (x[j] + h > upper[j]) {
            if (x[j] - h >= lower[j])
                h = -h;
            else
                h = (upper[j] - x[j] >= x[j] - lower[j]) ? upper[j] - x[j] : lower[j] - x[j];
        }
        if (h == 0.0) {
            jac.col(static_cast<Eigen::Index>(j)).setZero();
            continue;
        }
        xp[j] = x[j] + h;
        const auto rp = f(xp);
        if (evals) ++*evals;
        xp[j] = x[j];
        if (rp.size() != r0.size()) throw DimensionError("residual length changed between evaluations");
        for (std::size_t i = 0; i < r0.size(); ++i) {
            const double d = (rp[i] - r0[i]) / h;
            jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::isfinite(d) ? d : 0.0;
        }
    }
    return jac;
}

inline OptimizationOutcome minimize(const OptimizationProblem& p) {
    const std::size_t n = p.x0.size();
    if (p.lower.size() != n || p.upper.size() != n) throw DimensionError("minimize: bounds size mismatch");
    for (std::size_t j = 0; j < n; ++j) {
        if (!(p.lower[j] <= p.upper[j])) throw ConfigError("minimize: lower bound exceeds upper bound");
        if (!(p.x0[j] >= p.lower[j] && p.x0[j] <= p.upper[j])) throw ConfigError("minimize: x0 outside bounds");
    }
    const auto& s = p.settings;

    OptimizationOutcome out;
    std::vector<double> x = p.x0;
    std::vector<double> r = p.residual_fn(x);
    out.n_evals = 1;
    if (!detail::all_finite(r)) throw NumericError("minimize: residual is not finite at x0");
    double cost = detail::half_squared_norm(r);
    out.initial_cost = cost;
    if (p.trace) p.trace(0, cost, x);

    auto finish = [&](Termination t) {
        out.x_final = x;
        out.final_cost = cost;
        out.termination = t;
        out.converged = t != Termination::MaxEvals;
        return out;
    };

    if (cost == 0.0 || n == 0) return finish(Termination::CostTol);

    double lambda = s.initial_damping;
    while (true) {
        if (out.n_evals + static_cast<int>(n) + 1 > s.max_evals) return finish(Termination::MaxEvals);
        const Eigen::MatrixXd jac = finite_difference_jacobian(p.residual_fn, x, r, p.lower, p.upper, s.fd_rel_step,
                                                               &out.n_evals);
        const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
        const Eigen::VectorXd grad = jac.transpose() * rv;
        const Eigen::MatrixXd jtj = jac.transpose() * jac;

        // Freeze variables held at a bound by the gradient.
        std::vector<Eigen::Index> free;
        double pg_max = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const bool pinned = (x[j] <= p.lower[j] && grad(jj) > 0) || (x[j] >= p.upper[j] && grad(jj) < 0);
            if (!pinned) {
                free.push_back(jj);
                pg_max = std::max(pg_max, std::abs(grad(jj)));
            }
        }
        if (pg_max <= s.grad_tol * std::max(1.0, cost)) return finish(Termination::GradTol);

        const auto nf = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd a(nf, nf);
        Eigen::VectorXd b(nf);
        double diag_max = 0;
        for (Eigen::Index u = 0; u < nf; ++u) {
            b(u) = -grad(free[u]);
            for (Eigen::Index v = 0; v < nf; ++v) a(u, v) = jtj(free[u], free[v]);
            diag_max = std::max(diag_max, a(u, u));
        }
        const double diag_floor = std::max(diag_max * 1e-12, 1e-300);

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = a;
            for (Eigen::Index u = 0; u < nf; ++u) damped(u, u) += lambda * std::max(a(u, u), diag_floor);
            const Eigen::VectorXd step = damped.ldlt().solve(b);

            std::vector<double> projected = x, reflected = x;
            double step_norm2 = 0;
            for (Eigen::Index u = 0; u < nf; ++u) {
                const auto j = static_cast<std::size_t>(free[u]);
                const double t = x[j] + step(u);
                projected[j] = std::clamp(t, p.lower[j], p.upper[j]);
                double rt = t;
                if (rt < p.lower[j]) rt = p.lower[j] + (p.lower[j] - rt);
                if (rt > p.upper[j]) rt = p.upper[j] - (rt - p.upper[j]);
                reflected[j] = std::clamp(rt, p.lower[j], p.upper[j]);
                step_norm2 += (projected[j] - x[j]) * (projected[j] - x[j]);
            }
            double x_norm2 = 0;
            for (double v : x) x_norm2 += v * v;
            const double step_limit = s.step_tol * (std::sqrt(x_norm2) + s.step_tol);
            if (std::sqrt(step_norm2) <= step_limit || !step.allFinite()) return finish(Termination::StepTol);

            for (const auto* trial : {&projected, &reflected}) {
                if (trial == &reflected && reflected == projected) break;
                if (out.n_evals >= s.max_evals) return finish(Termination::MaxEvals);
                auto rt = p.residual_fn(*trial);
                ++out.n_evals;
                if (rt.size() != r.size()) throw DimensionError("residual length changed between evaluations");
                if (!detail::all_finite(rt)) continue;
                const double ct = detail::half_squared_norm(rt);
                if (ct < cost) {
                    double moved2 = 0;
                    for (std::size_t j = 0; j < n; ++j) moved2 += ((*trial)[j] - x[j]) * ((*trial)[j] - x[j]);
                    const double reduction = cost - ct;
                    const double old_cost = cost;
                    x = *trial;
                    r = std::move(rt);
                    cost = ct;
                    ++out.iterations;
                    if (p.trace) p.trace(out.iterations, cost, x);
                    lambda = std::max(lambda / 3.0, 1e-12);
                    accepted = true;
                    if (cost == 0.0 || reduction <= s.cost_tol * old_cost) return finish(Termination::CostTol);
                    if (std::sqrt(moved2) <= step_limit) return finish(Termination::StepTol);
                    break;
                }
            }
            if (!accepted) {
                lambda *= 4.0;
                if (lambda > 1e16) return finish(Termination::StepTol);
            }
        }
    }
}

struct SweepCost {
    double cost = 0;
    std::string error;  // empty on success

    bool ok() const { return error.empty(); }
};

// Cost 0.5 * |r(x)|^2 at each grid point, in grid order.
inline std::vector<SweepCost> sweep_eval(const ResidualFn& f, const std::vector<std::vector<double>>& grid) {
    std::vector<SweepCost> out;
    out.reserve(grid.size());
    for (const auto& x : grid) {
        try {
            const auto r = f(x);
            if (!detail::all_finite(r))
                out.push_back({std::numeric_limits<double>::quiet_NaN(), "non-finite residual"});
            else
                out.push_back({detail::half_squared_norm(r), {}});
        } catch (const std::exception& e) {
            out.push_back({std::numeric_limits<double>::quiet_NaN(), e.what()});
        }
    }
    return out;
}

}  // namespace brdfremap
