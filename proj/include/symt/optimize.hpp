#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "symt/balls.hpp"
#include "symt/rng.hpp"
#include "symt/tensor.hpp"

namespace symt {

/// Budget for every stochastic routine. Seeds are mandatory inputs;
/// identical budgets give identical outputs.
struct OptBudget {
    int restarts = 8;
    int iterations = 200;
    std::uint64_t seed = 1;
    double tolerance = 1e-9;

    void validate() const {
        if (restarts <= 0 || iterations <= 0 || tolerance <= 0.0)
            throw std::invalid_argument("budget fields must be positive");
    }
};

struct SupResult {
    double value = 0.0;
    Eigen::VectorXd argmax;
};

namespace detail {

inline void consider(SupResult& best, double value, const Eigen::VectorXd& x) {
    if (value > best.value) {
        best.value = value;
        best.argmax = x;
    }
}

// Projected gradient ascent for |P| on the unit sphere of the ball, with
// backtracking step control. Homogeneity puts the maximum on the sphere.
inline void ascend_poly(const SymTensor& p, Ball ball, Eigen::VectorXd x, int iterations,
                        SupResult& best) {
    x = normalize_to_sphere(ball, std::move(x));
    double fx = std::abs(p.evaluate(x));
    consider(best, fx, x);
    double step = 0.5;
    for (int it = 0; it < iterations; ++it) {
        const double raw = p.evaluate(x);
        Eigen::VectorXd g = p.gradient(x);
        if (raw < 0) g = -g;
        const double gn = g.norm();
        if (gn < 1e-300) break;
        Eigen::VectorXd cand = normalize_to_sphere(ball, x + (step / gn) * g);
        const double fc = std::abs(p.evaluate(cand));
        if (fc > fx) {
            x = std::move(cand);
            fx = fc;
            consider(best, fx, x);
            step *= 1.4;
        } else {
            step *= 0.5;
            if (step < 1e-14) break;
        }
    }
}

// Symmetric power iteration x <- normalize(grad |P|(x)); exact in one step
// on rank-one tensors and fast on dominant directions (L2 geometry).
inline void power_iterate_poly(const SymTensor& p, Ball ball, Eigen::VectorXd x, int iterations,
                               SupResult& best) {
    x = normalize_to_sphere(ball, std::move(x));
    for (int it = 0; it < iterations; ++it) {
        const double raw = p.evaluate(x);
        consider(best, std::abs(raw), x);
        Eigen::VectorXd g = p.gradient(x);
        if (raw < 0) g = -g;
        if (g.norm() < 1e-300) break;
        Eigen::VectorXd next = normalize_to_sphere(ball, std::move(g));
        if ((next - x).lpNorm<Eigen::Infinity>() < 1e-15) {
            x = std::move(next);
            consider(best, std::abs(p.evaluate(x)), x);
            break;
        }
        x = std::move(next);
    }
    consider(best, std::abs(p.evaluate(x)), x);
}

// Greedy sign flips from a cube vertex; exact for multilinear objectives.
inline void flip_descent_cube(const SymTensor& p, Eigen::VectorXd x, SupResult& best) {
    const int d = static_cast<int>(x.size());
    double fx = std::abs(p.evaluate(x));
    consider(best, fx, x);
    bool improved = true;
    int guard = 4 * d;
    while (improved && guard-- > 0) {
        improved = false;
        for (int i = 0; i < d; ++i) {
            x(i) = -x(i);
            const double f = std::abs(p.evaluate(x));
            if (f > fx) {
                fx = f;
                consider(best, fx, x);
                improved = true;
            } else {
                x(i) = -x(i);
            }
        }
    }
}

}  // namespace detail

/// Best found value of sup { |P(x)| : ||x||_ball <= 1 } with its argmax.
/// Certified lower bound: every reported value is attained by the witness.
/// For the cube with d <= 10 all sign vertices are enumerated first.
inline SupResult sup_abs_poly(const SymTensor& p, Ball ball, const OptBudget& budget,
                              std::span<const Eigen::VectorXd> seeds = {}) {
    budget.validate();
    const int d = p.dim();
    SupResult best;
    best.argmax = Eigen::VectorXd::Zero(d);
    if (p.empty()) return best;

    std::vector<Eigen::VectorXd> starts;
    if (ball == Ball::Linf && d <= 10) {
        Eigen::VectorXd v(d);
        SupResult vertex_best;
        vertex_best.argmax = Eigen::VectorXd::Zero(d);
        for (unsigned mask = 0; mask < (1u << d); ++mask) {
            for (int i = 0; i < d; ++i) v(i) = (mask & (1u << i)) ? 1.0 : -1.0;
            detail::consider(vertex_best, std::abs(p.evaluate(v)), v);
        }
        detail::consider(best, vertex_best.value, vertex_best.argmax);
        starts.push_back(vertex_best.argmax);
    }
    for (int i = 0; i < d; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
        e(i) = 1.0;
        starts.push_back(std::move(e));
    }
    for (const auto& s : seeds) {
        if (s.size() != d) throw std::invalid_argument("sup_abs_poly: seed dimension mismatch");
        if (ball_norm(ball, s) > 0) starts.push_back(project_to_ball(ball, s));
    }

    auto rng = make_rng(budget.seed, 0x5eed);
    for (int r = 0; r < budget.restarts; ++r) starts.push_back(random_unit(ball, d, rng));

    for (const auto& s : starts) {
        detail::consider(best, std::abs(p.evaluate(project_to_ball(ball, s))), project_to_ball(ball, s));
        detail::ascend_poly(p, ball, s, budget.iterations, best);
        detail::power_iterate_poly(p, ball, s, budget.iterations, best);
        if (ball == Ball::Linf) {
            Eigen::VectorXd v(d);
            for (int i = 0; i < d; ++i) v(i) = s(i) >= 0 ? 1.0 : -1.0;
            detail::flip_descent_cube(p, std::move(v), best);
        }
    }
    return best;
}

/// Best found value of sup { |f(x)| : x in [-1,1]^d } for a black-box
/// evaluator (closed-form coefficient families). Vertices are enumerated
/// when feasible; cyclic per-coordinate grid refinement polishes the rest.
inline SupResult sup_abs_on_cube(int d, const std::function<double(const Eigen::VectorXd&)>& f,
                                 const OptBudget& budget,
                                 std::span<const Eigen::VectorXd> seeds = {}) {
    budget.validate();
    SupResult best;
    best.argmax = Eigen::VectorXd::Zero(std::max(d, 0));
    if (d <= 0) {
        Eigen::VectorXd empty(0);
        best.value = std::abs(f(empty));
        best.argmax = empty;
        return best;
    }

    auto coordinate_polish = [&](Eigen::VectorXd x) {
        double fx = std::abs(f(x));
        detail::consider(best, fx, x);
        for (int sweep = 0; sweep < 6; ++sweep) {
            bool moved = false;
            for (int i = 0; i < d; ++i) {
                const double keep = x(i);
                double best_t = keep, best_f = fx;
                for (int gp = 0; gp <= 16; ++gp) {
                    const double t = -1.0 + 2.0 * gp / 16.0;
                    x(i) = t;
                    const double ft = std::abs(f(x));
                    if (ft > best_f) {
                        best_f = ft;
                        best_t = t;
                    }
                }
                double lo = std::max(-1.0, best_t - 0.125), hi = std::min(1.0, best_t + 0.125);
                for (int halvings = 0; halvings < 30; ++halvings) {
                    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
                    x(i) = m1;
                    const double f1 = std::abs(f(x));
                    x(i) = m2;
                    const double f2 = std::abs(f(x));
                    if (f1 > best_f) { best_f = f1; best_t = m1; }
                    if (f2 > best_f) { best_f = f2; best_t = m2; }
                    if (f1 < f2) lo = m1; else hi = m2;
                }
                x(i) = best_t;
                if (best_f > fx + 0.0) {
                    if (best_t != keep) moved = true;
                    fx = best_f;
                } else {
                    x(i) = keep;
                }
                detail::consider(best, fx, x);
            }
            if (!moved) break;
        }
    };

    std::vector<Eigen::VectorXd> starts;
    if (d <= 16) {
        Eigen::VectorXd v(d);
        SupResult vbest;
        vbest.argmax = Eigen::VectorXd::Zero(d);
        for (std::uint64_t mask = 0; mask < (1ull << d); ++mask) {
            for (int i = 0; i < d; ++i) v(i) = (mask & (1ull << i)) ? 1.0 : -1.0;
            detail::consider(vbest, std::abs(f(v)), v);
        }
        detail::consider(best, vbest.value, vbest.argmax);
        starts.push_back(vbest.argmax);
    }
    for (const auto& s : seeds) {
        if (s.size() != d) throw std::invalid_argument("sup_abs_on_cube: seed dimension mismatch");
        starts.push_back(s.cwiseMax(-1.0).cwiseMin(1.0));
    }
    auto rng = make_rng(budget.seed, 0xcb0e);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int nrand = d <= 16 ? std::min(budget.restarts, 4) : budget.restarts;
    for (int r = 0; r < nrand; ++r) {
        Eigen::VectorXd x(d);
        for (int i = 0; i < d; ++i) x(i) = u(rng);
        starts.push_back(std::move(x));
    }
    for (auto& s : starts) coordinate_polish(s);
    return best;
}

}  // namespace symt
