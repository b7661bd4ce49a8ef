#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "symt/decompose.hpp"
#include "symt/optimize.hpp"
#include "symt/tensor.hpp"
#include "symt/tensor_ops.hpp"

namespace symt {

enum class SNormKind { projective_s, injective_s };

/// Selects one of the two extreme symmetric tensor norms together with the
/// lp geometry of the underlying space. injective <= projective always.
struct NormDescriptor {
    SNormKind kind = SNormKind::projective_s;
    Ball ball = Ball::L2;
};

inline std::string to_string(SNormKind k) {
    return k == SNormKind::projective_s ? "projective_s" : "injective_s";
}

struct InjectiveResult {
    double value = 0.0;
    Eigen::VectorXd functional;  // argmax on the dual unit ball
};

/// Certified lower bound of the injective symmetric norm
///   sup { |<w, (x')^{tensor n}>| : ||x'||_dual <= 1 }.
/// The pairing against a rank-one functional power is exactly the
/// polynomial evaluation of w at x'.
inline InjectiveResult injective_snorm(const SymTensor& w, Ball ball, const OptBudget& budget,
                                       std::span<const Eigen::VectorXd> seeds = {}) {
    SupResult r = sup_abs_poly(w, dual_ball(ball), budget, seeds);
    return {r.value, r.argmax};
}

struct ProjectiveResult {
    double value = 0.0;
    double residual = 0.0;
    Decomposition witness;
};

/// Upper-bound estimate of the projective symmetric norm with a feasible
/// witness. Throws InfeasibleError when no rank-capped decomposition
/// reaches the residual tolerance.
inline ProjectiveResult projective_snorm(const SymTensor& w, Ball ball, int rank,
                                         const OptBudget& budget,
                                         std::span<const Decomposition> seed_witnesses = {}) {
    ProjResult r = projective_decompose(w, ball, rank, budget, seed_witnesses);
    if (!r.feasible)
        throw InfeasibleError("no decomposition of rank <= " + std::to_string(rank) +
                              " met the residual tolerance");
    return {r.value, r.residual, std::move(r.witness)};
}

inline int default_rank(int order, int dim) {
    return static_cast<int>(2 * sym_dimension(order, dim));
}

namespace detail {

// Derivative-free pattern search for |P| on the unit sphere of the ball.
// Deliberately shares no iteration machinery with sup_abs_poly; the two
// routes cross-check each other in the dual-norm consistency tests.
inline double pattern_search_sup(const SymTensor& p, Ball ball, const OptBudget& budget) {
    const int d = p.dim();
    double best = 0.0;
    if (p.empty()) return best;
    auto polish = [&](Eigen::VectorXd x) {
        x = normalize_to_sphere(ball, std::move(x));
        double fx = std::abs(p.evaluate(x));
        best = std::max(best, fx);
        double step = 0.5;
        int it = 0;
        while (step > 1e-10 && it < budget.iterations) {
            bool improved = false;
            for (int i = 0; i < d && it < budget.iterations; ++i) {
                for (double s : {step, -step}) {
                    Eigen::VectorXd cand = x;
                    cand(i) += s;
                    cand = normalize_to_sphere(ball, std::move(cand));
                    const double fc = std::abs(p.evaluate(cand));
                    ++it;
                    if (fc > fx) {
                        x = std::move(cand);
                        fx = fc;
                        improved = true;
                        break;
                    }
                }
            }
            best = std::max(best, fx);
            if (!improved) step *= 0.5;
        }
    };
    if (ball == Ball::Linf && d <= 10) {
        Eigen::VectorXd v(d);
        for (unsigned mask = 0; mask < (1u << d); ++mask) {
            for (int i = 0; i < d; ++i) v(i) = (mask & (1u << i)) ? 1.0 : -1.0;
            best = std::max(best, std::abs(p.evaluate(v)));
        }
    }
    for (int i = 0; i < d; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
        e(i) = 1.0;
        polish(std::move(e));
    }
    auto rng = make_rng(budget.seed, 0xd0a1);
    for (int r = 0; r < budget.restarts; ++r) polish(random_unit(ball, d, rng));
    return best;
}

}  // namespace detail

/// Lower-bound ascent of sup { |<P, w>| : eps_s(w) <= 1 } over candidate
/// tensors whose feasibility is certified by a decomposition of cost <= 1
/// (triangle inequality: eps_s(sum lambda_k x_k^n) <= sum |lambda_k| ||x_k||^n).
/// Extreme-point reduction: the best certified candidate is rank-one.
inline double eps_certified_dual_ascent(const SymTensor& p, Ball ball, const OptBudget& budget,
                                        std::span<const Eigen::VectorXd> seeds = {}) {
    double best = detail::pattern_search_sup(p, ball, budget);
    for (const auto& s : seeds) {
        if (s.size() != p.dim() || ball_norm(ball, s) == 0.0) continue;
        const Eigen::VectorXd x = normalize_to_sphere(ball, s);
        best = std::max(best, std::abs(p.evaluate(x)));
    }
    return best;
}

/// Dual norm of a polynomial against the selected tensor norm ball:
/// sup { |<P, w>| : alpha(w) <= 1 }. For the projective ball this equals
/// the sup norm of P on the unit ball (the ball is the closed convex hull
/// of signed rank-one powers); the route here is an independent
/// pattern-search ascent over those extreme points.
inline double dual_ideal_norm(const SymTensor& p, const NormDescriptor& alpha,
                              const OptBudget& budget) {
    budget.validate();
    if (alpha.kind == SNormKind::projective_s)
        return detail::pattern_search_sup(p, alpha.ball, budget);
    return eps_certified_dual_ascent(p, alpha.ball, budget);
}

struct MetricMappingReport {
    double lhs = 0.0;      // alpha of the pushed-forward tensor
    double rhs = 0.0;      // ||R||^n * alpha(w)
    double op_norm = 0.0;
    double alpha_w = 0.0;
    bool pass = false;
};

/// Checks alpha((R tensor .. tensor R) w) <= ||R||^n alpha(w) within a 2%
/// reconciliation band. Witnesses are forwarded through R (projective) or
/// through the adjoint (injective) so the inequality cannot fail from
/// optimizer asymmetry alone.
inline MetricMappingReport check_metric_mapping(const NormDescriptor& alpha,
                                                const Eigen::MatrixXd& R, const SymTensor& w,
                                                const OptBudget& budget) {
    budget.validate();
    MetricMappingReport rep;
    rep.op_norm = operator_norm(alpha.ball, R);
    const SymTensor rw = map_modes(w, R);
    const int n = w.order();
    const double opn_pow = std::pow(rep.op_norm, n);

    if (alpha.kind == SNormKind::projective_s) {
        ProjectiveResult base = projective_snorm(w, alpha.ball, default_rank(n, w.dim()), budget);
        rep.alpha_w = base.value;
        rep.rhs = opn_pow * base.value;
        Decomposition pushed;
        for (const auto& t : base.witness.terms) {
            Eigen::VectorXd rx = R * t.x;
            const double nn = ball_norm(alpha.ball, rx);
            if (nn > 0) pushed.terms.push_back({t.lambda * std::pow(nn, n), rx / nn});
        }
        std::vector<Decomposition> seeds{pushed};
        if (rw.empty()) {
            rep.lhs = 0.0;
        } else {
            ProjectiveResult lhs =
                projective_snorm(rw, alpha.ball, default_rank(n, rw.dim()), budget, seeds);
            rep.lhs = std::min(lhs.value, pushed.cost(alpha.ball, n));
        }
    } else {
        InjectiveResult lhs = injective_snorm(rw, alpha.ball, budget);
        rep.lhs = lhs.value;
        std::vector<Eigen::VectorXd> seeds;
        if (lhs.functional.size() == R.rows()) {
            Eigen::VectorXd adj = R.transpose() * lhs.functional;
            if (ball_norm(dual_ball(alpha.ball), adj) > 0) seeds.push_back(std::move(adj));
        }
        InjectiveResult base = injective_snorm(w, alpha.ball, budget, seeds);
        rep.alpha_w = base.value;
        rep.rhs = opn_pow * base.value;
    }
    rep.pass = rep.lhs <= rep.rhs * 1.02 + 1e-12;
    return rep;
}

namespace detail {

inline void check_subspace_basis(const Eigen::MatrixXd& B, Ball ball) {
    if ((B.transpose() * B - Eigen::MatrixXd::Identity(B.cols(), B.cols()))
            .lpNorm<Eigen::Infinity>() > 1e-10)
        throw std::invalid_argument("subspace basis must have orthonormal columns");
    if (ball != Ball::L2) {
        // non-Hilbert balls: the inherited norm matches coordinates only for
        // coordinate-aligned subspaces
        for (Eigen::Index j = 0; j < B.cols(); ++j) {
            int nonzero = 0;
            for (Eigen::Index i = 0; i < B.rows(); ++i)
                if (std::abs(B(i, j)) > 1e-12) ++nonzero;
            if (nonzero != 1)
                throw std::invalid_argument(
                    "l1/linf subspaces must be spanned by coordinate vectors");
        }
    }
}

}  // namespace detail

/// Values alpha(w restricted to M_j) along a nested chain of subspaces that
/// contain w. Projective witnesses (or injective functionals) found on one
/// level seed the next, so the sequence is monotone by construction and
/// stabilizes at the full-space value.
inline std::vector<double> finitely_generated_gap(const NormDescriptor& alpha, const SymTensor& w,
                                                  std::span<const Eigen::MatrixXd> chain,
                                                  const OptBudget& budget) {
    budget.validate();
    if (chain.empty()) throw std::invalid_argument("empty subspace chain");
    const int n = w.order();
    std::vector<double> values;
    std::vector<Decomposition> proj_seed;
    std::vector<Eigen::VectorXd> inj_seed;
    const Eigen::MatrixXd* prev = nullptr;

    for (const auto& B : chain) {
        if (B.rows() != w.dim()) throw std::invalid_argument("chain basis has wrong ambient dim");
        detail::check_subspace_basis(B, alpha.ball);
        SymTensor wj = map_modes(w, Eigen::MatrixXd(B.transpose()));
        SymTensor back = map_modes(wj, B);
        if ((back - w).max_abs_entry() > 1e-9 * (1.0 + w.max_abs_entry()))
            throw std::invalid_argument("tensor is not representable in a chain subspace");

        if (alpha.kind == SNormKind::projective_s) {
            std::vector<Decomposition> seeds;
            if (prev && !proj_seed.empty()) {
                Decomposition lifted;
                for (const auto& t : proj_seed.front().terms)
                    lifted.terms.push_back({t.lambda, B.transpose() * (*prev * t.x)});
                seeds.push_back(std::move(lifted));
            }
            ProjectiveResult r = projective_snorm(wj, alpha.ball,
                                                  default_rank(n, wj.dim()), budget, seeds);
            values.push_back(r.value);
            proj_seed.assign(1, r.witness);
        } else {
            std::vector<Eigen::VectorXd> seeds;
            if (prev && !inj_seed.empty()) seeds.push_back(B.transpose() * (*prev * inj_seed.front()));
            InjectiveResult r = injective_snorm(wj, alpha.ball, budget, seeds);
            values.push_back(r.value);
            inj_seed.assign(1, r.functional);
        }
        prev = &B;
    }
    return values;
}

}  // namespace symt
