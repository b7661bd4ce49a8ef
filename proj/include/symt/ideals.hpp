#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "symt/norms.hpp"
#include "symt/tensor_ops.hpp"

namespace symt {

enum class IdealKind { sup, nuclear, integral_dual, max_kernel, min_kernel };

inline std::string to_string(IdealKind k) {
    switch (k) {
        case IdealKind::sup: return "sup";
        case IdealKind::nuclear: return "nuclear";
        case IdealKind::integral_dual: return "integral_dual";
        case IdealKind::max_kernel: return "max_kernel";
        default: return "min_kernel";
    }
}

/// Selects a polynomial ideal norm. Kernel kinds wrap a base descriptor;
/// only non-kernel bases may be wrapped.
struct IdealNormDescriptor {
    IdealKind kind = IdealKind::sup;
    Ball ball = Ball::L2;
    std::shared_ptr<IdealNormDescriptor> base;
    int rank = 0;  // min_kernel factorization rank

    static IdealNormDescriptor sup_norm(Ball b) { return {IdealKind::sup, b, nullptr, 0}; }
    static IdealNormDescriptor nuclear(Ball b) { return {IdealKind::nuclear, b, nullptr, 0}; }
    static IdealNormDescriptor integral(Ball b) { return {IdealKind::integral_dual, b, nullptr, 0}; }
    static IdealNormDescriptor max_kernel(IdealNormDescriptor base_desc) {
        IdealNormDescriptor d{IdealKind::max_kernel, base_desc.ball,
                              std::make_shared<IdealNormDescriptor>(base_desc), 0};
        return d;
    }
    static IdealNormDescriptor min_kernel(IdealNormDescriptor base_desc, int rank) {
        IdealNormDescriptor d{IdealKind::min_kernel, base_desc.ball,
                              std::make_shared<IdealNormDescriptor>(base_desc), rank};
        return d;
    }

    void validate() const {
        const bool wraps = kind == IdealKind::max_kernel || kind == IdealKind::min_kernel;
        if (wraps && !base) throw std::invalid_argument("kernel descriptor requires a base");
        if (wraps && (base->kind == IdealKind::max_kernel || base->kind == IdealKind::min_kernel))
            throw std::invalid_argument("kernel base must be a plain ideal norm");
        if (kind == IdealKind::min_kernel && rank < 1)
            throw std::invalid_argument("min_kernel rank must be >= 1");
    }
};

/// Lower-bound estimate of sup { |P(x)| : ||x||_ball <= 1 }.
inline SupResult sup_norm(const SymTensor& p, Ball ball, const OptBudget& budget,
                          std::span<const Eigen::VectorXd> seeds = {}) {
    return sup_abs_poly(p, ball, budget, seeds);
}

struct NuclearResult {
    double value = 0.0;
    double residual = 0.0;
    Decomposition witness;  // functionals: P = sum lambda_k (x'_k)^n
};

/// Upper-bound estimate of the nuclear norm
///   inf { sum |lambda_k| ||x'_k||_dual^n : P = sum lambda_k <x'_k, .>^n }.
/// A functional decomposition of the coefficient tensor is exactly a
/// projective decomposition on the dual ball.
inline NuclearResult nuclear_norm(const SymTensor& p, Ball ball, int rank, const OptBudget& budget,
                                  std::span<const Decomposition> seed_witnesses = {}) {
    ProjectiveResult r = projective_snorm(p, dual_ball(ball), rank, budget, seed_witnesses);
    return {r.value, r.residual, std::move(r.witness)};
}

struct IntegralResult {
    double value = 0.0;
    Eigen::VectorXd atom;  // best certified rank-one direction
};

/// Lower-bound ascent of sup { |<P, w>| : eps_s(w) <= 1 } over candidates
/// with a decomposition-cost certificate. Seeded with the sup-norm argmax,
/// so the classical sandwich sup <= integral holds for the estimates too.
inline IntegralResult integral_dual_norm(const SymTensor& p, Ball ball, const OptBudget& budget) {
    budget.validate();
    SupResult anchor = sup_abs_poly(p, ball, budget);
    std::vector<Eigen::VectorXd> seeds;
    if (anchor.argmax.size() == p.dim() && ball_norm(ball, anchor.argmax) > 0)
        seeds.push_back(anchor.argmax);
    const double v = eps_certified_dual_ascent(p, ball, budget, seeds);
    Eigen::VectorXd atom = anchor.argmax;
    return {std::max(v, anchor.value), std::move(atom)};
}

namespace detail {

// Mode-1 Gram matrix of the dense unfolding; its leading eigenvectors span
// the natural factorization subspace.
inline Eigen::MatrixXd mode_gram(const SymTensor& p) {
    const int d = p.dim(), n = p.order();
    const std::vector<double> a = to_dense(p);
    const long long rest = static_cast<long long>(a.size()) / d;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            double s = 0.0;
            const double* ri = a.data() + i * rest;
            const double* rj = a.data() + j * rest;
            for (long long r = 0; r < rest; ++r) s += ri[r] * rj[r];
            G(i, j) = s;
            G(j, i) = s;
        }
    (void)n;
    return G;
}

// Linear map q -> vec(compose(Q, T)) over sorted entries of Q.
inline Eigen::MatrixXd compose_matrix(const Eigen::MatrixXd& T, int order) {
    const int dp = static_cast<int>(T.rows());  // dim of Q's space
    const int d = static_cast<int>(T.cols());
    const long long rows = sym_dimension(order, d);
    const long long cols = sym_dimension(order, dp);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, cols);
    long long col = 0;
    for_each_sorted_index(order, dp, [&](const MultiIndex& gamma) {
        long long row = 0;
        for_each_sorted_index(order, d, [&](const MultiIndex& beta) {
            MultiIndex perm = gamma;
            double s = 0.0;
            do {
                double prod = 1.0;
                for (int k = 0; k < order; ++k) prod *= T(perm[k], beta[k]);
                s += prod;
            } while (std::next_permutation(perm.begin(), perm.end()));
            A(row, col) = s;
            ++row;
        });
        ++col;
    });
    return A;
}

inline SymTensor tensor_from_vector(const Eigen::VectorXd& q, int order, int dim) {
    SymTensor t(order, dim);
    Eigen::Index pos = 0;
    for_each_sorted_index(order, dim, [&](const MultiIndex& mi) {
        if (q(pos) != 0.0) t.set_entry(mi, q(pos));
        ++pos;
    });
    return t;
}

}  // namespace detail

/// Nested random subspace chain ending at the full space. Hilbert chains
/// come from a seeded rotation; l1/linf chains use coordinate subspaces so
/// restriction arithmetic stays exact for the inherited norm.
inline std::vector<Eigen::MatrixXd> sample_subspace_chain(int d, std::span<const int> dims,
                                                          Ball ball, std::uint64_t seed) {
    if (dims.empty()) throw std::invalid_argument("empty chain dims");
    for (std::size_t j = 0; j < dims.size(); ++j) {
        if (dims[j] < 1 || dims[j] > d) throw std::invalid_argument("chain dim out of range");
        if (j > 0 && dims[j] <= dims[j - 1])
            throw std::invalid_argument("chain dims must be strictly increasing");
    }
    auto rng = make_rng(seed, 0x5b5a);
    std::vector<Eigen::MatrixXd> chain;
    if (ball == Ball::L2) {
        const Eigen::MatrixXd Q = random_rotation(d, rng);
        for (int k : dims) {
            if (k == d)
                chain.push_back(Eigen::MatrixXd::Identity(d, d));
            else
                chain.push_back(Q.leftCols(k));
        }
    } else {
        std::vector<int> order(d);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (int k : dims) {
            if (k == d) {
                chain.push_back(Eigen::MatrixXd::Identity(d, d));
                continue;
            }
            std::vector<int> cols(order.begin(), order.begin() + k);
            std::sort(cols.begin(), cols.end());
            Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, k);
            for (int j = 0; j < k; ++j) B(cols[j], j) = 1.0;
            chain.push_back(std::move(B));
        }
    }
    return chain;
}

struct MaxKernelResult {
    std::vector<double> values;  // base norm of each restriction
    double value = 0.0;          // sup along the chain
};

/// Supremum of base-norm restrictions along a nested subspace chain.
/// Restrictions are exact basis changes; witnesses found on one level seed
/// the next, making the value sequence monotone and attained at the full
/// space when the chain ends there.
inline MaxKernelResult max_kernel_norm(const SymTensor& p, const IdealNormDescriptor& base,
                                       std::span<const Eigen::MatrixXd> chain,
                                       const OptBudget& budget) {
    base.validate();
    budget.validate();
    if (chain.empty()) throw std::invalid_argument("empty subspace chain");
    MaxKernelResult out;
    std::vector<Eigen::VectorXd> vec_seed;       // sup / integral forwarding
    std::vector<Decomposition> nuc_seed;         // nuclear forwarding
    const Eigen::MatrixXd* prev = nullptr;

    for (const auto& B : chain) {
        if (B.rows() != p.dim()) throw std::invalid_argument("chain basis has wrong ambient dim");
        SymTensor pj = compose(p, B);
        double v = 0.0;
        switch (base.kind) {
            case IdealKind::sup: {
                std::vector<Eigen::VectorXd> seeds;
                if (prev && !vec_seed.empty()) seeds.push_back(B.transpose() * (*prev * vec_seed.front()));
                SupResult r = sup_norm(pj, base.ball, budget, seeds);
                v = r.value;
                vec_seed.assign(1, r.argmax);
                break;
            }
            case IdealKind::nuclear: {
                std::vector<Decomposition> seeds;
                if (prev && !nuc_seed.empty()) {
                    Decomposition lifted;
                    for (const auto& t : nuc_seed.front().terms)
                        lifted.terms.push_back({t.lambda, B.transpose() * (*prev * t.x)});
                    seeds.push_back(std::move(lifted));
                }
                NuclearResult r = nuclear_norm(pj, base.ball,
                                               default_rank(p.order(), pj.dim()), budget, seeds);
                v = r.value;
                nuc_seed.assign(1, r.witness);
                break;
            }
            case IdealKind::integral_dual: {
                IntegralResult r = integral_dual_norm(pj, base.ball, budget);
                if (prev && !vec_seed.empty()) {
                    Eigen::VectorXd lifted = B.transpose() * (*prev * vec_seed.front());
                    if (ball_norm(base.ball, lifted) > 0)
                        r.value = std::max(r.value,
                                           std::abs(pj.evaluate(normalize_to_sphere(base.ball, lifted))));
                }
                v = r.value;
                vec_seed.assign(1, r.atom);
                break;
            }
            default:
                throw std::invalid_argument("max_kernel base must be a plain ideal norm");
        }
        out.values.push_back(v);
        out.value = std::max(out.value, v);
        prev = &B;
    }
    return out;
}

/// Factorization witness P = Q o T with T : R^d -> R^{d'}.
struct Factorization {
    Eigen::MatrixXd T;
    SymTensor Q{1, 1};
};

struct MinKernelResult {
    bool feasible = false;
    double value = 0.0;
    double residual = 0.0;
    Factorization factor;
};

/// Upper-bound search for inf { ||Q||_base ||T||^n : P = Q o T, rank T <= r }
/// by alternating a linear solve for Q with candidate maps T (identity,
/// leading Gram subspace, coordinate selections, seeded random frames).
/// With r >= d the identity factorization reconciles the value with the
/// base norm of P itself. Rank-deficient infeasibility is reported, not
/// thrown.
inline MinKernelResult min_kernel_norm(const SymTensor& p, const IdealNormDescriptor& base, int r,
                                       const OptBudget& budget) {
    base.validate();
    budget.validate();
    if (r < 1) throw std::invalid_argument("min_kernel rank must be >= 1");
    if (base.kind == IdealKind::max_kernel || base.kind == IdealKind::min_kernel)
        throw std::invalid_argument("min_kernel base must be a plain ideal norm");
    const int n = p.order(), d = p.dim();
    const int dp = std::min(r, d);
    const Eigen::VectorXd b = [&] {
        Eigen::VectorXd v(sym_dimension(n, d));
        Eigen::Index pos = 0;
        for_each_sorted_index(n, d, [&](const MultiIndex& mi) { v(pos++) = p.entry(mi); });
        return v;
    }();
    const double feas_tol = budget.tolerance * (1.0 + b.norm());

    SupResult p_anchor = sup_abs_poly(p, base.ball, budget);  // for cross-seeding sup bases

    MinKernelResult out;
    double best_resid_seen = std::numeric_limits<double>::infinity();
    auto evaluate_candidate = [&](Eigen::MatrixXd T) {
        const double opn = operator_norm(base.ball, T);
        if (opn <= 0) return;
        T /= opn;
        Eigen::MatrixXd A = detail::compose_matrix(T, n);
        Eigen::VectorXd q = A.completeOrthogonalDecomposition().solve(b);
        const double resid = (A * q - b).norm();
        best_resid_seen = std::min(best_resid_seen, resid);
        if (resid > feas_tol) return;
        SymTensor Q = detail::tensor_from_vector(q, n, dp);
        double qn = 0.0;
        switch (base.kind) {
            case IdealKind::sup: {
                std::vector<Eigen::VectorXd> seeds;
                if (p_anchor.argmax.size() == d) {
                    Eigen::VectorXd tx = T * p_anchor.argmax;
                    if (ball_norm(base.ball, tx) > 0) seeds.push_back(std::move(tx));
                }
                qn = sup_norm(Q, base.ball, budget, seeds).value;
                break;
            }
            case IdealKind::nuclear:
                qn = nuclear_norm(Q, base.ball, default_rank(n, dp), budget).value;
                break;
            default:
                qn = integral_dual_norm(Q, base.ball, budget).value;
                break;
        }
        if (!out.feasible || qn < out.value) {
            out.feasible = true;
            out.value = qn;
            out.residual = resid;
            out.factor = {T, Q};
        }
    };

    if (r >= d) {
        evaluate_candidate(Eigen::MatrixXd::Identity(d, d));
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::mode_gram(p));
        Eigen::MatrixXd top(dp, d);
        for (int k = 0; k < dp; ++k) top.row(k) = es.eigenvectors().col(d - 1 - k).transpose();
        evaluate_candidate(top);

        // coordinate selections
        std::vector<int> idx(d);
        std::iota(idx.begin(), idx.end(), 0);
        std::vector<std::vector<int>> subsets;
        std::vector<int> pick;
        auto rec = [&](auto&& self, int start) -> void {
            if (static_cast<int>(pick.size()) == dp) {
                subsets.push_back(pick);
                return;
            }
            for (int i = start; i < d && subsets.size() < 60; ++i) {
                pick.push_back(i);
                self(self, i + 1);
                pick.pop_back();
            }
        };
        rec(rec, 0);
        for (const auto& s : subsets) {
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(dp, d);
            for (int k = 0; k < dp; ++k) T(k, s[k]) = 1.0;
            evaluate_candidate(std::move(T));
        }

        auto rng = make_rng(budget.seed, 0x31f0);
        for (int t = 0; t < budget.restarts; ++t) {
            Eigen::MatrixXd Q = random_rotation(d, rng);
            evaluate_candidate(Q.topRows(dp));
        }
    }
    if (!out.feasible && std::isfinite(best_resid_seen)) out.residual = best_resid_seen;
    return out;
}

struct AxiomReport {
    double lhs = 0.0;  // ||P o T||
    double rhs = 0.0;  // ||P|| * ||T||^n
    double op_norm = 0.0;
    bool pass = false;
};

/// Checks the composition inequality ||P o T|| <= ||P|| ||T||^n within a 2%
/// band, matching bound directions on both sides (witness cross-seeding
/// keeps estimate asymmetry from producing spurious violations).
inline AxiomReport ideal_axiom_check(const IdealNormDescriptor& base, const SymTensor& p,
                                     const Eigen::MatrixXd& T, const OptBudget& budget) {
    base.validate();
    budget.validate();
    AxiomReport rep;
    rep.op_norm = operator_norm(base.ball, T);
    const int n = p.order();
    const SymTensor pt = compose(p, T);
    const double opn_pow = std::pow(rep.op_norm, n);

    switch (base.kind) {
        case IdealKind::sup: {
            SupResult lhs = sup_norm(pt, base.ball, budget);
            rep.lhs = lhs.value;
            std::vector<Eigen::VectorXd> seeds;
            if (lhs.argmax.size() > 0 && rep.op_norm > 0) {
                Eigen::VectorXd tx = T * lhs.argmax;
                if (ball_norm(base.ball, tx) > 0) seeds.push_back(std::move(tx));
            }
            rep.rhs = sup_norm(p, base.ball, budget, seeds).value * opn_pow;
            break;
        }
        case IdealKind::nuclear: {
            NuclearResult pr = nuclear_norm(p, base.ball, default_rank(n, p.dim()), budget);
            rep.rhs = pr.value * opn_pow;
            Decomposition pushed;
            double lhs_direct = 0.0;  // pushforward witness cost, unit atoms
            for (const auto& t : pr.witness.terms) {
                Eigen::VectorXd ty = T.transpose() * t.x;
                const double nn = ball_norm(dual_ball(base.ball), ty);
                if (nn > 0) pushed.terms.push_back({t.lambda * std::pow(nn, n), ty / nn});
                lhs_direct += std::abs(t.lambda) * std::pow(nn, n);
            }
            if (!pt.empty()) {
                std::vector<Decomposition> seeds{pushed};
                NuclearResult lr =
                    nuclear_norm(pt, base.ball, default_rank(n, pt.dim()), budget, seeds);
                rep.lhs = std::min(lr.value, lhs_direct);
            } else {
                rep.lhs = 0.0;
            }
            break;
        }
        default: {
            IntegralResult lhs = integral_dual_norm(pt, base.ball, budget);
            rep.lhs = lhs.value;
            rep.rhs = integral_dual_norm(p, base.ball, budget).value * opn_pow;
            break;
        }
    }
    rep.pass = rep.lhs <= rep.rhs * 1.02 + 1e-12;
    return rep;
}

}  // namespace symt
