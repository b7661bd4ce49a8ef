#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "symt/balls.hpp"
#include "symt/optimize.hpp"
#include "symt/tensor.hpp"

namespace symt {

/// Weighted rank-one representation sum_k lambda_k (x_k)^{tensor n}.
struct DecompTerm {
    double lambda = 0.0;
    Eigen::VectorXd x;
};

struct Decomposition {
    std::vector<DecompTerm> terms;

    double cost(Ball ball, int order) const {
        double c = 0.0;
        for (const auto& t : terms) c += std::abs(t.lambda) * std::pow(ball_norm(ball, t.x), order);
        return c;
    }

    SymTensor reconstruct(int order, int dim) const {
        SymTensor acc(order, dim);
        for (const auto& t : terms) acc += t.lambda * sym_power(t.x, order);
        return acc;
    }
};

struct ProjResult {
    bool feasible = false;
    double value = 0.0;
    double residual = 0.0;
    Decomposition witness;
};

/// Raised when a rank-capped decomposition cannot reproduce the target
/// within the budget tolerance.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline Eigen::VectorXd vectorize(const SymTensor& t) {
    Eigen::VectorXd v(sym_dimension(t.order(), t.dim()));
    Eigen::Index pos = 0;
    for_each_sorted_index(t.order(), t.dim(), [&](const MultiIndex& mi) { v(pos++) = t.entry(mi); });
    return v;
}

inline Eigen::VectorXd vectorize_power(const Eigen::VectorXd& x, int order) {
    Eigen::VectorXd v(sym_dimension(order, static_cast<int>(x.size())));
    Eigen::Index pos = 0;
    for_each_sorted_index(order, static_cast<int>(x.size()), [&](const MultiIndex& mi) {
        double prod = 1.0;
        for (int i : mi) prod *= x(i);
        v(pos++) = prod;
    });
    return v;
}

// A few symmetric power-iteration steps on the residual tensor; the classic
// greedy rank-one pursuit used to grow the dictionary.
inline Eigen::VectorXd pursuit_direction(const SymTensor& residual, Ball ball,
                                         Eigen::VectorXd start, int iterations) {
    Eigen::VectorXd x = normalize_to_sphere(ball, std::move(start));
    for (int it = 0; it < iterations; ++it) {
        const double raw = residual.evaluate(x);
        Eigen::VectorXd g = residual.gradient(x);
        if (raw < 0) g = -g;
        if (g.norm() < 1e-300) break;
        Eigen::VectorXd next = normalize_to_sphere(ball, std::move(g));
        if ((next - x).lpNorm<Eigen::Infinity>() < 1e-14) {
            x = std::move(next);
            break;
        }
        x = std::move(next);
    }
    return x;
}

// Canonical sign (first nonzero positive); atoms x and -x span the same term.
inline Eigen::VectorXd canonical_sign(Eigen::VectorXd x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x(i) != 0.0) {
            if (x(i) < 0) x = -x;
            break;
        }
    }
    return x;
}

struct Dictionary {
    std::vector<Eigen::VectorXd> atoms;  // unit vectors in the ball norm
    Eigen::MatrixXd G;                   // columns = vectorized powers

    void add(Eigen::VectorXd x, Ball ball, int order, int cap) {
        if (static_cast<int>(atoms.size()) >= cap) return;
        if (ball_norm(ball, x) <= 0) return;
        x = canonical_sign(normalize_to_sphere(ball, std::move(x)));
        for (const auto& a : atoms)
            if ((a - x).lpNorm<Eigen::Infinity>() < 1e-12) return;
        atoms.push_back(std::move(x));
    }

    void build(int order) {
        const int d = atoms.empty() ? 1 : static_cast<int>(atoms[0].size());
        G.resize(sym_dimension(order, d), static_cast<Eigen::Index>(atoms.size()));
        for (std::size_t k = 0; k < atoms.size(); ++k) G.col(k) = vectorize_power(atoms[k], order);
    }
};

// min ||lambda||_1 s.t. G lambda = b, via ADMM with an affine projection.
inline Eigen::VectorXd basis_pursuit(const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                                     const Eigen::VectorXd& lambda0, int iterations) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(G);
    auto project_affine = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return v - cod.solve(G * v - b);
    };
    const double scale = std::max(1e-300, lambda0.cwiseAbs().maxCoeff());
    const double rho = 1.0 / scale;
    Eigen::VectorXd z = lambda0, u = Eigen::VectorXd::Zero(G.cols()), lam = lambda0;
    for (int it = 0; it < iterations; ++it) {
        lam = project_affine(z - u);
        Eigen::VectorXd w = lam + u;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const double m = std::abs(w(i)) - 1.0 / rho;
            z(i) = m > 0 ? (w(i) > 0 ? m : -m) : 0.0;
        }
        u += lam - z;
        if ((lam - z).lpNorm<Eigen::Infinity>() < 1e-14 * scale) break;
    }
    return project_affine(z);
}

}  // namespace detail

/// Upper-bound estimate of the projective symmetric norm
///   inf { sum |lambda_k| ||x_k||^n : w = sum lambda_k (x_k)^{tensor n} },
/// by alternating dictionary growth (power-iteration pursuit, eigen and
/// coordinate atoms, random fills, forwarded witnesses) with an l1
/// coefficient solve and exact refits on pruned supports.
inline ProjResult projective_decompose(const SymTensor& w, Ball ball, int rank_cap,
                                       const OptBudget& budget,
                                       std::span<const Decomposition> seed_witnesses = {}) {
    budget.validate();
    if (rank_cap < 1) throw std::invalid_argument("rank cap must be >= 1");
    const int n = w.order(), d = w.dim();
    const Eigen::VectorXd b = detail::vectorize(w);
    const double bscale = b.lpNorm<Eigen::Infinity>();

    ProjResult best;
    if (bscale == 0.0) {
        best.feasible = true;
        return best;
    }

    auto rng = make_rng(budget.seed, 0xdec0);
    const double feas_tol = budget.tolerance * (1.0 + b.norm());

    auto try_candidate = [&](const Eigen::VectorXd& lam, const detail::Dictionary& dict) {
        const double resid = (dict.G * lam - b).norm();
        if (resid > feas_tol) return;
        double cost = lam.lpNorm<1>();
        if (!best.feasible || cost < best.value) {
            best.feasible = true;
            best.value = cost;
            best.residual = resid;
            best.witness.terms.clear();
            for (Eigen::Index k = 0; k < lam.size(); ++k)
                if (std::abs(lam(k)) > 1e-14 * std::max(1.0, lam.cwiseAbs().maxCoeff()))
                    best.witness.terms.push_back({lam(k), dict.atoms[k]});
        }
    };

    for (int restart = 0; restart < budget.restarts; ++restart) {
        detail::Dictionary dict;
        for (const auto& seed : seed_witnesses)
            for (const auto& t : seed.terms) dict.add(t.x, ball, n, rank_cap);
        for (int i = 0; i < d; ++i) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
            e(i) = 1.0;
            dict.add(std::move(e), ball, n, rank_cap);
        }
        if (n == 2) {
            Eigen::MatrixXd M(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    MultiIndex mi{std::min(i, j), std::max(i, j)};
                    M(i, j) = w.entry(mi);
                }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
            for (int i = 0; i < d; ++i) dict.add(es.eigenvectors().col(i), ball, n, rank_cap);
        }
        // greedy pursuit: peel rank-one terms off the running residual
        {
            SymTensor residual = w;
            for (int round = 0; round < std::min(rank_cap, 2 * d + 4); ++round) {
                if (residual.max_abs_entry() < 1e-13 * bscale) break;
                Eigen::VectorXd x0 = restart == 0 && round == 0
                                         ? Eigen::VectorXd::Ones(d)
                                         : random_unit(ball, d, rng);
                Eigen::VectorXd a = detail::pursuit_direction(residual, ball, x0, 60);
                dict.add(a, ball, n, rank_cap);
                const Eigen::VectorXd pa = detail::vectorize_power(
                    normalize_to_sphere(ball, a), n);
                const double coef = pa.dot(detail::vectorize(residual)) / pa.squaredNorm();
                residual -= coef * sym_power(normalize_to_sphere(ball, a), n);
            }
        }
        while (static_cast<int>(dict.atoms.size()) < rank_cap)
            dict.add(random_unit(ball, d, rng), ball, n, rank_cap);
        dict.build(n);

        // feasibility: minimal-norm exact solve, then l1 polish
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(dict.G);
        Eigen::VectorXd lam0 = cod.solve(b);
        try_candidate(lam0, dict);
        if ((dict.G * lam0 - b).norm() > feas_tol) continue;

        Eigen::VectorXd lam = detail::basis_pursuit(dict.G, b, lam0,
                                                    std::max(300, budget.iterations));
        try_candidate(lam, dict);

        // prune to candidate supports and refit exactly
        const double lmax = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
        for (double rel : {1e-2, 1e-4, 1e-7}) {
            std::vector<int> support;
            for (Eigen::Index k = 0; k < lam.size(); ++k)
                if (std::abs(lam(k)) > rel * lmax) support.push_back(static_cast<int>(k));
            if (support.empty() || static_cast<int>(support.size()) == lam.size()) continue;
            Eigen::MatrixXd Gs(dict.G.rows(), support.size());
            for (std::size_t k = 0; k < support.size(); ++k) Gs.col(k) = dict.G.col(support[k]);
            Eigen::VectorXd ls = Gs.completeOrthogonalDecomposition().solve(b);
            Eigen::VectorXd full = Eigen::VectorXd::Zero(lam.size());
            for (std::size_t k = 0; k < support.size(); ++k) full(support[k]) = ls(k);
            try_candidate(full, dict);
        }
    }
    return best;
}

}  // namespace symt
