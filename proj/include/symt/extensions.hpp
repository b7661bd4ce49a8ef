#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "symt/decompose.hpp"
#include "symt/ideals.hpp"
#include "symt/multi_index.hpp"
#include "symt/optimize.hpp"
#include "symt/tensor.hpp"

namespace symt {

/// Eventually-constant sequence: x_k = head_k for k < len(head), x_k = tail
/// beyond. Models both the base sequence space (tail = 0) and its bidual.
struct TailVector {
    Eigen::VectorXd head;
    double tail = 0.0;

    double model_norm() const {
        double m = std::abs(tail);
        for (Eigen::Index i = 0; i < head.size(); ++i) m = std::max(m, std::abs(head(i)));
        return m;
    }
    bool is_c0() const { return tail == 0.0; }
    double coord(Eigen::Index k) const { return k < head.size() ? head(k) : tail; }
};

/// Isometric embedding of a base-space element: constant continuation by 0.
inline TailVector canonical_embed(const Eigen::VectorXd& x) { return {x, 0.0}; }

/// First s coordinates of z as a base-space vector (tail dropped).
inline Eigen::VectorXd stage_truncate(const TailVector& z, int s) {
    Eigen::VectorXd x(s);
    for (int k = 0; k < s; ++k) x(k) = z.coord(k);
    return x;
}

/// Homogeneous polynomial on the sequence model: a finitely supported
/// banded coefficient table plus a geometric diagonal a_k = c rho^k
/// (1-based k >= offset). Absolute summability of the diagonal makes every
/// extension below a finite closed-form computation.
struct CoefficientFamily {
    int n = 1;
    std::map<MultiIndex, double> banded;  // sorted 0-based indices over N
    struct Diagonal {
        double c = 0.0;
        double rho = 0.0;
        int offset = 1;
    } diag;

    void validate() const {
        if (n < 1 || n > kMaxOrder) throw std::invalid_argument("family degree out of range");
        if (std::abs(diag.rho) >= 1.0 && diag.c != 0.0)
            throw std::invalid_argument("diagonal ratio must satisfy |rho| < 1");
        if (diag.offset < 1) throw std::invalid_argument("diagonal offset must be >= 1");
        for (const auto& [mi, v] : banded) {
            (void)v;
            if (static_cast<int>(mi.size()) != n || !is_sorted_index(mi) || mi.front() < 0)
                throw std::invalid_argument("banded index malformed");
        }
    }

    // diagonal coefficient of coordinate k0 (0-based)
    double diag_coeff(int k0) const {
        const int k = k0 + 1;
        if (diag.c == 0.0 || k < diag.offset) return 0.0;
        return diag.c * std::pow(diag.rho, k);
    }

    // sum of a_k over 1-based k >= from_k, closed form
    double diag_tail_sum(int from_k) const {
        if (diag.c == 0.0) return 0.0;
        const int start = std::max(from_k, diag.offset);
        return diag.c * std::pow(diag.rho, start) / (1.0 - diag.rho);
    }

    double diag_tail_abs(int from_k) const {
        if (diag.c == 0.0) return 0.0;
        const int start = std::max(from_k, diag.offset);
        return std::abs(diag.c) * std::pow(std::abs(diag.rho), start) / (1.0 - std::abs(diag.rho));
    }

    // number of leading coordinates touched by the banded part
    int band_extent() const {
        int e = 0;
        for (const auto& [mi, v] : banded) {
            (void)v;
            e = std::max(e, mi.back() + 1);
        }
        return e;
    }

    // coefficient mass: bounds |P| on the model ball and every multilinear value
    double mass() const {
        double m = diag_tail_abs(1);
        for (const auto& [mi, v] : banded) m += multinomial_weight(mi) * std::abs(v);
        return m;
    }

    /// Value on a base-space vector (implicit zero continuation).
    double eval_c0(const Eigen::VectorXd& x) const {
        double acc = 0.0;
        for (const auto& [mi, v] : banded) {
            double prod = multinomial_weight(mi) * v;
            for (int i : mi) prod *= (i < x.size() ? x(i) : 0.0);
            acc += prod;
        }
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            const double a = diag_coeff(static_cast<int>(k));
            if (a != 0.0) acc += a * std::pow(x(k), n);
        }
        return acc;
    }

    /// Iterated extension value on a tail vector: banded part on the
    /// materialized sequence, diagonal head terms exactly, geometric tail
    /// in closed form. Restricts to eval_c0 exactly when tail = 0.
    double eval_extended(const TailVector& z) const {
        const int L = static_cast<int>(z.head.size());
        double acc = 0.0;
        for (const auto& [mi, v] : banded) {
            double prod = multinomial_weight(mi) * v;
            for (int i : mi) prod *= z.coord(i);
            acc += prod;
        }
        for (int k = 0; k < L; ++k) {
            const double a = diag_coeff(k);
            if (a != 0.0) acc += a * std::pow(z.head(k), n);
        }
        if (z.tail != 0.0) acc += std::pow(z.tail, n) * diag_tail_sum(L + 1);
        return acc;
    }

    /// Extended symmetric multilinear value at n tail vectors, closed form.
    double multilinear_extended(std::span<const TailVector> args) const {
        if (static_cast<int>(args.size()) != n)
            throw std::invalid_argument("multilinear_extended: argument count != degree");
        int kmax = 0;
        double tails = 1.0;
        for (const auto& z : args) {
            kmax = std::max<int>(kmax, static_cast<int>(z.head.size()));
            tails *= z.tail;
        }
        double acc = 0.0;
        for (const auto& [mi, v] : banded) {
            MultiIndex perm = mi;
            double s = 0.0;
            do {
                double prod = 1.0;
                for (int j = 0; j < n; ++j) prod *= args[j].coord(perm[j]);
                s += prod;
            } while (std::next_permutation(perm.begin(), perm.end()));
            acc += v * s;
        }
        for (int k = 0; k < kmax; ++k) {
            const double a = diag_coeff(k);
            if (a == 0.0) continue;
            double prod = a;
            for (const auto& z : args) prod *= z.coord(k);
            acc += prod;
        }
        if (tails != 0.0) acc += tails * diag_tail_sum(kmax + 1);
        return acc;
    }

    /// Base-space truncation as a symmetric tensor on R^L.
    SymTensor truncate_to_tensor(int L) const {
        if (band_extent() > L)
            throw std::invalid_argument("truncation shorter than the banded support");
        SymTensor t(n, L);
        for (const auto& [mi, v] : banded) t.add_entry(mi, v);
        for (int k = 0; k < L; ++k) {
            const double a = diag_coeff(k);
            if (a != 0.0) t.add_entry(MultiIndex(n, k), a);
        }
        return t;
    }

    /// Extended-side truncation on R^{L+1}: one synthetic tail coordinate
    /// carries the closed-form diagonal tail mass.
    SymTensor lift_to_tensor(int L) const {
        if (band_extent() > L)
            throw std::invalid_argument("truncation shorter than the banded support");
        SymTensor t(n, L + 1);
        for (const auto& [mi, v] : banded) t.add_entry(mi, v);
        for (int k = 0; k < L; ++k) {
            const double a = diag_coeff(k);
            if (a != 0.0) t.add_entry(MultiIndex(n, k), a);
        }
        const double tail_mass = diag_tail_sum(L + 1);
        if (tail_mass != 0.0) t.add_entry(MultiIndex(n, L), tail_mass);
        return t;
    }
};

/// Extended evaluator produced by the iterated extension; on the canonical
/// image it reproduces the original polynomial exactly.
struct ExtendedPolynomial {
    CoefficientFamily family;
    double operator()(const TailVector& z) const { return family.eval_extended(z); }
};

inline ExtendedPolynomial ab_extend(CoefficientFamily family) {
    family.validate();
    return {std::move(family)};
}

struct UniteratedReport {
    std::vector<int> stages;
    std::vector<double> trace;
    double value = 0.0;
    bool converged = false;
};

/// Single-limit extension: evaluate the polynomial at stage truncations and
/// report the stabilized value. Absolute summability forces convergence; a
/// stage list that stops too early yields an inconclusive report.
inline UniteratedReport uniterated_extend(const CoefficientFamily& family, const TailVector& z,
                                          std::span<const int> stages, double tol = 1e-9) {
    family.validate();
    if (stages.empty()) throw std::invalid_argument("uniterated_extend: empty stage list");
    for (std::size_t i = 0; i < stages.size(); ++i) {
        if (stages[i] < 1) throw std::invalid_argument("stages must be >= 1");
        if (i > 0 && stages[i] <= stages[i - 1])
            throw std::invalid_argument("stages must be increasing");
    }
    UniteratedReport rep;
    rep.stages.assign(stages.begin(), stages.end());
    for (int s : stages) rep.trace.push_back(family.eval_c0(stage_truncate(z, s)));
    rep.value = rep.trace.back();
    if (rep.trace.size() == 1)
        rep.converged = true;
    else
        rep.converged = std::abs(rep.trace.back() - rep.trace[rep.trace.size() - 2]) <= tol;
    return rep;
}

struct ExtensionGapReport {
    double base_value = 0.0;  // sup over the tail-0 slice
    double extended_value = 0.0;
    double rel_gap = 0.0;
};

/// Sup norms of P over the base-model ball (head length L, tail 0) and of
/// its extension over the full model ball (head plus one tail variable).
inline ExtensionGapReport extension_norm_gap(const CoefficientFamily& family, int L,
                                             const OptBudget& budget) {
    family.validate();
    budget.validate();
    if (L < family.band_extent())
        throw std::invalid_argument("head length shorter than the banded support");
    if (family.diag_tail_abs(L + 1) >= 1e-4)
        throw std::invalid_argument("head length leaves diagonal tail mass >= 1e-4");

    ExtensionGapReport rep;
    rep.base_value =
        sup_abs_on_cube(L, [&](const Eigen::VectorXd& x) { return family.eval_c0(x); }, budget)
            .value;
    rep.extended_value =
        sup_abs_on_cube(L + 1,
                        [&](const Eigen::VectorXd& v) {
                            TailVector z{v.head(L), v(L)};
                            return family.eval_extended(z);
                        },
                        budget)
            .value;
    const double denom = std::max({rep.base_value, rep.extended_value, 1e-12});
    rep.rel_gap = std::abs(rep.base_value - rep.extended_value) / denom;
    return rep;
}

struct PreservationReport {
    double before = 0.0;
    double after = 0.0;
    double rel_gap = 0.0;
};

/// Ideal norm of the truncated polynomial before and after extension; the
/// extended side lifts the diagonal tail mass onto one synthetic
/// coordinate (the rank-one lifting of the tail functional).
inline PreservationReport ideal_norm_preservation(const CoefficientFamily& family, IdealKind kind,
                                                  int L, const OptBudget& budget) {
    family.validate();
    budget.validate();
    if (kind != IdealKind::sup && kind != IdealKind::nuclear)
        throw std::invalid_argument("preservation supports sup and nuclear ideals");
    const SymTensor before_t = family.truncate_to_tensor(L);
    const SymTensor after_t = family.lift_to_tensor(L);
    PreservationReport rep;
    if (kind == IdealKind::sup) {
        SupResult b = sup_norm(before_t, Ball::Linf, budget);
        std::vector<Eigen::VectorXd> seeds;
        if (b.argmax.size() == L) {
            Eigen::VectorXd lifted(L + 1);
            lifted.head(L) = b.argmax;
            lifted(L) = 1.0;
            seeds.push_back(std::move(lifted));
        }
        rep.before = b.value;
        rep.after = sup_norm(after_t, Ball::Linf, budget, seeds).value;
    } else {
        NuclearResult b = nuclear_norm(before_t, Ball::Linf, default_rank(family.n, L), budget);
        rep.before = b.value;
        Decomposition lifted;
        for (const auto& t : b.witness.terms) {
            Eigen::VectorXd x(L + 1);
            x.head(L) = t.x;
            x(L) = 0.0;
            lifted.terms.push_back({t.lambda, std::move(x)});
        }
        const double tail_mass = family.diag_tail_sum(L + 1);
        if (tail_mass != 0.0) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(L + 1);
            e(L) = 1.0;
            lifted.terms.push_back({tail_mass, std::move(e)});
        }
        std::vector<Decomposition> seeds{lifted};
        rep.after =
            nuclear_norm(after_t, Ball::Linf, default_rank(family.n, L + 1), budget, seeds).value;
    }
    rep.rel_gap = std::abs(rep.before - rep.after) / std::max({rep.before, rep.after, 1e-12});
    return rep;
}

struct QRadiusReport {
    std::vector<double> base_norms;
    std::vector<double> extended_norms;
    double base_proxy = 0.0;
    double extended_proxy = 0.0;
    bool base_member = false;
    bool extended_member = false;
    bool agree = false;
};

/// Bounded-type membership test for a finite polynomial series: the limsup
/// proxy is the max of ||P_k||^{1/k} over a tail window of degrees, and
/// membership requires it below 1 - margin. The same test runs on the
/// per-degree extensions; the two verdicts are reported for comparison.
inline QRadiusReport q_radius(std::span<const CoefficientFamily> series, IdealKind kind,
                              const OptBudget& budget, double margin = 1e-6) {
    if (series.empty()) throw std::invalid_argument("q_radius: empty series");
    if (kind != IdealKind::sup && kind != IdealKind::nuclear)
        throw std::invalid_argument("q_radius supports sup and nuclear ideals");
    const int K = static_cast<int>(series.size());
    for (int k = 0; k < K; ++k) {
        series[k].validate();
        if (series[k].n != k + 1)
            throw std::invalid_argument("series degree k must hold a k-homogeneous family");
    }

    QRadiusReport rep;
    for (int k = 0; k < K; ++k) {
        const CoefficientFamily& f = series[k];
        int L = f.band_extent();
        if (f.diag.c != 0.0) {
            int reach = f.diag.offset;
            while (f.diag_tail_abs(reach + 1) >= 1e-10 && reach < 24) ++reach;
            L = std::max(L, reach);
        }
        L = std::max(L, 1);
        if (kind == IdealKind::sup) {
            rep.base_norms.push_back(
                sup_abs_on_cube(L, [&](const Eigen::VectorXd& x) { return f.eval_c0(x); }, budget)
                    .value);
            rep.extended_norms.push_back(
                sup_abs_on_cube(L + 1,
                                [&](const Eigen::VectorXd& v) {
                                    TailVector z{v.head(L), v(L)};
                                    return f.eval_extended(z);
                                },
                                budget)
                    .value);
        } else {
            const int Lt = std::min(L, kMaxDim - 1);
            const SymTensor before_t = f.truncate_to_tensor(std::max(Lt, f.band_extent()));
            const SymTensor after_t = f.lift_to_tensor(std::max(Lt, f.band_extent()));
            rep.base_norms.push_back(
                before_t.empty() ? 0.0
                                 : nuclear_norm(before_t, Ball::Linf,
                                                default_rank(f.n, before_t.dim()), budget)
                                       .value);
            rep.extended_norms.push_back(
                after_t.empty() ? 0.0
                                : nuclear_norm(after_t, Ball::Linf,
                                               default_rank(f.n, after_t.dim()), budget)
                                      .value);
        }
    }

    const int window = std::min(4, K);
    auto proxy = [&](const std::vector<double>& norms) {
        double m = 0.0;
        for (int k = K - window; k < K; ++k)
            m = std::max(m, std::pow(norms[k], 1.0 / static_cast<double>(k + 1)));
        return m;
    };
    rep.base_proxy = proxy(rep.base_norms);
    rep.extended_proxy = proxy(rep.extended_norms);
    rep.base_member = rep.base_proxy < 1.0 - margin;
    rep.extended_member = rep.extended_proxy < 1.0 - margin;
    rep.agree = rep.base_member == rep.extended_member;
    return rep;
}

}  // namespace symt
