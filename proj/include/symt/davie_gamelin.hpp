#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "symt/extensions.hpp"

namespace symt {

/// Truncation-to-stage-s map from the tail-vector model into the base
/// space; never expands the model norm.
struct StageOperator {
    int stage = 1;

    Eigen::VectorXd operator()(const TailVector& z) const { return stage_truncate(z, stage); }
    TailVector embed(const TailVector& z) const { return {stage_truncate(z, stage), 0.0}; }
};

struct DGConfig {
    double epsilon = 1e-2;
    int degree = 0;       // 0 = take from the family
    int points = 0;       // 0 = take from the argument list
    double term_bound = 0.0;  // C; 0 = derive from coefficient mass
    int max_stage = 4096;
    std::uint64_t seed = 1;

    void validate() const {
        if (epsilon <= 0) throw std::invalid_argument("epsilon must be positive");
        if (max_stage < 1) throw std::invalid_argument("max_stage must be >= 1");
        if (term_bound < 0) throw std::invalid_argument("term bound must be nonnegative");
    }
};

struct LocalDeterminationReport {
    std::vector<int> stages;
    std::vector<double> errors;  // |P_ext(z) - P(R_s z)|
    bool pass = false;           // eventually monotone decreasing below tol
};

/// Stage-convergence surrogate of local determination: the extension value
/// is the limit of values at stage truncations.
inline LocalDeterminationReport local_determination_check(const TailVector& z,
                                                          const CoefficientFamily& family,
                                                          std::span<const int> stages,
                                                          double tol = 1e-10) {
    family.validate();
    if (stages.empty()) throw std::invalid_argument("empty stage list");
    LocalDeterminationReport rep;
    rep.stages.assign(stages.begin(), stages.end());
    const double target = family.eval_extended(z);
    for (std::size_t i = 1; i < stages.size(); ++i)
        if (stages[i] <= stages[i - 1]) throw std::invalid_argument("stages must be increasing");
    for (int s : stages)
        rep.errors.push_back(std::abs(target - family.eval_c0(stage_truncate(z, s))));
    bool tail_monotone = true;
    if (rep.errors.size() >= 2) {
        const std::size_t last = rep.errors.size() - 1;
        tail_monotone = rep.errors[last] <= rep.errors[last - 1] + 1e-15;
    }
    rep.pass = tail_monotone && rep.errors.back() <= tol;
    return rep;
}

struct GreedyReport {
    bool success = false;
    std::vector<StageOperator> operators;
    std::vector<int> stages;
    double max_term = 0.0;     // largest |multilinear value| encountered
    std::string violation;     // set when max_stage is exhausted
};

namespace detail_dg {

// Enumerate all sub-multisets of the given size from (value, count) pairs.
inline void sub_multisets(const std::map<int, int>& counts, int size, std::vector<int>& cur,
                          std::map<int, int>::const_iterator it,
                          std::vector<std::vector<int>>& out) {
    if (size == 0) {
        out.push_back(cur);
        return;
    }
    if (it == counts.end()) return;
    auto next = std::next(it);
    const int take_max = std::min(size, it->second);
    // skip this value entirely first
    sub_multisets(counts, size, cur, next, out);
    for (int t = 1; t <= take_max; ++t) {
        for (int j = 0; j < t; ++j) cur.push_back(it->first);
        sub_multisets(counts, size - t, cur, next, out);
        for (int j = 0; j < t; ++j) cur.pop_back();
    }
}

}  // namespace detail_dg

/// Greedy operator selection: stage s_l for the l-th operator is the
/// smallest stage for which every one-slot substitution (the new operator
/// entering the next free slot after any increasing prefix of previously
/// chosen ones) moves the extended multilinear value by less than eps/n at
/// every test point. Constraint values depend on a prefix only through its
/// stage multiset, so checks are memoized by (point, prefix stages, stage).
inline GreedyReport greedy_select(const CoefficientFamily& family,
                                  std::span<const TailVector> points, double eps, int m,
                                  int max_stage) {
    family.validate();
    if (points.empty()) throw std::invalid_argument("greedy_select: no test points");
    if (m < family.n) throw std::invalid_argument("greedy_select: m must be >= degree");
    if (eps <= 0) throw std::invalid_argument("greedy_select: eps must be positive");
    const int n = family.n;
    const double target = eps / n;
    const int r = static_cast<int>(points.size());

    GreedyReport rep;
    std::map<int, int> stage_counts;
    // memoized swap error: key = (point, prefix stages sorted, candidate stage)
    std::map<std::tuple<int, std::vector<int>, int>, double> memo;

    auto swap_error = [&](int k, const std::vector<int>& prefix, int s) {
        auto key = std::make_tuple(k, prefix, s);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        std::vector<TailVector> args;
        args.reserve(n);
        for (int ps : prefix) args.push_back(StageOperator{ps}.embed(points[k]));
        args.push_back(StageOperator{s}.embed(points[k]));
        while (static_cast<int>(args.size()) < n) args.push_back(points[k]);
        const double with_new = family.multilinear_extended(args);
        args[prefix.size()] = points[k];
        const double without = family.multilinear_extended(args);
        rep.max_term = std::max({rep.max_term, std::abs(with_new), std::abs(without)});
        const double err = std::abs(with_new - without);
        memo.emplace(std::move(key), err);
        return err;
    };

    int last_stage = 1;
    for (int pick = 0; pick < m; ++pick) {
        int s = last_stage;
        bool placed = false;
        for (; s <= max_stage; ++s) {
            bool ok = true;
            std::string viol;
            for (int q = 0; q <= std::min<int>(n - 1, pick) && ok; ++q) {
                std::vector<std::vector<int>> prefixes;
                std::vector<int> cur;
                detail_dg::sub_multisets(stage_counts, q, cur, stage_counts.begin(), prefixes);
                for (const auto& prefix : prefixes) {
                    for (int k = 0; k < r && ok; ++k) {
                        const double err = swap_error(k, prefix, s);
                        if (!(err < target)) {
                            ok = false;
                            viol = "swap error " + std::to_string(err) + " >= " +
                                   std::to_string(target) + " at point " + std::to_string(k) +
                                   ", stage " + std::to_string(s);
                        }
                    }
                    if (!ok) break;
                }
            }
            if (ok) {
                placed = true;
                break;
            }
            if (s == max_stage) rep.violation = viol;
        }
        if (!placed) {
            rep.success = false;
            if (rep.violation.empty()) rep.violation = "max_stage exhausted";
            return rep;
        }
        rep.operators.push_back(StageOperator{s});
        rep.stages.push_back(s);
        stage_counts[s] += 1;
        last_stage = s;
    }
    rep.success = true;
    return rep;
}

/// Pointwise average of stage operators; still norm nonexpanding.
struct AveragedOperator {
    std::vector<StageOperator> operators;

    Eigen::VectorXd operator()(const TailVector& z) const {
        if (operators.empty()) throw std::invalid_argument("average of no operators");
        int smax = 1;
        for (const auto& op : operators) smax = std::max(smax, op.stage);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(smax);
        for (const auto& op : operators) acc.head(op.stage) += op(z);
        return acc / static_cast<double>(operators.size());
    }
};

inline AveragedOperator average_operator(std::span<const StageOperator> ops) {
    if (ops.empty()) throw std::invalid_argument("average of no operators");
    return {std::vector<StageOperator>(ops.begin(), ops.end())};
}

struct RepeatedIndexBound {
    double count = 0.0;     // m^n - m(m-1)...(m-n+1)
    double fraction = 0.0;  // count / m^n
    double bound = 0.0;     // fraction * C
};

/// Count of index tuples from {1..m}^n with a repeated entry, and the
/// resulting averaged-error bound [1 - prod_{j<n}(1 - j/m)] C.
inline RepeatedIndexBound repeated_index_bound(int n, int m, double C) {
    if (n < 1) throw std::domain_error("order must be >= 1");
    if (m < n) throw std::domain_error("repeated_index_bound requires m >= n");
    RepeatedIndexBound rib;
    double all = 1.0, falling = 1.0, frac = 1.0;
    for (int j = 0; j < n; ++j) {
        all *= m;
        falling *= (m - j);
        if (j >= 1) frac *= 1.0 - static_cast<double>(j) / m;
    }
    rib.count = all - falling;
    rib.fraction = 1.0 - frac;
    rib.bound = rib.fraction * C;
    return rib;
}

namespace detail_dg {

// All set partitions of {0..n-1} as block lists, via restricted growth.
inline std::vector<std::vector<std::vector<int>>> set_partitions(int n) {
    std::vector<std::vector<std::vector<int>>> out;
    std::vector<int> assign(n, 0);
    auto rec = [&](auto&& self, int pos, int blocks) -> void {
        if (pos == n) {
            std::vector<std::vector<int>> part(blocks);
            for (int i = 0; i < n; ++i) part[assign[i]].push_back(i);
            out.push_back(std::move(part));
            return;
        }
        for (int b = 0; b <= blocks; ++b) {
            assign[pos] = b;
            self(self, pos + 1, std::max(blocks, b + 1));
        }
    };
    rec(rec, 0, 0);
    return out;
}

}  // namespace detail_dg

struct DGPointReport {
    double extended = 0.0;   // P_ext(z_k)
    double averaged = 0.0;   // P(R z_k)
    double sigma1 = 0.0;     // distinct-index part of the difference
    double sigma2 = 0.0;     // repeated-index part
};

struct DGReport {
    bool pass = false;
    int m = 0;
    std::vector<int> stages;
    double epsilon = 0.0;
    double term_bound = 0.0;  // C used for the m choice and validation
    double max_term = 0.0;    // largest |multilinear value| encountered
    double sum_iterated = 0.0;
    double sum_averaged = 0.0;
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    double sigma2_bound = 0.0;
    std::vector<DGPointReport> per_point;
    std::string violation;
};

namespace detail_dg {

// sum over index assignments constant on the partition blocks of
// A(v_{i(1)}, .., v_{i(n)}), in closed form per coefficient.
inline double partition_sum(const CoefficientFamily& family,
                            const std::vector<Eigen::VectorXd>& mats,
                            const std::vector<std::vector<int>>& blocks,
                            const std::vector<std::vector<double>>& power_sums) {
    const int n = family.n;
    double acc = 0.0;
    const int W = power_sums.empty() ? 0 : static_cast<int>(power_sums[0].size());
    // diagonal coefficients: product of per-coordinate power sums per block
    for (int k = 0; k < W; ++k) {
        const double a = family.diag_coeff(k);
        if (a == 0.0) continue;
        double prod = a;
        for (const auto& B : blocks) prod *= power_sums[B.size() - 1][k];
        acc += prod;
    }
    // banded coefficients: per permutation, blocks factor into sums over one
    // common operator index
    const int m = static_cast<int>(mats.size());
    for (const auto& [mi, v] : family.banded) {
        MultiIndex perm = mi;
        double s = 0.0;
        do {
            double prod = 1.0;
            for (const auto& B : blocks) {
                double bsum = 0.0;
                for (int i = 0; i < m; ++i) {
                    double p = 1.0;
                    for (int slot : B) {
                        const int c = perm[slot];
                        p *= c < mats[i].size() ? mats[i](c) : 0.0;
                    }
                    bsum += p;
                }
                prod *= bsum;
            }
            s += prod;
        } while (std::next_permutation(perm.begin(), perm.end()));
        acc += v * s;
    }
    (void)n;
    return acc;
}

}  // namespace detail_dg

/// Full averaging harness: choose m from the repeated-index bound, select
/// operators greedily at per-swap accuracy eps/(2 r n), average, and verify
/// |sum_k P_ext(z_k) - sum_k P(R z_k)| < eps together with the two-part
/// error split (distinct-index sum below eps/2, repeated-index sum below
/// the combinatorial bound).
inline DGReport dg_verify(const CoefficientFamily& family, std::span<const TailVector> points,
                          const DGConfig& config) {
    family.validate();
    config.validate();
    if (points.empty()) throw std::invalid_argument("dg_verify: no test points");
    if (config.degree != 0 && config.degree != family.n)
        throw std::invalid_argument("config degree does not match the family");
    if (config.points != 0 && config.points != static_cast<int>(points.size()))
        throw std::invalid_argument("config point count does not match the argument");
    const int n = family.n;
    const int r = static_cast<int>(points.size());
    const double eps = config.epsilon;

    DGReport rep;
    rep.epsilon = eps;

    double max_norm = 0.0;
    for (const auto& z : points) max_norm = std::max(max_norm, z.model_norm());
    // a-priori bound on every |A| term and difference of two of them
    rep.term_bound = config.term_bound > 0
                         ? config.term_bound
                         : 2.0 * family.mass() * std::pow(max_norm, n);

    const double sigma_target = eps / (2.0 * r);
    int m = n;
    if (rep.term_bound > 0) {
        int hi = n;
        while (repeated_index_bound(n, hi, rep.term_bound).bound >= sigma_target) {
            if (hi > 100'000'000)
                throw std::runtime_error("dg_verify: epsilon target needs too many operators");
            hi *= 2;
        }
        int lo = n;
        while (lo < hi) {
            const int mid = lo + (hi - lo) / 2;
            if (repeated_index_bound(n, mid, rep.term_bound).bound < sigma_target)
                hi = mid;
            else
                lo = mid + 1;
        }
        m = lo;
    }
    rep.m = m;
    const RepeatedIndexBound rib = repeated_index_bound(n, m, rep.term_bound);
    rep.sigma2_bound = r * rib.bound;

    GreedyReport greedy =
        greedy_select(family, points, eps / (2.0 * r), m, config.max_stage);
    rep.stages = greedy.stages;
    rep.max_term = greedy.max_term;
    if (!greedy.success) {
        rep.violation = greedy.violation;
        return rep;
    }
    AveragedOperator avg{greedy.operators};

    const auto partitions = detail_dg::set_partitions(n);
    double mn = 1.0, falling = 1.0;
    for (int j = 0; j < n; ++j) {
        mn *= m;
        falling *= (m - j);
    }

    bool split_ok = true;
    for (int k = 0; k < r; ++k) {
        const TailVector& z = points[k];
        DGPointReport pr;
        pr.extended = family.eval_extended(z);
        const Eigen::VectorXd rz = avg(z);
        pr.averaged = family.eval_c0(rz);
        rep.max_term = std::max(rep.max_term, std::abs(pr.extended));
        rep.max_term = std::max(rep.max_term, std::abs(pr.averaged));

        int W = 0;
        std::vector<Eigen::VectorXd> mats;
        mats.reserve(m);
        for (const auto& op : greedy.operators) {
            mats.push_back(op(z));
            W = std::max(W, op.stage);
        }
        std::vector<std::vector<double>> power_sums(
            n, std::vector<double>(static_cast<std::size_t>(W), 0.0));
        for (const auto& v : mats)
            for (int c = 0; c < W; ++c) {
                const double x = c < v.size() ? v(c) : 0.0;
                double p = x;
                for (int b = 0; b < n; ++b) {
                    power_sums[b][c] += p;
                    p *= x;
                }
            }

        double sum_all = 0.0, sum_distinct = 0.0;
        for (const auto& blocks : partitions) {
            const double F = detail_dg::partition_sum(family, mats, blocks, power_sums);
            if (static_cast<int>(blocks.size()) == n) sum_all = F;
            double mu = 1.0;
            for (const auto& B : blocks) {
                const int sz = static_cast<int>(B.size());
                mu *= (sz % 2 == 0 ? -1.0 : 1.0) * factorial(sz - 1);
            }
            sum_distinct += mu * F;
        }
        const double sum_repeat = sum_all - sum_distinct;
        // sigma1: distinct-index tuples; sigma2: tuples with a repeat
        pr.sigma1 = (falling * pr.extended - sum_distinct) / mn;
        pr.sigma2 = ((mn - falling) * pr.extended - sum_repeat) / mn;

        if (!(std::abs(pr.sigma1) <= sigma_target + 1e-12)) split_ok = false;
        if (!(std::abs(pr.sigma2) <= rib.bound + 1e-12)) split_ok = false;
        rep.sigma1 += pr.sigma1;
        rep.sigma2 += pr.sigma2;
        rep.sum_iterated += pr.extended;
        rep.sum_averaged += pr.averaged;
        rep.per_point.push_back(pr);
    }
    const bool main_ok = std::abs(rep.sum_iterated - rep.sum_averaged) < eps;
    const bool c_ok = rep.max_term <= rep.term_bound + 1e-12;
    rep.pass = main_ok && split_ok && c_ok;
    if (!rep.pass) {
        rep.violation = !main_ok ? "averaged sum deviates by >= epsilon"
                        : !split_ok ? "error split exceeded its component bound"
                                    : "encountered term exceeded the configured bound";
    }
    return rep;
}

}  // namespace symt
