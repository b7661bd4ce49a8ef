#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "symt/multi_index.hpp"

namespace symt {

inline constexpr int kMaxOrder = 6;
inline constexpr int kMaxDim = 12;

/// Symmetric tensor of a fixed order on R^d, stored as a sparse map over
/// sorted multi-indices. Entries are tensor coordinates, not polynomial
/// coefficients: the associated polynomial value at x is
///   sum_alpha multinomial(alpha) * entry[alpha] * x^alpha,
/// so rank-one powers and multilinear contraction stay weight-free.
class SymTensor {
public:
    SymTensor(int order, int dim) : order_(order), dim_(dim) {
        if (order < 1 || order > kMaxOrder)
            throw std::invalid_argument("tensor order must be in [1, 6]");
        if (dim < 1 || dim > kMaxDim)
            throw std::invalid_argument("tensor dimension must be in [1, 12]");
    }

    int order() const { return order_; }
    int dim() const { return dim_; }
    const std::map<MultiIndex, double>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

    double entry(const MultiIndex& mi) const {
        auto it = entries_.find(mi);
        return it == entries_.end() ? 0.0 : it->second;
    }

    /// Accepts an index in any order; exact zeros erase the slot.
    void set_entry(MultiIndex mi, double value) {
        mi = sorted_index(std::move(mi));
        check_index(mi, order_, dim_);
        if (value == 0.0)
            entries_.erase(mi);
        else
            entries_[mi] = value;
    }

    void add_entry(MultiIndex mi, double value) {
        mi = sorted_index(std::move(mi));
        check_index(mi, order_, dim_);
        const double v = entries_[mi] + value;
        if (v == 0.0)
            entries_.erase(mi);
        else
            entries_[mi] = v;
    }

    /// Polynomial evaluation: sum_alpha multinomial(alpha) entry x^alpha.
    double evaluate(const Eigen::VectorXd& x) const {
        if (x.size() != dim_) throw std::invalid_argument("evaluate: dimension mismatch");
        double acc = 0.0;
        for (const auto& [mi, v] : entries_) {
            double prod = v;
            for (int i : mi) prod *= x(i);
            acc += multinomial_weight(mi) * prod;
        }
        return acc;
    }

    /// Gradient of the associated polynomial at x.
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
        if (x.size() != dim_) throw std::invalid_argument("gradient: dimension mismatch");
        Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
        for (const auto& [mi, v] : entries_) {
            const double w = multinomial_weight(mi) * v;
            // d/dx_i of x^alpha = count_i * x^(alpha - e_i)
            for (std::size_t j = 0; j < mi.size(); ++j) {
                if (j > 0 && mi[j] == mi[j - 1]) continue;  // one pass per distinct index
                int count = 0;
                double prod = 1.0;
                for (std::size_t k = 0; k < mi.size(); ++k) {
                    if (mi[k] == mi[j]) ++count;
                }
                bool skipped = false;
                for (std::size_t k = 0; k < mi.size(); ++k) {
                    if (!skipped && mi[k] == mi[j]) {
                        skipped = true;
                        continue;
                    }
                    prod *= x(mi[k]);
                }
                g(mi[j]) += w * count * prod;
            }
        }
        return g;
    }

    /// Frobenius norm counting each entry with its permutation multiplicity.
    double frobenius() const {
        double s = 0.0;
        for (const auto& [mi, v] : entries_) s += multinomial_weight(mi) * v * v;
        return std::sqrt(s);
    }

    double max_abs_entry() const {
        double m = 0.0;
        for (const auto& [mi, v] : entries_) m = std::max(m, std::abs(v));
        return m;
    }

    SymTensor& operator+=(const SymTensor& o) {
        require_same_shape(o);
        for (const auto& [mi, v] : o.entries_) add_entry(mi, v);
        return *this;
    }

    SymTensor& operator-=(const SymTensor& o) {
        require_same_shape(o);
        for (const auto& [mi, v] : o.entries_) add_entry(mi, -v);
        return *this;
    }

    SymTensor& operator*=(double c) {
        if (c == 0.0) {
            entries_.clear();
        } else {
            for (auto& [mi, v] : entries_) v *= c;
        }
        return *this;
    }

    friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
    friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
    friend SymTensor operator*(double c, SymTensor a) { return a *= c; }

private:
    void require_same_shape(const SymTensor& o) const {
        if (o.order_ != order_ || o.dim_ != dim_)
            throw std::invalid_argument("tensor shape mismatch");
    }

    int order_;
    int dim_;
    std::map<MultiIndex, double> entries_;
};

/// Rank-one power: entries[alpha] = prod_j x(alpha_j).
inline SymTensor sym_power(const Eigen::VectorXd& x, int order) {
    if (x.size() == 0) throw std::invalid_argument("sym_power: zero-length vector");
    SymTensor t(order, static_cast<int>(x.size()));
    for_each_sorted_index(order, t.dim(), [&](const MultiIndex& mi) {
        double prod = 1.0;
        for (int i : mi) prod *= x(i);
        if (prod != 0.0) t.set_entry(mi, prod);
    });
    return t;
}

inline double evaluate(const SymTensor& p, const Eigen::VectorXd& x) { return p.evaluate(x); }

/// Symmetric n-linear form associated to a polynomial tensor. Evaluation
/// uses the signed-average polarization identity
///   A(x_1..x_n) = 1/(2^n n!) sum_{eps in {-1,1}^n} eps_1..eps_n P(sum eps_j x_j),
/// which recovers the coordinate form sum A[i_1..i_n] (x_1)_{i_1}..(x_n)_{i_n}.
class SymMultilinearForm {
public:
    explicit SymMultilinearForm(SymTensor tensor) : tensor_(std::move(tensor)) {}

    const SymTensor& tensor() const { return tensor_; }
    int order() const { return tensor_.order(); }
    int dim() const { return tensor_.dim(); }

    double operator()(std::span<const Eigen::VectorXd> args) const {
        const int n = tensor_.order();
        if (static_cast<int>(args.size()) != n)
            throw std::invalid_argument("multilinear form: argument count != order");
        for (const auto& a : args)
            if (a.size() != tensor_.dim())
                throw std::invalid_argument("multilinear form: dimension mismatch");
        const int d = tensor_.dim();
        double acc = 0.0;
        Eigen::VectorXd combo(d);
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            combo.setZero();
            int sign = 1;
            for (int j = 0; j < n; ++j) {
                if (mask & (1u << j)) {
                    combo += args[j];
                } else {
                    combo -= args[j];
                    sign = -sign;
                }
            }
            acc += sign * tensor_.evaluate(combo);
        }
        return acc / (std::pow(2.0, n) * factorial(n));
    }

private:
    SymTensor tensor_;
};

inline SymMultilinearForm polarize(const SymTensor& p) { return SymMultilinearForm(p); }

inline double multilinear_eval(const SymMultilinearForm& a, std::span<const Eigen::VectorXd> args) {
    return a(args);
}

/// Duality pairing <P, sum_k lambda_k (x_k)^{tensor n}> = sum lambda_k P(z_k).
inline double duality_pair(const SymTensor& p,
                           std::span<const std::pair<double, Eigen::VectorXd>> terms) {
    double acc = 0.0;
    for (const auto& [lambda, z] : terms) acc += lambda * p.evaluate(z);
    return acc;
}

}  // namespace symt
