#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "symt/tensor.hpp"

namespace symt {

/// Apply a linear map to every mode: result = (M tensor ... tensor M)(w),
/// i.e. result[j_1..j_n] = sum_i w[i_1..i_n] prod_k M(j_k, i_k).
/// Dense mode-by-mode contraction; shapes are capped by SymTensor limits.
/// Dense row-major materialization (all d^n slots, symmetric copies filled).
inline std::vector<double> to_dense(const SymTensor& w) {
    const int n = w.order(), d = w.dim();
    long long total = 1;
    for (int k = 0; k < n; ++k) total *= d;
    std::vector<double> a(static_cast<std::size_t>(total), 0.0);
    for (const auto& [mi, v] : w.entries()) {
        MultiIndex perm = mi;
        do {
            long long idx = 0;
            for (int k = 0; k < n; ++k) idx = idx * d + perm[k];
            a[static_cast<std::size_t>(idx)] = v;
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return a;
}

inline SymTensor map_modes(const SymTensor& w, const Eigen::MatrixXd& M) {
    if (M.cols() != w.dim()) throw std::invalid_argument("map_modes: shape mismatch");
    const int n = w.order(), d = w.dim();
    const int D = static_cast<int>(M.rows());
    SymTensor result(n, D);

    std::vector<double> a = to_dense(w);
    long long total = static_cast<long long>(a.size());

    // Contract the leading mode with M, then rotate it to the back; after
    // n rounds every mode is mapped and the axis order is restored.
    std::vector<double> buf;
    long long lead = d;
    long long rest = total / lead;
    for (int round = 0; round < n; ++round) {
        buf.assign(static_cast<std::size_t>(D * rest), 0.0);
        for (int j = 0; j < D; ++j)
            for (int i = 0; i < d; ++i) {
                const double m = M(j, i);
                if (m == 0.0) continue;
                const double* src = a.data() + i * rest;
                double* dst = buf.data() + j * rest;
                for (long long r = 0; r < rest; ++r) dst[r] += m * src[r];
            }
        // move axis 0 (size D) to the end
        a.assign(buf.size(), 0.0);
        for (int j = 0; j < D; ++j)
            for (long long r = 0; r < rest; ++r)
                a[static_cast<std::size_t>(r * D + j)] = buf[static_cast<std::size_t>(j * rest + r)];
        total = static_cast<long long>(a.size());
        lead = (round + 1 < n) ? d : D;
        rest = total / lead;
    }

    for_each_sorted_index(n, D, [&](const MultiIndex& mi) {
        long long idx = 0;
        for (int k = 0; k < n; ++k) idx = idx * D + mi[k];
        const double v = a[static_cast<std::size_t>(idx)];
        if (v != 0.0) result.set_entry(mi, v);
    });
    return result;
}

/// Coefficient tensor of x -> P(T x); contracts each mode of P through T.
inline SymTensor compose(const SymTensor& p, const Eigen::MatrixXd& T) {
    if (T.rows() != p.dim()) throw std::invalid_argument("compose: shape mismatch");
    return map_modes(p, T.transpose());
}

}  // namespace symt
