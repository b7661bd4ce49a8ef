#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace symt {

// Sorted (nondecreasing) tuple of 0-based coordinate indices.
// Length = tensor order n, values in [0, d).
using MultiIndex = std::vector<int>;

inline bool is_sorted_index(const MultiIndex& mi) {
    return std::is_sorted(mi.begin(), mi.end());
}

inline MultiIndex sorted_index(MultiIndex mi) {
    std::sort(mi.begin(), mi.end());
    return mi;
}

inline void check_index(const MultiIndex& mi, int order, int dim) {
    if (static_cast<int>(mi.size()) != order)
        throw std::invalid_argument("multi-index length does not match tensor order");
    if (!is_sorted_index(mi))
        throw std::invalid_argument("multi-index must be sorted nondecreasing");
    for (int i : mi)
        if (i < 0 || i >= dim)
            throw std::invalid_argument("multi-index coordinate out of range");
}

inline double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

// Number of distinct permutations of the tuple: n! / prod(multiplicity!).
inline double multinomial_weight(const MultiIndex& mi) {
    const int n = static_cast<int>(mi.size());
    double denom = 1.0;
    int run = 1;
    for (int j = 1; j <= n; ++j) {
        if (j < n && mi[j] == mi[j - 1]) {
            ++run;
        } else {
            denom *= factorial(run);
            run = 1;
        }
    }
    return factorial(n) / denom;
}

// Visit every sorted multi-index of the given order over [0, dim).
template <typename Fn>
void for_each_sorted_index(int order, int dim, Fn&& fn) {
    if (order <= 0 || dim <= 0) return;
    MultiIndex mi(order, 0);
    while (true) {
        fn(const_cast<const MultiIndex&>(mi));
        int pos = order - 1;
        while (pos >= 0 && mi[pos] == dim - 1) --pos;
        if (pos < 0) break;
        const int v = mi[pos] + 1;
        for (int j = pos; j < order; ++j) mi[j] = v;
    }
}

// C(dim + order - 1, order): dimension of the space of sorted multi-indices.
inline long long sym_dimension(int order, int dim) {
    long long num = 1, den = 1;
    for (int k = 1; k <= order; ++k) {
        num *= dim - 1 + k;
        den *= k;
    }
    return num / den;
}

}  // namespace symt
