#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "md2i/matrix.hpp"
#include "md2i/rng.hpp"

namespace md2i::testutil {

// Regularized upper incomplete gamma Q(a, x), series/continued-fraction
// evaluation. Used for chi-square p-values.
inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    double gln = std::lgamma(a);
    if (x < a + 1.0) {
        // series for P(a,x), Q = 1 - P
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-14) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
    }
    // continued fraction for Q(a,x)
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-14) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

/// p-value of a chi-square statistic with `dof` degrees of freedom.
inline double chi_square_pvalue(double stat, int dof) { return gamma_q(dof / 2.0, stat / 2.0); }

/// Chi-square statistic for observed counts against a uniform expectation.
inline double chi_square_uniform(const std::vector<long>& counts, double total) {
    double expected = total / counts.size();
    double stat = 0.0;
    for (long c : counts) stat += (c - expected) * (c - expected) / expected;
    return stat;
}

inline Matrix random_matrix(Rng& rng, int rows, int cols, double lo = 0.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

}  // namespace md2i::testutil
