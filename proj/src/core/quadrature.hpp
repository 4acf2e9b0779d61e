// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

namespace molmimo::detail {

// Adaptive Simpson with the usual Richardson correction.
template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol, int max_depth = 40) {
    // Start from a few panels so narrow peaks are not missed by the first estimate.
    constexpr int panels = 8;
    const double w = (b - a) / panels;
    double total = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double lo = a + i * w;
        const double hi = lo + w;
        const double flo = f(lo);
        const double fhi = f(hi);
        const double fmid = f(0.5 * (lo + hi));
        const double whole = w / 6.0 * (flo + 4.0 * fmid + fhi);
        total += simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol / panels, max_depth);
    }
    return total;
}

} // namespace molmimo::detail
