#pragma once

#include <cmath>
#include <functional>

#include "dnpr/errors.hpp"

namespace dnpr {

// Golden-section minimisation on [a, b] to the requested abscissa tolerance.
inline double golden_section_min(const std::function<double(double)>& f, double a,
                                 double b, double x_tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > x_tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Bisection root finder; requires a sign change on [a, b].
inline double bisect_root(const std::function<double(double)>& f, double a, double b,
                          double x_tol) {
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0))
        throw Error("bisect_root: no sign change on the bracket");
    while (b - a > x_tol) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm > 0.0) == (fa > 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    return 0.5 * (a + b);
}

} // namespace dnpr
