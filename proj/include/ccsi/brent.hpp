#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <utility>

namespace ccsi {

/// Three abscissae a < b < c (or a > b > c) with f(b) <= f(a), f(b) <= f(c).
struct Bracket {
    double a, b, c;
    double fa, fb, fc;
};

/// Starts from the triple (lo, (lo+hi)/2, hi) and steps toward the downhill
/// side, each step twice the previous spacing, until the middle point is the
/// lowest. Returns nothing if no bracket appears within `max_expansions`
/// doublings.
template <class F>
std::optional<Bracket> bracket_minimum(F&& f, double lo, double hi, int max_expansions = 40)
{
    double a = lo, b = 0.5 * (lo + hi), c = hi;
    double fa = f(a), fb = f(b), fc = f(c);
    for (int k = 0; k <= max_expansions; ++k) {
        if (fb <= fa && fb <= fc) return Bracket{a, b, c, fa, fb, fc};
        if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fc)) return std::nullopt;
        if (k == max_expansions) break;
        if (fa < fc) {
            // downhill to the left: step past a with twice the last spacing
            c = b; fc = fb;
            b = a; fb = fa;
            a = b - 2.0 * (c - b);
            fa = f(a);
        } else {
            a = b; fa = fb;
            b = c; fb = fc;
            c = b + 2.0 * (b - a);
            fc = f(c);
        }
    }
    return std::nullopt;
}

struct BrentResult {
    double x;
    double fx;
    int iterations;
};

/// Brent's parabolic-interpolation / golden-section minimizer on a bracket.
/// Stops when the bracket half-width falls below 2*(rel_tol*|x| + abs_tol).
template <class F>
BrentResult brent_minimize(F&& f, const Bracket& br, double rel_tol = 1e-8, double abs_tol = 1e-14,
                           int max_iterations = 200)
{
    constexpr double golden = 0.3819660112501051; // (3 - sqrt 5)/2
    double a = std::min(br.a, br.c);
    double b = std::max(br.a, br.c);
    double x = br.b, w = br.b, v = br.b;
    double fx = br.fb, fw = br.fb, fv = br.fb;
    double d = 0.0, e = 0.0;
    int it = 0;
    for (; it < max_iterations; ++it) {
        const double xm = 0.5 * (a + b);
        const double tol1 = rel_tol * std::abs(x) + abs_tol;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
        bool golden_step = true;
        if (std::abs(e) > tol1) {
            // fit a parabola through x, w, v
            double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double etemp = e;
            e = d;
            if (!(std::abs(p) >= std::abs(0.5 * q * etemp) || p <= q * (a - x) || p >= q * (b - x))) {
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = std::copysign(tol1, xm - x);
                golden_step = false;
            }
        }
        if (golden_step) {
            e = (x >= xm) ? a - x : b - x;
            d = golden * e;
        }
        const double u = (std::abs(d) >= tol1) ? x + d : x + std::copysign(tol1, d);
        const double fu = f(u);
        if (fu <= fx) {
            if (u >= x) a = x;
            else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u;
            else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return {x, fx, it};
}

} // namespace ccsi
