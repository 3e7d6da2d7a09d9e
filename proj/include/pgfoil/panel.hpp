// Built-in inviscid oracle: linear-strength vortex panel method with a
// trailing-edge Kutta condition.
//
// One panel per contour edge, nodal vortex strengths as unknowns, flow
// tangency at panel midpoints plus the Kutta row. The lift coefficient comes
// from the integrated circulation, C_L = 2*Gamma / (V_inf * c).
//
// The formulation follows the classical Kuethe-Chow coefficient scheme, which
// expects clockwise node ordering from the trailing edge; the Selig-ordered
// input contour is reversed on entry.

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "pgfoil/airfoil.hpp"
#include "pgfoil/oracle.hpp"

namespace pgfoil {

namespace detail {

// Proper segment intersection for non-adjacent panels (shared endpoints skipped).
inline bool segments_cross(const Point& a, const Point& b, const Point& c, const Point& d) {
    auto orient = [](const Point& p, const Point& q, const Point& r) {
        const double v = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
        return (v > 0.0) - (v < 0.0);
    };
    const int o1 = orient(a, b, c);
    const int o2 = orient(a, b, d);
    const int o3 = orient(c, d, a);
    const int o4 = orient(c, d, b);
    if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
    return false;
}

inline bool share_endpoint(const Point& a, const Point& b, const Point& c, const Point& d) {
    return (a == c) || (a == d) || (b == c) || (b == d);
}

}  // namespace detail

inline bool self_intersects(const std::vector<Point>& nodes) {
    const std::size_t m = nodes.size() - 1;  // panels
    for (std::size_t i = 0; i + 1 < m; ++i) {
        for (std::size_t j = i + 2; j < m; ++j) {
            const Point& a = nodes[i];
            const Point& b = nodes[i + 1];
            const Point& c = nodes[j];
            const Point& d = nodes[j + 1];
            if (detail::share_endpoint(a, b, c, d)) continue;
            if (detail::segments_cross(a, b, c, d)) return true;
        }
    }
    return false;
}

class PanelOracle : public OracleContract {
public:
    /// Panels shorter than this fraction of the chord flag the contour degenerate.
    static constexpr double kMinPanelLength = 1e-9;
    /// Pivot-ratio condition estimate above which the system counts as singular.
    static constexpr double kMaxConditionEstimate = 1e12;

    OracleResult evaluate(const Airfoil& shape, const FlowConditions& cond) const override {
        cond.validate();
        const std::size_t n = shape.size();
        if (n < 8) return OracleResult::not_converged(FailReason::DegeneratePanel);

        // Selig (counterclockwise) -> clockwise node ordering
        std::vector<Point> nodes(n);
        for (std::size_t i = 0; i < n; ++i) nodes[i] = shape.points[n - 1 - i];

        double xmin = nodes[0].x, xmax = nodes[0].x;
        for (const Point& p : nodes) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
        }
        const double chord = xmax - xmin;
        if (!(chord > 1e-6)) return OracleResult::not_converged(FailReason::DegeneratePanel);

        const std::size_t m = n - 1;  // panel count
        std::vector<double> xc(m), yc(m), s(m), theta(m), sine(m), cosine(m);
        for (std::size_t i = 0; i < m; ++i) {
            const Point& p = nodes[i];
            const Point& q = nodes[i + 1];
            const double dx = q.x - p.x;
            const double dy = q.y - p.y;
            s[i] = std::hypot(dx, dy);
            if (s[i] < kMinPanelLength * chord)
                return OracleResult::not_converged(FailReason::DegeneratePanel);
            xc[i] = 0.5 * (p.x + q.x);
            yc[i] = 0.5 * (p.y + q.y);
            theta[i] = std::atan2(dy, dx);
            sine[i] = std::sin(theta[i]);
            cosine[i] = std::cos(theta[i]);
        }

        if (self_intersects(nodes)) return OracleResult::not_converged(FailReason::SelfIntersecting);

        const double alpha = cond.alpha_deg * std::numbers::pi / 180.0;

        // Influence coefficients (Kuethe-Chow), assembled into the
        // (m+1)x(m+1) tangency + Kutta system for nodal strengths.
        const std::size_t dim = m + 1;
        std::vector<double> a(dim * dim, 0.0);
        std::vector<double> rhs(dim, 0.0);
        std::vector<double> cn1(m), cn2(m);

        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) {
                    cn1[j] = -1.0;
                    cn2[j] = 1.0;
                    continue;
                }
                const double dxn = xc[i] - nodes[j].x;
                const double dyn = yc[i] - nodes[j].y;
                const double A = -dxn * cosine[j] - dyn * sine[j];
                const double B = dxn * dxn + dyn * dyn;
                const double C = sine[i] * cosine[j] - cosine[i] * sine[j];   // sin(ti - tj)
                const double D = cosine[i] * cosine[j] + sine[i] * sine[j];   // cos(ti - tj)
                const double E = dxn * sine[j] - dyn * cosine[j];
                const double F = std::log(1.0 + s[j] * (s[j] + 2.0 * A) / B);
                const double G = std::atan2(E * s[j], B + A * s[j]);
                // cos/sin(ti - 2tj) expanded through the cached per-panel terms
                const double cos_i2j = cosine[i] * (cosine[j] * cosine[j] - sine[j] * sine[j]) +
                                       2.0 * sine[i] * sine[j] * cosine[j];
                const double sin_i2j = sine[i] * (cosine[j] * cosine[j] - sine[j] * sine[j]) -
                                       2.0 * cosine[i] * sine[j] * cosine[j];
                const double Q = dxn * cos_i2j - dyn * sin_i2j;
                cn2[j] = D + 0.5 * Q * F / s[j] - (A * C + D * E) * G / s[j];
                cn1[j] = 0.5 * D * F + C * G - cn2[j];
            }
            a[i * dim + 0] = cn1[0];
            for (std::size_t j = 1; j < m; ++j) a[i * dim + j] = cn1[j] + cn2[j - 1];
            a[i * dim + m] = cn2[m - 1];
            rhs[i] = std::sin(theta[i] - alpha);
        }
        // Kutta condition: equal-and-opposite strengths at the trailing edge
        a[m * dim + 0] = 1.0;
        a[m * dim + m] = 1.0;
        rhs[m] = 0.0;

        std::vector<double> gamma;
        const double cond_est = solve_gauss(a, rhs, dim, gamma);
        if (!(cond_est < kMaxConditionEstimate))
            return OracleResult::not_converged(FailReason::Singular);

        // gamma is the nondimensional strength gamma/(2*pi*V); circulation
        // integrates trapezoidally over each panel.
        double circ = 0.0;
        for (std::size_t j = 0; j < m; ++j) circ += 0.5 * (gamma[j] + gamma[j + 1]) * s[j];
        const double cl = 4.0 * std::numbers::pi * circ / chord;
        if (!std::isfinite(cl)) return OracleResult::not_converged(FailReason::NonFinite);
        return OracleResult::converged(cl);
    }

    std::string name() const override { return "panel"; }

private:
    // Gaussian elimination with partial pivoting; returns the pivot-ratio
    // condition estimate (inf on exact singularity).
    static double solve_gauss(std::vector<double> a, std::vector<double> b, std::size_t n,
                              std::vector<double>& x) {
        double max_piv = 0.0, min_piv = std::numeric_limits<double>::infinity();
        for (std::size_t col = 0; col < n; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < n; ++r)
                if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
            if (piv != col) {
                for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
                std::swap(b[col], b[piv]);
            }
            const double p = std::fabs(a[col * n + col]);
            max_piv = std::max(max_piv, p);
            min_piv = std::min(min_piv, p);
            if (p == 0.0) return std::numeric_limits<double>::infinity();
            for (std::size_t r = col + 1; r < n; ++r) {
                const double f = a[r * n + col] / a[col * n + col];
                if (f == 0.0) continue;
                for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
                b[r] -= f * b[col];
            }
        }
        x.assign(n, 0.0);
        for (std::size_t i = n; i-- > 0;) {
            double acc = b[i];
            for (std::size_t j = i + 1; j < n; ++j) acc -= a[i * n + j] * x[j];
            x[i] = acc / a[i * n + i];
        }
        return max_piv / min_piv;
    }
};

}  // namespace pgfoil
