// Airfoil geometry: NACA four-digit generation, the 248-point / 496-vector
// representation, the distortion metric, and Savitzky-Golay smoothing.
//
// Point ordering is Selig-style: trailing edge -> upper surface -> leading
// edge -> lower surface -> trailing edge, with the trailing-edge point
// repeated (first == last, snapped bitwise) so the polygon is closed.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "pgfoil/errors.hpp"
#include "pgfoil/tensor.hpp"

namespace pgfoil {

struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

struct Airfoil {
    std::vector<Point> points;

    std::size_t size() const { return points.size(); }
    bool operator==(const Airfoil&) const = default;
};

inline constexpr std::size_t kAirfoilPoints = 248;
inline constexpr std::size_t kShapeVectorDim = 2 * kAirfoilPoints;

struct NacaCode {
    int max_camber = 0;      // m, first digit (percent chord)
    int camber_pos = 0;      // p, second digit (tenths of chord)
    int thickness = 12;      // tau, last two digits (percent chord)

    bool operator==(const NacaCode&) const = default;

    static NacaCode parse(const std::string& s) {
        if (s.size() != 4 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
            throw DomainError("naca code must be four digits, got '" + s + "'");
        return NacaCode{s[0] - '0', s[1] - '0', (s[2] - '0') * 10 + (s[3] - '0')};
    }

    std::string str() const {
        char buf[8];
        std::snprintf(buf, sizeof buf, "%d%d%02d", max_camber, camber_pos, thickness);
        return buf;
    }
};

namespace detail {

// Standard four-digit camber line; the x < p branch is empty when p == 0.
inline double camber_y(double m, double p, double x) {
    if (m == 0.0) return 0.0;
    if (x < p) return m / (p * p) * (2.0 * p * x - x * x);
    const double q = 1.0 - p;
    return m / (q * q) * ((1.0 - 2.0 * p) + 2.0 * p * x - x * x);
}

// Closed-trailing-edge thickness polynomial (last coefficient -0.1036).
inline double thickness_y(double t, double x) {
    return t / 0.2 *
           (0.2969 * std::sqrt(x) - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x -
            0.1036 * x * x * x * x);
}

}  // namespace detail

/// NACA four-digit airfoil on cosine-spaced stations.
///
/// Thickness is applied vertically (y = camber +/- thickness at the same
/// station), which keeps every x coordinate inside [0, 1].
inline Airfoil naca4(const NacaCode& code, std::size_t n_points = kAirfoilPoints) {
    if (code.max_camber < 0 || code.max_camber > 9 || code.camber_pos < 0 || code.camber_pos > 9 ||
        code.thickness < 0 || code.thickness > 99)
        throw DomainError("naca4: digits out of range for code " + code.str());
    if (n_points < 8 || n_points % 2 != 0)
        throw DomainError("naca4: n_points must be even and >= 8, got " + std::to_string(n_points));

    const double m = code.max_camber / 100.0;
    const double p = code.camber_pos / 10.0;
    const double t = code.thickness / 100.0;

    Airfoil foil;
    foil.points.resize(n_points);
    const double denom = static_cast<double>(n_points - 1);
    for (std::size_t k = 0; k < n_points; ++k) {
        const double beta = 2.0 * std::numbers::pi * static_cast<double>(k) / denom;
        const double x = 0.5 * (1.0 + std::cos(beta));
        const double yc = detail::camber_y(m, p, x);
        const double yt = detail::thickness_y(t, x);
        const bool upper = beta <= std::numbers::pi;
        foil.points[k] = {x, upper ? yc + yt : yc - yt};
    }
    foil.points.front() = {1.0, 0.0};
    foil.points.back() = foil.points.front();
    return foil;
}

inline double signed_area(const Airfoil& foil) {
    double acc = 0.0;
    const std::size_t n = foil.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = foil.points[i];
        const Point& b = foil.points[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return 0.5 * acc;
}

/// True for contours with collapsed interior segments or (near-)zero enclosed
/// area, e.g. tau = 0 collapses both surfaces onto the camber line.
inline bool degenerate(const Airfoil& foil) {
    const std::size_t n = foil.size();
    if (n < 3) return true;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const Point& a = foil.points[i];
        const Point& b = foil.points[i + 1];
        if (std::hypot(b.x - a.x, b.y - a.y) < 1e-12) return true;
    }
    return std::fabs(signed_area(foil)) < 1e-10;
}

/// Flatten to the 496-vector (x1..x248, y1..y248).
inline ad::Tensor flatten(const Airfoil& foil) {
    if (foil.size() != kAirfoilPoints)
        throw DomainError("flatten: expected " + std::to_string(kAirfoilPoints) + " points, got " +
                          std::to_string(foil.size()));
    ad::Tensor v({kShapeVectorDim});
    for (std::size_t i = 0; i < kAirfoilPoints; ++i) {
        v[i] = foil.points[i].x;
        v[kAirfoilPoints + i] = foil.points[i].y;
    }
    return v;
}

inline Airfoil unflatten(const ad::Tensor& v) {
    if (v.rank() != 1 || v.size() != kShapeVectorDim)
        throw DomainError("unflatten: expected a " + std::to_string(kShapeVectorDim) +
                          "-vector, got shape " + ad::shape_str(v.shape()));
    Airfoil foil;
    foil.points.resize(kAirfoilPoints);
    for (std::size_t i = 0; i < kAirfoilPoints; ++i)
        foil.points[i] = {v[i], v[kAirfoilPoints + i]};
    return foil;
}

inline Airfoil unflatten(const std::vector<double>& v) {
    return unflatten(ad::Tensor({v.size()}, v));
}

/// Distortion degree: sum of absolute turning angles along the closed
/// polyline. 2*pi for convex shapes, larger for zigzag shapes. Zero-length
/// segments (duplicate consecutive points) are skipped.
inline double distortion(const Airfoil& foil) {
    const std::size_t n = foil.size();
    {
        std::vector<Point> uniq = foil.points;
        std::sort(uniq.begin(), uniq.end(),
                  [](const Point& a, const Point& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        if (uniq.size() < 3) throw DomainError("distortion: fewer than 3 distinct points");
    }
    std::vector<Point> segs;
    segs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = foil.points[i];
        const Point& b = foil.points[(i + 1) % n];
        const Point v{b.x - a.x, b.y - a.y};
        if (std::hypot(v.x, v.y) > 0.0) segs.push_back(v);
    }
    if (segs.size() < 2) throw DomainError("distortion: degenerate contour");

    double phi = 0.0;
    for (std::size_t k = 0; k < segs.size(); ++k) {
        const Point& u = segs[k];
        const Point& w = segs[(k + 1) % segs.size()];
        const double nu = std::hypot(u.x, u.y);
        const double nw = std::hypot(w.x, w.y);
        const double c = std::clamp((u.x * w.x + u.y * w.y) / (nu * nw), -1.0, 1.0);
        phi += std::acos(c);
    }
    return phi;
}

inline double mean_distortion(const std::vector<Airfoil>& shapes) {
    if (shapes.empty()) throw DomainError("mean_distortion: empty shape list");
    double acc = 0.0;
    for (const auto& s : shapes) acc += distortion(s);
    return acc / static_cast<double>(shapes.size());
}

namespace detail {

// Small dense solve for the Savitzky-Golay normal equations.
inline std::vector<double> solve_small(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        if (a[col][col] == 0.0) throw DomainError("savgol: singular normal equations");
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
    return b;
}

}  // namespace detail

/// Center-point Savitzky-Golay convolution kernel of length `window`.
/// Reproduces polynomials up to degree `order` exactly: sum_i k[i] q(i-h) = q(0).
inline std::vector<double> savgol_kernel(std::size_t window, std::size_t order) {
    if (window % 2 == 0 || window == 0) throw DomainError("savgol: window must be odd and positive");
    if (order >= window) throw DomainError("savgol: order must be < window");
    const long h = static_cast<long>(window / 2);
    const std::size_t q = order + 1;

    // normal matrix M_jk = sum_i i^(j+k) over stencil offsets
    std::vector<std::vector<double>> m(q, std::vector<double>(q, 0.0));
    for (long i = -h; i <= h; ++i)
        for (std::size_t j = 0; j < q; ++j)
            for (std::size_t k = 0; k < q; ++k)
                m[j][k] += std::pow(static_cast<double>(i), static_cast<double>(j + k));
    std::vector<double> e0(q, 0.0);
    e0[0] = 1.0;
    const std::vector<double> d = detail::solve_small(std::move(m), std::move(e0));

    std::vector<double> kernel(window, 0.0);
    for (long i = -h; i <= h; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < q; ++j) acc += d[j] * std::pow(static_cast<double>(i), static_cast<double>(j));
        kernel[static_cast<std::size_t>(i + h)] = acc;
    }
    return kernel;
}

/// Circular (wraparound) filtering of a sequence.
inline std::vector<double> savgol_filter_wrap(const std::vector<double>& data, std::size_t window,
                                              std::size_t order) {
    const std::vector<double> k = savgol_kernel(window, order);
    const long n = static_cast<long>(data.size());
    const long h = static_cast<long>(window / 2);
    std::vector<double> out(data.size(), 0.0);
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long j = -h; j <= h; ++j) {
            long idx = (i + j) % n;
            if (idx < 0) idx += n;
            acc += k[static_cast<std::size_t>(j + h)] * data[static_cast<std::size_t>(idx)];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

/// Savitzky-Golay smoothing of the closed contour; x and y are filtered
/// independently. A duplicated closing point is removed before filtering and
/// restored afterwards so the filter sees each geometric point once.
inline Airfoil savgol_smooth(const Airfoil& foil, std::size_t window = 7, std::size_t order = 3) {
    if (window % 2 == 0 || window == 0) throw DomainError("savgol: window must be odd and positive");
    if (order >= window) throw DomainError("savgol: order must be < window");
    if (window == 1) return foil;

    const bool closed_dup = foil.size() >= 2 && foil.points.front() == foil.points.back();
    const std::size_t n = foil.size() - (closed_dup ? 1 : 0);
    if (n < window) throw DomainError("savgol: window larger than point count");

    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = foil.points[i].x;
        ys[i] = foil.points[i].y;
    }
    const std::vector<double> fx = savgol_filter_wrap(xs, window, order);
    const std::vector<double> fy = savgol_filter_wrap(ys, window, order);

    Airfoil out;
    out.points.resize(foil.size());
    for (std::size_t i = 0; i < n; ++i) out.points[i] = {fx[i], fy[i]};
    if (closed_dup) out.points.back() = out.points.front();
    return out;
}

// ---------------------------------------------------------------------------
// Shared airfoil text format: one free-text name line, then one "x y" pair
// per line in point order, 9 significant digits. Also consumed by XFoil.

inline void write_airfoil_dat(const std::filesystem::path& path, const std::string& name,
                              const Airfoil& foil) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw FormatError("airfoil: cannot open '" + path.string() + "' for writing");
    f << name << "\n";
    char buf[80];
    for (const Point& p : foil.points) {
        std::snprintf(buf, sizeof buf, "%.9g %.9g\n", p.x, p.y);
        f << buf;
    }
    if (!f) throw FormatError("airfoil: write failed for '" + path.string() + "'");
}

inline std::pair<std::string, Airfoil> read_airfoil_dat(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("airfoil: cannot open '" + path.string() + "'");
    std::string name;
    if (!std::getline(f, name)) throw FormatError("airfoil: empty file '" + path.string() + "'");
    Airfoil foil;
    std::string line;
    while (std::getline(f, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream is(line);
        Point p;
        if (!(is >> p.x >> p.y))
            throw FormatError("airfoil: bad coordinate line '" + line + "' in '" + path.string() + "'");
        foil.points.push_back(p);
    }
    if (foil.size() < 3) throw FormatError("airfoil: fewer than 3 points in '" + path.string() + "'");
    return {name, foil};
}

}  // namespace pgfoil
