#include "lcx/geometry.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lcx/error.hpp"
#include "lcx/sampling.hpp"

namespace lcx {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Successive parabolic interpolation for a local max of f on [a, c] around b.
template <typename F>
double refine_max(F&& f, double a, double b, double c, double fa, double fb, double fc, double* arg = nullptr) {
    for (int it = 0; it < 8; ++it) {
        double p = (b - a) * (fb - fc);
        double q = (b - c) * (fb - fa);
        double den = p - q;
        if (std::abs(den) < 1e-300) break;
        double x = b - 0.5 * ((b - a) * p - (b - c) * q) / den;
        if (!(x > a && x < c)) x = (b - a > c - b) ? 0.5 * (a + b) : 0.5 * (b + c);
        if (std::abs(x - b) < 1e-10) break;
        double fx = f(x);
        if (x > b) {
            if (fx >= fb) { a = b; fa = fb; b = x; fb = fx; } else { c = x; fc = fx; }
        } else {
            if (fx >= fb) { c = b; fc = fb; b = x; fb = fx; } else { a = x; fa = fx; }
        }
    }
    if (arg) *arg = b;
    return fb;
}

// Max over 2w+1 angles spaced h around theta, refined; NaN if the max sits on the window edge.
double circle_max_window(const Domain& d, const CPoint& zeta, const CVector& v, double c, double& theta, int w,
                         double h) {
    auto f = [&](double th) { return d.rho_line(zeta, v, std::polar(c, th)); };
    double vals[64];
    const Complex step = std::polar(1.0, h);
    Complex e = std::polar(c, theta - w * h);
    int best = 0;
    for (int k = 0; k <= 2 * w; ++k) {
        vals[k] = d.rho_line(zeta, v, e);
        e *= step;
        if (vals[k] > vals[best]) best = k;
    }
    double lo = *std::min_element(vals, vals + 2 * w + 1);
    if (vals[best] - lo <= 1e-14 * (1.0 + std::abs(vals[best]))) return vals[best];
    if (best == 0 || best == 2 * w) return std::numeric_limits<double>::quiet_NaN();
    double th = theta + (best - w) * h;
    return refine_max(f, th - h, th, th + h, vals[best - 1], vals[best], vals[best + 1], &theta);
}

const std::vector<Complex>& unit_roots(int n) {
    static const std::vector<Complex> r64 = [] {
        std::vector<Complex> r(64);
        for (int k = 0; k < 64; ++k) r[k] = std::polar(1.0, kTwoPi * k / 64);
        return r;
    }();
    static const std::vector<Complex> r256 = [] {
        std::vector<Complex> r(256);
        for (int k = 0; k < 256; ++k) r[k] = std::polar(1.0, kTwoPi * k / 256);
        return r;
    }();
    if (n == 64) return r64;
    if (n == 256) return r256;
    thread_local std::vector<Complex> other;
    if (static_cast<int>(other.size()) != n) {
        other.resize(n);
        for (int k = 0; k < n; ++k) other[k] = std::polar(1.0, kTwoPi * k / n);
    }
    return other;
}

double circle_max_sampled(const Domain& d, const CPoint& zeta, const CVector& v, double c, int n_angles, int keep,
                          double* argmax = nullptr, bool* ambiguous = nullptr) {
    auto f = [&](double th) { return d.rho_line(zeta, v, std::polar(c, th)); };
    double vals[512];
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    const auto& roots = unit_roots(n_angles);
    for (int k = 0; k < n_angles; ++k) {
        vals[k] = d.rho_line(zeta, v, c * roots[k]);
        lo = std::min(lo, vals[k]);
        hi = std::max(hi, vals[k]);
    }
    if (hi - lo <= 1e-14 * (1.0 + std::abs(hi))) return hi;
    // local maxima, best first
    int cand[512];
    int nc = 0;
    for (int k = 0; k < n_angles; ++k) {
        double l = vals[(k + n_angles - 1) % n_angles], r = vals[(k + 1) % n_angles];
        if (vals[k] >= l && vals[k] > r) cand[nc++] = k;
    }
    std::sort(cand, cand + nc, [&](int a, int b) { return vals[a] > vals[b]; });
    if (ambiguous) *ambiguous = nc > 1 && vals[cand[1]] >= hi - 1e-3 * (hi - lo);
    nc = std::min(nc, keep);
    double best = hi;
    const double h = kTwoPi / n_angles;
    for (int i = 0; i < nc; ++i) {
        int k = cand[i];
        if (i > 0 && vals[k] < hi - 0.25 * (hi - lo)) break;
        double th = kTwoPi * k / n_angles, arg = th;
        double val = refine_max(f, th - h, th, th + h, vals[(k + n_angles - 1) % n_angles], vals[k],
                                vals[(k + 1) % n_angles], &arg);
        if (val >= best) {
            best = val;
            if (argmax) *argmax = arg;
        }
    }
    return best;
}

// Number of distinct local maxima within a relative margin of the top value.
bool ambiguous_circle(const Domain& d, const CPoint& zeta, const CVector& v, double c, int n_angles) {
    double vals[512];
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    const auto& roots = unit_roots(n_angles);
    for (int k = 0; k < n_angles; ++k) {
        vals[k] = d.rho_line(zeta, v, c * roots[k]);
        lo = std::min(lo, vals[k]);
        hi = std::max(hi, vals[k]);
    }
    if (hi - lo <= 1e-14 * (1.0 + std::abs(hi))) return false;
    int count = 0;
    for (int k = 0; k < n_angles; ++k) {
        double l = vals[(k + n_angles - 1) % n_angles], r = vals[(k + 1) % n_angles];
        if (vals[k] >= l && vals[k] > r && vals[k] >= hi - 1e-3 * (hi - lo)) ++count;
    }
    return count > 1;
}

double circle_increment(const Domain& d, const CPoint& zeta, const CVector& v, double c, double rho0,
                        const TauOptions& opt, double* argmax = nullptr, bool* ambiguous = nullptr) {
    double m = circle_max_sampled(d, zeta, v, c, opt.angles, 2, argmax, ambiguous);
    if (opt.radial_samples > 0) {
        for (int r = 1; r < opt.radial_samples; ++r)
            m = std::max(m, circle_max_sampled(d, zeta, v, c * r / opt.radial_samples, opt.angles, 2));
    }
    return m - rho0;
}

}  // namespace

double disk_increment(const Domain& d, const CPoint& zeta, const CVector& v, double c, const TauOptions& opt) {
    double rho0 = d.rho(zeta);
    double m = circle_increment(d, zeta, v, c, rho0, opt);
    if (ambiguous_circle(d, zeta, v, c, opt.angles)) {
        m = std::max(m, circle_max_sampled(d, zeta, v, c, std::min(opt.fine_angles, 512), 4) - rho0);
    }
    return m;
}

double tau(const Domain& d, const CPoint& zeta, const CVector& v, double eps, const TauOptions& opt) {
    if (!(eps > 0.0) || !std::isfinite(eps)) fail("bad-scale", "eps must be positive");
    const double rho0 = d.rho(zeta);
    const double leps = std::log(eps);
    const double h = kTwoPi / opt.angles;
    double theta = 0.0;
    enum class Mode { Full, Fine, Window } mode = Mode::Full;
    bool ambiguous = false;

    auto M = [&](double c) {
        if (mode == Mode::Window) {
            double m = circle_max_window(d, zeta, v, c, theta, 4, h);
            if (!std::isnan(m)) return m - rho0;
        }
        double m = circle_increment(d, zeta, v, c, rho0, opt, &theta, &ambiguous);
        if (mode == Mode::Fine)
            m = std::max(m, circle_max_sampled(d, zeta, v, c, std::min(opt.fine_angles, 512), 4) - rho0);
        return m;
    };
    auto g = [&](double x) {
        double m = M(std::exp(x));
        return m > 0.0 ? std::log(m) - leps : -std::numeric_limits<double>::infinity();
    };

    // Initial guess from the first-order term 2|<grad, v>| c, else a quadratic profile.
    Complex a = d.grad(zeta).cwiseProduct(v).sum();
    double guess = std::min(std::sqrt(eps), eps / std::max(2.0 * std::abs(a), 1e-300));
    double x0 = std::log(guess);
    double y0 = g(x0);
    if (ambiguous) {
        mode = Mode::Fine;
        y0 = g(x0);
    } else if (opt.radial_samples == 0) {
        mode = Mode::Window;
    }

    auto solve = [&](double xs, double ys) -> double {
        double xl, yl, xh, yh;
        // bracket by log-log extrapolation (slopes lie in [1, m]); overshoot by 0.7
        double x = xs, y = ys;
        int guard = 0;
        if (y < 0) {
            xl = x, yl = y;
            for (;;) {
                double step = std::isfinite(y) ? std::max(-y, 0.05) + 0.7 : std::log(4.0);
                xh = x + step;
                yh = g(xh);
                if (yh >= 0) break;
                xl = x = xh, yl = y = yh;
                if (++guard > 200) fail("tau-bracket-failure", "increment never reaches eps");
            }
        } else {
            xh = x, yh = y;
            for (;;) {
                double step = std::max(y / d.type_m(), 0.05) + 0.7;
                xl = x - step;
                yl = g(xl);
                if (yl < 0) break;
                xh = x = xl, yh = y = yl;
                if (++guard > 400) fail("tau-bracket-failure", "increment stays above eps");
            }
        }
        int side = 0;
        for (int it = 0; it < 200; ++it) {
            double xm;
            if (std::isfinite(yl)) xm = (xl * yh - xh * yl) / (yh - yl); else xm = 0.5 * (xl + xh);
            if (!(xm > xl && xm < xh)) xm = 0.5 * (xl + xh);
            double ym = g(xm);
            if (std::abs(ym) < 1e-12) return xm;
            if (ym < 0) {
                xl = xm, yl = ym;
                if (side == -1) yh *= 0.5;
                side = -1;
            } else {
                xh = xm, yh = ym;
                if (side == 1 && std::isfinite(yl)) yl *= 0.5;
                side = 1;
            }
            if (xh - xl < opt.rel_tol) return 0.5 * (xl + xh);
        }
        fail("tau-bracket-failure", "no convergence");
    };

    double root = solve(x0, y0);
    if (mode != Mode::Window) return std::exp(root);
    // validate the windowed maximum with a full scan at the root
    mode = Mode::Full;
    double check = g(root);
    if (std::abs(check) < 1e-9 || (check < 0 && -check < opt.rel_tol)) return std::exp(root);
    if (ambiguous) {
        mode = Mode::Fine;
        check = g(root);
    }
    return std::exp(solve(root, check));
}

namespace {

// Orthonormal basis (columns) of the orthogonal complement of the first k columns of V.
CMatrix complement_basis(const CMatrix& V, int k, int n) {
    if (k == 0) return CMatrix::Identity(n, n);
    CMatrix Q = Eigen::HouseholderQR<CMatrix>(V.leftCols(k)).householderQ();
    return Q.rightCols(n - k);
}

// Minimize tau over unit vectors in the span of the columns of B.
CVector minimize_tau(const Domain& d, const CPoint& zeta, double eps, const CMatrix& B, const FrameOptions& opt,
                     double& best_tau) {
    const int m = static_cast<int>(B.cols());
    const int n = static_cast<int>(B.rows());
    if (m == 1) {
        CVector v = B.col(0);
        best_tau = tau(d, zeta, v, eps, opt.tau);
        return v;
    }
    std::vector<CVector> coarse;
    if (m == 2) {
        for (const auto& p : fibonacci_sphere(opt.sphere_samples)) {
            double a = std::acos(std::clamp(p.z(), -1.0, 1.0));
            double phi = std::atan2(p.y(), p.x());
            CVector u(2);
            u << std::cos(0.5 * a), std::polar(std::sin(0.5 * a), phi);
            coarse.push_back(u);
        }
    } else {
        coarse = sphere_directions(m, opt.sphere_samples * (m - 1), 0x5eed);
    }
    CVector best_u;
    best_tau = std::numeric_limits<double>::infinity();
    for (const auto& u : coarse) {
        double t = tau(d, zeta, B * u, eps, opt.tau);
        if (t < best_tau) best_tau = t, best_u = u;
    }
    // projected coordinate descent on the real coordinates of u
    double step = 2.0 / std::sqrt(static_cast<double>(opt.sphere_samples));
    while (step > opt.refine_tol) {
        bool improved = false;
        for (int a = 0; a < 2 * m; ++a) {
            for (double sgn : {1.0, -1.0}) {
                CVector u = best_u;
                u(a / 2) += (a % 2 == 0 ? Complex(sgn * step, 0) : Complex(0, sgn * step));
                u.normalize();
                double t = tau(d, zeta, B * u, eps, opt.tau);
                if (t < best_tau * (1.0 - 1e-9)) {
                    best_tau = t, best_u = u, improved = true;
                    break;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    (void)n;
    return B * best_u;
}

}  // namespace

ExtremalFrame extremal_frame(const Domain& d, const CPoint& zeta, double eps, const FrameOptions& opt) {
    if (!(eps > 0.0)) fail("bad-scale", "eps must be positive");
    const int n = d.dim();
    ExtremalFrame f;
    f.center = zeta;
    f.scale = eps;
    f.vectors = CMatrix::Zero(n, n);
    f.radii.resize(n);
    f.vectors.col(0) = complex_normal(d, zeta);
    f.radii[0] = tau(d, zeta, f.vectors.col(0), eps, opt.tau);
    for (int i = 1; i < n; ++i) {
        CMatrix B;
        if (n == 2) {
            B.resize(2, 1);
            B << -std::conj(f.vectors(1, 0)), std::conj(f.vectors(0, 0));
        } else {
            B = complement_basis(f.vectors, i, n);
        }
        double t = 0.0;
        CVector v = minimize_tau(d, zeta, eps, B, opt, t);
        // re-orthogonalize against earlier vectors
        for (int k = 0; k < i; ++k) v -= hdot<double>(v, f.vectors.col(k)) * f.vectors.col(k);
        v.normalize();
        f.vectors.col(i) = v;
        f.radii[i] = t;
    }
    return f;
}

double Polydisk::gauge(const CPoint& z) const {
    CVector lam = frame.coords(z);
    double g = 0.0;
    for (int k = 0; k < lam.size(); ++k) g = std::max(g, std::abs(lam(k)) / (c0 * dilation * frame.radii[k]));
    return g;
}

double Polydisk::bounding_radius() const {
    double s = 0.0;
    for (double r : frame.radii) s += r * r;
    return c0 * dilation * std::sqrt(s);
}

double Polydisk::extent(const CVector& e) const {
    double s = 0.0;
    for (int k = 0; k < frame.dim(); ++k) s += frame.radii[k] * std::abs(hdot<double>(frame.vectors.col(k), e));
    return c0 * dilation * s;
}

double Polydisk::volume() const {
    double v = 1.0;
    for (double r : frame.radii) v *= std::numbers::pi * std::pow(c0 * dilation * r, 2);
    return v;
}

Polydisk polydisk(const Domain& d, const CPoint& zeta, double eps, double dilation, const FrameOptions& opt) {
    if (!(dilation > 0.0)) fail("bad-scale", "dilation must be positive");
    return Polydisk{extremal_frame(d, zeta, eps, opt), dilation, d.constants().c0};
}

Polydisk polydisk_from_frame(const Domain& d, ExtremalFrame frame, double dilation) {
    return Polydisk{std::move(frame), dilation, d.constants().c0};
}

bool pseudo_ball_contains(const Domain& d, const CPoint& zeta, double eps, const CPoint& z, double dilation) {
    double r = (z - zeta).norm();
    if (r == 0.0) return true;
    CVector u = (z - zeta) / r;
    // r < A c0 tau(eps)  <=>  increment at radius r / (A c0) < eps
    return disk_increment(d, zeta, u, r / (dilation * d.constants().c0)) < eps;
}

double pseudo_distance_d1(const Domain& d, const CPoint& zeta, const CPoint& z, const DistanceOptions& opt) {
    if ((z - zeta).norm() == 0.0) return 0.0;
    auto member = [&](double eps) { return polydisk(d, zeta, eps, 1.0, opt.frame).contains(z); };
    double lo = 0.0, hi = opt.eps_min;
    while (!member(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > opt.eps_max) {
            if (member(opt.eps_max)) {
                hi = opt.eps_max;
                break;
            }
            fail("out-of-range", "z outside P_eps_max(zeta); bracket [" + std::to_string(lo) + ", " +
                                     std::to_string(opt.eps_max) + "]");
        }
    }
    if (lo == 0.0) return hi;
    while (hi / lo - 1.0 > opt.rel_tol) {
        double mid = std::sqrt(lo * hi);
        if (member(mid)) hi = mid; else lo = mid;
    }
    return hi;
}

double pseudo_distance_d(const Domain& d, const CPoint& zeta, const CPoint& z, const DistanceOptions& opt) {
    double r = (z - zeta).norm();
    if (r == 0.0) return 0.0;
    CVector u = (z - zeta) / r;
    double eps = disk_increment(d, zeta, u, r / d.constants().c0, opt.frame.tau);
    if (eps > opt.eps_max)
        fail("out-of-range", "z outside B_eps_max(zeta); bracket [" + std::to_string(opt.eps_min) + ", " +
                                 std::to_string(opt.eps_max) + "]");
    return std::max(eps, 0.0);
}

double k_weight(const Domain& d, const CPoint& z, const CVector& u, double delta) {
    return delta / tau(d, z, u, delta);
}

double k_weight(const Domain& d, const CPoint& z, const CVector& u) {
    return k_weight(d, z, u, boundary_distance(d, z));
}

Tent make_tent(const Domain& d, const CPoint& xi, double eps) {
    if (std::abs(d.rho(xi)) > 1e-8) fail("not-on-boundary", "tent center must lie on the boundary");
    if (!(eps > 0.0) || eps > d.constants().eps0 * (1 + 1e-12)) fail("bad-scale", "tent scale outside (0, eps0]");
    return Tent{xi, eps, polydisk(d, xi, eps)};
}

bool tent_membership(const Domain& d, const CPoint& xi, double eps, const CPoint& z) {
    return make_tent(d, xi, eps).contains(d, z);
}

}  // namespace lcx
