#include "lcx/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "lcx/carleson.hpp"
#include "lcx/covering.hpp"
#include "lcx/error.hpp"
#include "lcx/geometry.hpp"
#include "lcx/mollify.hpp"
#include "lcx/sampling.hpp"

namespace lcx {

bool SuiteReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

Budget parse_budget(const std::string& name) {
    if (name == "small") return Budget::Small;
    if (name == "default") return Budget::Default;
    if (name == "large") return Budget::Large;
    fail("bad-config", "budget must be small, default or large");
}

std::string budget_name(Budget b) {
    switch (b) {
        case Budget::Small: return "small";
        case Budget::Default: return "default";
        case Budget::Large: return "large";
    }
    return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::mt19937_64 rng_for(std::uint64_t seed, std::string_view tag) { return std::mt19937_64(derive_seed(seed, tag)); }

CVector random_unit(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    CVector v(n);
    for (int j = 0; j < n; ++j) v(j) = {g(rng), g(rng)};
    return v.normalized();
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return lo * std::pow(hi / lo, u(rng));
}

// Boundary point along a random ray, pushed inward by a log-uniform depth.
CPoint band_point(const Domain& d, std::mt19937_64& rng, double lo, double hi) {
    CPoint b = boundary_ray_point(d, random_unit(rng, d.dim()));
    return inward_point(d, b, log_uniform(rng, lo, hi));
}

// Uniform point of the polydisk |lambda_k| <= scale c0 tau_k in the frame.
CPoint frame_offset(const ExtremalFrame& f, double c0, double scale, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = f.dim();
    double x[kMaxReal];
    for (int a = 0; a < 2 * n; ++a) x[a] = u(rng);
    CVector lam = polydisk_point(n, x);
    CVector y(n);
    for (int k = 0; k < n; ++k) y(k) = scale * c0 * f.radii[k] * lam(k);
    return f.center + f.vectors * y;
}

CPoint axis_point(int n, double r) {
    CPoint z = CPoint::Zero(n);
    z(0) = r;
    return z;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

std::vector<CPoint> every(const std::vector<CPoint>& v, int count) {
    if (count <= 0 || count >= static_cast<int>(v.size())) return v;
    std::vector<CPoint> out;
    for (int i = 0; i < count; ++i) out.push_back(v[i * v.size() / count]);
    return out;
}

SmoothFormField member(const FormBundle& b) {
    SmoothFormField f;
    f.n = b.n;
    f.degree = b.degree;
    f.support = b.support;
    f.eval = [b](const CPoint& z) {
        Coeffs o;
        b.eval(z, &o);
        return o;
    };
    return f;
}

struct Cloud {
    std::vector<CPoint> points;
    std::vector<double> weights;
};

// Boundary layer over the tangent ball B(p, R) down to depth smax, depth = smax u^2 so that delta^{-1/2}
// integrands are flat in u. Weights sum to the layer volume to first order in R.
Cloud layer_cloud(const Domain& d, const CPoint& p, double R, double smax, int count, std::uint64_t seed) {
    const int n = d.dim();
    CMatrix F = reference_frame(d, p);
    CVector nu = F.col(0);
    std::vector<CVector> tb{Complex(0, 1) * F.col(0)};
    for (int k = 1; k < n; ++k) {
        tb.push_back(F.col(k));
        tb.push_back(Complex(0, 1) * F.col(k));
    }
    const double cube = std::pow(2.0 * R, 2 * n - 1);
    Halton h(2 * n, seed);
    std::vector<double> u(2 * n);
    Cloud c;
    for (int i = 0; i < count; ++i) {
        h.point(i, u.data());
        CVector y = CVector::Zero(n);
        double r2 = 0.0;
        for (int a = 0; a < 2 * n - 1; ++a) {
            double x = (2.0 * u[a] - 1.0) * R;
            r2 += x * x;
            y += x * tb[a];
        }
        const double v = u[2 * n - 1];
        if (r2 > R * R || v <= 0.0) continue;
        CPoint b = boundary_from_tangent(d, p, nu, y);
        c.points.push_back(inward_point(d, b, smax * v * v));
        c.weights.push_back(cube * 2.0 * smax * v / count);
    }
    return c;
}

}  // namespace

// ---------------------------------------------------------------- geometry

Check check_tau_oracle(const Domain& d) {
    Check c{"tau oracle", false, 0.0, 1e-3, ""};
    const auto& m = d.exponents();
    if (d.dim() < 2 || m.empty() || m[0] != 1) {
        c.pass = true;
        c.detail = "no closed form for " + d.name();
        return c;
    }
    const double r = 0.95;
    CPoint z = axis_point(d.dim(), r);
    CVector e1 = CVector::Zero(d.dim()), e2 = CVector::Zero(d.dim());
    e1(0) = 1.0;
    e2(1) = 1.0;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        double t2 = std::pow(eps, 1.0 / (2.0 * m[1]));
        double t1 = -r + std::sqrt(r * r + eps);
        c.value = std::max(c.value, std::abs(tau(d, z, e2, eps) / t2 - 1.0));
        c.value = std::max(c.value, std::abs(tau(d, z, e1, eps) / t1 - 1.0));
    }
    c.pass = c.value <= c.bound;
    c.detail = "max relative error " + fmt(c.value) + " on " + d.name();
    return c;
}

Check check_scaling_law(const std::vector<Domain>& domains, int samples, std::uint64_t seed, Table* table) {
    Check c{"scaling law", true, 0.0, 1e-2, ""};
    if (table) *table = {"scaling law", {"domain", "tangential", "lambda", "eps", "ratio", "exponent"}, {}};
    double lo = kInf, hi = 0.0;
    int bad = 0;
    const int lambdas[3] = {2, 4, 8};
    for (std::size_t di = 0; di < domains.size(); ++di) {
        const Domain& d = domains[di];
        auto rng = rng_for(seed, "scaling-" + std::to_string(di));
        const double m = d.type_m();
        for (int i = 0; i < samples; ++i) {
            CPoint z = band_point(d, rng, 1e-3, 0.04);
            CVector v = random_unit(rng, d.dim());
            double eps = log_uniform(rng, 1e-4, 1e-2);
            double lam = lambdas[i % 3];
            double r = tau(d, z, v, lam * eps) / tau(d, z, v, eps);
            double a = r / std::pow(lam, 1.0 / m), b = r / lam;
            lo = std::min(lo, a);
            hi = std::max(hi, b);
            if (a < 0.5 || b > 2.0) ++bad;
            if (table) table->rows.push_back({double(di), 0.0, lam, eps, r, std::log(r) / std::log(lam)});
        }
        // closed-form tangential slot at (r, 0)
        const auto& ex = d.exponents();
        if (d.dim() >= 2 && !ex.empty() && ex[0] == 1) {
            CVector e2 = CVector::Zero(d.dim());
            e2(1) = 1.0;
            CPoint z = axis_point(d.dim(), 0.95);
            for (double eps : {1e-2, 1e-3, 1e-4})
                for (int lam : lambdas) {
                    double r = tau(d, z, e2, lam * eps) / tau(d, z, e2, eps);
                    double expect = std::pow(lam, 1.0 / (2.0 * ex[1]));
                    c.value = std::max(c.value, std::abs(r / expect - 1.0));
                    if (table) table->rows.push_back({double(di), 1.0, double(lam), eps, r, std::log(r) / std::log(lam)});
                }
        }
    }
    c.pass = bad == 0 && c.value <= c.bound;
    c.detail = "min tau(l eps)/(l^(1/m) tau(eps)) " + fmt(lo) + ", max tau(l eps)/(l tau(eps)) " + fmt(hi) +
               ", outside [0.5, 2]: " + std::to_string(bad) + ", tangential error " + fmt(c.value);
    return c;
}

Check check_directional_decomposition(const std::vector<Domain>& domains, int samples, std::uint64_t seed,
                                      Table* table) {
    Check c{"directional decomposition", false, 0.0, 8.0, ""};
    if (table) *table = {"directional decomposition", {"domain", "eps", "ratio"}, {}};
    double lo = kInf, hi = 0.0;
    for (std::size_t di = 0; di < domains.size(); ++di) {
        const Domain& d = domains[di];
        auto rng = rng_for(seed, "decomposition-" + std::to_string(di));
        for (int i = 0; i < samples; ++i) {
            CPoint z = band_point(d, rng, 1e-3, 0.04);
            double eps = log_uniform(rng, 1e-4, 1e-2);
            ExtremalFrame f = extremal_frame(d, z, eps);
            CVector g = random_unit(rng, d.dim());
            double rhs = 0.0;
            for (int k = 0; k < d.dim(); ++k) rhs += std::abs(hdot<double>(g, f.vectors.col(k))) / f.radii[k];
            double r = (1.0 / tau(d, z, g, eps)) / rhs;
            lo = std::min(lo, r);
            hi = std::max(hi, r);
            if (table) table->rows.push_back({double(di), eps, r});
        }
    }
    c.value = std::max(hi, 1.0 / lo);
    c.pass = c.value <= c.bound;
    c.detail = "ratio in [" + fmt(lo) + ", " + fmt(hi) + "], C = " + fmt(c.value);
    return c;
}

Check check_pseudo_distance(const Domain& d, int pairs, int triples, std::uint64_t seed, Table* table) {
    Check c{"pseudo-distance equivalence", false, 0.0, kInf, ""};
    if (table) *table = {"pseudo-distance", {"kind", "value"}, {}};
    const double c0 = d.constants().c0;
    auto rng = rng_for(seed, "pseudo-distance");
    double lo = kInf, hi = 0.0, K = 0.0;
    int skipped = 0;
    for (int i = 0; i < pairs; ++i) {
        CPoint z = band_point(d, rng, 2e-3, 0.03);
        double eps = log_uniform(rng, 1e-4, 1e-2);
        CPoint w = frame_offset(extremal_frame(d, z, eps), c0, 1.0, rng);
        try {
            double r = pseudo_distance_d(d, z, w) / pseudo_distance_d1(d, z, w);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
            if (table) table->rows.push_back({0.0, r});
        } catch (const NumericalError&) {
            ++skipped;
        }
    }
    for (int i = 0; i < triples; ++i) {
        CPoint z = band_point(d, rng, 2e-3, 0.03);
        CPoint w = frame_offset(extremal_frame(d, z, log_uniform(rng, 1e-4, 1e-2)), c0, 1.0, rng);
        CPoint x = frame_offset(extremal_frame(d, w, log_uniform(rng, 1e-4, 1e-2)), c0, 1.0, rng);
        if (!(d.rho(w) < 0.0 && d.rho(x) < 0.0)) {
            ++skipped;
            continue;
        }
        try {
            double k = pseudo_distance_d1(d, z, x) / (pseudo_distance_d1(d, z, w) + pseudo_distance_d1(d, w, x));
            K = std::max(K, k);
            if (table) table->rows.push_back({1.0, k});
        } catch (const NumericalError&) {
            ++skipped;
        }
    }
    c.value = std::max(hi, 1.0 / lo);
    c.pass = std::isfinite(c.value) && std::isfinite(K) && K > 0.0;
    c.detail = "d/d1 in [" + fmt(lo) + ", " + fmt(hi) + "], C = " + fmt(c.value) + "; quasi-triangle K = " + fmt(K) +
               "; skipped " + std::to_string(skipped);
    return c;
}

Check check_frame_stability(const Domain& d, int samples, std::uint64_t seed) {
    Check c{"frame stability", false, 0.0, kInf, ""};
    auto rng = rng_for(seed, "frame-stability");
    const double c0 = d.constants().c0;
    for (int i = 0; i < samples; ++i) {
        CPoint z = band_point(d, rng, 2e-3, 0.03);
        double eps = log_uniform(rng, 1e-4, 1e-2);
        ExtremalFrame fz = extremal_frame(d, z, eps);
        CPoint w = frame_offset(fz, c0, 1.0, rng);
        ExtremalFrame fw = extremal_frame(d, w, eps);
        for (int k = 0; k < d.dim(); ++k) {
            double r = fw.radii[k] / fz.radii[k];
            c.value = std::max(c.value, std::max(r, 1.0 / r));
        }
    }
    c.pass = std::isfinite(c.value);
    c.detail = "tau_i(w, eps)/tau_i(z, eps) within [1/C, C], C = " + fmt(c.value);
    return c;
}

Check check_ball_equivalence(const Domain& d, int samples, std::uint64_t seed) {
    Check c{"pseudo-ball and polydisk", false, 0.0, kInf, ""};
    auto rng = rng_for(seed, "ball-equivalence");
    const double c0 = d.constants().c0;
    for (int i = 0; i < samples; ++i) {
        CPoint z = band_point(d, rng, 2e-3, 0.03);
        double eps = log_uniform(rng, 1e-4, 1e-2);
        Polydisk P = polydisk_from_frame(d, extremal_frame(d, z, eps));
        CPoint w = frame_offset(P.frame, c0, 2.0, rng);
        double g = P.gauge(w);
        CVector u = (w - z).normalized();
        double b = (w - z).norm() / (c0 * tau(d, z, u, eps));
        c.value = std::max(c.value, std::max(g / b, b / g));
    }
    c.pass = std::isfinite(c.value);
    c.detail = "P/K within B within K P, K = " + fmt(c.value);
    return c;
}

// ---------------------------------------------------------------- carleson

Check check_dirac_norm(int boundary_samples) {
    Check c{"Dirac Carleson norm", false, 0.0, 0.0, ""};
    Domain b = builtin_domain("ball");
    TentSet tents(b, default_grid(b, boundary_samples));
    DiscreteCurrent mu;
    mu.kind = FormKind::Scalar;
    mu.atoms.push_back({CPoint::Zero(2), Coeffs::Constant(1, 1.0)});
    double one = carleson_norm_measure(tents, mu).norm_value;
    double two = carleson_norm_measure(tents, 2.0 * mu).norm_value;
    double zero = carleson_norm_measure(tents, DiscreteCurrent{}).norm_value;
    c.value = one;
    c.bound = 1.0;
    c.pass = one == 1.0 && two == 2.0 && zero == 0.0;
    c.detail = "norm " + fmt(one) + ", doubled " + fmt(two) + ", empty " + fmt(zero);
    return c;
}

Check check_bmo(std::uint64_t seed) {
    Check c{"BMO_s sanity", false, 0.0, 1e-12, ""};
    Domain b = builtin_domain("ball");
    CarlesonGrid g = s_grid(b, 0.005, 16, 3, seed);
    g.surface_samples = 1000;
    TentSet tents(b, g);
    double k = bmo_s_norm(tents, [](const CPoint&) { return 3.0; });
    auto f = [](const CPoint& z) { return std::sin(40.0 * z(0).real()) + z(1).imag(); };
    double v = bmo_s_norm(tents, f);
    double w = bmo_s_norm(tents, [&](const CPoint& z) { return f(z) + 5.0; });
    c.value = std::abs(v - w);
    c.pass = k == 0.0 && v > 0.0 && c.value <= c.bound;
    c.detail = "constant " + fmt(k) + ", f " + fmt(v) + ", |f + 5| - |f| " + fmt(c.value);
    return c;
}

Check check_norm_homogeneity(std::uint64_t seed) {
    Check c{"norm homogeneity and triangle", false, 0.0, 1e-12, ""};
    Domain b = builtin_domain("ball");
    auto rng = rng_for(seed, "homogeneity");
    std::uniform_real_distribution<double> u(0.1, 1.0);
    auto random_measure = [&] {
        DiscreteCurrent mu;
        mu.kind = FormKind::Scalar;
        for (int i = 0; i < 20; ++i) mu.atoms.push_back({band_point(b, rng, 1e-4, 0.02), Coeffs::Constant(1, u(rng))});
        return mu;
    };
    CarlesonGrid g = default_grid(b, 32, 6, seed);
    TentSet tents(b, g);
    CarlesonGrid g2 = default_grid(b, 32, 8, seed);
    TentSet more(b, g2);
    int bad = 0;
    for (int i = 0; i < 5; ++i) {
        DiscreteCurrent m1 = random_measure(), m2 = random_measure();
        double a = carleson_norm_measure(tents, m1).norm_value;
        double a3 = carleson_norm_measure(tents, 3.0 * m1).norm_value;
        double s = carleson_norm_measure(tents, m1 + m2).norm_value;
        double bb = carleson_norm_measure(tents, m2).norm_value;
        c.value = std::max(c.value, std::abs(a3 - 3.0 * a) / (3.0 * a));
        if (s > (a + bb) * (1.0 + 1e-12)) ++bad;
        if (carleson_norm_measure(more, m1).norm_value < a) ++bad;
    }
    c.pass = bad == 0 && c.value <= c.bound;
    c.detail = "homogeneity error " + fmt(c.value) + ", triangle or scale-monotonicity failures " + std::to_string(bad);
    return c;
}

// ---------------------------------------------------------------- mollify

namespace {

std::vector<CPoint> piece_points(const HyperplanePiece& piece, double eps, int count, std::uint64_t seed) {
    auto rng = rng_for(seed, "piece-points");
    std::uniform_real_distribution<double> u(-1, 1);
    const int n = static_cast<int>(piece.a.size());
    std::vector<CPoint> out;
    while (static_cast<int>(out.size()) < count) {
        CVector y(n);
        for (int j = 0; j < n; ++j) y(j) = {u(rng), u(rng)};
        y -= piece.nu * hdot<double>(y, piece.nu);
        y = y.normalized() * (0.5 * (u(rng) + 1.0) * (piece.radius - eps));
        // normal offset uniform in the disk of radius eps / 4
        Complex off = std::polar(0.25 * eps * std::sqrt(0.5 * (u(rng) + 1.0)), std::numbers::pi * u(rng));
        out.push_back(piece.a + y + piece.nu * off);
    }
    return out;
}

struct MollifyCase {
    HyperplanePiece piece;
    DiscreteCurrent t;
    Mollifier m;
    CPoint p;
};

MollifyCase mollify_case(const Domain& d, int i, std::uint64_t seed) {
    const double eps = 0.0005;
    CPoint p = boundary_grid(d, 64, derive_seed(seed, "mollify-points"))[i % 64];
    double depth = 0.7 * d.constants().c0 * tau(d, p, complex_normal(d, p), d.constants().eps0);
    std::uniform_real_distribution<double> u(0.05, 0.2);
    auto rng = rng_for(seed + i, "mollify-tilt");
    HyperplanePiece piece = random_piece(d, p, depth, 0.004, u(rng), derive_seed(seed, "piece", i));
    return {piece, hyperplane_current(piece, eps / 25), make_mollifier(d.dim(), eps), p};
}

}  // namespace

Check check_mollify_bounds(int currents, std::uint64_t seed, Table* table) {
    Check c{"mollification bounds", false, 0.0, 10.0, ""};
    if (table) *table = {"mollification", {"current", "norm ratio", "closedness"}, {}};
    Domain b = builtin_domain("ball");
    double worst_closed = 0.0, lo = kInf;
    for (int i = 0; i < currents; ++i) {
        MollifyCase mc = mollify_case(b, i, seed);
        SmoothFormField f = mollify_current(mc.t, mc.m);
        double closed = closedness_defect(f.eval, b.dim(), 2, piece_points(mc.piece, mc.m.eps, 50, seed + i),
                                          mc.m.eps / 20).relative();
        CarlesonGrid g;
        g.boundary = boundary_patch_grid(b, mc.p, 0.03, 24, derive_seed(seed, "mollify-grid", i));
        g.boundary.push_back(mc.p);
        g.scales = dyadic_scales(0.0, b.constants().eps0, 6);
        TentSet tents(b, g);
        CurrentNormOptions opt;
        opt.focus = mollifier_focus(mc.t, mc.m);
        opt.focus_radius = focus_radius(mc.m);
        double r = carleson_norm_current(tents, f, opt).norm_value / carleson_norm_current(tents, mc.t).norm_value;
        c.value = std::max(c.value, r);
        lo = std::min(lo, r);
        worst_closed = std::max(worst_closed, closed);
        if (table) table->rows.push_back({double(i), r, closed});
    }
    c.pass = c.value <= c.bound && worst_closed <= 1e-3;
    c.detail = "norm ratio in [" + fmt(lo) + ", " + fmt(c.value) + "], closedness defect " + fmt(worst_closed) +
               " over " + std::to_string(currents) + " currents";
    return c;
}

Check check_mollify_global(int currents, std::uint64_t seed) {
    Check c{"global mollification bound", false, 0.0, 10.0, ""};
    Domain b = builtin_domain("ball");
    double lo = kInf;
    for (int i = 0; i < currents; ++i) {
        MollifyCase mc = mollify_case(b, i, seed);
        Domain shrunk = shrunken_domain(b, mc.m.eps);
        CPoint ps = project_to_boundary(shrunk, inward_point(b, mc.p, 4.0 * mc.m.eps));
        CarlesonGrid g;
        g.boundary = boundary_patch_grid(b, mc.p, 0.03, 24, derive_seed(seed, "mollify-grid", i));
        g.boundary.push_back(mc.p);
        g.scales = dyadic_scales(0.0, b.constants().eps0, 6);
        CarlesonGrid gs;
        gs.boundary = boundary_patch_grid(shrunk, ps, 0.03, 24, derive_seed(seed, "mollify-grid", i));
        gs.boundary.push_back(ps);
        gs.scales = dyadic_scales(mc.m.eps, b.constants().eps0, 6);
        CurrentNormOptions opt;
        opt.focus = mollifier_focus(mc.t, mc.m);
        opt.focus_radius = focus_radius(mc.m);
        SmoothFormField f = mollify_current(mc.t, mc.m, [shrunk](const CPoint& z) { return shrunk.rho(z) < 0.0; });
        double r = carleson_norm_current(TentSet(shrunk, gs), f, opt).norm_value /
                   carleson_norm_current(TentSet(b, g), mc.t).norm_value;
        c.value = std::max(c.value, r);
        lo = std::min(lo, r);
    }
    c.pass = c.value <= c.bound;
    c.detail = "eps-norm on the shrunken domain over the W1 norm: [" + fmt(lo) + ", " + fmt(c.value) + "]";
    return c;
}

// ---------------------------------------------------------------- homotopy

HomotopySetup make_homotopy_setup(const Domain& d, const CPoint& p, int per_axis, std::uint64_t seed,
                                  int audit_samples) {
    HomotopySetup s;
    s.chart = std::make_shared<LocalChart>(build_local_chart(d, p));
    s.grid = w_grid(*s.chart, per_axis, seed);
    s.parts = std::make_shared<PartitionSystem>(*s.chart, segment_targets(*s.chart, s.grid, s.cfg.n_s));
    s.audit = select_c(*s.chart, *s.parts, s.grid, audit_samples, seed);
    s.cfg.c = s.audit.c;
    s.cfg.seed = seed;
    return s;
}

Check check_endpoints(const HomotopySetup& s, int samples, std::uint64_t seed) {
    Check c{"homotopy endpoints", false, 0.0, 1e-12, ""};
    const LocalChart& ch = *s.chart;
    const int n = ch.dim();
    auto rng = rng_for(seed, "endpoints");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double dv = 0.0;
    for (int i = 0; i < samples; ++i) {
        const CPoint& z = s.grid[rng() % s.grid.size()];
        double x[kMaxReal];
        for (int a = 0; a < 2 * n; ++a) x[a] = u(rng);
        CVector lam = polydisk_point(n, x);
        c.value = std::max(c.value, h_lambda(ch, *s.parts, s.cfg, lam, 0.0, z).norm());
        c.value = std::max(c.value, (h_lambda(ch, *s.parts, s.cfg, lam, 1.0, z) - z).norm() / std::max(1.0, z.norm()));
        CVector v = random_unit(rng, n);
        dv = std::max(dv, (h_direction_derivative(ch, *s.parts, s.cfg, lam, 1.0, z, v) - v).norm());
    }
    c.pass = c.value <= 1e-12 && dv <= 1e-6;
    c.detail = "|h(0,z)|, |h(1,z) - z| <= " + fmt(c.value) + "; |Z_{1,v} - v| <= " + fmt(dv);
    return c;
}

Check check_containment(const HomotopySetup& s, int samples, std::uint64_t seed) {
    Check c{"containment Q1 in Q", false, 0.0, 0.0, ""};
    // independent audit at the selected c
    std::vector<int> counts = containment_audit(*s.chart, *s.parts, s.grid, samples,
                                                derive_seed(seed, "containment-recheck"), s.audit.q);
    const int bad = counts[s.audit.q];
    c.value = bad;
    c.pass = bad == 0;
    c.detail = "c = " + fmt(s.cfg.c) + ", violations " + std::to_string(bad) + " of " + std::to_string(samples);
    return c;
}

Check check_bump_depths(const HomotopySetup& s, int samples, std::uint64_t seed) {
    Check c{"bump depth comparability", false, 0.0, kInf, ""};
    const LocalChart& ch = *s.chart;
    auto rng = rng_for(seed, "bump-depths");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<PartitionTerm> terms;
    double K = 0.0;
    for (int i = 0; i < samples; ++i) {
        const CPoint& z = s.grid[rng() % s.grid.size()];
        CPoint w = u(rng) * z;
        s.parts->evaluate(w, terms, false);
        const double dw = ch.delta(w);
        for (const auto& t : terms) {
            double r = dw / s.parts->depth(t.j);
            c.value = std::max(c.value, std::max(r, 1.0 / r));
            const Polydisk& P = s.parts->polydisk(t.j);
            K = std::max(K, P.gauge(ch.ambient(w)) * P.dilation);  // dilation of P_j reaching tz
        }
    }
    c.pass = std::isfinite(c.value) && std::isfinite(K);
    c.detail = "delta(tz)/delta(Z_j) within [1/C, C], C = " + fmt(c.value) + "; tz in K P_j, K = " + fmt(K);
    return c;
}

Check check_identity(const HomotopySetup& s, int forms, const std::vector<CPoint>& points, int refine_points,
                     std::uint64_t seed, Table* table, double bound) {
    Check c{"homotopy identity", false, 0.0, bound, ""};
    const LocalChart& ch = *s.chart;
    const CPoint pc = ch.chart(ch.p);
    const std::vector<CPoint>& pts = points.empty() ? s.grid : points;
    FormBundle th = closed_test_forms(ch.dim(), 2, pc, 0.8 * ch.depth_a, forms, derive_seed(seed, "identity"), s.grid);
    HomotopyConfig cfg = s.cfg;
    auto tr = t_range(th.support, pc, ch.r2, cfg.c * std::sqrt(ch.depth_a));
    cfg.t0 = tr.first;
    cfg.t1 = tr.second;
    auto reps = verify_homotopy_identity(ch, *s.parts, cfg, th, nullptr, pts);
    if (table) *table = {"homotopy identity", {"form", "n_lambda", "points", "max", "mean", "mc_stderr"}, {}};
    std::vector<int> sub;
    for (int i = 0; i < refine_points; ++i) sub.push_back(static_cast<int>(i * pts.size() / refine_points));
    double base = 0.0;
    for (int f = 0; f < forms; ++f) {
        c.value = std::max(c.value, reps[f].max);
        for (int i : sub) base = std::max(base, reps[f].per_point[i]);
        if (table) table->rows.push_back({double(f), double(cfg.n_lambda), double(reps[f].points), reps[f].max,
                                          reps[f].mean, reps[f].mc_stderr});
    }
    std::vector<CPoint> subpts;
    for (int i : sub) subpts.push_back(pts[i]);
    cfg.n_lambda *= 4;
    auto fine = verify_homotopy_identity(ch, *s.parts, cfg, th, nullptr, subpts);
    double refined = 0.0;
    for (int f = 0; f < forms; ++f) {
        refined = std::max(refined, fine[f].max);
        if (table) table->rows.push_back({double(f), double(cfg.n_lambda), double(fine[f].points), fine[f].max,
                                          fine[f].mean, fine[f].mc_stderr});
    }
    c.pass = c.value <= c.bound && refined < base;
    c.detail = "max residual " + fmt(c.value) + " on " + std::to_string(pts.size()) + " points at n_lambda " +
               std::to_string(s.cfg.n_lambda) + "; subgrid " + fmt(base) + " -> " + fmt(refined) + " at 4x";
    return c;
}

Check check_cutoff(const HomotopySetup& s, int points, std::uint64_t seed, Table* table, double bound) {
    Check c{"d-solver end to end", false, 0.0, bound, ""};
    const LocalChart& ch = *s.chart;
    const Domain& d = ch.domain;
    const int n = ch.dim();
    const CPoint pc = ch.chart(ch.p);
    SmoothFormField T = member(closed_test_forms(n, 2, pc, 1.5 * ch.depth_a, 1, derive_seed(seed, "cutoff"), s.grid));
    CutoffSolution sol = cutoff_solve(s.chart, s.parts, s.cfg, T);
    if (table) *table = {"cutoff solve", {"point", "residual", "beta"}, {}};
    double scale = 0.0, beta = 0.0;
    auto pts = every(s.grid, points);
    std::vector<double> res;
    for (const auto& z : pts) {
        Coeffs dw = fd_exterior_derivative(sol.w.eval, n, 1, z, 1e-3 * ch.delta(z));
        Coeffs t = T(z);
        res.push_back(sup_norm(dw - t));
        scale = std::max(scale, sup_norm(t));
        beta = std::max(beta, sup_norm(sol.beta(z)));
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
        c.value = std::max(c.value, res[i] / scale);
        if (table) table->rows.push_back({double(i), res[i] / scale, sup_norm(sol.beta(pts[i]))});
    }
    // W1 norm of T in ambient coordinates
    SmoothFormField Ta = T;
    Ta.support.center = ch.ambient(T.support.center);
    Ta.eval = [T, ch](const CPoint& w) { return T.eval(ch.chart(w)); };
    CarlesonGrid g;
    g.boundary = boundary_patch_grid(d, ch.p, 3.0 * ch.depth_a, 24, derive_seed(seed, "cutoff-grid"));
    g.boundary.push_back(ch.p);
    g.scales = dyadic_scales(0.0, d.constants().eps0, 6);
    double tn = carleson_norm_current(TentSet(d, g), Ta).norm_value;
    double C = beta / tn;
    c.pass = c.value <= c.bound && std::isfinite(C);
    c.detail = "max |dw - T| " + fmt(c.value) + " on " + std::to_string(pts.size()) + " points; sup_W |beta| " +
               fmt(beta) + ", |T|_W1 " + fmt(tn) + ", C = " + fmt(C) + ", R = " + fmt(sol.R);
    return c;
}

Check check_averaging(const HomotopySetup& s, int functions, int cloud, std::uint64_t seed, Table* table) {
    Check c{"averaging Carleson bound", false, 0.0, 0.25, ""};
    const LocalChart& ch = *s.chart;
    const Domain& d = ch.domain;
    const int K = 4;
    auto rng = rng_for(seed, "averaging");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Cloud seeds = layer_cloud(d, ch.p, 1.5 * ch.r2, 3.0 * ch.eta1, 8 * functions * K, derive_seed(seed, "bumps"));
    if (static_cast<int>(seeds.points.size()) < functions * K) fail("bad-config", "too few bump centers");
    std::vector<CPoint> cen(functions * K);
    std::vector<double> rad(functions * K), amp(functions * K);
    for (int i = 0; i < functions * K; ++i) {
        cen[i] = seeds.points[i];
        rad[i] = ch.r2 * (0.5 + 0.5 * u(rng));
        amp[i] = 0.5 + u(rng);
    }
    auto f = [&](const CPoint& w, double* o) {
        CPoint a = ch.ambient(w);
        for (int k = 0; k < functions; ++k) {
            double v = 0.0;
            for (int j = 0; j < K; ++j) {
                double q = (a - cen[k * K + j]).squaredNorm() / (rad[k * K + j] * rad[k * K + j]);
                if (q < 1.0) v += amp[k * K + j] * std::exp(1.0 - 1.0 / (1.0 - q));
            }
            o[k] = v;
        }
    };
    HomotopyConfig cfg = s.cfg;
    cfg.n_t = 32;
    cfg.q_samples = 32;
    if (table) *table = {"averaging", {"level", "function", "T norm", "f norm", "ratio"}, {}};
    double worst[2] = {0.0, 0.0};
    for (int level = 0; level < 2; ++level) {
        const int scale = 1 << level;
        CarlesonGrid g;
        g.boundary = boundary_patch_grid(d, ch.p, 0.5 * ch.r2, 16 * scale, derive_seed(seed, "averaging-grid"));
        g.boundary.push_back(ch.p);
        g.scales = dyadic_scales(0.0, d.constants().eps0, 4);
        TentSet tents(d, g);
        Cloud cw = layer_cloud(d, ch.p, ch.r2, ch.eta1, cloud * scale, derive_seed(seed, "w-cloud"));
        Cloud cv = layer_cloud(d, ch.p, 2.5 * ch.r2, 3.0 * ch.eta1 + ch.r2, 50 * cloud * scale,
                               derive_seed(seed, "v-cloud"));
        std::vector<CPoint> wp, vp;
        std::vector<std::vector<double>> ww(functions), vw(functions);
        std::vector<double> o(functions);
        for (std::size_t i = 0; i < cw.points.size(); ++i) {
            CPoint z = ch.chart(cw.points[i]);
            if (!ch.in_W(z)) continue;
            auto v = averaging_T(ch, cfg, f, functions, z);
            wp.push_back(cw.points[i]);
            for (int k = 0; k < functions; ++k) ww[k].push_back(v[k] * cw.weights[i]);
        }
        for (std::size_t i = 0; i < cv.points.size(); ++i) {
            CPoint z = ch.chart(cv.points[i]);
            if (!ch.in_V(z)) continue;
            f(z, o.data());
            vp.push_back(cv.points[i]);
            for (int k = 0; k < functions; ++k) vw[k].push_back(o[k] * cv.weights[i]);
        }
        for (int k = 0; k < functions; ++k) {
            double a = carleson_from_weights(tents, wp, ww[k]).norm_value;
            double b = carleson_from_weights(tents, vp, vw[k]).norm_value;
            worst[level] = std::max(worst[level], a / b);
            if (table) table->rows.push_back({double(level), double(k), a, b, a / b});
        }
    }
    c.value = std::abs(worst[1] / worst[0] - 1.0);
    c.pass = std::isfinite(worst[0]) && std::isfinite(worst[1]) && c.value <= c.bound;
    c.detail = "max ratio " + fmt(worst[0]) + ", refined 2x " + fmt(worst[1]) + ", change " + fmt(c.value);
    return c;
}

// ---------------------------------------------------------------- suites

SuiteReport verify_geometry(const Domain& d, Budget b, std::uint64_t seed) {
    const int k = b == Budget::Small ? 1 : b == Budget::Default ? 4 : 10;
    SuiteReport r{"geometry", {}, {}};
    r.checks.push_back(check_tau_oracle(d));
    Table t;
    r.checks.push_back(check_scaling_law({d}, 50 * k, seed, &t));
    r.tables.push_back(t);
    r.checks.push_back(check_directional_decomposition({d}, 25 * k, seed, &t));
    r.tables.push_back(t);
    r.checks.push_back(check_pseudo_distance(d, 50 * k, 125 * k, seed, &t));
    r.tables.push_back(t);
    r.checks.push_back(check_frame_stability(d, 25 * k, seed));
    r.checks.push_back(check_ball_equivalence(d, 125 * k, seed));
    return r;
}

SuiteReport verify_carleson(const Domain&, Budget b, std::uint64_t seed) {
    SuiteReport r{"carleson", {}, {}};
    r.checks.push_back(check_dirac_norm(b == Budget::Small ? 16 : 32));
    r.checks.push_back(check_bmo(seed));
    r.checks.push_back(check_norm_homogeneity(seed));
    return r;
}

SuiteReport verify_mollify(const Domain&, Budget b, std::uint64_t seed) {
    const int count = b == Budget::Small ? 3 : b == Budget::Default ? 20 : 40;
    SuiteReport r{"mollify", {}, {}};
    Table t;
    r.checks.push_back(check_mollify_bounds(count, seed, &t));
    r.tables.push_back(t);
    r.checks.push_back(check_mollify_global(b == Budget::Small ? 1 : 3, seed));
    return r;
}

SuiteReport verify_homotopy(const Domain& d, Budget b, std::uint64_t seed) {
    SuiteReport r{"homotopy", {}, {}};
    CPoint p = CPoint::Zero(d.dim());
    p(0) = 1.0;
    HomotopySetup s = make_homotopy_setup(d, p, b == Budget::Small ? 6 : 20, seed);
    if (b == Budget::Large) s.cfg.n_lambda *= 4;
    r.checks.push_back(check_endpoints(s, 200, seed));
    r.checks.push_back(check_containment(s, 1000, seed));
    r.checks.push_back(check_bump_depths(s, 500, seed));
    Table t;
    if (b == Budget::Small) {
        s.cfg.n_lambda = 1024;
        r.checks.push_back(check_identity(s, 5, every(s.grid, 8), 4, seed, &t, 2e-2));
    } else {
        r.checks.push_back(check_identity(s, 5, {}, 8, seed, &t));
    }
    r.tables.push_back(t);
    r.checks.push_back(b == Budget::Small ? check_cutoff(s, 4, seed, &t, 2e-2) : check_cutoff(s, 8, seed, &t));
    r.tables.push_back(t);
    r.checks.push_back(check_averaging(s, 10, b == Budget::Small ? 100 : 400, seed, &t));
    r.tables.push_back(t);
    return r;
}

SuiteReport run_suite(const std::string& name, const Domain& d, Budget b, std::uint64_t seed) {
    if (name == "geometry") return verify_geometry(d, b, seed);
    if (name == "carleson") return verify_carleson(d, b, seed);
    if (name == "mollify") return verify_mollify(d, b, seed);
    if (name == "homotopy") return verify_homotopy(d, b, seed);
    fail("unknown-suite", name);
}

}  // namespace lcx
