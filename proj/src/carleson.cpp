#include "lcx/carleson.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "lcx/covering.hpp"
#include "lcx/error.hpp"
#include "lcx/sampling.hpp"

namespace lcx {

namespace {

// Real orthonormal basis of the real tangent hyperplane {Re <w, nu> = 0}: i nu, then e_k, i e_k.
std::vector<CVector> tangent_basis(const CVector& nu) {
    const int n = static_cast<int>(nu.size());
    Eigen::MatrixXcd a(n, 1);
    a.col(0) = nu;
    Eigen::MatrixXcd q = Eigen::HouseholderQR<Eigen::MatrixXcd>(a).householderQ();
    std::vector<CVector> out;
    out.push_back(Complex(0, 1) * nu);
    for (int k = 1; k < n; ++k) {
        CVector e = q.col(k);
        out.push_back(e);
        out.push_back(Complex(0, 1) * e);
    }
    return out;
}

double real_derivative(const Domain& d, const CPoint& z, const CVector& w) {
    return 2.0 * d.grad(z).cwiseProduct(w).sum().real();
}

bool two_vector(FormKind k) { return k == FormKind::OneOne || k == FormKind::Two; }

struct KData {
    std::vector<CVector> dirs;
    std::vector<double> k;
};

double best_ratio(FormKind kind, int n, const Coeffs& c, const KData& kd, int* bi, int* bj) {
    double best = 0.0;
    *bi = *bj = 0;
    const int m = static_cast<int>(kd.dirs.size());
    if (!two_vector(kind)) {
        for (int i = 0; i < m; ++i) {
            double r = std::abs(pair(kind, n, c, kd.dirs[i])) / kd.k[i];
            if (r > best) best = r, *bi = i;
        }
        return best;
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double r = std::abs(pair(kind, n, c, kd.dirs[i], kd.dirs[j])) / (kd.k[i] * kd.k[j]);
            if (r > best) best = r, *bi = i, *bj = j;
        }
    return best;
}

double knorm_at(const Domain& d, FormKind kind, const Coeffs& c, const CPoint& zeta, double delta,
                const KNormOptions& opt) {
    const int n = d.dim();
    if (kind == FormKind::Scalar) return std::abs(c(0));
    if (c.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    KData kd;
    if (opt.method == KNormOptions::Method::Frame) {
        ExtremalFrame f = extremal_frame(d, zeta, delta);
        for (int i = 0; i < n; ++i) {
            kd.dirs.push_back(f.vectors.col(i));
            kd.k.push_back(delta / f.radii[i]);
        }
        int bi, bj;
        return best_ratio(kind, n, c, kd, &bi, &bj);
    }
    kd.dirs = sphere_directions(n, opt.directions, opt.seed);
    for (const auto& v : kd.dirs) kd.k.push_back(k_weight(d, zeta, v, delta));
    int bi, bj;
    double best = best_ratio(kind, n, c, kd, &bi, &bj);
    if (!opt.refine) return best;

    // coordinate search over both vectors on the sphere
    CVector v[2] = {kd.dirs[bi], kd.dirs[bj]};
    double kv[2] = {kd.k[bi], kd.k[bj]};
    auto value = [&](const CVector& a, double ka, const CVector& b, double kb) {
        return two_vector(kind) ? std::abs(pair(kind, n, c, a, b)) / (ka * kb) : std::abs(pair(kind, n, c, a)) / ka;
    };
    const int slots = two_vector(kind) ? 2 : 1;
    for (double step = 0.05; step > 1e-3; step *= 0.5) {
        bool improved = true;
        for (int round = 0; improved && round < 20; ++round) {
            improved = false;
            for (int s = 0; s < slots; ++s)
                for (int a = 0; a < 2 * n; ++a)
                    for (double sign : {1.0, -1.0}) {
                        CVector w = (v[s] + sign * step * real_axis(n, a)).normalized();
                        double kw = k_weight(d, zeta, w, delta);
                        double r = s == 0 ? value(w, kw, v[1], kv[1]) : value(v[0], kv[0], w, kw);
                        if (r > best) {
                            best = r;
                            v[s] = w;
                            kv[s] = kw;
                            improved = true;
                        }
                    }
        }
    }
    return best;
}

}  // namespace

CPoint boundary_ray_point(const Domain& d, const CVector& u) {
    CVector dir = u.normalized();
    auto f = [&](double r) { return d.rho(CPoint(r * dir)); };
    if (!(f(0.0) < 0.0)) fail("point-not-interior", "origin must be interior for ray sampling");
    double lo = 0.0, hi = 1.0;
    for (int k = 0; f(hi) <= 0.0; ++k) {
        lo = hi;
        hi *= 2.0;
        if (k > 60) fail("distance-iteration-failure", "ray never leaves the domain");
    }
    double r = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        double fr = f(r);
        if (fr == 0.0) return r * dir;
        (fr < 0.0 ? lo : hi) = r;
        double dr = real_derivative(d, r * dir, dir);
        double next = dr > 0.0 ? r - fr / dr : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - r) <= 1e-15 * r) {
            r = next;
            break;
        }
        r = next;
    }
    return r * dir;
}

std::vector<CPoint> boundary_grid(const Domain& d, int count, std::uint64_t seed) {
    std::vector<CPoint> out;
    for (const auto& u : sphere_directions(d.dim(), count, derive_seed(seed, "boundary-grid")))
        out.push_back(boundary_ray_point(d, u));
    return out;
}

std::vector<CPoint> boundary_patch_grid(const Domain& d, const CPoint& p, double radius, int count,
                                        std::uint64_t seed) {
    const int n = d.dim();
    CVector nu = complex_normal(d, p);
    auto basis = tangent_basis(nu);
    Halton h(2 * n - 1, derive_seed(seed, "patch-grid"));
    std::vector<CPoint> out;
    double u[kMaxReal];
    for (std::uint64_t i = 0; static_cast<int>(out.size()) < count && i < 1000ull * count + 1000; ++i) {
        h.point(i, u);
        double r2 = 0.0;
        CVector y = CVector::Zero(n);
        for (int a = 0; a < 2 * n - 1; ++a) {
            double x = 2.0 * u[a] - 1.0;
            r2 += x * x;
            y += radius * x * basis[a];
        }
        if (r2 > 1.0) continue;
        CPoint b = boundary_from_tangent(d, p, nu, y);
        if (std::abs(d.rho(b)) <= 1e-10 && (b - p).norm() <= radius) out.push_back(b);
    }
    return out;
}

std::vector<double> dyadic_scales(double lo, double hi, int count) {
    std::vector<double> out;
    for (double v = hi; v > lo && static_cast<int>(out.size()) < count; v *= 0.5) out.push_back(v);
    return out;
}

SurfacePatch surface_patch(const Domain& d, const Tent& tent, int samples, std::uint64_t seed) {
    const int n = d.dim();
    const Polydisk& box = tent.box;
    const CVector v1 = box.frame.vectors.col(0);
    std::vector<double> r(n);
    for (int k = 0; k < n; ++k) r[k] = box.c0 * box.dilation * box.frame.radii[k];
    double vol = 2.0 * r[0];
    for (int k = 1; k < n; ++k) vol *= std::numbers::pi * r[k] * r[k];

    SurfacePatch out;
    Halton h(2 * n - 1, seed);
    double u[kMaxReal];
    const double w0 = vol / samples;
    for (int i = 0; i < samples; ++i) {
        h.point(i, u);
        CVector y = Complex(0, r[0] * (2.0 * u[0] - 1.0)) * v1;
        for (int k = 1; k < n; ++k)
            y += std::polar(r[k] * std::sqrt(u[2 * k - 1]), 2.0 * std::numbers::pi * u[2 * k]) *
                 CVector(box.frame.vectors.col(k));
        CPoint w = boundary_from_tangent(d, tent.xi, v1, y);
        if (!(std::abs(d.rho(w)) <= 1e-10) || !box.contains(w)) continue;
        CVector g = d.grad(w);
        double ds = std::abs(g.cwiseProduct(v1).sum().real());
        if (ds < 1e-14 * g.norm()) continue;
        double wt = w0 * g.norm() / ds;
        out.points.push_back(w);
        out.weights.push_back(wt);
        out.measure += wt;
    }
    return out;
}

double surface_patch_measure(const Domain& d, const CPoint& xi, double eps, int samples, std::uint64_t seed) {
    return surface_patch(d, make_tent(d, xi, eps), samples, derive_seed(seed, "patch")).measure;
}

CarlesonGrid default_grid(const Domain& d, int boundary_samples, int scale_count, std::uint64_t seed) {
    CarlesonGrid g;
    g.boundary = boundary_grid(d, boundary_samples, seed);
    g.scales = dyadic_scales(0.0, d.constants().eps0, scale_count);
    g.seed = seed;
    return g;
}

CarlesonGrid s_grid(const Domain& d, double s, int boundary_samples, int scale_count, std::uint64_t seed) {
    if (!(s < d.constants().eps0)) fail("empty-scale-range", "s must be below eps0");
    CarlesonGrid g = default_grid(d, boundary_samples, scale_count, seed);
    g.scales = dyadic_scales(s, d.constants().eps0, scale_count);
    return g;
}

TentSet::TentSet(const Domain& d, CarlesonGrid grid) : domain_(d), grid_(std::move(grid)) {
    for (const auto& xi : grid_.boundary)
        for (double eps : grid_.scales) tents_.push_back(make_tent(domain_, xi, eps));
    area_.assign(tents_.size(), -1.0);
}

double TentSet::area(std::size_t i) const {
    if (area_[i] < 0.0)
        area_[i] = surface_patch(domain_, tents_[i], grid_.surface_samples, derive_seed(grid_.seed, "patch", i)).measure;
    return area_[i];
}

namespace {

CarlesonReport assemble(const TentSet& tents, const std::vector<double>& masses, double total) {
    CarlesonReport rep;
    rep.total_mass = total;
    for (std::size_t i = 0; i < tents.size(); ++i) {
        TentRatio tr{tents.tent(i).xi, tents.tent(i).eps, masses[i], 0.0, 0.0};
        if (masses[i] > 0.0) {
            tr.area = tents.area(i);
            if (!(tr.area > 0.0)) fail("degenerate-patch", "tent with mass has zero boundary area");
            tr.ratio = tr.mass / tr.area;
        }
        if (i == 0 || tr.ratio > rep.max_ratio) {
            rep.max_ratio = tr.ratio;
            rep.witness_point = tr.xi;
            rep.witness_scale = tr.eps;
        }
        rep.per_tent.push_back(tr);
    }
    rep.norm_value = rep.max_ratio + rep.total_mass;
    return rep;
}

}  // namespace

CarlesonReport carleson_from_weights(const TentSet& tents, const std::vector<CPoint>& points,
                                     const std::vector<double>& weights) {
    const Domain& d = tents.domain();
    double total = 0.0;
    for (double w : weights) total += w;
    std::vector<double> masses(tents.size(), 0.0);
    if (!points.empty()) {
        PointIndex index(points);
        std::vector<int> cand;
        for (std::size_t i = 0; i < tents.size(); ++i) {
            const Tent& t = tents.tent(i);
            index.ball(t.xi, t.box.bounding_radius(), cand);
            double m = 0.0;
            for (int a : cand)
                if (weights[a] != 0.0 && t.contains(d, points[a])) m += weights[a];
            masses[i] = m;
        }
    }
    return assemble(tents, masses, total);
}

CarlesonReport carleson_from_density(const TentSet& tents, const std::function<double(const CPoint&)>& density,
                                     double total_mass, const Support& support) {
    const Domain& d = tents.domain();
    const int n = d.dim();
    const int N = tents.grid().tent_samples;
    std::vector<double> masses(tents.size(), 0.0);
    double u[kMaxReal];
    for (std::size_t i = 0; i < tents.size(); ++i) {
        const Tent& t = tents.tent(i);
        if (std::isfinite(support.radius) &&
            (t.xi - support.center).norm() > support.radius + t.box.bounding_radius())
            continue;
        Halton h(2 * n, derive_seed(tents.grid().seed, "tent-qmc", i));
        CVector r(n);
        for (int k = 0; k < n; ++k) r(k) = t.box.c0 * t.box.dilation * t.box.frame.radii[k];
        double s = 0.0;
        for (int j = 0; j < N; ++j) {
            h.point(j, u);
            CVector lam = polydisk_point(n, u).cwiseProduct(r);
            CPoint z = t.xi + t.box.frame.vectors * lam;
            if (d.rho(z) < 0.0) s += density(z);
        }
        masses[i] = t.box.volume() * s / N;
    }
    return assemble(tents, masses, total_mass);
}

CarlesonReport carleson_norm_measure(const TentSet& tents, const DiscreteCurrent& mu) {
    if (mu.kind != FormKind::Scalar) fail("bad-degree", "a measure has degree 0");
    std::vector<CPoint> pts;
    std::vector<double> w;
    for (const auto& a : mu.atoms) {
        pts.push_back(a.z);
        w.push_back(std::abs(a.c(0)));
    }
    CarlesonReport r = carleson_from_weights(tents, pts, w);
    r.label = "measure";
    return r;
}

CarlesonReport carleson_norm_measure(const Domain& d, const DiscreteCurrent& mu, const CarlesonGrid& grid) {
    return carleson_norm_measure(TentSet(d, grid), mu);
}

CarlesonReport s_carleson_norm_measure(const Domain& d, const DiscreteCurrent& mu, double s, int boundary_samples,
                                       int scale_count, std::uint64_t seed) {
    return carleson_norm_measure(d, mu, s_grid(d, s, boundary_samples, scale_count, seed));
}

double pointwise_k_norm(const Domain& d, FormKind kind, const Coeffs& c, const CPoint& zeta,
                        const KNormOptions& opt) {
    return knorm_at(d, kind, c, zeta, boundary_distance(d, zeta), opt);
}

FormKind field_kind(int degree) {
    switch (degree) {
        case 0: return FormKind::Scalar;
        case 1: return FormKind::One;
        case 2: return FormKind::Two;
    }
    fail("bad-degree", "fields of degree 0, 1 or 2 only");
}

double pointwise_k_norm(const Domain& d, const SmoothFormField& form, const CPoint& zeta, const KNormOptions& opt) {
    FormKind k = field_kind(form.degree);
    return pointwise_k_norm(d, k, real_to_complex(k, d.dim(), form(zeta)), zeta, opt);
}

double current_density(const Domain& d, const SmoothFormField& t, const CPoint& z, const KNormOptions& opt) {
    if (!t.support.may_contain(z)) return 0.0;
    Coeffs r = t.eval(z);
    if (r.size() == 0 || r.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    FormKind k = field_kind(t.degree);
    if (k == FormKind::Scalar) return std::abs(r(0));
    double delta = boundary_distance(d, z);
    double kn = knorm_at(d, k, real_to_complex(k, d.dim(), r), z, delta, opt);
    return t.degree == 2 ? delta * kn : kn;
}

double smooth_total_mass(const Domain& d, const Support& support, const std::function<double(const CPoint&)>& f,
                         int samples, std::uint64_t seed) {
    if (!std::isfinite(support.radius)) fail("unbounded-support", "smooth forms need a bounded support ball");
    const int n = d.dim();
    Halton h(2 * n + 1, derive_seed(seed, "mass"));
    double u[kMaxReal + 1];
    double s = 0.0;
    for (int i = 0; i < samples; ++i) {
        h.point(i, u);
        CPoint z = support.center + support.radius * ball_point(n, u);
        if (d.rho(z) < 0.0) s += f(z);
    }
    double vol = std::pow(std::numbers::pi, n) / std::tgamma(n + 1.0) * std::pow(support.radius, 2 * n);
    return vol * s / samples;
}

void focused_cloud(const Domain& d, const std::vector<CPoint>& focus, double radius,
                   const std::function<double(const CPoint&)>& f, int samples, std::uint64_t seed,
                   std::vector<CPoint>& points, std::vector<double>& weights) {
    points.clear();
    weights.clear();
    if (focus.empty()) return;
    const int n = d.dim();
    PointIndex index(focus);
    Halton h(2 * n + 2, derive_seed(seed, "focused-cloud"));
    double u[kMaxReal + 2];
    const double vol = std::pow(std::numbers::pi, n) / std::tgamma(n + 1.0) * std::pow(radius, 2 * n);
    const double N = static_cast<double>(focus.size());
    std::vector<int> near;
    for (int i = 0; i < samples; ++i) {
        h.point(i, u);
        std::size_t a = std::min(focus.size() - 1, static_cast<std::size_t>(u[2 * n + 1] * N));
        CPoint z = focus[a] + radius * ball_point(n, u);
        if (!(d.rho(z) < 0.0)) continue;
        index.ball(z, radius, near);
        if (near.empty()) continue;
        double v = f(z);
        if (v == 0.0) continue;
        // proposal density #near / (N vol)
        points.push_back(z);
        weights.push_back(v * N * vol / (static_cast<double>(near.size()) * samples));
    }
}

CarlesonReport carleson_norm_current(const TentSet& tents, const DiscreteCurrent& t) {
    if (t.kind == FormKind::Scalar) return carleson_norm_measure(tents, t);
    const Domain& d = tents.domain();
    const int n = d.dim();
    const bool two = two_vector(t.kind);
    const int pairs = two ? n * n : n;
    std::vector<CPoint> pts;
    for (const auto& a : t.atoms) pts.push_back(a.z);
    // each atom reads its coefficients in the frame of a covering polydisk P(Z_j, delta(Z_j))
    Covering cov = minimal_covering(d, pts, pts.size() + 1);
    std::vector<std::vector<double>> w(pairs);
    std::vector<std::pair<int, double>> hits;
    for (const auto& a : t.atoms) {
        cov.index.query(a.z, 1.0, hits);
        if (hits.empty()) fail("covering-gap", "atom outside its own covering");
        const ExtremalFrame& f = cov.index[hits.front().first].frame;
        double delta = boundary_distance(d, a.z);
        for (int p = 0; p < pairs; ++p) {
            int i = two ? p / n : p, j = two ? p % n : 0;
            double ki = f.scale / f.radii[i], kj = f.scale / f.radii[j];
            double val = two ? delta * std::abs(pair(t.kind, n, a.c, f.vectors.col(i), f.vectors.col(j))) / (ki * kj)
                             : std::abs(pair(t.kind, n, a.c, f.vectors.col(i))) / ki;
            w[p].push_back(val);
        }
    }
    CarlesonReport best;
    for (int p = 0; p < pairs; ++p) {
        CarlesonReport r = carleson_from_weights(tents, pts, w[p]);
        r.label = two ? "frame pair (" + std::to_string(p / n + 1) + "," + std::to_string(p % n + 1) + ")"
                      : "frame vector " + std::to_string(p + 1);
        if (p == 0 || r.norm_value > best.norm_value) best = std::move(r);
    }
    return best;
}

CarlesonReport carleson_norm_current(const TentSet& tents, const SmoothFormField& t, const CurrentNormOptions& opt) {
    const Domain& d = tents.domain();
    auto density = [&](const CPoint& z) { return current_density(d, t, z, opt.knorm); };
    CarlesonReport r;
    if (opt.focus.empty()) {
        double total = smooth_total_mass(d, t.support, density, opt.mass_samples, tents.grid().seed);
        r = carleson_from_density(tents, density, total, t.support);
    } else {
        std::vector<CPoint> pts;
        std::vector<double> w;
        focused_cloud(d, opt.focus, opt.focus_radius, density, opt.mass_samples, tents.grid().seed, pts, w);
        r = carleson_from_weights(tents, pts, w);
    }
    r.label = t.degree == 2 ? "delta |T|_k" : "|T|_k";
    return r;
}

double bmo_s_norm(const TentSet& tents, const std::function<double(const CPoint&)>& f, const BmoOptions& opt) {
    const Domain& d = tents.domain();
    double best = 0.0;
    for (std::size_t i = 0; i < tents.size(); ++i) {
        SurfacePatch p = surface_patch(d, tents.tent(i), tents.grid().surface_samples,
                                       derive_seed(tents.grid().seed, "patch", i));
        if (p.points.empty()) continue;
        const double f0 = f(p.points[0]);
        std::vector<double> g(p.points.size());
        double mean = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            g[k] = f(p.points[k]) - f0;
            mean += p.weights[k] * g[k];
        }
        mean /= p.measure;
        double osc = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) osc += p.weights[k] * std::abs(g[k] - mean);
        if (opt.normalized) osc /= p.measure;
        best = std::max(best, osc);
    }
    return best;
}

}  // namespace lcx
