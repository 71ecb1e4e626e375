#include "lcx/homotopy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <tuple>

#include "lcx/carleson.hpp"
#include "lcx/error.hpp"
#include "lcx/sampling.hpp"

namespace lcx {

namespace {

constexpr double kLn2 = std::numbers::ln2;

// 1 on s <= 1, 0 on s >= spread
double ramp_down(double s, double spread) { return 1.0 - smooth_step((s - 1.0) / (spread - 1.0)); }
double ramp_down_derivative(double s, double spread) {
    return -smooth_step_derivative((s - 1.0) / (spread - 1.0)) / (spread - 1.0);
}

RVector real_of(const CVector& v) { return to_real<double>(v); }

}  // namespace

LocalChart::LocalChart(Domain d, CPoint p_, CPoint a_, double r1_, double r2_, double eta1_)
    : domain(std::move(d)), p(std::move(p_)), a(std::move(a_)), r1(r1_), r2(r2_), eta1(eta1_) {
    const double delta1 = domain.constants().delta1;
    if (!(eta1 > 0.0) || !(r2 > 2.0 * eta1) || !(r1 > 4.0 * r2) || !(r1 < delta1))
        fail("invalid-chart", "need delta1 > r1 > 4 r2 > 8 eta1, got r1=" + std::to_string(r1) +
                                  " r2=" + std::to_string(r2) + " eta1=" + std::to_string(eta1));
    if (!((a - p).norm() < r1) || !(domain.rho(a) < 0.0)) fail("invalid-chart", "A_p outside B(p, r1) cap domain");
    depth_a = boundary_distance(domain, a);
}

bool LocalChart::in_V(const CPoint& z) const {
    CPoint w = ambient(z);
    return (w - p).norm() < r1 && domain.rho(w) < 0.0;
}

bool LocalChart::in_W(const CPoint& z) const {
    CPoint w = ambient(z);
    return (w - p).norm() < r2 && domain.rho(w) < 0.0 && boundary_distance(domain, w) < eta1;
}

ChartAudit audit_chart(const LocalChart& chart, int samples, std::uint64_t seed) {
    const Domain& d = chart.domain;
    const int n = d.dim();
    ChartAudit out;
    out.a_depth = chart.depth_a;
    Halton h(2 * n + 1, derive_seed(seed, "chart-audit"));
    std::vector<double> u(2 * n + 1);
    for (int i = 0; i < samples; ++i) {
        h.point(i, u.data());
        CPoint w = chart.p + chart.r1 * ball_point(n, u.data());
        if (d.rho(w) < 0.0)
            out.max_depth_ratio = std::max(out.max_depth_ratio, boundary_distance(d, w) / d.constants().delta1);
    }
    double reach = 0.0;
    for (const auto& z : boundary_patch_grid(d, chart.p, chart.r2, std::max(8, samples / 8), seed)) {
        Polydisk P = polydisk(d, z, chart.eta1);
        reach = std::max(reach, (z - chart.p).norm() + P.bounding_radius());
    }
    out.containment_margin = 2.0 * chart.r2 - reach;
    auto xis = boundary_patch_grid(d, chart.p, 2.0 * chart.r2, std::max(8, samples / 8), derive_seed(seed, "xi"));
    out.min_cosine = 1.0;
    for (int i = 0; i < samples; ++i) {
        h.point(samples + i, u.data());
        CPoint zeta = chart.p + 2.0 * chart.r2 * ball_point(n, u.data());
        CVector dir = zeta - chart.a;
        const CPoint& xi = xis[i % xis.size()];
        CVector nu = complex_normal(d, xi);
        out.min_cosine = std::min(out.min_cosine, std::abs(hdot<double>(dir, nu)) / dir.norm());
    }
    return out;
}

LocalChart build_local_chart(const Domain& d, const CPoint& p, ChartAudit* audit) {
    if (std::abs(d.rho(p)) > 1e-8) fail("not-on-boundary", "chart base point must lie on the boundary");
    const double r1 = 0.5 * d.constants().delta1;
    double r2 = r1 / 8.0, eta1 = r2 / 4.0;
    for (int round = 0; round <= 8; ++round) {
        double depth = std::sqrt(r1 * r2);
        LocalChart chart(d, p, inward_point(d, p, depth), r1, r2, eta1);
        ChartAudit a = audit_chart(chart);
        a.rounds = round;
        bool window = chart.depth_a > 2.0 * r2 && chart.depth_a < 0.5 * r1;
        if (a.ok() && window) {
            if (audit) *audit = a;
            return chart;
        }
        if (!window || a.min_cosine < 0.5) r2 *= 0.5;
        eta1 = std::min(0.5 * eta1, 0.25 * r2);
    }
    fail("chart-construction-failure", "no admissible A_p after 8 shrink rounds");
}

std::vector<CPoint> path_samples(const LocalChart& chart, const CPoint& z, double step) {
    std::vector<CPoint> out;
    const double len = z.norm();
    if (len == 0.0) return {CPoint::Zero(z.size())};
    const CVector u = z / len;
    const double c0 = chart.domain.constants().c0;
    double t = 0.0;
    while (t < 1.0) {
        CPoint w = t * z;
        out.push_back(w);
        CPoint amb = chart.ambient(w);
        double delta = std::max(boundary_distance_estimate(chart.domain, amb), 1e-12);
        double r = step * c0 * tau(chart.domain, amb, u, delta);
        t += std::max(r / len, 1e-9);
    }
    out.push_back(z);
    return out;
}

std::vector<CPoint> segment_targets(const LocalChart& chart, const std::vector<CPoint>& grid, int n_s) {
    const CPoint c = chart.chart(inward_point(chart.domain, chart.p, 0.5 * chart.eta1));
    const GaussRule& g = gauss_legendre(n_s);
    std::vector<CPoint> out = grid;
    for (const auto& x : grid)
        for (double s : g.nodes) out.push_back(c + s * (x - c));
    return out;
}

PartitionSystem::PartitionSystem(const LocalChart& chart, const std::vector<CPoint>& targets,
                                 const PartitionOptions& opt)
    : domain_(chart.domain), a_(chart.a), spread_(opt.spread) {
    if (!(spread_ > 1.0)) fail("bad-config", "bump spread must exceed 1");
    k_min_ = static_cast<int>(std::floor(std::log2(1.0 / chart.depth_a)));
    k_max_ = std::max(opt.k_max, k_min_ + 1);
    std::vector<CPoint> samples;
    for (const auto& z : targets)
        for (const auto& w : path_samples(chart, z, opt.path_step)) samples.push_back(chart.ambient(w));
    Covering cov = minimal_covering(domain_, samples, opt.budget, spread_, {}, reference_frame(domain_, chart.p));
    index_ = std::move(cov.index);
    const int n = domain_.dim();
    for (std::size_t j = 0; j < index_.size(); ++j) {
        const auto& f = index_[j].frame;
        depth_.push_back(f.scale);
        CMatrix m(n, n);
        for (int i = 0; i < n; ++i) m.col(i) = f.vectors.col(i) * (f.radii[i] / f.scale);
        own_.push_back(m);
    }
    cache_.resize(index_.size());
}

bool PartitionSystem::covers(const CPoint& w) const {
    thread_local std::vector<std::pair<int, double>> hits;
    index_.query(w + a_, spread_, hits);
    for (auto& [j, g] : hits)
        if (g < spread_) return true;
    return false;
}

void PartitionSystem::evaluate(const CPoint& w, std::vector<PartitionTerm>& out, bool gradients) const {
    const int n = domain_.dim();
    const CPoint amb = w + a_;
    thread_local std::vector<std::pair<int, double>> hits;
    index_.query(amb, spread_, hits);
    out.clear();
    double sum = 0.0;
    RVector gsum = RVector::Zero(2 * n);
    for (auto& [j, g] : hits) {
        const Polydisk& P = index_[j];
        CVector zeta = P.frame.coords(amb);
        double r[kMaxDim], dr[kMaxDim], s[kMaxDim];
        double b = 1.0;
        for (int i = 0; i < n; ++i) {
            s[i] = std::abs(zeta(i)) / (P.c0 * P.dilation * P.frame.radii[i]);
            r[i] = ramp_down(s[i], spread_);
            dr[i] = ramp_down_derivative(s[i], spread_);
            b *= r[i];
        }
        if (b <= 0.0) continue;
        PartitionTerm t;
        t.j = j;
        t.value = b;
        if (gradients) {
            t.grad = RVector::Zero(2 * n);
            for (int i = 0; i < n; ++i) {
                if (dr[i] == 0.0) continue;
                double rest = 1.0;
                for (int l = 0; l < n; ++l)
                    if (l != i) rest *= r[l];
                const double scale = P.c0 * P.dilation * P.frame.radii[i] * std::abs(zeta(i));
                for (int a = 0; a < 2 * n; ++a) {
                    Complex dz = std::conj(P.frame.vectors(a / 2, i)) * (a % 2 ? Complex(0, 1) : Complex(1, 0));
                    t.grad(a) += rest * dr[i] * (std::conj(zeta(i)) * dz).real() / scale;
                }
            }
            gsum += t.grad;
        }
        sum += b;
        out.push_back(std::move(t));
    }
    if (!(sum > 0.0)) fail("covering-gap", "no partition bump at the point");
    for (auto& t : out) {
        double v = t.value / sum;
        if (gradients) t.grad = (t.grad - v * gsum) / sum;
        t.value = v;
    }
}

double PartitionSystem::psi(int k, double s) const {
    if (k < k_min_ || k > k_max_ || !(s > 0.0)) return 0.0;
    const double L = -std::log2(s);
    if (k == k_min_) return 1.0 - smooth_step(L - k);
    return smooth_step(L - k + 1) - smooth_step(L - k);
}

double PartitionSystem::psi_derivative(int k, double s) const {
    if (k < k_min_ || k > k_max_ || !(s > 0.0)) return 0.0;
    const double L = -std::log2(s);
    const double dL = -1.0 / (s * kLn2);
    if (k == k_min_) return -smooth_step_derivative(L - k) * dL;
    return (smooth_step_derivative(L - k + 1) - smooth_step_derivative(L - k)) * dL;
}

double PartitionSystem::phi_cut(double x) { return 1.0 - smooth_step(2.0 * x - 1.0); }
double PartitionSystem::phi_cut_derivative(double x) { return -2.0 * smooth_step_derivative(2.0 * x - 1.0); }

const CMatrix& PartitionSystem::scaled_frame(int j, int k) const {
    auto& row = cache_[j];
    const int slot = k - k_min_;
    if (slot < 0 || slot > k_max_ - k_min_) fail("bad-scale", "dyadic index out of range");
    if (row.empty()) row.resize(k_max_ - k_min_ + 1);
    if (!row[slot]) {
        const int n = domain_.dim();
        ExtremalFrame f = extremal_frame(domain_, index_[j].frame.center, std::ldexp(1.0, -k));
        auto m = std::make_unique<CMatrix>(n, n);
        for (int i = 0; i < n; ++i) m->col(i) = f.vectors.col(i) * f.radii[i];
        row[slot] = std::move(m);
    }
    return *row[slot];
}

WarpJet warp_jet(const LocalChart& chart, const PartitionSystem& parts, double c, double t, const CPoint& z,
                 bool derivatives) {
    const int n = chart.dim();
    WarpJet J;
    J.B = CMatrix::Zero(n, n);
    J.Bt = CMatrix::Zero(n, n);
    if (derivatives)
        for (int a = 0; a < 2 * n; ++a) J.Bx[a] = CMatrix::Zero(n, n);
    const double s = dyadic_time(chart, t);
    int ks[4], nk = 0;
    if (s > 0.0) {
        int kc = static_cast<int>(std::floor(-std::log2(s)));
        for (int k = kc - 1; k <= kc + 2 && nk < 4; ++k)
            if (parts.psi(k, s) != 0.0 || (derivatives && parts.psi_derivative(k, s) != 0.0)) ks[nk++] = k;
    }
    if (nk == 0) return J;
    const double mr = -chart.rho(z);
    if (!(mr > 0.0)) fail("outside-chart", "z outside the domain");
    RVector drho;
    if (derivatives) {
        CVector g = chart.domain.grad(chart.ambient(z));
        drho = RVector(2 * n);
        for (int j = 0; j < n; ++j) {
            drho(2 * j) = 2.0 * g(j).real();
            drho(2 * j + 1) = -2.0 * g(j).imag();
        }
    }
    thread_local std::vector<PartitionTerm> terms;
    const CPoint w = t * z;
    parts.evaluate(w, terms, derivatives);
    const RVector zr = real_of(z);
    const double dA = chart.depth_a;
    for (int q = 0; q < nk; ++q) {
        const int k = ks[q];
        const double ps = parts.psi(k, s), dps = parts.psi_derivative(k, s);
        const double scale = std::ldexp(1.0, -k);
        const double x = scale / mr;
        const double ph = PartitionSystem::phi_cut(x);
        const double dph = PartitionSystem::phi_cut_derivative(x);
        for (const auto& term : terms) {
            CMatrix P = parts.own_frame(term.j) * scale;
            CMatrix A = P;
            CMatrix PQ;
            if (ph < 1.0) {
                const CMatrix& Q = parts.scaled_frame(term.j, k);
                A = ph * P + (1.0 - ph) * Q;
                PQ = P - Q;
            }
            J.B += (c * t * ps * term.value) * A;
            if (!derivatives) continue;
            const double dphi_z = term.grad.dot(zr);
            J.Bt += (c * ps * term.value + c * t * (-dA * dps) * term.value + c * t * ps * dphi_z) * A;
            for (int a = 0; a < 2 * n; ++a) {
                J.Bx[a] += (c * t * ps * t * term.grad(a)) * A;
                if (ph < 1.0 && dph != 0.0) J.Bx[a] += (c * t * ps * term.value * dph * x * drho(a) / mr) * PQ;
            }
        }
    }
    for (int i = 0; i < n; ++i) J.bound += J.B.col(i).norm();
    return J;
}

namespace {

void require_c(const HomotopyConfig& cfg) {
    if (!(cfg.c > 0.0)) fail("bad-config", "warp amplitude c must be positive (run select_c)");
}

CPoint h_eval(const LocalChart& chart, const PartitionSystem& parts, double c, const CVector& lambda, double t,
              const CPoint& z) {
    WarpJet J = warp_jet(chart, parts, c, t, z, false);
    return t * z + J.B * lambda;
}

}  // namespace

CPoint h_lambda(const LocalChart& chart, const PartitionSystem& parts, const HomotopyConfig& cfg,
                const CVector& lambda, double t, const CPoint& z) {
    require_c(cfg);
    if (!chart.in_V(z)) fail("outside-chart", "z outside V");
    return h_eval(chart, parts, cfg.c, lambda, t, z);
}

CVector h_velocity(const LocalChart& chart, const PartitionSystem& parts, const HomotopyConfig& cfg,
                   const CVector& lambda, double t, const CPoint& z) {
    require_c(cfg);
    if (!chart.in_V(z)) fail("outside-chart", "z outside V");
    const double h = cfg.fd_step * std::max(1.0 - t, 1e-3);
    auto H = [&](double s) { return h_eval(chart, parts, cfg.c, lambda, s, z); };
    if (t - h < 0.0) return (-3.0 * H(t) + 4.0 * H(t + h) - H(t + 2 * h)) / (2 * h);
    if (t + h > 1.0) return (3.0 * H(t) - 4.0 * H(t - h) + H(t - 2 * h)) / (2 * h);
    return (H(t + h) - H(t - h)) / (2 * h);
}

CVector h_direction_derivative(const LocalChart& chart, const PartitionSystem& parts, const HomotopyConfig& cfg,
                               const CVector& lambda, double t, const CPoint& z, const CVector& v) {
    require_c(cfg);
    if (!chart.in_V(z)) fail("outside-chart", "z outside V");
    const double h = cfg.fd_step * chart.delta(z);
    // warp part by differences, t v exactly
    CVector wp = h_eval(chart, parts, cfg.c, lambda, t, z + h * v) - t * (z + h * v);
    CVector wm = h_eval(chart, parts, cfg.c, lambda, t, z - h * v) - t * (z - h * v);
    return t * v + (wp - wm) / (2 * h);
}

bool in_Q(const LocalChart& chart, double t, const CPoint& z, const CPoint& w) {
    const double s = dyadic_time(chart, t);
    const double mr = -chart.rho(z);
    const CPoint c = chart.ambient(t * z), x = chart.ambient(w);
    if (s >= mr) return pseudo_ball_contains(chart.domain, c, s, x);
    if (s <= 0.0) return (x - c).norm() == 0.0;
    return pseudo_ball_contains(chart.domain, c, mr, x, s / mr);
}

std::vector<int> containment_audit(const LocalChart& chart, const PartitionSystem& parts,
                                   const std::vector<CPoint>& targets, int samples, std::uint64_t seed, int q_max) {
    if (targets.empty()) fail("bad-config", "no targets for the containment audit");
    const int n = chart.dim();
    std::mt19937_64 rng(derive_seed(seed, "c-audit"));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Halton hl(2 * n, derive_seed(seed, "c-audit-lambda"));
    std::vector<double> u(2 * n);
    std::vector<int> bad(q_max + 1, 0);
    const double umax = parts.k_max() + 2 - std::log2(1.0 / chart.depth_a);
    for (int i = 0; i < samples; ++i) {
        const CPoint& z = targets[rng() % targets.size()];
        double t = (i % 2) ? uni(rng) : 1.0 - std::exp2(-umax * uni(rng));
        hl.point(i, u.data());
        CVector lam = polydisk_point(n, u.data());
        WarpJet J = warp_jet(chart, parts, 1.0, t, z, false);
        CVector d = J.B * lam;
        for (int q = 1; q <= q_max; ++q)
            if (!in_Q(chart, t, z, t * z + std::ldexp(1.0, -q) * d)) ++bad[q];
    }
    return bad;
}

ContainmentAudit select_c(const LocalChart& chart, const PartitionSystem& parts, const std::vector<CPoint>& targets,
                          int samples, std::uint64_t seed, int q_max) {
    std::vector<int> bad = containment_audit(chart, parts, targets, samples, seed, q_max);
    ContainmentAudit out;
    out.samples = samples;
    for (int q = 1; q <= q_max; ++q) out.violations.push_back({std::ldexp(1.0, -q), bad[q]});
    for (int q = 1; q <= q_max; ++q)
        if (bad[q] == 0) {
            out.q = q;
            out.c = std::ldexp(1.0, -q);
            return out;
        }
    fail("c-selection-failure", "containment fails for every tried c");
}

std::pair<double, double> t_range(const Support& support, const CPoint& center, double spread, double warp,
                                  double margin) {
    const int steps = 4000;
    double lo = 2.0, hi = -1.0;
    for (int i = 0; i <= steps; ++i) {
        double t = static_cast<double>(i) / steps;
        CPoint c = t * center;
        double r = t * spread + warp;
        bool meets = true;
        if (std::isfinite(support.radius) && (c - support.center).norm() > support.radius + r) meets = false;
        if (support.hole_radius > 0.0 && (c - support.hole_center).norm() + r < support.hole_radius) meets = false;
        if (meets) {
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
    }
    if (hi < 0.0) return {1.0, 1.0};
    return {std::max(0.0, lo - margin), std::min(1.0, hi + margin)};
}

namespace {

struct TRule {
    std::vector<double> t, w;
};

// Composite Gauss in v = A t - log2(1 - t), A balancing the two terms over [t0, t1]; a midpoint node covers
// the stretch beyond u_cap when t1 = 1.
TRule t_rule(double t0, double t1, int nodes, double u_cap) {
    TRule r;
    if (!(t1 > t0) || nodes <= 0) return r;
    const bool to_one = t1 >= 1.0;
    const double u0 = -std::log2(1.0 - t0);
    const double ue = to_one ? std::max(u_cap, u0 + 1.0) : -std::log2(1.0 - t1);
    const double te = 1.0 - std::exp2(-ue);
    const double A = 0.3 * (ue - u0) / (te - t0);
    auto v_of = [&](double t) { return A * t - std::log2(1.0 - t); };
    const double v0 = v_of(t0), v1 = v_of(te);
    const int body = std::max(2, nodes - (to_one ? 1 : 0));
    const int q = body >= 16 ? 8 : std::max(1, body / 2);
    const int panels = std::max(1, body / q);
    const GaussRule& g = gauss_legendre(q);
    const double dv = (v1 - v0) / panels;
    for (int p = 0; p < panels; ++p)
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            const double v = v0 + dv * (p + g.nodes[i]);
            double lo = t0, hi = te;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                (v_of(mid) < v ? lo : hi) = mid;
            }
            const double t = 0.5 * (lo + hi);
            r.t.push_back(t);
            r.w.push_back(g.weights[i] * dv / (A + 1.0 / ((1.0 - t) * kLn2)));
        }
    if (to_one) {
        const double e = 1.0 - te;
        r.t.push_back(1.0 - 0.5 * e);
        r.w.push_back(e);
    }
    return r;
}

struct Contractor {
    int n, p;
    std::vector<std::pair<int, int>> pairs;  // degree two basis
    explicit Contractor(int n_, int p_) : n(n_), p(p_) {
        if (p == 2)
            for (unsigned m : basis_masks(n, 2)) {
                int i = std::countr_zero(m);
                int j = std::countr_zero(m & (m - 1));
                pairs.push_back({i, j});
            }
    }
    // acc += w * J^*(iota_Y theta)
    void add(const Coeffs& theta, const RVector& Y, const RMatrix& J, double w, Complex* acc) const {
        const int N = 2 * n;
        if (p == 1) {
            Complex s = 0;
            for (int a = 0; a < N; ++a) s += theta(a) * Y(a);
            acc[0] += w * s;
        } else if (p == 2) {
            Complex beta[kMaxReal];
            for (int a = 0; a < N; ++a) beta[a] = 0.0;
            for (std::size_t m = 0; m < pairs.size(); ++m) {
                auto [i, j] = pairs[m];
                beta[j] += theta(m) * Y(i);
                beta[i] -= theta(m) * Y(j);
            }
            for (int a = 0; a < N; ++a) {
                Complex s = 0;
                for (int b = 0; b < N; ++b) s += beta[b] * J(b, a);
                acc[a] += w * s;
            }
        } else {
            Coeffs r = pullback(n, p - 1, interior(n, p, theta, Y), J);
            for (Eigen::Index i = 0; i < r.size(); ++i) acc[i] += w * r(i);
        }
    }
};

}  // namespace

McBudgetExceeded::McBudgetExceeded(HomotopyEstimate partial, double stderr_value)
    : NumericalError("mc-budget-exceeded", "standard error " + std::to_string(stderr_value) + " above the cap"),
      partial_(std::move(partial)) {}

HomotopyEstimate homotopy_bundle(const LocalChart& chart, const PartitionSystem& parts, const HomotopyConfig& cfg,
                                 const FormBundle& theta, const CPoint& z) {
    require_c(cfg);
    const int n = theta.n, p = theta.degree, count = theta.count;
    if (p < 1 || p > 2 * n) fail("bad-degree", "homotopy needs degree >= 1");
    if (cfg.n_lambda <= 0 || cfg.n_t <= 0 || cfg.group <= 0) fail("bad-config", "budgets must be positive");
    const int out_size = form_size(n, p - 1);
    const int N = cfg.n_lambda;
    const int G = (N + cfg.group - 1) / cfg.group;
    Contractor con(n, p);

    Halton hl(2 * n, derive_seed(cfg.seed, "lambda"));
    const double u_cap = parts.k_max() + 2 - std::log2(1.0 / chart.depth_a);
    // node i of the global rule goes to group i mod G
    const TRule rule = t_rule(cfg.t0, cfg.t1, G * cfg.n_t, u_cap);

    std::vector<CVector> lams(N);
    double u[kMaxReal];
    for (int l = 0; l < N; ++l) {
        hl.point(l, u);
        lams[l] = polydisk_point(n, u);
    }
    const std::size_t stride = static_cast<std::size_t>(count) * out_size;
    std::vector<Complex> acc(stride * N, Complex(0.0));
    std::vector<Coeffs> vals(count);
    RMatrix Jr(2 * n, 2 * n);
    RVector Yr(2 * n);
    const bool finite = std::isfinite(theta.support.radius);

    for (std::size_t q = 0; q < rule.t.size(); ++q) {
        const int g = static_cast<int>(q % G);
        const int begin = g * cfg.group, end = std::min(N, begin + cfg.group);
        const double t = rule.t[q];
        const CPoint tz = t * z;
        // cheap reachability test before the jet
        if (finite && (tz - theta.support.center).norm() > theta.support.radius + chart.depth_a) continue;
        WarpJet J = warp_jet(chart, parts, cfg.c, t, z, true);
        if (finite && (tz - theta.support.center).norm() > theta.support.radius + J.bound) continue;
        if (theta.support.hole_radius > 0.0 &&
            (tz - theta.support.hole_center).norm() + J.bound < theta.support.hole_radius)
            continue;
        // flat copies: B[i][j], Bt[i][j], Bx[a][i][j]
        Complex Bf[kMaxDim * kMaxDim], Btf[kMaxDim * kMaxDim], Bxf[kMaxReal * kMaxDim * kMaxDim];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Bf[i * n + j] = J.B(i, j);
                Btf[i * n + j] = J.Bt(i, j);
                for (int a = 0; a < 2 * n; ++a) Bxf[(a * n + i) * n + j] = J.Bx[a](i, j);
            }
        CPoint h(n);
        for (int l = begin; l < end; ++l) {
            const CVector& lam = lams[l];
            for (int i = 0; i < n; ++i) {
                Complex s = tz(i);
                for (int j = 0; j < n; ++j) s += Bf[i * n + j] * lam(j);
                h(i) = s;
            }
            if (!theta.support.may_contain(h)) continue;
            for (int i = 0; i < n; ++i) {
                Complex s = z(i);
                for (int j = 0; j < n; ++j) s += Btf[i * n + j] * lam(j);
                Yr(2 * i) = s.real();
                Yr(2 * i + 1) = s.imag();
            }
            for (int a = 0; a < 2 * n; ++a) {
                const Complex* bx = Bxf + a * n * n;
                for (int i = 0; i < n; ++i) {
                    Complex s = 0.0;
                    for (int j = 0; j < n; ++j) s += bx[i * n + j] * lam(j);
                    if (i == a / 2) s += (a % 2) ? Complex(0, t) : Complex(t, 0);
                    Jr(2 * i, a) = s.real();
                    Jr(2 * i + 1, a) = s.imag();
                }
            }
            theta.eval(h, vals.data());
            Complex* row = acc.data() + stride * l;
            for (int f = 0; f < count; ++f) con.add(vals[f], Yr, Jr, rule.w[q], row + f * out_size);
        }
    }
    HomotopyEstimate est;
    est.n_lambda = N;
    est.n_t = cfg.n_t;
    double worst = 0.0;
    for (int f = 0; f < count; ++f) {
        Coeffs mean = Coeffs::Zero(out_size);
        double var = 0.0;
        for (int g = 0; g < G; ++g) {
            const int begin = g * cfg.group, end = std::min(N, begin + cfg.group), m = end - begin;
            Coeffs gm = Coeffs::Zero(out_size);
            double sq = 0.0;
            for (int l = begin; l < end; ++l) {
                Eigen::Map<const Coeffs> a(acc.data() + stride * l + f * out_size, out_size);
                gm += a;
                sq += a.squaredNorm();
            }
            gm /= m;
            mean += gm;
            if (m > 1) var += std::max(0.0, (sq / m - gm.squaredNorm()) / (m - 1.0));
        }
        est.values.push_back(mean);
        est.stderr_.push_back(std::sqrt(var));
        worst = std::max(worst, est.stderr_.back());
    }
    if (cfg.stderr_cap > 0.0 && worst > cfg.stderr_cap) throw McBudgetExceeded(est, worst);
    return est;
}

Complex homotopy_apply(const LocalChart& chart, const PartitionSystem& parts, const HomotopyConfig& cfg,
                       const SmoothFormField& theta, const CPoint& z, const CVector& v, double* stderr_out) {
    if (!chart.in_W(z) && !chart.in_V(z)) fail("outside-chart", "z outside V");
    HomotopyEstimate e = homotopy_bundle(chart, parts, cfg, bundle({theta}), z);
    if (stderr_out) *stderr_out = e.stderr_[0];
    if (theta.degree == 1) return e.values[0](0);
    if (theta.degree != 2) fail("bad-degree", "homotopy_apply takes degree 1 or 2");
    RVector vr = real_of(v);
    Complex s = 0;
    for (int a = 0; a < vr.size(); ++a) s += e.values[0](a) * vr(a);
    return s;
}

SmoothFormField homotopy_field(std::shared_ptr<const LocalChart> chart, std::shared_ptr<const PartitionSystem> parts,
                               HomotopyConfig cfg, SmoothFormField theta) {
    SmoothFormField f;
    f.n = theta.n;
    f.degree = theta.degree - 1;
    FormBundle b = bundle({theta});
    f.eval = [chart, parts, cfg, b](const CPoint& z) { return homotopy_bundle(*chart, *parts, cfg, b, z).values[0]; };
    return f;
}

double radial_cutoff(const CPoint& z, double R) { return smooth_step(z.norm() / R - 1.0); }

RVector radial_cutoff_gradient(const CPoint& z, double R) {
    const double r = z.norm();
    RVector g = RVector::Zero(2 * z.size());
    if (r == 0.0) return g;
    return real_of(z) * (smooth_step_derivative(r / R - 1.0) / (R * r));
}

Coeffs straight_line_homotopy(const SmoothFormField& beta, const CPoint& c, const CPoint& x, int n_s) {
    const int n = beta.n, p = beta.degree;
    if (p < 1) fail("bad-degree", "straight-line homotopy needs degree >= 1");
    const GaussRule& g = gauss_legendre(n_s);
    const RVector X = real_of(CVector(x - c));
    Coeffs out = Coeffs::Zero(form_size(n, p - 1));
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double s = g.nodes[i];
        Coeffs b = beta(c + s * (x - c));
        out += (g.weights[i] * std::pow(s, p - 1)) * interior(n, p, b, X);
    }
    return out;
}

CutoffSolution cutoff_solve(std::shared_ptr<const LocalChart> chart, std::shared_ptr<const PartitionSystem> parts,
                            const HomotopyConfig& cfg, const SmoothFormField& T, double R, double closed_tol) {
    require_c(cfg);
    if (T.degree != 2) fail("bad-degree", "cutoff_solve takes a degree two form");
    const int n = T.n;
    if (R <= 0.0) R = chart->r2 / 4.0;
    const CPoint pc = chart->chart(chart->p);
    if (!(2.0 * R < chart->depth_a - chart->r2) || !(2.0 * R < chart->r1 - pc.norm()))
        fail("cutoff-radius-invalid", "B(0, 2R) must lie in V minus W");

    double closed_defect = 0.0;
    {
        CPoint c = std::isfinite(T.support.radius) ? T.support.center : pc;
        double r = std::isfinite(T.support.radius) ? T.support.radius : chart->r2;
        Halton h(2 * n + 1, derive_seed(cfg.seed, "closed-check"));
        std::vector<double> u(2 * n + 1);
        std::vector<CPoint> pts;
        for (int i = 0; i < 64; ++i) {
            h.point(i, u.data());
            pts.push_back(c + r * ball_point(n, u.data()));
        }
        ClosednessDefect d = closedness_defect(T.eval, n, 2, pts, 1e-3 * r);
        if (d.relative() > closed_tol)
            fail("input-not-closed", "relative defect " + std::to_string(d.relative()));
        closed_defect = d.relative();
    }

    CutoffSolution sol;
    sol.closedness = closed_defect;
    sol.R = R;
    sol.center = chart->chart(inward_point(chart->domain, chart->p, 0.5 * chart->eta1));

    SmoothFormField psiT;
    psiT.n = n;
    psiT.degree = 2;
    psiT.support = T.support;
    psiT.support.hole_center = CPoint::Zero(n);
    psiT.support.hole_radius = R;
    psiT.eval = [T, R](const CPoint& z) { return Coeffs(radial_cutoff(z, R) * T(z)); };

    SmoothFormField dpsiT;
    dpsiT.n = n;
    dpsiT.degree = 3;
    dpsiT.support.center = CPoint::Zero(n);
    dpsiT.support.radius = 2.0 * R;
    dpsiT.support.hole_center = CPoint::Zero(n);
    dpsiT.support.hole_radius = R;
    dpsiT.eval = [T, R, n](const CPoint& z) {
        RVector g = radial_cutoff_gradient(z, R);
        Coeffs dpsi(2 * n);
        for (int a = 0; a < 2 * n; ++a) dpsi(a) = g(a);
        return wedge(n, 1, dpsi, 2, T(z));
    };

    // t ranges for evaluation points near W
    const double spread = 1.5 * chart->r2;
    const double warp = cfg.c * std::sqrt(chart->depth_a);
    HomotopyConfig c1 = cfg, c2 = cfg;
    std::tie(c1.t0, c1.t1) = t_range(psiT.support, pc, spread, warp);
    std::tie(c2.t0, c2.t1) = t_range(dpsiT.support, pc, spread, warp);

    sol.h_part = homotopy_field(chart, parts, c1, psiT);
    sol.h_stderr = [chart, parts, c1, psiT](const CPoint& z) {
        return homotopy_bundle(*chart, *parts, c1, bundle({psiT}), z).stderr_[0];
    };
    sol.beta = homotopy_field(chart, parts, c2, dpsiT);
    const SmoothFormField beta = sol.beta;
    const CPoint base = sol.center;
    const int n_s = cfg.n_s;
    sol.tau.n = n;
    sol.tau.degree = 1;
    sol.tau.eval = [beta, base, n_s](const CPoint& x) { return straight_line_homotopy(beta, base, x, n_s); };
    const SmoothFormField hp = sol.h_part, tau = sol.tau;
    sol.w.n = n;
    sol.w.degree = 1;
    sol.w.eval = [hp, tau](const CPoint& x) { return Coeffs(hp(x) + tau(x)); };
    return sol;
}

std::vector<double> averaging_T(const LocalChart& chart, const HomotopyConfig& cfg, const ScalarBundle& f, int count,
                                const CPoint& z) {
    const Domain& d = chart.domain;
    const int n = d.dim();
    const double m = d.type_m();
    const double mr = -chart.rho(z);
    if (!(mr > 0.0)) fail("outside-chart", "z outside the domain");
    const double dz = chart.delta(z);
    const double c0 = d.constants().c0;
    const double tail_s = mr / 64.0;
    const double t_tail = std::max(0.0, 1.0 - tail_s / chart.depth_a);
    std::vector<double> out(count, 0.0), vals(count), avg(count);

    auto weight = [&](const CPoint& w) {
        CPoint amb = chart.ambient(w);
        if (!(d.rho(amb) < 0.0)) return 0.0;
        double e = 1.0 - 2.0 / m;
        return e == 0.0 ? 1.0 : std::pow(boundary_distance(d, amb), e);
    };

    TRule rule = t_rule(0.0, t_tail, cfg.n_t, 0.0);
    double u[kMaxReal];
    for (std::size_t q = 0; q < rule.t.size(); ++q) {
        const double t = rule.t[q];
        const double s = dyadic_time(chart, t);
        const double eps = s >= mr ? s : mr;
        const double dil = s >= mr ? 1.0 : s / mr;
        const CPoint c = chart.ambient(t * z);
        ExtremalFrame fr = extremal_frame(d, c, eps);
        Halton h(2 * n, derive_seed(cfg.seed, "q-average", q));
        std::fill(avg.begin(), avg.end(), 0.0);
        int accepted = 0;
        const int limit = cfg.q_samples * 200;
        for (int i = 0; i < limit && accepted < cfg.q_samples; ++i) {
            h.point(i, u);
            CVector y = polydisk_point(n, u);
            for (int k = 0; k < n; ++k) y(k) *= 2.0 * dil * c0 * fr.radii[k];
            CPoint w = c + fr.vectors * y;
            if (!pseudo_ball_contains(d, c, eps, w, dil)) continue;
            ++accepted;
            double wt = weight(chart.chart(w));
            if (wt == 0.0) continue;
            f(chart.chart(w), vals.data());
            for (int k = 0; k < count; ++k) avg[k] += wt * vals[k];
        }
        if (accepted == 0) fail("q-sampling-failure", "no accepted sample in Q(t,z)");
        const double factor = rule.w[q] * std::pow(1.0 - t, 1.0 / m - 1.0) / accepted;
        for (int k = 0; k < count; ++k) out[k] += factor * avg[k];
    }
    // Q(t,z) shrinks to tz near t = 1
    {
        double tail = m * std::pow(1.0 - t_tail, 1.0 / m);
        double wt = weight(z);
        if (wt > 0.0) {
            f(z, vals.data());
            for (int k = 0; k < count; ++k) out[k] += tail * wt * vals[k];
        }
    }
    const double pre = std::pow(dz, 1.0 / m - 1.0);
    for (auto& v : out) v *= pre;
    return out;
}

double averaging_T(const LocalChart& chart, const HomotopyConfig& cfg, const std::function<double(const CPoint&)>& f,
                   const CPoint& z) {
    return averaging_T(chart, cfg, [&](const CPoint& w, double* o) { o[0] = f(w); }, 1, z)[0];
}

std::vector<ResidualReport> verify_homotopy_identity(const LocalChart& chart, const PartitionSystem& parts,
                                                     const HomotopyConfig& cfg, const FormBundle& theta,
                                                     const FormBundle* dtheta, const std::vector<CPoint>& grid,
                                                     double fd_rel) {
    const int n = theta.n, p = theta.degree, count = theta.count;
    std::vector<ResidualReport> reps(count);
    std::vector<Coeffs> th(count);
    std::vector<std::vector<Coeffs>> residual(grid.size(), std::vector<Coeffs>(count));
    std::vector<double> scale(count, 0.0), se(count, 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const CPoint& z = grid[g];
        const double h = fd_rel * chart.delta(z);
        std::vector<std::vector<Coeffs>> partials(count, std::vector<Coeffs>(2 * n));
        for (int a = 0; a < 2 * n; ++a) {
            CVector e = real_axis(n, a) * h;
            HomotopyEstimate plus = homotopy_bundle(chart, parts, cfg, theta, z + e);
            HomotopyEstimate minus = homotopy_bundle(chart, parts, cfg, theta, z - e);
            for (int f = 0; f < count; ++f) {
                partials[f][a] = (plus.values[f] - minus.values[f]) / (2.0 * h);
                se[f] = std::max(se[f], 0.5 * (plus.stderr_[f] + minus.stderr_[f]));
            }
        }
        theta.eval(z, th.data());
        std::vector<Coeffs> hd;
        if (dtheta) {
            HomotopyEstimate e = homotopy_bundle(chart, parts, cfg, *dtheta, z);
            hd = e.values;
            for (int f = 0; f < count; ++f) se[f] = std::max(se[f], e.stderr_[f]);
        }
        for (int f = 0; f < count; ++f) {
            Coeffs r = exterior_from_partials(n, p - 1, partials[f]) - th[f];
            if (dtheta) r += hd[f];
            residual[g][f] = r;
            scale[f] = std::max(scale[f], sup_norm(th[f]));
        }
    }
    for (int f = 0; f < count; ++f) {
        ResidualReport& rep = reps[f];
        rep.scale = scale[f] > 0.0 ? scale[f] : 1.0;
        rep.points = static_cast<int>(grid.size());
        rep.n_lambda = cfg.n_lambda;
        rep.n_t = cfg.n_t;
        rep.mc_stderr = se[f] / rep.scale;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            double v = sup_norm(residual[g][f]) / rep.scale;
            rep.per_point.push_back(v);
            rep.max = std::max(rep.max, v);
            rep.mean += v / grid.size();
        }
    }
    return reps;
}

std::vector<CPoint> w_grid(const LocalChart& chart, int per_axis, std::uint64_t seed) {
    const Domain& d = chart.domain;
    const int n = d.dim();
    int lateral = 1;
    for (int i = 1; i < n; ++i) lateral *= per_axis;
    auto xis = boundary_patch_grid(d, chart.p, 0.8 * chart.r2, lateral, seed);
    std::vector<CPoint> out;
    const double lo = chart.eta1 / 8.0, hi = 0.9 * chart.eta1;
    for (const auto& xi : xis)
        for (int k = 0; k < per_axis; ++k) {
            double depth = per_axis == 1 ? std::sqrt(lo * hi) : lo * std::pow(hi / lo, double(k) / (per_axis - 1));
            CPoint z = chart.chart(inward_point(d, xi, depth));
            if (chart.in_W(z)) out.push_back(z);
        }
    return out;
}

namespace {

struct TestForms {
    int n, degree, count, comps;
    CPoint center;
    double radius;
    std::vector<Complex> alpha;  // [m][b]
    std::vector<Complex> M;      // [m][b][c], slopes of eta_m in y
    std::vector<Complex> curl;   // [m][k], (M_ba - M_ab) / radius on the degree-two basis
    std::vector<std::pair<int, int>> pairs;
    std::vector<double> scale;

    // chi, its gradient, y
    double bump(const CPoint& z, double* g, double* y) const {
        const int N = 2 * n;
        double r2 = 0.0;
        for (int j = 0; j < n; ++j) {
            y[2 * j] = (z(j).real() - center(j).real()) / radius;
            y[2 * j + 1] = (z(j).imag() - center(j).imag()) / radius;
            r2 += y[2 * j] * y[2 * j] + y[2 * j + 1] * y[2 * j + 1];
        }
        const double x = 2.0 * (1.0 - r2);
        const double ds = -4.0 * smooth_step_derivative(x) / radius;
        for (int a = 0; a < N; ++a) g[a] = y[a] * ds;
        return smooth_step(x);
    }
    Complex eta(int m, int b, const double* y) const {
        const int N = 2 * n;
        const Complex* row = &M[(m * comps + b) * N];
        Complex s = alpha[m * comps + b];
        for (int c = 0; c < N; ++c) s += row[c] * y[c];
        return s;
    }
    void closed(const CPoint& z, Coeffs* out, bool scaled) const {
        const int N = 2 * n;
        double g[kMaxReal], y[kMaxReal];
        const double chi = bump(z, g, y);
        const bool outside = chi == 0.0 && g[0] == 0.0 && g[N - 1] == 0.0;
        for (int m = 0; m < count; ++m) {
            const double s = scaled ? scale[m] : 1.0;
            if (degree == 1) {
                out[m].resize(N);
                if (outside) {
                    out[m].setZero();
                    continue;
                }
                const Complex e = eta(m, 0, y);
                const Complex* row = &M[m * N];
                for (int a = 0; a < N; ++a) out[m](a) = s * (g[a] * e + chi * row[a] / radius);
            } else {
                const int K = static_cast<int>(pairs.size());
                out[m].resize(K);
                if (outside) {
                    out[m].setZero();
                    continue;
                }
                Complex e[kMaxReal];
                for (int b = 0; b < N; ++b) e[b] = eta(m, b, y);
                for (int k = 0; k < K; ++k) {
                    const auto [a, b] = pairs[k];
                    out[m](k) = s * (g[a] * e[b] - g[b] * e[a] + chi * curl[m * K + k]);
                }
            }
        }
    }
    void potential(const CPoint& z, Coeffs* out) const {
        double g[kMaxReal], y[kMaxReal];
        const double chi = bump(z, g, y);
        for (int m = 0; m < count; ++m) {
            out[m].resize(comps);
            for (int b = 0; b < comps; ++b) out[m](b) = scale[m] * chi * eta(m, b, y);
        }
    }
};

std::shared_ptr<TestForms> make_test_forms(int n, int degree, const CPoint& center, double radius, int count,
                                           std::uint64_t seed, const std::vector<CPoint>& probes) {
    if (degree != 1 && degree != 2) fail("bad-degree", "test forms have degree 1 or 2");
    auto t = std::make_shared<TestForms>();
    t->n = n;
    t->degree = degree;
    t->count = count;
    t->center = center;
    t->radius = radius;
    const int N = 2 * n;
    t->comps = degree == 1 ? 1 : N;
    std::mt19937_64 rng(derive_seed(seed, "test-forms"));
    std::normal_distribution<double> N01;
    for (int m = 0; m < count; ++m)
        for (int b = 0; b < t->comps; ++b) {
            t->alpha.push_back(Complex(N01(rng), N01(rng)));
            for (int c = 0; c < N; ++c) t->M.push_back(Complex(N01(rng), N01(rng)));
        }
    if (degree == 2) {
        for (unsigned mask : basis_masks(n, 2))
            t->pairs.push_back({std::countr_zero(mask), std::countr_zero(mask & (mask - 1))});
        for (int m = 0; m < count; ++m)
            for (auto [a, b] : t->pairs)
                t->curl.push_back((t->M[(m * N + b) * N + a] - t->M[(m * N + a) * N + b]) / radius);
    }
    t->scale.assign(count, 0.0);
    std::vector<CPoint> pts = probes;
    if (pts.empty()) {
        Halton h(2 * n + 1, derive_seed(seed, "test-form-probes"));
        std::vector<double> u(2 * n + 1);
        for (int i = 0; i < 256; ++i) {
            h.point(i, u.data());
            pts.push_back(center + radius * ball_point(n, u.data()));
        }
    }
    std::vector<Coeffs> v(count);
    for (const auto& z : pts) {
        t->closed(z, v.data(), false);
        for (int m = 0; m < count; ++m) t->scale[m] = std::max(t->scale[m], sup_norm(v[m]));
    }
    for (auto& s : t->scale) s = s > 0.0 ? 1.0 / s : 1.0;
    return t;
}

}  // namespace

FormBundle closed_test_forms(int n, int degree, const CPoint& center, double radius, int count, std::uint64_t seed,
                             const std::vector<CPoint>& probes) {
    auto t = make_test_forms(n, degree, center, radius, count, seed, probes);
    FormBundle b;
    b.n = n;
    b.degree = degree;
    b.count = count;
    b.support.center = center;
    b.support.radius = radius;
    b.eval = [t](const CPoint& z, Coeffs* out) { t->closed(z, out, true); };
    return b;
}

FormBundle test_potentials(int n, int degree, const CPoint& center, double radius, int count, std::uint64_t seed,
                           const std::vector<CPoint>& probes) {
    auto t = make_test_forms(n, degree, center, radius, count, seed, probes);
    FormBundle b;
    b.n = n;
    b.degree = degree - 1;
    b.count = count;
    b.support.center = center;
    b.support.radius = radius;
    b.eval = [t](const CPoint& z, Coeffs* out) { t->potential(z, out); };
    return b;
}

}  // namespace lcx
