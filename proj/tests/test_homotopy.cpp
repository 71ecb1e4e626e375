#include "doctest.h"

#include <cmath>
#include <memory>

#include "lcx/error.hpp"
#include "lcx/homotopy.hpp"
#include "lcx/sampling.hpp"

using namespace lcx;

namespace {

CPoint pt(Complex a, Complex b) {
    CPoint z(2);
    z << a, b;
    return z;
}

struct Setup {
    std::shared_ptr<LocalChart> chart;
    std::shared_ptr<PartitionSystem> parts;
    std::vector<CPoint> grid;
    HomotopyConfig cfg;
};

const Setup& ball_setup() {
    static Setup s = [] {
        Setup r;
        Domain d = builtin_domain("ball");
        r.chart = std::make_shared<LocalChart>(build_local_chart(d, pt(1, 0)));
        r.grid = w_grid(*r.chart, 6, 1);
        r.parts = std::make_shared<PartitionSystem>(*r.chart, segment_targets(*r.chart, r.grid, 12));
        r.cfg.c = select_c(*r.chart, *r.parts, r.grid, 400, 1).c;
        return r;
    }();
    return s;
}

std::vector<CPoint> every(const std::vector<CPoint>& v, int count) {
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

}  // namespace

TEST_CASE("chart on the ball") {
    Domain d = builtin_domain("ball");
    ChartAudit a;
    LocalChart c = build_local_chart(d, pt(1, 0), &a);
    CHECK(a.ok());
    CHECK(a.min_cosine >= 0.5);
    CHECK(c.depth_a > 2.0 * c.r2);
    CHECK(c.depth_a < 0.5 * c.r1);
    CHECK(std::abs(c.a(1)) < 1e-12);
    CHECK(c.a(0).real() == doctest::Approx(1.0 - c.depth_a));
    CHECK(c.in_V(CPoint::Zero(2)));
    CHECK_FALSE(c.in_W(CPoint::Zero(2)));
    CHECK(c.in_W(c.chart(inward_point(d, pt(1, 0), 0.5 * c.eta1))));
    CHECK_THROWS_WITH_AS(LocalChart(d, pt(1, 0), c.a, 0.02, 0.005, 0.001), doctest::Contains("invalid-chart"),
                         NumericalError);
    CHECK_THROWS_WITH_AS(build_local_chart(d, pt(0.9, 0)), doctest::Contains("not-on-boundary"), NumericalError);
}

TEST_CASE("chart on the ellipsoid") {
    Domain e = builtin_domain("ellipsoid", {1, 2});
    ChartAudit a;
    LocalChart c = build_local_chart(e, pt(0, 1), &a);
    CHECK(a.ok());
    // tangential radii grow like eta1^{1/4} at (1,0), so no shrink round fits P(zeta, eta1) in B(p, 2 r2)
    CHECK_THROWS_WITH_AS(build_local_chart(e, pt(1, 0)), doctest::Contains("chart-construction-failure"),
                         NumericalError);
}

TEST_CASE("dyadic partition and cutoff") {
    const Setup& s = ball_setup();
    const PartitionSystem& P = *s.parts;
    Halton h(1, 5);
    double worst = 0.0, slope = 0.0;
    for (int i = 0; i < 2000; ++i) {
        double x;
        h.point(i, &x);
        double sv = std::exp2(-P.k_max() * x);
        double sum = 0.0;
        for (int k = P.k_min(); k <= P.k_max(); ++k) {
            double v = P.psi(k, sv);
            CHECK(v >= 0.0);
            sum += v;
            if (k > P.k_min()) {
                CHECK(((v == 0.0) || (sv > std::exp2(-k - 1) && sv <= std::exp2(-k + 1))));
            }
            slope = std::max(slope, std::abs(P.psi_derivative(k, sv)) / std::exp2(k));
        }
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    CHECK(worst < 1e-12);
    CHECK(slope < 10.0);
    CHECK(PartitionSystem::phi_cut(0.3) == 1.0);
    CHECK(PartitionSystem::phi_cut(0.5) == 1.0);
    CHECK(PartitionSystem::phi_cut(1.0) == 0.0);
    CHECK(PartitionSystem::phi_cut(0.75) == doctest::Approx(0.5));
}

TEST_CASE("bumps sum to one along the paths") {
    const Setup& s = ball_setup();
    const PartitionSystem& P = *s.parts;
    std::vector<PartitionTerm> terms;
    double worst = 0.0, gworst = 0.0, ratio = 0.0;
    for (const auto& z : every(s.grid, 20))
        for (double t : {0.3, 0.7, 0.95, 0.999, 1.0}) {
            CPoint w = t * z;
            REQUIRE(P.covers(w));
            P.evaluate(w, terms, true);
            double sum = 0.0;
            RVector g = RVector::Zero(4);
            for (const auto& term : terms) {
                CHECK(term.value >= 0.0);
                sum += term.value;
                g += term.grad;
                // directional derivative against tau at the bump's own depth
                const auto& f = P.polydisk(term.j).frame;
                for (int i = 0; i < 2; ++i) {
                    CVector v = f.vectors.col(i);
                    RVector vr = to_real<double>(v);
                    ratio = std::max(ratio, std::abs(term.grad.dot(vr)) * f.radii[i]);
                }
            }
            worst = std::max(worst, std::abs(sum - 1.0));
            gworst = std::max(gworst, g.norm() * P.polydisk(terms[0].j).frame.radii[0]);
        }
    CHECK(worst < 1e-12);
    CHECK(gworst < 1e-8);
    MESSAGE("bump derivative constant " << ratio);
    CHECK(ratio < 200.0);
}

TEST_CASE("warp endpoints and linear part") {
    const Setup& s = ball_setup();
    Halton h(4, 9);
    double u[4];
    for (int i = 0; i < 20; ++i) {
        h.point(i, u);
        CVector lam = polydisk_point(2, u);
        const CPoint& z = s.grid[i * 7 % s.grid.size()];
        CHECK((h_lambda(*s.chart, *s.parts, s.cfg, lam, 0.0, z)).norm() <= 1e-12);
        CHECK((h_lambda(*s.chart, *s.parts, s.cfg, lam, 1.0, z) - z).norm() <= 1e-12);
        CVector v = pt(Complex(u[0], u[1]), Complex(u[2], u[3])).normalized();
        CHECK((h_direction_derivative(*s.chart, *s.parts, s.cfg, lam, 1.0, z, v) - v).norm() <= 1e-6);
        CVector zero = CVector::Zero(2);
        for (double t : {0.2, 0.9, 0.999}) {
            CHECK((h_lambda(*s.chart, *s.parts, s.cfg, zero, t, z) - t * z).norm() == 0.0);
            CHECK((h_velocity(*s.chart, *s.parts, s.cfg, zero, t, z) - z).norm() <= 1e-7 * z.norm());
            CHECK((h_direction_derivative(*s.chart, *s.parts, s.cfg, zero, t, z, v) - t * v).norm() <= 1e-9);
        }
    }
    CHECK_THROWS_WITH_AS(h_lambda(*s.chart, *s.parts, s.cfg, CVector::Zero(2), 0.5, pt(0.1, 0)),
                         doctest::Contains("outside-chart"), NumericalError);
}

TEST_CASE("finite differences match the analytic jet") {
    const Setup& s = ball_setup();
    Halton h(4, 11);
    double u[4];
    double ratio_t = 0.0, ratio_x = 0.0;
    int cases = 0;
    for (int i = 0; i < 6; ++i) {
        h.point(i, u);
        CVector lam = polydisk_point(2, u);
        const CPoint& z = s.grid[i * 11 % s.grid.size()];
        CVector v = pt(Complex(u[0], -u[1]), Complex(u[3], u[2])).normalized();
        for (double t : {0.6, 0.95}) {
            WarpJet J = warp_jet(*s.chart, *s.parts, s.cfg.c, t, z, true);
            CVector Y = z + J.Bt * lam;
            RVector vr = to_real<double>(v);
            CVector Z = t * v;
            for (int a = 0; a < 4; ++a) Z += vr(a) * (J.Bx[a] * lam);
            HomotopyConfig c1 = s.cfg, c2 = s.cfg;
            c1.fd_step = 2e-2;
            c2.fd_step = 1e-2;
            double et1 = (h_velocity(*s.chart, *s.parts, c1, lam, t, z) - Y).norm();
            double et2 = (h_velocity(*s.chart, *s.parts, c2, lam, t, z) - Y).norm();
            c1.fd_step = 4e-2;
            c2.fd_step = 2e-2;
            double ex1 = (h_direction_derivative(*s.chart, *s.parts, c1, lam, t, z, v) - Z).norm();
            double ex2 = (h_direction_derivative(*s.chart, *s.parts, c2, lam, t, z, v) - Z).norm();
            // default steps agree closely
            CHECK((h_velocity(*s.chart, *s.parts, s.cfg, lam, t, z) - Y).norm() <= 1e-6 * Y.norm());
            CHECK((h_direction_derivative(*s.chart, *s.parts, s.cfg, lam, t, z, v) - Z).norm() <= 1e-6);
            if (et2 > 1e-13) {
                ratio_t += et1 / et2;
                ratio_x += ex1 / ex2;
                ++cases;
            }
        }
    }
    REQUIRE(cases > 0);
    CHECK(ratio_t / cases == doctest::Approx(4.0).epsilon(0.25));
    CHECK(ratio_x / cases == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("containment audit") {
    const Setup& s = ball_setup();
    ContainmentAudit a = select_c(*s.chart, *s.parts, s.grid, 1000, 3);
    CHECK(a.c > 0.0);
    CHECK(a.q >= 1);
    CHECK(a.violations[a.q - 1].second == 0);
    if (a.q > 1) CHECK(a.violations[a.q - 2].second > 0);
    CHECK(in_Q(*s.chart, 0.5, s.grid[0], 0.5 * s.grid[0]));
}

TEST_CASE("H is linear and vanishes on zero") {
    const Setup& s = ball_setup();
    HomotopyConfig cfg = s.cfg;
    cfg.n_lambda = 256;
    cfg.n_t = 32;
    const CPoint pc = s.chart->chart(s.chart->p);
    FormBundle th = closed_test_forms(2, 2, pc, 0.8 * s.chart->depth_a, 2, 4, s.grid);
    FormBundle two;
    two.n = 2;
    two.degree = 2;
    two.count = 1;
    two.support = th.support;
    two.eval = [th](const CPoint& z, Coeffs* o) {
        Coeffs v[2];
        th.eval(z, v);
        o[0] = Complex(2.0, -1.0) * v[0] + 3.0 * v[1];
    };
    FormBundle zero = two;
    zero.eval = [](const CPoint&, Coeffs* o) { o[0] = Coeffs::Zero(6); };
    const CPoint& z = s.grid[17];
    HomotopyEstimate e = homotopy_bundle(*s.chart, *s.parts, cfg, th, z);
    HomotopyEstimate e2 = homotopy_bundle(*s.chart, *s.parts, cfg, two, z);
    HomotopyEstimate e0 = homotopy_bundle(*s.chart, *s.parts, cfg, zero, z);
    Coeffs comb = Complex(2.0, -1.0) * e.values[0] + 3.0 * e.values[1];
    CHECK(sup_norm(e2.values[0] - comb) <= 1e-12 * sup_norm(comb));
    CHECK(sup_norm(e0.values[0]) == 0.0);
    CHECK(e.stderr_[0] > 0.0);
    cfg.stderr_cap = 1e-12;
    CHECK_THROWS_AS(homotopy_bundle(*s.chart, *s.parts, cfg, th, z), McBudgetExceeded);
}

TEST_CASE("straight-line limit on constant forms") {
    const Setup& s = ball_setup();
    HomotopyConfig cfg = s.cfg;
    cfg.c = 1e-12;
    cfg.t0 = 0.25;
    cfg.n_lambda = 16;
    cfg.group = 16;
    cfg.n_t = 64;
    for (int p : {1, 2}) {
        Coeffs k(form_size(2, p));
        for (int i = 0; i < k.size(); ++i) k(i) = Complex(0.3 * i - 1.0, 0.1 * i * i);
        SmoothFormField f;
        f.n = 2;
        f.degree = p;
        f.eval = [k](const CPoint&) { return k; };
        for (const auto& z : every(s.grid, 4)) {
            HomotopyEstimate e = homotopy_bundle(*s.chart, *s.parts, cfg, bundle({f}), z);
            // int_{t0}^1 t^{p-1} dt iota_z k
            Coeffs exact = (1.0 - std::pow(cfg.t0, p)) / p * interior(2, p, k, to_real<double>(z));
            CHECK(sup_norm(e.values[0] - exact) <= 1e-8 * sup_norm(exact));
        }
    }
}

TEST_CASE("homotopy identity at a small budget") {
    const Setup& s = ball_setup();
    HomotopyConfig cfg = s.cfg;
    const CPoint pc = s.chart->chart(s.chart->p);
    auto pts = every(s.grid, 4);
    FormBundle th = closed_test_forms(2, 2, pc, 0.8 * s.chart->depth_a, 2, 5, s.grid);
    auto tr = t_range(th.support, pc, s.chart->r2, cfg.c * std::sqrt(s.chart->depth_a));
    cfg.t0 = tr.first;
    cfg.t1 = tr.second;
    cfg.n_lambda = 512;
    auto small = verify_homotopy_identity(*s.chart, *s.parts, cfg, th, nullptr, pts);
    cfg.n_lambda = 2048;
    auto large = verify_homotopy_identity(*s.chart, *s.parts, cfg, th, nullptr, pts);
    for (int f = 0; f < 2; ++f) {
        CHECK(small[f].max < 0.05);
        CHECK(large[f].max < small[f].max);
        CHECK(large[f].points == 4);
    }

    // degree one with the exact d theta
    FormBundle eta = test_potentials(2, 2, pc, 0.8 * s.chart->depth_a, 1, 6, s.grid);
    FormBundle deta = closed_test_forms(2, 2, pc, 0.8 * s.chart->depth_a, 1, 6, s.grid);
    cfg.n_lambda = 1024;
    auto r1 = verify_homotopy_identity(*s.chart, *s.parts, cfg, eta, &deta, pts);
    CHECK(r1[0].max < 0.02);
}

TEST_CASE("cutoff solve") {
    const Setup& s = ball_setup();
    HomotopyConfig cfg = s.cfg;
    cfg.n_lambda = 2048;
    const CPoint pc = s.chart->chart(s.chart->p);
    SmoothFormField T = member(closed_test_forms(2, 2, pc, 1.5 * s.chart->depth_a, 1, 7, s.grid));
    CutoffSolution sol = cutoff_solve(s.chart, s.parts, cfg, T);
    CHECK(sol.R == doctest::Approx(s.chart->r2 / 4));
    CHECK(sol.closedness < 1e-3);
    double worst = 0.0, beta = 0.0;
    for (const auto& z : every(s.grid, 3)) {
        Coeffs dw = fd_exterior_derivative(sol.w.eval, 2, 1, z, 1e-3 * s.chart->delta(z));
        worst = std::max(worst, sup_norm(dw - T(z)));
        beta = std::max(beta, sup_norm(sol.beta(z)));
    }
    CHECK(worst < 5e-3);
    CHECK(beta > 0.0);
    CHECK(std::isfinite(beta));

    CHECK_THROWS_WITH_AS(cutoff_solve(s.chart, s.parts, cfg, T, s.chart->depth_a), doctest::Contains("cutoff-radius-invalid"),
                         NumericalError);
    SmoothFormField bad = T;
    bad.eval = [](const CPoint& z) {
        Coeffs c = Coeffs::Zero(6);
        c(0) = z(0).real() * z(1).imag();
        return c;
    };
    CHECK_THROWS_WITH_AS(cutoff_solve(s.chart, s.parts, cfg, bad), doctest::Contains("input-not-closed"),
                         NumericalError);
    SmoothFormField one = T;
    one.degree = 1;
    CHECK_THROWS_WITH_AS(cutoff_solve(s.chart, s.parts, cfg, one), doctest::Contains("bad-degree"), NumericalError);
}

TEST_CASE("averaging operator") {
    const Setup& s = ball_setup();
    const LocalChart& ch = *s.chart;
    HomotopyConfig cfg;
    cfg.n_t = 48;
    cfg.q_samples = 48;
    auto f = [&](const CPoint& w) {
        CPoint a = ch.ambient(w);
        return 1.0 + 40.0 * std::norm(a(1)) + 3.0 * (1.0 - a(0).real());
    };
    const CPoint& z = s.grid[s.grid.size() / 2];
    CHECK(averaging_T(ch, cfg, [](const CPoint&) { return 0.0; }, z) == 0.0);
    double v = averaging_T(ch, cfg, f, z);
    double v3 = averaging_T(ch, cfg, [&](const CPoint& w) { return 3.0 * f(w); }, z);
    CHECK(v3 == doctest::Approx(3.0 * v).epsilon(1e-12));

    // nested MC: v = (1-t)^{1/2}; the ball pseudo-ball at c has normal extent below c0 dil eps / (2|c|) and
    // tangential extent below c0 dil sqrt(eps), so sample that bidisk and reject with the closed-form tau
    const Domain& d = ch.domain;
    const double c0 = d.constants().c0, mr = -ch.rho(z);
    const CPoint za = ch.ambient(z);
    Halton hv(1, 77), hb(4, 78);
    double u[4], outer = 0.0;
    const int nv = 400, nq = 200;
    std::uint64_t idx = 0;
    for (int i = 0; i < nv; ++i) {
        double vv;
        hv.point(i, &vv);
        const double t = 1.0 - vv * vv;
        const double sdy = ch.depth_a * (1.0 - t);
        const double eps = std::max(sdy, mr), dil = sdy >= mr ? 1.0 : sdy / mr;
        const CPoint c = ch.ambient(t * z);
        const CVector nu = c / c.norm();
        const CVector tg = pt(-std::conj(nu(1)), std::conj(nu(0)));
        const double rn = c0 * dil * eps / (2.0 * c.norm()), rt = c0 * dil * std::sqrt(eps);
        double sum = 0.0;
        int got = 0;
        while (got < nq) {
            hb.point(idx++, u);
            CVector lam = polydisk_point(2, u);
            CVector y = rn * lam(0) * nu + rt * lam(1) * tg;
            const double r = y.norm();
            const double b = std::abs(c.dot(y / r));
            if (r >= c0 * dil * (-b + std::sqrt(b * b + eps))) continue;
            ++got;
            const CPoint w = c + y;
            if (d.rho(w) < 0.0) sum += f(ch.chart(w));
        }
        outer += 2.0 * sum / nq;
    }
    const double oracle = std::pow(boundary_distance(d, za), -0.5) * outer / nv;
    MESSAGE("T(f) " << v << " oracle " << oracle);
    CHECK(v == doctest::Approx(oracle).epsilon(0.05));
}
