#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "lcx/carleson.hpp"
#include "lcx/error.hpp"
#include "lcx/mollify.hpp"
#include "lcx/sampling.hpp"

using namespace lcx;

namespace {

CPoint pt(Complex a, Complex b) {
    CPoint z(2);
    z << a, b;
    return z;
}

DiscreteCurrent unit_atom(const CPoint& z) {
    DiscreteCurrent t;
    t.kind = FormKind::Scalar;
    t.atoms.push_back({z, Coeffs::Constant(1, 1.0)});
    return t;
}

// Points near the piece, at least eps inside its rim.
std::vector<CPoint> interior_points(const HyperplanePiece& piece, double eps, int count) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<CPoint> out;
    while (static_cast<int>(out.size()) < count) {
        CVector y = pt({u(rng), u(rng)}, {u(rng), u(rng)});
        y -= piece.nu * hdot<double>(y, piece.nu);
        y = y.normalized() * (0.5 * (u(rng) + 1.0) * (piece.radius - eps));
        out.push_back(piece.a + y + piece.nu * Complex(0.25 * eps * u(rng), 0.25 * eps * u(rng)));
    }
    return out;
}

}  // namespace

TEST_CASE("bump has unit mass and compact support") {
    Mollifier m = make_mollifier(2, 1.0);
    // Simpson on |S^3| r^3 phi(r)
    const int N = 200000;
    double s = 0.0;
    for (int i = 0; i <= N; ++i) {
        double r = 0.5 * i / N;
        double w = (i == 0 || i == N) ? 1 : (i % 2 ? 4 : 2);
        s += w * 2.0 * std::numbers::pi * std::numbers::pi * r * r * r * m.profile(r);
    }
    s *= 0.5 / N / 3.0;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(m.profile(0.5) == 0.0);
    CHECK(m.profile(0.6) == 0.0);
    CHECK(m.profile(0.49) >= 0.0);
    CHECK_THROWS_AS(make_mollifier(2, 0.0), NumericalError);
}

TEST_CASE("mollified atom") {
    const double eps = 0.01;
    Mollifier m = make_mollifier(2, eps);
    CPoint a = pt(0.5, Complex(0, 0.2));
    SmoothFormField f = mollify_current(unit_atom(a), m);
    CHECK(f(a + pt(0.51 * eps, 0))(0) == 0.0);
    CHECK(f(a + pt(0.2 * eps, 0))(0).real() > 0.0);
    Halton h(5, 3);
    double u[5];
    const int N = 200000;
    double s = 0.0;
    for (int i = 0; i < N; ++i) {
        h.point(i, u);
        s += f(a + 0.5 * eps * ball_point(2, u))(0).real();
    }
    double vol = std::numbers::pi * std::numbers::pi / 2.0 * std::pow(0.5 * eps, 4);
    CHECK(s / N * vol == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("mollification is linear") {
    Mollifier m = make_mollifier(2, 0.05);
    DiscreteCurrent t1 = unit_atom(pt(0.1, 0.1)), t2 = unit_atom(pt(0.11, 0.09));
    t2.atoms[0].c(0) = Complex(0.3, -1.0);
    SmoothFormField f1 = mollify_current(t1, m), f2 = mollify_current(t2, m), f12 = mollify_current(t1 + t2, m);
    for (double x : {0.09, 0.1, 0.105, 0.12}) {
        CPoint z = pt(x, 0.1);
        CHECK(std::abs(f12(z)(0) - (f1(z)(0) + f2(z)(0))) <= 1e-12 * (1.0 + std::abs(f12(z)(0))));
    }
}

TEST_CASE("shrunken domain") {
    Domain b = builtin_domain("ball");
    const double eps = 0.005;
    Domain s = shrunken_domain(b, eps);
    CHECK(s.rho(pt(std::sqrt(1.0 - 4.0 * eps), 0)) == doctest::Approx(0.0));
    CHECK_THROWS_WITH_AS(shrunken_domain(b, 0.02), doctest::Contains("epsilon-too-large"), NumericalError);
    CPoint deep = pt(0.5, 0.2);
    double shift = boundary_distance(b, deep) - boundary_distance(s, deep);
    CHECK(shift == doctest::Approx(1.0 - std::sqrt(1.0 - 4.0 * eps)));
    double depth = boundary_distance(b, boundary_ray_point(s, pt(0.3, 0.8)));
    CHECK(depth / eps >= 1.0);
    CHECK(depth / eps <= 8.0);
}

TEST_CASE("mollified hyperplane currents are closed") {
    Domain b = builtin_domain("ball");
    const double eps = 0.002;
    auto piece = random_piece(b, pt(1, 0), 0.0015, 0.01, 0.1, 4);
    DiscreteCurrent t = hyperplane_current(piece, eps / 20);
    int outside = 0;
    for (const auto& a : t.atoms) outside += !(b.rho(a.z) < 0.0);
    REQUIRE(outside == 0);
    SmoothFormField f = mollify_current(t, make_mollifier(2, eps));
    ClosednessDefect c = closedness_defect(f.eval, 2, 2, interior_points(piece, eps, 100), eps / 20);
    CHECK(c.value_sup > 0.0);
    CHECK(c.relative() <= 1e-3);
    // a single atom is not closed
    SmoothFormField g = mollify_current(DiscreteCurrent{2, FormKind::OneOne, {t.atoms[0]}}, make_mollifier(2, eps));
    CPoint z = t.atoms[0].z + pt(0.1 * eps, 0);
    CHECK(closedness_defect(g.eval, 2, 2, {z}, eps / 20).relative() > 0.01);
}

TEST_CASE("mollification keeps the Carleson norm") {
    Domain b = builtin_domain("ball");
    const double eps = 0.0005;
    CPoint p = boundary_grid(b, 1, 5)[0];
    double depth = 0.7 * b.constants().c0 * tau(b, p, complex_normal(b, p), b.constants().eps0);
    auto piece = random_piece(b, p, depth, 0.004, 0.1, 2);
    DiscreteCurrent t = hyperplane_current(piece, eps / 20);
    Mollifier m = make_mollifier(2, eps);
    CarlesonGrid g;
    g.boundary = boundary_patch_grid(b, p, 0.03, 24, 1);
    g.boundary.push_back(p);
    g.scales = dyadic_scales(0.0, b.constants().eps0, 6);
    TentSet tents(b, g);
    CurrentNormOptions opt;
    opt.focus = mollifier_focus(t, m);
    opt.focus_radius = focus_radius(m);
    CarlesonReport rd = carleson_norm_current(tents, t);
    CarlesonReport rs = carleson_norm_current(tents, mollify_current(t, m), opt);
    CHECK(rd.max_ratio > 0.0);
    CHECK(rs.norm_value / rd.norm_value <= 10.0);
    CHECK(rs.norm_value / rd.norm_value >= 0.1);
}
