#include "doctest.h"

#include <chrono>
#include <cmath>
#include <random>

#include "lcx/domain.hpp"
#include "lcx/error.hpp"
#include "lcx/geometry.hpp"
#include "lcx/sampling.hpp"

using namespace lcx;

namespace {

CPoint pt(Complex a, Complex b) {
    CPoint z(2);
    z << a, b;
    return z;
}

CVector random_unit(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    CVector v(n);
    for (int j = 0; j < n; ++j) v(j) = {g(rng), g(rng)};
    return v.normalized();
}

}  // namespace

TEST_CASE("tau closed forms on the ellipsoid") {
    Domain d = parse_domain("ellipsoid:1,2");
    const double r = 0.95;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        CHECK(tau(d, pt(r, 0), pt(0, 1), eps) == doctest::Approx(std::pow(eps, 0.25)).epsilon(1e-6));
        CHECK(tau(d, pt(r, 0), pt(1, 0), eps) == doctest::Approx(-r + std::sqrt(r * r + eps)).epsilon(1e-6));
    }
    // phase invariance
    CHECK(tau(d, pt(r, 0), pt(0, Complex(0, 1)), 1e-3) == doctest::Approx(std::pow(1e-3, 0.25)).epsilon(1e-6));
}

TEST_CASE("tau errors and monotonicity") {
    Domain d = builtin_domain("ball");
    try {
        tau(d, pt(0.9, 0), pt(1, 0), 0.0);
        FAIL("expected bad-scale");
    } catch (const NumericalError& e) {
        CHECK(e.code() == "bad-scale");
    }
    std::mt19937_64 rng(1);
    for (int s = 0; s < 50; ++s) {
        CVector v = random_unit(rng, 2);
        CPoint z = inward_point(d, random_unit(rng, 2), 0.01);
        double e = 1e-3 * (1 + s);
        CHECK(tau(d, z, v, e) <= tau(d, z, v, 2 * e));
    }
}

TEST_CASE("ball radii match the quadratic closed forms") {
    Domain d = builtin_domain("ball");
    std::mt19937_64 rng(2);
    for (int s = 0; s < 10; ++s) {
        CPoint xi = random_unit(rng, 2);
        CPoint z = inward_point(d, xi, 1e-4);
        const double eps = 1e-4;
        ExtremalFrame f = extremal_frame(d, z, eps);
        CHECK(f.radii[0] == doctest::Approx(eps / (2 * z.norm())).epsilon(0.1));
        CHECK(f.radii[1] == doctest::Approx(std::sqrt(eps)).epsilon(0.1));
        CMatrix gram = f.vectors.adjoint() * f.vectors;
        CHECK((gram - CMatrix::Identity(2, 2)).norm() < 1e-10);
        CHECK((f.vectors.col(0) - complex_normal(d, z)).norm() < 1e-12);
        for (int i = 0; i < 2; ++i)
            CHECK(tau(d, z, f.vectors.col(i), eps) == doctest::Approx(f.radii[i]).epsilon(1e-4));
    }
}

TEST_CASE("ellipsoid frame at a real point") {
    Domain d = parse_domain("ellipsoid:1,2");
    const double r = 0.97, eps = 1e-3;
    ExtremalFrame f = extremal_frame(d, pt(r, 0), eps);
    CHECK(std::abs(std::abs(f.vectors(0, 0)) - 1.0) < 1e-12);
    CHECK(std::abs(std::abs(f.vectors(1, 1)) - 1.0) < 1e-12);
    CHECK(f.radii[0] == doctest::Approx(-r + std::sqrt(r * r + eps)).epsilon(1e-6));
    CHECK(f.radii[1] == doctest::Approx(std::pow(eps, 0.25)).epsilon(1e-6));
}

TEST_CASE("three dimensional frames minimize over the remaining sphere") {
    Domain d = parse_domain("ellipsoid:1,2,3");
    std::mt19937_64 rng(4);
    CPoint z(3);
    z << 0.9, 0.1, Complex(0.05, 0.02);
    const double eps = 1e-3;
    ExtremalFrame f = extremal_frame(d, z, eps);
    CMatrix gram = f.vectors.adjoint() * f.vectors;
    CHECK((gram - CMatrix::Identity(3, 3)).norm() < 1e-10);
    // resampling check for v_2 over the complement of v_1
    for (int s = 0; s < 300; ++s) {
        CVector u = random_unit(rng, 3);
        u -= hdot<double>(u, f.vectors.col(0)) * f.vectors.col(0);
        u.normalize();
        CHECK(tau(d, z, u, eps) >= 0.95 * f.radii[1]);
    }
}

TEST_CASE("polydisk membership") {
    Domain d = builtin_domain("ball");
    CPoint z = pt(0.99, 0);
    Polydisk p = polydisk(d, z, 1e-3, 1.0);
    CHECK(p.contains(z));
    CVector v2 = p.frame.vectors.col(1);
    CHECK(p.contains(z + 0.5 * d.constants().c0 * p.frame.radii[1] * v2));
    CPoint far = z + 2.0 * d.constants().c0 * p.frame.radii[1] * v2 * 0.999;
    CHECK_FALSE(p.contains(far));
    CHECK(polydisk(d, z, 1e-3, 2.0).contains(far));
    // support function matches brute force over the boundary torus
    CVector e = CVector::Zero(2);
    e << Complex(0.6, 0.3), Complex(0.1, -0.73);
    e.normalize();
    double brute = 0;
    for (int a = 0; a < 360; ++a)
        for (int b = 0; b < 360; ++b) {
            CVector lam(2);
            lam << std::polar(p.c0 * p.frame.radii[0], a * M_PI / 180), std::polar(p.c0 * p.frame.radii[1], b * M_PI / 180);
            brute = std::max(brute, hdot<double>(p.frame.vectors * lam, e).real());
        }
    CHECK(p.extent(e) == doctest::Approx(brute).epsilon(1e-3));
}

TEST_CASE("pseudo-distances") {
    Domain d = parse_domain("ellipsoid:1,2");
    const double r = 0.96, c0 = d.constants().c0;
    CPoint zeta = pt(r, 0);
    CHECK(pseudo_distance_d1(d, zeta, zeta) == 0.0);
    CHECK(pseudo_distance_d(d, zeta, zeta) == 0.0);
    const double s = 0.01;
    CHECK(pseudo_distance_d1(d, zeta, zeta + pt(0, s)) == doctest::Approx(std::pow(s / c0, 4)).epsilon(2e-3));
    CHECK(pseudo_distance_d(d, zeta, zeta + pt(0, s)) == doctest::Approx(std::pow(s / c0, 4)).epsilon(1e-6));
    const double s1 = 1e-5;
    // exact inversion of c^2 + 2 r c = eps at c = s / c0
    double exact = std::pow(s1 / c0, 2) + 2 * r * s1 / c0;
    CHECK(pseudo_distance_d1(d, zeta, zeta + pt(s1, 0)) == doctest::Approx(exact).epsilon(2e-3));
    CHECK(exact == doctest::Approx(2 * r * s1 / c0).epsilon(1e-3));
    try {
        pseudo_distance_d1(d, zeta, pt(-0.5, 0.5));
        FAIL("expected out-of-range");
    } catch (const NumericalError& e) {
        CHECK(e.code() == "out-of-range");
    }
}

TEST_CASE("k weight") {
    Domain d = parse_domain("ellipsoid:1,2");
    const double delta = 1e-3;
    CPoint z = pt(1 - delta, 0);
    // tau(nu) = eps / |grad_R rho| here, so k is 2(1 - delta) rather than 1
    CHECK(k_weight(d, z, complex_normal(d, z)) == doctest::Approx(2 * (1 - delta)).epsilon(0.01));
    CHECK(k_weight(d, z, pt(0, 1)) == doctest::Approx(std::pow(delta, 0.75)).epsilon(1e-6));
    CVector u = pt(Complex(0.3, 0.1), Complex(0.2, 0.9)).normalized();
    double k0 = k_weight(d, z, u);
    CHECK(std::abs(k_weight(d, z + pt(0, Complex(1e-3, 0) * 1e-3), u) - k0) < 1e-3 * k0 + 1e-6);
}

TEST_CASE("tent membership and volume exponent on the ball") {
    Domain d = builtin_domain("ball");
    CPoint xi = pt(1, 0);
    CHECK(tent_membership(d, xi, 1e-2, pt(1 - 1e-5, 0)));
    CHECK_FALSE(tent_membership(d, xi, 1e-2, pt(0.5, 0.5)));
    // Monte Carlo volume of the tent in frame coordinates
    Halton h(4, 99);
    std::vector<double> le, lv;
    for (double eps : {4e-3, 2e-3, 1e-3, 5e-4}) {
        Tent t = make_tent(d, xi, eps);
        double box = t.box.volume();
        int hit = 0;
        const int N = 20000;
        double u[4];
        for (int i = 0; i < N; ++i) {
            h.point(i, u);
            CVector lam = polydisk_point(2, u);
            for (int k = 0; k < 2; ++k) lam(k) *= t.box.c0 * t.box.frame.radii[k];
            if (d.rho(xi + t.box.frame.vectors * lam) < 0) ++hit;
        }
        le.push_back(std::log(eps));
        lv.push_back(std::log(box * hit / N));
    }
    double slope = (lv.back() - lv.front()) / (le.back() - le.front());
    CHECK(slope == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("tau cost") {
    Domain d = parse_domain("ellipsoid:1,2");
    std::mt19937_64 rng(9);
    auto t0 = std::chrono::steady_clock::now();
    double acc = 0;
    for (int s = 0; s < 2000; ++s) acc += tau(d, pt(0.9, 0.3), random_unit(rng, 2), 1e-3);
    double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count() / 2000;
    MESSAGE("tau evaluation: " << us << " us");
    CHECK(acc > 0);
}
