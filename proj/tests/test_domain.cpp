#include "doctest.h"

#include <cmath>
#include <random>

#include "lcx/domain.hpp"
#include "lcx/error.hpp"
#include "lcx/sampling.hpp"

using namespace lcx;

namespace {

CPoint pt(std::initializer_list<Complex> c) {
    CPoint z(static_cast<int>(c.size()));
    int i = 0;
    for (auto v : c) z(i++) = v;
    return z;
}

// Random interior point of the band {-eta <= rho < 0} by radial scaling.
CPoint band_point(const Domain& d, std::mt19937_64& rng, double max_depth) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    CPoint z(d.dim());
    for (int j = 0; j < d.dim(); ++j) z(j) = {g(rng), g(rng)};
    z.normalize();
    // scale to the boundary along the ray, then inward
    double lo = 0, hi = 2;
    for (int it = 0; it < 200; ++it) {
        double m = 0.5 * (lo + hi);
        (d.rho(m * z) < 0 ? lo : hi) = m;
    }
    CPoint b = lo * z;
    return inward_point(d, b, max_depth * (0.01 + 0.99 * u(rng)));
}

// Independent boundary mesh for the ellipsoid |z1|^2 + |z2|^4 = 1.
std::vector<CPoint> ellipsoid_mesh(int na, int nphase) {
    std::vector<CPoint> mesh;
    for (int i = 0; i <= na; ++i) {
        double a = static_cast<double>(i) / na;  // |z1|
        double b = std::pow(1 - a * a, 0.25);     // |z2|
        for (int p = 0; p < nphase; ++p)
            for (int q = 0; q < nphase; ++q)
                mesh.push_back(pt({std::polar(a, 2 * M_PI * p / nphase), std::polar(b, 2 * M_PI * q / nphase)}));
    }
    return mesh;
}

}  // namespace

TEST_CASE("builtin domains report their type") {
    CHECK(builtin_domain("ball").type_m() == 2);
    CHECK(builtin_domain("ball").dim() == 2);
    CHECK(parse_domain("ellipsoid:1,2").type_m() == 4);
    CHECK(parse_domain("ellipsoid:1,3").type_m() == 6);
    CHECK(parse_domain("ball:3").dim() == 3);
    auto d = builtin_domain("ball");
    CHECK(d.constants().eta0 == 0.1);
    CHECK(d.constants().c0 == 0.1);
    CHECK(d.constants().delta1 == 0.05);
    CHECK(d.constants().eps0 == 0.05);
    try {
        parse_domain("torus");
        FAIL("expected unknown-domain");
    } catch (const NumericalError& e) {
        CHECK(e.code() == "unknown-domain");
    }
}

TEST_CASE("gradient matches finite differences of rho") {
    std::mt19937_64 rng(7);
    for (auto name : {"ball", "ellipsoid:1,2", "ellipsoid:1,3"}) {
        Domain d = parse_domain(name);
        for (int s = 0; s < 50; ++s) {
            CPoint z = band_point(d, rng, 0.1);
            CVector g = d.grad(z);
            for (int j = 0; j < d.dim(); ++j) {
                const double h = 1e-6;
                CPoint e = CPoint::Zero(d.dim());
                e(j) = 1.0;
                double dx = (d.rho(z + h * e) - d.rho(z - h * e)) / (2 * h);
                double dy = (d.rho(z + Complex(0, h) * e) - d.rho(z - Complex(0, h) * e)) / (2 * h);
                Complex fd = 0.5 * Complex(dx, -dy);  // Wirtinger d/dz
                CHECK(std::abs(fd - g(j)) <= 1e-6 * std::max(1.0, std::abs(g(j))));
            }
        }
    }
}

TEST_CASE("complex normal") {
    Domain ball = builtin_domain("ball");
    CVector n = complex_normal(ball, pt({0.7, 0}));
    CHECK(std::abs(n(0) - 1.0) < 1e-15);
    CHECK(std::abs(n(1)) < 1e-15);

    Domain ell = parse_domain("ellipsoid:1,2");
    n = complex_normal(ell, pt({0, 0.8}));
    CHECK(std::abs(n(0)) < 1e-15);
    CHECK(std::abs(n(1) - 1.0) < 1e-15);

    std::mt19937_64 rng(11);
    for (int s = 0; s < 100; ++s) {
        CPoint z = band_point(ell, rng, 0.1);
        CVector u = complex_normal(ell, z);
        CHECK(std::abs(u.norm() - 1.0) < 1e-12);
        // normalized finite-difference real gradient
        CVector fd(2);
        const double h = 1e-7;
        for (int a = 0; a < 4; ++a) {
            CVector e = real_axis(2, a);
            double der = (ell.rho(z + h * e) - ell.rho(z - h * e)) / (2 * h);
            fd(a / 2) += (a % 2 == 0 ? Complex(der, 0) : Complex(0, der));
        }
        fd.normalize();
        CHECK((fd - u).norm() < 1e-5);
    }
}

TEST_CASE("boundary distance on the ball") {
    Domain ball = builtin_domain("ball");
    CHECK(boundary_distance(ball, pt({0.5, 0})) == doctest::Approx(0.5).epsilon(1e-12));
    CPoint foot = project_to_boundary(ball, pt({0.5, 0}));
    CHECK((foot - pt({1.0, 0})).norm() < 1e-12);
    try {
        boundary_distance(ball, pt({1.5, 0}));
        FAIL("expected point-not-interior");
    } catch (const NumericalError& e) {
        CHECK(e.code() == "point-not-interior");
    }
}

TEST_CASE("normal offsets give their own distance") {
    std::mt19937_64 rng(3);
    for (auto name : {"ball", "ellipsoid:1,2"}) {
        Domain d = parse_domain(name);
        for (int s = 0; s < 20; ++s) {
            CPoint z = band_point(d, rng, 0.05);
            CPoint Z = project_to_boundary(d, z);
            CPoint w = inward_point(d, Z, 1e-3);
            CHECK(std::abs(boundary_distance(d, w) - 1e-3) < 1e-9);
        }
    }
}

TEST_CASE("ellipsoid distance matches a dense boundary mesh") {
    Domain d = parse_domain("ellipsoid:1,2");
    // Frozen from the mesh minimum below: nearest point (1,0).
    const double frozen = 0.1;
    auto mesh = ellipsoid_mesh(40000, 1);
    CPoint z = pt({0.9, 0});
    double best = 1e9;
    for (const auto& w : mesh) best = std::min(best, (w - z).norm());
    CHECK(std::abs(best - frozen) < 1e-9);
    CHECK(std::abs(boundary_distance(d, z) - frozen) < 1e-6);

    CPoint z2 = pt({0, 0.5});
    double best2 = 1e9;
    CPoint arg;
    for (const auto& w : ellipsoid_mesh(4000, 16)) {
        double r = (w - z2).norm();
        if (r < best2) best2 = r, arg = w;
    }
    CPoint Z = project_to_boundary(d, z2);
    CHECK((Z - arg).norm() < 1e-3);
    CHECK(std::abs(boundary_distance(d, z2) - best2) < 1e-6);
}

TEST_CASE("projection lands on the boundary and is a minimum") {
    std::mt19937_64 rng(5);
    for (auto name : {"ball", "ellipsoid:1,2"}) {
        Domain d = parse_domain(name);
        auto mesh = ellipsoid_mesh(200, 8);
        for (int s = 0; s < 100; ++s) {
            CPoint z = band_point(d, rng, 0.1);
            auto proj = project_to_boundary_full(d, z);
            CHECK(std::abs(d.rho(proj.foot)) < 1e-10);
            if (std::string(name) == "ellipsoid:1,2") {
                for (int k = 0; k < 1000; ++k) CHECK(proj.distance <= (mesh[(k * 7919) % mesh.size()] - z).norm() + 1e-12);
            }
        }
    }
}

TEST_CASE("distance and -rho are comparable on the ball") {
    Domain ball = builtin_domain("ball");
    double lo = 1e9, hi = 0;
    for (int i = 1; i <= 100; ++i) {
        double delta = 0.1 * i / 100.0;
        CPoint z = pt({1.0 - delta, 0});
        double ratio = boundary_distance(ball, z) / (-ball.rho(z));
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    CHECK(hi / lo <= 2.01);
    CHECK(boundary_distance_estimate(ball, pt({0.99, 0})) == doctest::Approx(0.0199 / 1.98));
}
