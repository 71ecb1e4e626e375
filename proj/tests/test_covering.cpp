#include "doctest.h"

#include <cmath>

#include "lcx/covering.hpp"
#include "lcx/error.hpp"
#include "lcx/sampling.hpp"

using namespace lcx;

namespace {

CPoint pt(Complex a, Complex b) {
    CPoint z(2);
    z << a, b;
    return z;
}

}  // namespace

TEST_CASE("region inside one polydisk needs one polydisk") {
    Domain d = builtin_domain("ball");
    CPoint z = pt(0.95, 0);
    Polydisk p = polydisk(d, z, boundary_distance(d, z));
    std::vector<CPoint> samples{z};
    for (int k = 0; k < 2; ++k)
        for (double s : {-0.3, 0.3}) samples.push_back(z + s * p.c0 * p.frame.radii[k] * p.frame.vectors.col(k));
    Covering cov = minimal_covering(d, samples, 10);
    CHECK(cov.index.size() == 1);
    CHECK(cov.stats.min_multiplicity == 1);
}

TEST_CASE("index agrees with brute force") {
    Domain d = builtin_domain("ball");
    PolydiskIndex idx(2.0);
    Halton h(5, 3);
    std::vector<Polydisk> all;
    double u[5];
    for (int i = 0; i < 300; ++i) {
        h.point(i, u);
        CPoint xi = unit_sphere_point(2, u);
        double delta = 1e-4 * std::pow(100.0, u[4]);
        all.push_back(polydisk(d, inward_point(d, xi, delta), delta));
        idx.add(all.back());
    }
    std::vector<std::pair<int, double>> hits;
    for (int i = 0; i < 2000; ++i) {
        const Polydisk& p = all[i % all.size()];
        h.point(1000 + i, u);
        CVector lam = polydisk_point(2, u);
        for (int k = 0; k < 2; ++k) lam(k) *= 2.2 * p.c0 * p.frame.radii[k];
        CPoint z = p.frame.center + p.frame.vectors * lam;
        idx.query(z, 2.0, hits);
        int brute = 0;
        for (const auto& q : all) brute += q.gauge(z) <= 2.0;
        CHECK(static_cast<int>(hits.size()) == brute);
    }
}

TEST_CASE("point index ball queries") {
    Halton h(4, 8);
    std::vector<CPoint> pts;
    double u[4];
    for (int i = 0; i < 3000; ++i) {
        h.point(i, u);
        pts.push_back(pt({u[0], u[1]}, {u[2], u[3]}));
    }
    PointIndex idx(pts);
    std::vector<int> out;
    for (double r : {0.01, 0.05, 0.2}) {
        CPoint c = pt({0.4, 0.5}, {0.6, 0.3});
        idx.ball(c, r, out);
        int brute = 0;
        for (const auto& p : pts) brute += (p - c).norm() <= r;
        CHECK(static_cast<int>(out.size()) == brute);
    }
}

TEST_CASE("covering counts grow as the layer gets shallower") {
    Domain d = builtin_domain("ball");
    const double R = 0.04;
    auto layer = [&](double depth) {
        CoveringRegion reg{pt(1, 0), R, depth, 2 * depth, 0.9};
        auto samples = region_samples(d, reg);
        Covering cov = minimal_covering(d, samples, 200000);
        CHECK(cov.stats.min_multiplicity >= 1);
        return static_cast<double>(cov.index.size());
    };
    double shallow = layer(0.01), deep = layer(0.02);
    double ratio = shallow / deep;
    // volume / polydisk-volume oracle: layer volumes by Monte Carlo, polydisks at mid depth
    auto oracle = [&](double depth) {
        Halton h(4, 17);
        double u[4];
        int hit = 0;
        const int N = 200000;
        for (int i = 0; i < N; ++i) {
            h.point(i, u);
            CPoint z = pt(1 + R * (2 * u[0] - 1), R * Complex(2 * u[1] - 1, 0)) + pt(Complex(0, R * (2 * u[2] - 1)), Complex(0, R * (2 * u[3] - 1)));
            double dd = 1 - z.norm();
            hit += (z - pt(1, 0)).norm() <= R && dd >= depth && dd <= 2 * depth;
        }
        double vol = std::pow(2 * R, 4) * hit / N;
        return vol / polydisk(d, pt(1 - 1.5 * depth, 0), 1.5 * depth).volume();
    };
    double expected = oracle(0.01) / oracle(0.02);
    MESSAGE("covering ratio " << ratio << " oracle " << expected);
    CHECK(ratio >= 2.0);
    CHECK(ratio <= 32.0);
    CHECK(ratio / expected > 0.25);
    CHECK(ratio / expected < 4.0);
}

TEST_CASE("covering budget") {
    Domain d = builtin_domain("ball");
    CoveringRegion reg{pt(1, 0), 0.02, 0.0125, 0.025, 0.5};
    try {
        minimal_covering(d, reg, 3);
        FAIL("expected covering-budget-exceeded");
    } catch (const NumericalError& e) {
        CHECK(e.code() == "covering-budget-exceeded");
    }
}
