#include "doctest.h"

#include <Eigen/LU>
#include <cmath>
#include <random>

#include "lcx/error.hpp"
#include "lcx/forms.hpp"

using namespace lcx;

namespace {

Coeffs random_coeffs(std::mt19937_64& rng, int size) {
    std::normal_distribution<double> g;
    Coeffs c(size);
    for (int i = 0; i < size; ++i) c(i) = {g(rng), g(rng)};
    return c;
}

RVector random_real(std::mt19937_64& rng, int size) {
    std::normal_distribution<double> g;
    RVector v(size);
    for (int i = 0; i < size; ++i) v(i) = g(rng);
    return v;
}

CPoint random_point(std::mt19937_64& rng, int n, double s) {
    std::normal_distribution<double> g;
    CPoint z(n);
    for (int j = 0; j < n; ++j) z(j) = {s * g(rng), s * g(rng)};
    return z;
}

}  // namespace

TEST_CASE("basis ordering and sizes") {
    CHECK(form_size(2, 2) == 6);
    CHECK(form_size(3, 3) == 20);
    const auto& m = basis_masks(2, 2);
    // (0,1) (0,2) (0,3) (1,2) (1,3) (2,3)
    std::vector<unsigned> want = {0b0011, 0b0101, 0b1001, 0b0110, 0b1010, 0b1100};
    CHECK(m == want);
    for (int i = 0; i < 6; ++i) CHECK(basis_index(2, 2, m[i]) == i);
    CHECK(kind_size(FormKind::Two, 3) == 15);
    CHECK(parse_kind("(1,1)") == FormKind::OneOne);
    CHECK_THROWS_AS(parse_kind("7"), NumericalError);
}

TEST_CASE("complex and real bases round trip") {
    std::mt19937_64 rng(3);
    for (int n = 1; n <= 3; ++n) {
        for (FormKind k : {FormKind::One, FormKind::ZeroOne, FormKind::OneOne, FormKind::Two}) {
            Coeffs c = random_coeffs(rng, kind_size(k, n));
            Coeffs back = real_to_complex(k, n, complex_to_real(k, n, c));
            CHECK((back - c).norm() < 1e-12 * (1 + c.norm()));
        }
    }
    // dz_0 ^ dzbar_0 = -2i dx ^ dy
    Coeffs c = Coeffs::Zero(1);
    c(0) = 1.0;
    Coeffs r = complex_to_real(FormKind::OneOne, 1, c);
    CHECK(std::abs(r(0) - Complex(0, -2)) < 1e-14);
}

TEST_CASE("pairing of 1-forms agrees with evaluation") {
    std::mt19937_64 rng(5);
    const int n = 2;
    Coeffs c = random_coeffs(rng, 2 * n);
    CVector u(n);
    u << Complex(0.3, -0.2), Complex(1.1, 0.4);
    Coeffs r = complex_to_real(FormKind::One, n, c);
    Complex ev = evaluate(n, 1, r, {to_real<double>(u)});
    CHECK(std::abs(ev - pair(FormKind::One, n, c, u)) < 1e-13);

    // (1,1) pairing by hand
    Coeffs t = random_coeffs(rng, n * n);
    CVector v(n);
    v << Complex(-0.5, 0.1), Complex(0.2, 0.9);
    Complex want = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) want += t(i * n + j) * u(i) * std::conj(v(j));
    CHECK(std::abs(pair(FormKind::OneOne, n, t, u, v) - want) < 1e-13);
}

TEST_CASE("wedge, interior and pullback identities") {
    std::mt19937_64 rng(11);
    const int n = 2;
    Coeffs a = random_coeffs(rng, 4), b = random_coeffs(rng, 4), c2 = random_coeffs(rng, 6);
    CHECK((wedge(n, 1, a, 1, b) + wedge(n, 1, b, 1, a)).norm() < 1e-13);
    CHECK((wedge(n, 1, a, 2, c2) - wedge(n, 2, c2, 1, a)).norm() < 1e-12);

    RVector y = random_real(rng, 4), w = random_real(rng, 4);
    // i_y (a ^ b) = a(y) b - b(y) a
    Coeffs lhs = interior(n, 2, wedge(n, 1, a, 1, b), y);
    Coeffs rhs = interior(n, 1, a, y)(0) * b - interior(n, 1, b, y)(0) * a;
    CHECK((lhs - rhs).norm() < 1e-12);
    // (a ^ b)(y, w) = a(y) b(w) - a(w) b(y)
    Complex ev = evaluate(n, 2, wedge(n, 1, a, 1, b), {y, w});
    Complex want = evaluate(n, 1, a, {y}) * evaluate(n, 1, b, {w}) - evaluate(n, 1, a, {w}) * evaluate(n, 1, b, {y});
    CHECK(std::abs(ev - want) < 1e-12);

    RMatrix J(4, 4);
    for (int i = 0; i < 4; ++i) J.row(i) = random_real(rng, 4).transpose();
    Coeffs pa = pullback(n, 1, a, J), pb = pullback(n, 1, b, J);
    CHECK((pullback(n, 2, wedge(n, 1, a, 1, b), J) - wedge(n, 1, pa, 1, pb)).norm() < 1e-11);
    // top degree pulls back by the determinant
    Coeffs top = Coeffs::Ones(1);
    CHECK(std::abs(pullback(n, 4, top, J)(0) - J.determinant()) < 1e-11);
    // (J^* a)(y) = a(J y)
    CHECK(std::abs(evaluate(n, 1, pa, {y}) - evaluate(n, 1, a, {RVector(J * y)})) < 1e-12);
}

TEST_CASE("exact forms match finite differences and are closed") {
    std::mt19937_64 rng(17);
    const int n = 2;
    CPoint c0 = random_point(rng, n, 0.1);
    Coeffs k = random_coeffs(rng, 4);
    auto pot = [=](const CPoint& z) {
        Jet chi = apply(jet_sqdist(z, c0), std::exp(-jet_sqdist(z, c0).v.real()), -std::exp(-jet_sqdist(z, c0).v.real()));
        std::vector<Jet> eta;
        for (int a = 0; a < 2 * n; ++a) {
            Jet x = jet_coordinate(z, (a + 1) % 4);
            eta.push_back(k(a) * (chi * x * x));
        }
        return eta;
    };
    Support sup;
    sup.center = c0;
    SmoothFormField theta = exact_form(n, 1, pot, sup);
    SmoothFormField eta = potential_form(n, 1, pot, sup);
    for (int t = 0; t < 5; ++t) {
        CPoint z = random_point(rng, n, 0.5);
        Coeffs fd = fd_exterior_derivative(eta.eval, n, 1, z, 1e-5);
        CHECK((fd - theta(z)).norm() < 1e-7 * (1 + theta(z).norm()));
        Coeffs dd = fd_exterior_derivative(theta.eval, n, 2, z, 1e-4);
        CHECK(sup_norm(dd) < 1e-6);
    }
}

TEST_CASE("support and bundles") {
    Support s;
    s.center = CPoint::Zero(2);
    s.radius = 1.0;
    s.hole_center = CPoint::Zero(2);
    s.hole_radius = 0.1;
    CPoint z = CPoint::Zero(2);
    CHECK(!s.may_contain(z));
    z(0) = 0.5;
    CHECK(s.may_contain(z));
    z(0) = 1.5;
    CHECK(!s.may_contain(z));

    SmoothFormField f;
    f.n = 2;
    f.degree = 1;
    f.eval = [](const CPoint& p) { return Coeffs(Coeffs::Constant(4, p(0))); };
    f.support.center = CPoint::Zero(2);
    SmoothFormField g = f;
    g.eval = [](const CPoint& p) { return Coeffs(Coeffs::Constant(4, 2.0 * p(0))); };
    FormBundle b = bundle({f, g});
    Coeffs out[2];
    z(0) = 0.25;
    b.eval(z, out);
    CHECK(std::abs(out[1](3) - 0.5) < 1e-15);
}

TEST_CASE("discrete current algebra") {
    DiscreteCurrent t;
    t.n = 2;
    t.kind = FormKind::One;
    Coeffs c = Coeffs::Zero(4);
    c(0) = Complex(3, 4);
    t.atoms.push_back({CPoint::Zero(2), c});
    CHECK(t.total_mass() == doctest::Approx(5));
    CHECK((2.0 * t + t).total_mass() == doctest::Approx(15));
    DiscreteCurrent u = t;
    u.kind = FormKind::Two;
    CHECK_THROWS_AS(t + u, NumericalError);
}
