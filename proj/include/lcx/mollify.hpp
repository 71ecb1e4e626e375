#pragma once

#include <cstdint>
#include <functional>

#include "lcx/domain.hpp"
#include "lcx/forms.hpp"

namespace lcx {

// phi_eps(x) = eps^{-2n} phi(x / eps), phi = C exp(-1 / (1 - 4|x|^2)) on |x| < 1/2, unit integral on R^{2n}.
struct Mollifier {
    int n = 2;
    double eps = 0.0;
    double norm = 1.0;  // C
    double scale = 1.0; // C eps^{-2n}

    double profile(double r) const;  // phi at |x| = r
    double operator()(const CVector& x) const;
    double support_radius() const { return 0.5 * eps; }
};

Mollifier make_mollifier(int n, double eps);

// Atom sums z -> sum phi_eps(z_a - z) c_a in the real basis; zero where region(z) is false.
SmoothFormField mollify_current(const DiscreteCurrent& t, const Mollifier& m,
                                std::function<bool(const CPoint&)> region = {});

// Thinned atom positions such that balls of radius focus_radius(m) around them cover the support of the
// mollified current (one point per grid cell of diameter eps/4).
std::vector<CPoint> mollifier_focus(const DiscreteCurrent& t, const Mollifier& m);
inline double focus_radius(const Mollifier& m) { return 0.75 * m.eps; }

// rho + C eps.
Domain shrunken_domain(const Domain& d, double eps, double C = 4.0);

// Piece {a + y : y orthogonal to nu, |y| <= radius} of a complex hyperplane.
struct HyperplanePiece {
    CPoint a;
    CVector nu;
    double radius = 0.0;
};

// Lattice discretization of the integration current (i/2) delta_H dl ^ dlbar, l(z) = <z - a, nu>,
// atoms spaced by `spacing` with weight spacing^{2(n-1)}. Closed away from the rim after mollification.
DiscreteCurrent hyperplane_current(const HyperplanePiece& piece, double spacing, double weight = 1.0);

// Piece through the point at the given depth below p, normal tilted randomly away from the complex normal.
HyperplanePiece random_piece(const Domain& d, const CPoint& p, double depth, double radius, double tilt,
                             std::uint64_t seed);

}  // namespace lcx
