#pragma once

#include <vector>

#include "lcx/domain.hpp"
#include "lcx/types.hpp"

namespace lcx {

struct TauOptions {
    int angles = 64;          // coarse angular samples on each circle
    int fine_angles = 256;    // used when two local maxima compete
    int radial_samples = 0;   // extra radii per ray for non-monotone slices
    double rel_tol = 1e-7;    // on the radius
};

// Largest c with max_{|lambda|<c} rho(zeta + lambda v) - rho(zeta) < eps.
double tau(const Domain& d, const CPoint& zeta, const CVector& v, double eps, const TauOptions& opt = {});

// max_{|lambda| <= c} rho(zeta + lambda v) - rho(zeta); the inverse of tau in eps.
double disk_increment(const Domain& d, const CPoint& zeta, const CVector& v, double c, const TauOptions& opt = {});

struct ExtremalFrame {
    CPoint center;
    double scale = 0.0;
    CMatrix vectors;          // columns v_1 .. v_n
    std::vector<double> radii;

    int dim() const { return static_cast<int>(center.size()); }
    CVector coords(const CPoint& z) const { return vectors.adjoint() * (z - center); }
};

struct FrameOptions {
    TauOptions tau;
    int sphere_samples = 200;
    double refine_tol = 1e-4;
};

ExtremalFrame extremal_frame(const Domain& d, const CPoint& zeta, double eps, const FrameOptions& opt = {});

struct Polydisk {
    ExtremalFrame frame;
    double dilation = 1.0;
    double c0 = 0.1;

    // max_k |lambda_k| / (c0 A tau_k); membership iff <= 1.
    double gauge(const CPoint& z) const;
    bool contains(const CPoint& z) const { return gauge(z) <= 1.0; }
    // Euclidean radius of a ball containing the polydisk.
    double bounding_radius() const;
    // Half-width of the polydisk along the unit real direction e (a support function).
    double extent(const CVector& e) const;
    double volume() const;
};

Polydisk polydisk(const Domain& d, const CPoint& zeta, double eps, double dilation = 1.0, const FrameOptions& opt = {});
Polydisk polydisk_from_frame(const Domain& d, ExtremalFrame frame, double dilation = 1.0);

// Pseudo-ball B_eps(zeta): |z - zeta| < A c0 tau(zeta, u, eps), u = (z - zeta)/|z - zeta|.
bool pseudo_ball_contains(const Domain& d, const CPoint& zeta, double eps, const CPoint& z, double dilation = 1.0);

struct DistanceOptions {
    double eps_min = 1e-12;
    double eps_max = 1.0;
    double rel_tol = 1e-3;
    FrameOptions frame;
};

double pseudo_distance_d1(const Domain& d, const CPoint& zeta, const CPoint& z, const DistanceOptions& opt = {});
double pseudo_distance_d(const Domain& d, const CPoint& zeta, const CPoint& z, const DistanceOptions& opt = {});

double k_weight(const Domain& d, const CPoint& z, const CVector& u);
// Same weight with a known boundary distance.
double k_weight(const Domain& d, const CPoint& z, const CVector& u, double delta);

// Tent P_eps(xi) intersected with the domain.
struct Tent {
    CPoint xi;
    double eps = 0.0;
    Polydisk box;
    bool contains(const Domain& d, const CPoint& z) const { return box.contains(z) && d.rho(z) < 0.0; }
};

Tent make_tent(const Domain& d, const CPoint& xi, double eps);
bool tent_membership(const Domain& d, const CPoint& xi, double eps, const CPoint& z);

}  // namespace lcx
