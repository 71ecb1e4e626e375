#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lcx/types.hpp"

namespace lcx {

struct DomainConstants {
    double eta0 = 0.1;
    double c0 = 0.1;
    double delta1 = 0.05;
    double eps0 = 0.05;
};

// Smooth defining function rho with holomorphic gradient (d rho / d z_j).
// Built-in domains are complex ellipsoids sum |z_j|^{2 m_j} - 1 (the ball has all m_j = 1);
// a level shift turns rho into rho + shift.
class Domain {
public:
    using RhoFn = std::function<double(const CVector&)>;
    using GradFn = std::function<CVector(const CVector&)>;

    Domain(std::string name, std::vector<int> exponents, DomainConstants constants = {});
    Domain(std::string name, int dim, int type_m, RhoFn rho, GradFn grad, DomainConstants constants = {});

    double rho(const CVector& z) const {
        if (rho_fn_) return rho_fn_(z) + shift_;
        double s = -1.0 + shift_;
        for (int j = 0; j < dim_; ++j) s += ipow(std::norm(z(j)), exp_[j]);
        return s;
    }
    CVector grad(const CVector& z) const;
    // rho(z + lambda v), the restriction to a complex line.
    double rho_line(const CVector& z, const CVector& v, Complex lambda) const {
        if (rho_fn_) return rho_fn_(z + lambda * v) + shift_;
        double s = -1.0 + shift_;
        const double lr = lambda.real(), li = lambda.imag();
        for (int j = 0; j < dim_; ++j) {
            const double vr = v(j).real(), vi = v(j).imag();
            const double x = z(j).real() + lr * vr - li * vi;
            const double y = z(j).imag() + lr * vi + li * vr;
            s += ipow(x * x + y * y, exp_[j]);
        }
        return s;
    }

    int dim() const { return dim_; }
    int type_m() const { return type_m_; }
    const std::string& name() const { return name_; }
    const std::vector<int>& exponents() const { return exponents_; }
    const DomainConstants& constants() const { return constants_; }
    DomainConstants& constants() { return constants_; }
    double shift() const { return shift_; }

    Domain shifted(double amount) const;

private:
    static double ipow(double x, int k) {
        double r = 1.0;
        while (k > 0) {
            if (k & 1) r *= x;
            x *= x;
            k >>= 1;
        }
        return r;
    }

    std::string name_;
    int exp_[kMaxDim] = {1, 1, 1, 1};
    int dim_;
    int type_m_;
    std::vector<int> exponents_;
    DomainConstants constants_;
    double shift_ = 0.0;
    RhoFn rho_fn_;
    GradFn grad_fn_;
};

// name: "ball" or "ellipsoid"; ball params = {n} (default 2), ellipsoid params = exponents with m_1 = 1.
Domain builtin_domain(const std::string& name, const std::vector<int>& params = {});
// Descriptor "ball", "ball:3", "ellipsoid:1,2".
Domain parse_domain(const std::string& descriptor);

CVector complex_normal(const Domain& d, const CVector& z);

struct BoundaryProjection {
    CPoint foot;
    double distance = 0.0;
    int iterations = 0;
};

BoundaryProjection project_to_boundary_full(const Domain& d, const CPoint& z);
CPoint project_to_boundary(const Domain& d, const CPoint& z);
double boundary_distance(const Domain& d, const CPoint& z);
// First-order estimate -rho / |grad_R rho|.
double boundary_distance_estimate(const Domain& d, const CPoint& z);

// Point at Euclidean distance s along the inward normal from a boundary point.
CPoint inward_point(const Domain& d, const CPoint& boundary_point, double s);

}  // namespace lcx
