#include "lcx/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lcx/error.hpp"

namespace lcx {

Domain::Domain(std::string name, std::vector<int> exponents, DomainConstants constants)
    : name_(std::move(name)),
      dim_(static_cast<int>(exponents.size())),
      type_m_(2 * *std::max_element(exponents.begin(), exponents.end())),
      exponents_(std::move(exponents)),
      constants_(constants) {
    if (dim_ < 1 || dim_ > kMaxDim) fail("bad-dimension", "dimension must be in [1, 4]");
    for (int j = 0; j < dim_; ++j) exp_[j] = exponents_[j];
}

Domain::Domain(std::string name, int dim, int type_m, RhoFn rho, GradFn grad, DomainConstants constants)
    : name_(std::move(name)),
      dim_(dim),
      type_m_(type_m),
      constants_(constants),
      rho_fn_(std::move(rho)),
      grad_fn_(std::move(grad)) {
    if (dim_ < 1 || dim_ > kMaxDim) fail("bad-dimension", "dimension must be in [1, 4]");
}

CVector Domain::grad(const CVector& z) const {
    if (grad_fn_) return grad_fn_(z);
    CVector g(dim_);
    for (int j = 0; j < dim_; ++j) {
        int m = exponents_[j];
        g(j) = static_cast<double>(m) * ipow(std::norm(z(j)), m - 1) * std::conj(z(j));
    }
    return g;
}

Domain Domain::shifted(double amount) const {
    Domain d = *this;
    d.shift_ += amount;
    return d;
}

Domain builtin_domain(const std::string& name, const std::vector<int>& params) {
    if (name == "ball") {
        int n = params.empty() ? 2 : params[0];
        if (params.size() > 1 || n < 1 || n > kMaxDim) fail("unknown-domain", "ball takes one dimension parameter in [1,4]");
        return Domain("ball", std::vector<int>(n, 1));
    }
    if (name == "ellipsoid") {
        std::vector<int> m = params.empty() ? std::vector<int>{1, 2} : params;
        if (m[0] != 1 || static_cast<int>(m.size()) > kMaxDim)
            fail("unknown-domain", "ellipsoid exponents need m1 = 1 and at most 4 entries");
        for (int e : m)
            if (e < 1) fail("unknown-domain", "ellipsoid exponents must be positive");
        return Domain("ellipsoid", m);
    }
    fail("unknown-domain", name);
}

Domain parse_domain(const std::string& descriptor) {
    auto colon = descriptor.find(':');
    std::string name = descriptor.substr(0, colon);
    std::vector<int> params;
    if (colon != std::string::npos) {
        std::stringstream ss(descriptor.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                params.push_back(std::stoi(item));
            } catch (const std::exception&) {
                fail("unknown-domain", "bad parameter '" + item + "'");
            }
        }
    }
    return builtin_domain(name, params);
}

CVector complex_normal(const Domain& d, const CVector& z) {
    CVector g = d.grad(z);
    double ng = g.norm();
    if (ng < 1e-14) fail("degenerate-gradient", "gradient vanishes");
    return g.conjugate() / ng;
}

double boundary_distance_estimate(const Domain& d, const CPoint& z) {
    return -d.rho(z) / (2.0 * d.grad(z).norm());
}

namespace {

// Root of s -> rho(z + s n) on s > 0, with rho(z) < 0.
double ray_root(const Domain& d, const CPoint& z, const CVector& n, double guess) {
    auto f = [&](double s) { return d.rho(z + s * n); };
    double lo = 0.0, hi = std::max(guess, 1e-12);
    int expand = 0;
    while (f(hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++expand > 200) fail("distance-iteration-failure", "ray never leaves the domain");
    }
    double s = std::clamp(guess, lo, hi);
    for (int it = 0; it < 200; ++it) {
        double fs = f(s);
        if (fs > 0) hi = s; else lo = s;
        double df = 2.0 * (d.grad(z + s * n).cwiseProduct(n)).sum().real();
        double next = (df > 0) ? s - fs / df : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - s) <= 1e-15 * std::max(1e-300, next) || hi - lo <= 1e-16 * hi) return next;
        s = next;
    }
    return s;
}

}  // namespace

BoundaryProjection project_to_boundary_full(const Domain& d, const CPoint& z) {
    const int max_iter = 200;
    double r0 = d.rho(z);
    if (!(r0 < 0.0)) fail("point-not-interior", "rho(z) >= 0");
    BoundaryProjection out;

    // Damped Newton along the gradient until rho vanishes.
    CPoint w = z;
    double rw = r0;
    int it = 0;
    for (; it < max_iter && std::abs(rw) > 1e-15; ++it) {
        CVector g = d.grad(w);
        double g2 = g.squaredNorm();
        if (g2 < 1e-28) fail("distance-iteration-failure", "degenerate gradient during descent");
        CVector step = -rw * g.conjugate() / (2.0 * g2);
        double alpha = 1.0;
        CPoint cand = w + step;
        double rc = d.rho(cand);
        while (std::abs(rc) > std::abs(rw) && alpha > 1e-8) {
            alpha *= 0.5;
            cand = w + alpha * step;
            rc = d.rho(cand);
        }
        w = cand;
        rw = rc;
    }

    // Refine to the nearest point: w is the foot iff z = w - s n(w).
    double s = (w - z).norm();
    double alpha = 1.0;
    double prev_move = std::numeric_limits<double>::infinity();
    for (; it < max_iter; ++it) {
        CVector n = complex_normal(d, w);
        double snew = ray_root(d, z, n, s);
        CPoint target = z + snew * n;
        CVector move = target - w;
        double mv = move.norm();
        if (mv > prev_move) alpha = std::max(alpha * 0.5, 1.0 / 64);
        prev_move = mv;
        if (alpha < 1.0) {
            CPoint mid = w + alpha * move;
            CVector nm = complex_normal(d, mid);
            // pull back onto the boundary along the normal
            double t = 0.0;
            for (int k = 0; k < 50; ++k) {
                double r = d.rho(mid + t * nm);
                double dr = 2.0 * (d.grad(mid + t * nm).cwiseProduct(nm)).sum().real();
                double dt = -r / dr;
                t += dt;
                if (std::abs(dt) < 1e-17) break;
            }
            target = mid + t * nm;
        }
        w = target;
        s = snew;
        if (mv <= 1e-12 * s + 1e-15 * (1.0 + z.norm())) {
            out.foot = w;
            out.distance = (w - z).norm();
            out.iterations = it + 1;
            return out;
        }
    }
    fail("distance-iteration-failure", "no convergence in 200 iterations");
}

CPoint project_to_boundary(const Domain& d, const CPoint& z) { return project_to_boundary_full(d, z).foot; }

double boundary_distance(const Domain& d, const CPoint& z) { return project_to_boundary_full(d, z).distance; }

CPoint inward_point(const Domain& d, const CPoint& boundary_point, double s) {
    return boundary_point - s * complex_normal(d, boundary_point);
}

}  // namespace lcx
