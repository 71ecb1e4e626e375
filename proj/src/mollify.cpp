#include "lcx/mollify.hpp"

#include <Eigen/QR>
#include <cmath>
#include <cstring>
#include <string>
#include <unordered_set>
#include <memory>
#include <numbers>
#include <random>

#include "lcx/covering.hpp"
#include "lcx/error.hpp"
#include "lcx/sampling.hpp"

namespace lcx {

double Mollifier::profile(double r) const {
    double q = 1.0 - 4.0 * r * r;
    return q > 0.0 ? norm * std::exp(-1.0 / q) : 0.0;
}

double Mollifier::operator()(const CVector& x) const {
    double q = 1.0 - 4.0 * x.squaredNorm() / (eps * eps);
    return q > 0.0 ? scale * std::exp(-1.0 / q) : 0.0;
}

Mollifier make_mollifier(int n, double eps) {
    if (!(eps > 0.0)) fail("bad-scale", "mollifier scale must be positive");
    Mollifier m{n, eps, 1.0};
    // |S^{2n-1}| int_0^{1/2} phi(r) r^{2n-1} dr, composite Gauss over 64 panels
    const GaussRule& g = gauss_legendre(16);
    const int panels = 64;
    double s = 0.0;
    for (int p = 0; p < panels; ++p)
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            double r = 0.5 * (p + g.nodes[i]) / panels;
            s += g.weights[i] * (0.5 / panels) * m.profile(r) * std::pow(r, 2 * n - 1);
        }
    double sphere = 2.0 * std::pow(std::numbers::pi, n) / std::tgamma(n);
    m.norm = 1.0 / (sphere * s);
    m.scale = m.norm / std::pow(eps, 2 * n);
    return m;
}

SmoothFormField mollify_current(const DiscreteCurrent& t, const Mollifier& m,
                                std::function<bool(const CPoint&)> region) {
    struct Data {
        std::unique_ptr<PointIndex> index;
        std::vector<Coeffs> coeffs;
    };
    auto data = std::make_shared<Data>();
    std::vector<CPoint> pts;
    for (const auto& a : t.atoms) {
        pts.push_back(a.z);
        data->coeffs.push_back(complex_to_real(t.kind, t.n, a.c));
    }
    const int degree = kind_degree(t.kind);
    SmoothFormField f;
    f.n = t.n;
    f.degree = degree;
    if (!pts.empty()) {
        CPoint c = CPoint::Zero(t.n);
        for (const auto& p : pts) c += p;
        c /= static_cast<double>(pts.size());
        double r = 0.0;
        for (const auto& p : pts) r = std::max(r, (p - c).norm());
        f.support.center = c;
        f.support.radius = r + m.support_radius();
    } else {
        f.support.center = CPoint::Zero(t.n);
        f.support.radius = 0.0;
    }
    data->index = std::make_unique<PointIndex>(std::move(pts));
    const int size = form_size(t.n, degree);
    f.eval = [data, m, region, size](const CPoint& z) {
        Coeffs out = Coeffs::Zero(size);
        if (region && !region(z)) return out;
        thread_local std::vector<int> near;
        data->index->ball(z, m.support_radius(), near);
        const auto& pts = data->index->points();
        for (int a : near) {
            double w = m(CVector(pts[a] - z));
            if (w != 0.0) out += w * data->coeffs[a];
        }
        return out;
    };
    return f;
}

std::vector<CPoint> mollifier_focus(const DiscreteCurrent& t, const Mollifier& m) {
    const int dims = 2 * t.n;
    const double cell = 0.25 * m.eps / std::sqrt(static_cast<double>(dims));
    std::unordered_set<std::string> seen;
    std::vector<CPoint> out;
    std::string key(dims * sizeof(long long), '\0');
    for (const auto& a : t.atoms) {
        RVector x = to_real<double>(a.z);
        for (int k = 0; k < dims; ++k) {
            long long c = static_cast<long long>(std::floor(x(k) / cell));
            std::memcpy(key.data() + k * sizeof(long long), &c, sizeof c);
        }
        if (seen.insert(key).second) out.push_back(a.z);
    }
    return out;
}

Domain shrunken_domain(const Domain& d, double eps, double C) {
    if (!(eps > 0.0) || !(C > 0.0)) fail("bad-scale", "shrink parameters must be positive");
    if (C * eps >= 0.5 * d.constants().eta0) fail("epsilon-too-large", "C eps must stay below eta0 / 2");
    return d.shifted(C * eps);
}

DiscreteCurrent hyperplane_current(const HyperplanePiece& piece, double spacing, double weight) {
    const int n = static_cast<int>(piece.a.size());
    if (!(spacing > 0.0) || !(piece.radius > 0.0)) fail("bad-scale", "hyperplane lattice");
    CVector nu = piece.nu.normalized();
    Eigen::MatrixXcd a(n, 1);
    a.col(0) = nu;
    Eigen::MatrixXcd q = Eigen::HouseholderQR<Eigen::MatrixXcd>(a).householderQ();
    // (i/2) dl ^ dlbar, dl = sum conj(nu_i) dz_i
    Coeffs c(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) c(i * n + j) = Complex(0, 0.5) * std::conj(nu(i)) * nu(j) * weight;

    DiscreteCurrent t;
    t.n = n;
    t.kind = FormKind::OneOne;
    const int dims = 2 * (n - 1);
    const int k = static_cast<int>(std::ceil(piece.radius / spacing));
    const double w = std::pow(spacing, dims);
    std::vector<int> idx(dims, -k);
    while (true) {
        CVector y = CVector::Zero(n);
        double r2 = 0.0;
        for (int d = 0; d < dims; ++d) {
            double x = idx[d] * spacing;
            r2 += x * x;
            y += (d % 2 == 0 ? Complex(x, 0) : Complex(0, x)) * CVector(q.col(1 + d / 2));
        }
        if (r2 <= piece.radius * piece.radius) t.atoms.push_back({piece.a + y, w * c});
        int d = 0;
        while (d < dims && ++idx[d] > k) idx[d++] = -k;
        if (d == dims) break;
    }
    return t;
}

HyperplanePiece random_piece(const Domain& d, const CPoint& p, double depth, double radius, double tilt,
                             std::uint64_t seed) {
    const int n = d.dim();
    std::mt19937_64 rng(derive_seed(seed, "piece"));
    std::normal_distribution<double> g;
    CVector nu = complex_normal(d, p);
    CVector r(n);
    for (int j = 0; j < n; ++j) r(j) = {g(rng), g(rng)};
    HyperplanePiece piece{inward_point(d, p, depth), (nu + tilt * r.normalized()).normalized(), radius};
    return piece;
}

}  // namespace lcx
