#include "lcx/covering.hpp"

#include <algorithm>
#include <cmath>

#include "lcx/error.hpp"

namespace lcx {

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h * 0xff51afd7ed558ccdULL;
}

}  // namespace

PolydiskIndex::PolydiskIndex(double influence, CMatrix reference)
    : influence_(influence), reference_(std::move(reference)) {}

RVector PolydiskIndex::frame_coords(const CPoint& z) const {
    if (reference_.size() == 0) return to_real<double>(z);
    return to_real<double>(CVector(reference_.adjoint() * z));
}

std::uint64_t PolydiskIndex::cell_key(const ShapeClass& c, const RVector& x, const int* offset) {
    std::uint64_t k = 0x1234567ULL;
    for (int a = 0; a < x.size(); ++a) {
        auto cell = static_cast<std::int64_t>(std::floor(x(a) / c.h[a])) + (offset ? offset[a] : 0);
        k = mix(k, static_cast<std::uint64_t>(cell));
    }
    return k;
}

int PolydiskIndex::add(Polydisk p) {
    const int id = static_cast<int>(items_.size());
    const int n = p.frame.dim();
    if (reference_.size() == 0) reference_ = CMatrix::Identity(n, n);
    // half-widths of the dilated polydisk along the reference real axes
    double half[kMaxReal];
    int levels[kMaxReal];
    std::uint64_t ckey = 0x51ULL;
    for (int a = 0; a < 2 * n; ++a) {
        CVector e = reference_.col(a / 2) * (a % 2 == 0 ? Complex(1, 0) : Complex(0, 1));
        half[a] = influence_ * p.extent(e);
        levels[a] = static_cast<int>(std::ceil(std::log2(2.0 * half[a])));
        ckey = mix(ckey, static_cast<std::uint64_t>(levels[a] + 2048));
    }
    auto found = class_of_.find(ckey);
    int ci;
    if (found == class_of_.end()) {
        ShapeClass c;
        for (int a = 0; a < 2 * n; ++a) {
            c.levels[a] = levels[a];
            c.h[a] = std::ldexp(1.0, levels[a]);
        }
        classes_.push_back(std::move(c));
        ci = static_cast<int>(classes_.size()) - 1;
        class_of_[ckey] = ci;
    } else {
        ci = found->second;
    }
    ShapeClass& c = classes_[ci];
    RVector x = frame_coords(p.frame.center);
    int lo[kMaxReal], span[kMaxReal];
    int total = 1;
    for (int a = 0; a < 2 * n; ++a) {
        auto c0 = static_cast<std::int64_t>(std::floor(x(a) / c.h[a]));
        auto c_lo = static_cast<std::int64_t>(std::floor((x(a) - half[a]) / c.h[a]));
        auto c_hi = static_cast<std::int64_t>(std::floor((x(a) + half[a]) / c.h[a]));
        lo[a] = static_cast<int>(c_lo - c0);
        span[a] = static_cast<int>(c_hi - c_lo) + 1;
        total *= span[a];
    }
    int off[kMaxReal];
    for (int idx = 0; idx < total; ++idx) {
        int rem = idx;
        for (int a = 0; a < 2 * n; ++a) {
            off[a] = lo[a] + rem % span[a];
            rem /= span[a];
        }
        c.cells[cell_key(c, x, off)].push_back(id);
    }
    items_.push_back(std::move(p));
    return id;
}

void PolydiskIndex::candidates(const CPoint& z, std::vector<int>& out) const {
    out.clear();
    if (items_.empty()) return;
    RVector x = frame_coords(z);
    for (const auto& c : classes_) {
        auto it = c.cells.find(cell_key(c, x, nullptr));
        if (it != c.cells.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
}

void PolydiskIndex::query(const CPoint& z, double g_max, std::vector<std::pair<int, double>>& out) const {
    out.clear();
    thread_local std::vector<int> cand;
    candidates(z, cand);
    for (int j : cand) {
        double g = items_[j].gauge(z);
        if (g <= g_max) out.emplace_back(j, g);
    }
    std::sort(out.begin(), out.end());
}

bool PolydiskIndex::covers(const CPoint& z) const {
    thread_local std::vector<int> cand;
    candidates(z, cand);
    for (int j : cand)
        if (items_[j].gauge(z) <= 1.0) return true;
    return false;
}

PointIndex::PointIndex(std::vector<CPoint> points) : points_(std::move(points)) {}

const PointIndex::Grid& PointIndex::grid_for(int level) const {
    auto it = grids_.find(level);
    if (it != grids_.end()) return it->second;
    Grid g;
    g.h = std::ldexp(1.0, level);
    for (int i = 0; i < static_cast<int>(points_.size()); ++i) {
        std::uint64_t k = mix(0xabcULL, static_cast<std::uint64_t>(level + 1024));
        for (int j = 0; j < points_[i].size(); ++j) {
            k = mix(k, static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(points_[i](j).real() / g.h))));
            k = mix(k, static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(points_[i](j).imag() / g.h))));
        }
        g.cells[k].push_back(i);
    }
    return grids_.emplace(level, std::move(g)).first->second;
}

void PointIndex::ball(const CPoint& c, double r, std::vector<int>& out) const {
    out.clear();
    if (points_.empty()) return;
    const int n = static_cast<int>(c.size());
    const int level = static_cast<int>(std::ceil(std::log2(2.0 * r)));
    const Grid& g = grid_for(level);
    RVector x = to_real<double>(c);
    std::int64_t lo[kMaxReal], span[kMaxReal];
    int total = 1;
    for (int a = 0; a < 2 * n; ++a) {
        lo[a] = static_cast<std::int64_t>(std::floor((x(a) - r) / g.h));
        span[a] = static_cast<std::int64_t>(std::floor((x(a) + r) / g.h)) - lo[a] + 1;
        total *= static_cast<int>(span[a]);
    }
    const double r2 = r * r;
    for (int idx = 0; idx < total; ++idx) {
        int rem = idx;
        std::uint64_t k = mix(0xabcULL, static_cast<std::uint64_t>(level + 1024));
        for (int a = 0; a < 2 * n; ++a) {
            k = mix(k, static_cast<std::uint64_t>(lo[a] + rem % span[a]));
            rem /= static_cast<int>(span[a]);
        }
        auto it = g.cells.find(k);
        if (it == g.cells.end()) continue;
        for (int i : it->second)
            if ((points_[i] - c).squaredNorm() <= r2) out.push_back(i);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
}

CPoint boundary_from_tangent(const Domain& d, const CPoint& p, const CVector& nu, const CVector& y) {
    CPoint base = p + y;
    // rho(base - s nu) = 0 near s = 0
    double s = 0.0;
    for (int it = 0; it < 100; ++it) {
        CPoint w = base - s * nu;
        double r = d.rho(w);
        double dr = -2.0 * (d.grad(w).cwiseProduct(nu)).sum().real();
        if (std::abs(dr) < 1e-300) fail("distance-iteration-failure", "flat boundary parametrization");
        double ds = -r / dr;
        s += ds;
        if (std::abs(ds) <= 1e-16 * (1.0 + std::abs(s))) break;
    }
    return base - s * nu;
}

CMatrix reference_frame(const Domain& d, const CPoint& p) {
    return extremal_frame(d, p, d.constants().eps0).vectors;
}

std::vector<CPoint> region_samples(const Domain& d, const CoveringRegion& region) {
    if (!(region.depth_min > 0.0) || !(region.depth_max > region.depth_min)) fail("bad-region", "depth range");
    const int n = d.dim();
    const double c0 = d.constants().c0;
    CVector nu = complex_normal(d, region.p);
    std::vector<CPoint> out;
    double top = region.depth_max;
    while (top > region.depth_min * (1 + 1e-12)) {
        double bottom = std::max(0.5 * top, region.depth_min);
        double mid = 0.5 * (top + bottom);
        ExtremalFrame f = extremal_frame(d, inward_point(d, region.p, mid), mid);
        // real directions: normal depth, i*normal, then v_k and i*v_k
        std::vector<CVector> dirs;
        std::vector<double> steps;
        dirs.push_back(Complex(0, 1) * f.vectors.col(0));
        steps.push_back(region.spacing * c0 * f.radii[0]);
        for (int k = 1; k < n; ++k) {
            dirs.push_back(f.vectors.col(k));
            steps.push_back(region.spacing * c0 * f.radii[k]);
            dirs.push_back(Complex(0, 1) * f.vectors.col(k));
            steps.push_back(region.spacing * c0 * f.radii[k]);
        }
        const double dstep = region.spacing * c0 * f.radii[0];
        std::vector<int> counts;
        long total = 1;
        for (double st : steps) {
            counts.push_back(2 * static_cast<int>(std::floor(region.radius / st)) + 1);
            total *= counts.back();
        }
        if (total > 50'000'000) fail("covering-budget-exceeded", "sample lattice too large");
        const int nd = std::max(1, static_cast<int>(std::ceil((top - bottom) / dstep)));
        for (long idx = 0; idx < total; ++idx) {
            long rem = idx;
            CVector y = CVector::Zero(n);
            for (std::size_t a = 0; a < steps.size(); ++a) {
                int c = static_cast<int>(rem % counts[a]) - counts[a] / 2;
                rem /= counts[a];
                y += (c * steps[a]) * dirs[a];
            }
            if (y.norm() > region.radius) continue;
            CPoint b = boundary_from_tangent(d, region.p, nu, y);
            CVector nb = complex_normal(d, b);
            for (int k = 0; k < nd; ++k) {
                double depth = top - (k + 0.5) * (top - bottom) / nd;
                CPoint z = b - depth * nb;
                if ((z - region.p).norm() <= region.radius) out.push_back(z);
            }
        }
        top = bottom;
    }
    return out;
}

Covering minimal_covering(const Domain& d, const std::vector<CPoint>& samples, std::size_t budget, double influence,
                          const FrameOptions& opt, const CMatrix& reference) {
    Covering cov;
    cov.index = PolydiskIndex(influence, reference);
    for (const auto& z : samples) {
        if (cov.index.covers(z)) continue;
        if (cov.index.size() >= budget)
            fail("covering-budget-exceeded", "more than " + std::to_string(budget) + " polydisks");
        double delta = boundary_distance(d, z);
        cov.index.add(polydisk(d, z, delta, 1.0, opt));
    }
    cov.stats.samples = samples.size();
    cov.stats.min_multiplicity = samples.empty() ? 0 : 1 << 30;
    std::vector<std::pair<int, double>> hits;
    double sum = 0;
    for (const auto& z : samples) {
        cov.index.query(z, 1.0, hits);
        int m = static_cast<int>(hits.size());
        cov.stats.min_multiplicity = std::min(cov.stats.min_multiplicity, m);
        cov.stats.max_multiplicity = std::max(cov.stats.max_multiplicity, m);
        sum += m;
    }
    cov.stats.mean_multiplicity = samples.empty() ? 0.0 : sum / samples.size();
    return cov;
}

Covering minimal_covering(const Domain& d, const CoveringRegion& region, std::size_t budget) {
    return minimal_covering(d, region_samples(d, region), budget, 1.0, {}, reference_frame(d, region.p));
}

}  // namespace lcx
