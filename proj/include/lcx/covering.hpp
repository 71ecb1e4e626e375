#pragma once

#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "lcx/geometry.hpp"

namespace lcx {

// Hash grid over polydisks. Each polydisk gets an axis-aligned box in the real coordinates of a
// reference unitary frame; boxes are grouped in shape classes with per-axis dyadic cell sizes of at
// least twice the half-widths, so a point query inspects a single cell per class.
class PolydiskIndex {
public:
    explicit PolydiskIndex(double influence = 1.0, CMatrix reference = CMatrix());

    int add(Polydisk p);
    std::size_t size() const { return items_.size(); }
    const Polydisk& operator[](std::size_t i) const { return items_[i]; }
    const std::vector<Polydisk>& items() const { return items_; }
    double influence() const { return influence_; }

    // Indices whose box (times influence) may contain z.
    void candidates(const CPoint& z, std::vector<int>& out) const;
    // Indices j with gauge_j(z) <= g_max (g_max <= influence), with their gauges.
    void query(const CPoint& z, double g_max, std::vector<std::pair<int, double>>& out) const;
    bool covers(const CPoint& z) const;

private:
    struct ShapeClass {
        int levels[kMaxReal];
        double h[kMaxReal];
        std::unordered_map<std::uint64_t, std::vector<int>> cells;
    };
    RVector frame_coords(const CPoint& z) const;
    static std::uint64_t cell_key(const ShapeClass& c, const RVector& x, const int* offset);

    double influence_;
    CMatrix reference_;
    std::vector<Polydisk> items_;
    std::vector<ShapeClass> classes_;
    std::unordered_map<std::uint64_t, int> class_of_;
};

// Uniform multi-level hash grid over weighted points for ball queries.
class PointIndex {
public:
    explicit PointIndex(std::vector<CPoint> points);
    // Indices of points within distance r of c.
    void ball(const CPoint& c, double r, std::vector<int>& out) const;
    const std::vector<CPoint>& points() const { return points_; }

private:
    struct Grid {
        double h = 0;
        std::unordered_map<std::uint64_t, std::vector<int>> cells;
    };
    const Grid& grid_for(int level) const;

    std::vector<CPoint> points_;
    mutable std::unordered_map<int, Grid> grids_;
};

struct CoveringStats {
    std::size_t samples = 0;
    int min_multiplicity = 0;
    int max_multiplicity = 0;
    double mean_multiplicity = 0.0;
};

struct Covering {
    PolydiskIndex index{1.0};
    CoveringStats stats;
};

// Boundary patch B(p, radius) pushed inward over the depth range [depth_min, depth_max].
struct CoveringRegion {
    CPoint p;
    double radius = 0.0;
    double depth_min = 0.0;
    double depth_max = 0.0;
    double spacing = 0.5;  // lattice step as a fraction of the local polydisk radii
};

// Dyadic-in-depth lattice adapted to the local frame radii.
std::vector<CPoint> region_samples(const Domain& d, const CoveringRegion& region);

// Greedy covering by P(Z, delta(Z)); samples are visited in order.
// A reference frame aligned with the boundary at p keeps index boxes tight.
Covering minimal_covering(const Domain& d, const std::vector<CPoint>& samples, std::size_t budget,
                          double influence = 1.0, const FrameOptions& opt = {}, const CMatrix& reference = CMatrix());
Covering minimal_covering(const Domain& d, const CoveringRegion& region, std::size_t budget);

// Unitary frame (normal first) at a boundary point, for index alignment.
CMatrix reference_frame(const Domain& d, const CPoint& p);

// Boundary point reached from p + y along -nu(p), where y is tangent at p.
CPoint boundary_from_tangent(const Domain& d, const CPoint& p, const CVector& nu, const CVector& y);

}  // namespace lcx
