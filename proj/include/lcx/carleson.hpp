#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lcx/domain.hpp"
#include "lcx/forms.hpp"
#include "lcx/geometry.hpp"

namespace lcx {

// Boundary point on the ray from the origin in direction u (built-in domains are star-shaped about 0).
CPoint boundary_ray_point(const Domain& d, const CVector& u);
// Quasi-uniform boundary sample set.
std::vector<CPoint> boundary_grid(const Domain& d, int count, std::uint64_t seed);
// Boundary points within Euclidean distance radius of the boundary point p.
std::vector<CPoint> boundary_patch_grid(const Domain& d, const CPoint& p, double radius, int count,
                                        std::uint64_t seed);
// hi, hi/2, hi/4, ... while above lo, at most count entries.
std::vector<double> dyadic_scales(double lo, double hi, int count);

// Weighted sample of P_eps(xi) on the boundary: sum of weights = surface measure.
struct SurfacePatch {
    std::vector<CPoint> points;
    std::vector<double> weights;
    double measure = 0.0;
};

SurfacePatch surface_patch(const Domain& d, const Tent& tent, int samples, std::uint64_t seed);
double surface_patch_measure(const Domain& d, const CPoint& xi, double eps, int samples = 10000,
                             std::uint64_t seed = 1);

struct CarlesonGrid {
    std::vector<CPoint> boundary;
    std::vector<double> scales;
    int surface_samples = 4000;
    int tent_samples = 512;  // MC points per tent for smooth densities
    std::uint64_t seed = 1;
};

// Boundary grid of the given size with dyadic scales down from eps0.
CarlesonGrid default_grid(const Domain& d, int boundary_samples, int scale_count = 6, std::uint64_t seed = 1);
// Same with scales restricted to (s, eps0].
CarlesonGrid s_grid(const Domain& d, double s, int boundary_samples, int scale_count = 6, std::uint64_t seed = 1);

struct TentRatio {
    CPoint xi;
    double eps = 0.0;
    double mass = 0.0;
    double area = 0.0;
    double ratio = 0.0;
};

struct CarlesonReport {
    double norm_value = 0.0;
    CPoint witness_point;
    double witness_scale = 0.0;
    double max_ratio = 0.0;
    double total_mass = 0.0;
    std::vector<TentRatio> per_tent;
    std::string label;  // frame pair or density used
};

// Tents of a grid with lazily computed boundary areas; reusable across inputs.
class TentSet {
public:
    TentSet(const Domain& d, CarlesonGrid grid);
    std::size_t size() const { return tents_.size(); }
    const Tent& tent(std::size_t i) const { return tents_[i]; }
    double area(std::size_t i) const;
    const CarlesonGrid& grid() const { return grid_; }
    const Domain& domain() const { return domain_; }

private:
    Domain domain_;
    CarlesonGrid grid_;
    std::vector<Tent> tents_;
    mutable std::vector<double> area_;
};

// Report from a weighted point cloud (nonnegative weights).
CarlesonReport carleson_from_weights(const TentSet& tents, const std::vector<CPoint>& points,
                                     const std::vector<double>& weights);
// Report from a nonnegative density integrated over tents by QMC; total_mass supplied by the caller.
// Tents whose box cannot meet the support ball are skipped.
CarlesonReport carleson_from_density(const TentSet& tents, const std::function<double(const CPoint&)>& density,
                                     double total_mass, const Support& support = {});

// Measures are Scalar-kind currents; |mu| uses the coefficient moduli.
CarlesonReport carleson_norm_measure(const Domain& d, const DiscreteCurrent& mu, const CarlesonGrid& grid);
CarlesonReport carleson_norm_measure(const TentSet& tents, const DiscreteCurrent& mu);
CarlesonReport s_carleson_norm_measure(const Domain& d, const DiscreteCurrent& mu, double s,
                                       int boundary_samples = 64, int scale_count = 6, std::uint64_t seed = 1);

struct KNormOptions {
    enum class Method { Sphere, Frame } method = Method::Sphere;
    int directions = 500;
    bool refine = true;
    std::uint64_t seed = 7;
};

// sup |T(v1, v2)| / (k(v1) k(v2)) (two-vector kinds) or sup |T(v)| / k(v); coefficients in the complex basis.
double pointwise_k_norm(const Domain& d, FormKind kind, const Coeffs& c, const CPoint& zeta,
                        const KNormOptions& opt = {});
double pointwise_k_norm(const Domain& d, const SmoothFormField& form, const CPoint& zeta,
                        const KNormOptions& opt = {});

// Complex kind used to read a real-basis field of the given degree.
FormKind field_kind(int degree);

struct CurrentNormOptions {
    KNormOptions knorm{KNormOptions::Method::Frame};
    int mass_samples = 20000;  // QMC samples for the total mass of a smooth form
    // Optional mixture proposal, uniform on balls of focus_radius around these points; tent masses then
    // come from the weighted cloud instead of per-tent QMC.
    std::vector<CPoint> focus;
    double focus_radius = 0.0;
};

CarlesonReport carleson_norm_current(const TentSet& tents, const DiscreteCurrent& t);
CarlesonReport carleson_norm_current(const TentSet& tents, const SmoothFormField& t,
                                     const CurrentNormOptions& opt = {});

// Density of the smooth norm: delta * |T|_k for degree two, |T|_k for degree one.
double current_density(const Domain& d, const SmoothFormField& t, const CPoint& z, const KNormOptions& opt);

// Integral of a density over support ball cap domain by QMC.
double smooth_total_mass(const Domain& d, const Support& support, const std::function<double(const CPoint&)>& f,
                         int samples, std::uint64_t seed);
// Importance-weighted cloud from the focus-ball mixture proposal; f must vanish off the union of balls.
// Sum of weights estimates the integral of f over the domain.
void focused_cloud(const Domain& d, const std::vector<CPoint>& focus, double radius,
                   const std::function<double(const CPoint&)>& f, int samples, std::uint64_t seed,
                   std::vector<CPoint>& points, std::vector<double>& weights);

struct BmoOptions {
    bool normalized = false;  // divide each oscillation integral by the patch area
};

double bmo_s_norm(const TentSet& tents, const std::function<double(const CPoint&)>& f,
                  const BmoOptions& opt = {});

}  // namespace lcx
