#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "lcx/covering.hpp"
#include "lcx/domain.hpp"
#include "lcx/error.hpp"
#include "lcx/forms.hpp"
#include "lcx/geometry.hpp"

namespace lcx {

// Chart around a boundary point. Chart coordinates put A_p at the origin: ambient = z + a.
struct LocalChart {
    Domain domain;
    CPoint p;
    CPoint a;
    double r1 = 0.0, r2 = 0.0, eta1 = 0.0;
    double depth_a = 0.0;  // delta(A_p)

    // Rejects radii outside delta1 > r1 > 4 r2 > 8 eta1 and a point a outside B(p, r1).
    LocalChart(Domain d, CPoint p, CPoint a, double r1, double r2, double eta1);

    CPoint ambient(const CPoint& z) const { return z + a; }
    CPoint chart(const CPoint& w) const { return w - a; }
    double rho(const CPoint& z) const { return domain.rho(ambient(z)); }
    double delta(const CPoint& z) const { return boundary_distance(domain, ambient(z)); }
    bool in_V(const CPoint& z) const;
    bool in_W(const CPoint& z) const;
    int dim() const { return domain.dim(); }
};

struct ChartAudit {
    double max_depth_ratio = 0.0;   // sup delta / delta1 over V samples
    double a_depth = 0.0;
    double containment_margin = 0.0;  // 2 r2 - sup |w - p| over P(zeta, eta1) extents
    double min_cosine = 0.0;          // transversality
    int rounds = 0;
    bool ok() const { return max_depth_ratio < 1.0 && containment_margin > 0.0 && min_cosine >= 0.5; }
};

ChartAudit audit_chart(const LocalChart& chart, int samples = 200, std::uint64_t seed = 1);

// r1 = delta1/2, r2 = r1/8, eta1 = r2/4, A_p on the inward normal; r2 and eta1 halve until the audit passes.
LocalChart build_local_chart(const Domain& d, const CPoint& p, ChartAudit* audit = nullptr);

// Covering bumps Phi_j along the segments [0, z] for the target points, dyadic psi_k and the cutoff phi.
struct PartitionOptions {
    double path_step = 0.4;    // path sample spacing in units of c0 tau along the path
    std::size_t budget = 400000;
    int k_max = 20;
    double spread = 4.0;       // bump j is 1 on P_j and vanishes outside spread * P_j
};

struct PartitionTerm {
    int j = 0;
    double value = 0.0;
    RVector grad;  // real gradient in chart coordinates
};

class PartitionSystem {
public:
    PartitionSystem(const LocalChart& chart, const std::vector<CPoint>& targets, const PartitionOptions& opt = {});

    // Phi_j(w) != 0 terms; throws "covering-gap" where no bump is positive.
    void evaluate(const CPoint& w, std::vector<PartitionTerm>& out, bool gradients) const;
    bool covers(const CPoint& w) const;

    // Dyadic partition in s in (0, 1]: psi_k supported in (2^{-k-1}, 2^{-k+1}), psi_{k_min} = 1 above 2^{-k_min},
    // sum = 1 on [2^{-k_max}, 1].
    double psi(int k, double s) const;
    double psi_derivative(int k, double s) const;
    static double phi_cut(double x);
    static double phi_cut_derivative(double x);

    int k_min() const { return k_min_; }
    int k_max() const { return k_max_; }
    std::size_t size() const { return index_.size(); }
    const Polydisk& polydisk(int j) const { return index_[j]; }
    CPoint center(int j) const { return index_[j].frame.center - a_; }  // chart coordinates
    double depth(int j) const { return depth_[j]; }
    // tau_i(Z_j, 2^{-k}) e_i(Z_j, 2^{-k}) as columns; cached.
    const CMatrix& scaled_frame(int j, int k) const;
    // tau_i(Z_j, delta_j) e_i(Z_j, delta_j) / delta_j.
    const CMatrix& own_frame(int j) const { return own_[j]; }
    const Domain& domain() const { return domain_; }
    const CPoint& anchor() const { return a_; }

private:
    Domain domain_;
    CPoint a_;
    PolydiskIndex index_{2.0};
    std::vector<double> depth_;
    std::vector<CMatrix> own_;
    int k_min_ = 0, k_max_ = 20;
    double spread_ = 4.0;
    mutable std::vector<std::vector<std::unique_ptr<CMatrix>>> cache_;
};

std::vector<CPoint> path_samples(const LocalChart& chart, const CPoint& z, double step);
// grid plus the Gauss nodes of the straight-line segments used by cutoff_solve.
std::vector<CPoint> segment_targets(const LocalChart& chart, const std::vector<CPoint>& grid, int n_s = 12);

struct HomotopyConfig {
    double c = 0.0;            // 0: select by the containment audit
    double t0 = 0.5;
    double t1 = 1.0;
    int n_lambda = 4096;
    int n_t = 64;
    int group = 256;           // Lambda samples sharing one shifted t-rule
    double fd_step = 1e-5;     // relative to the local scale
    double stderr_cap = 0.0;   // 0: no cap
    int n_s = 12;              // Gauss nodes of the straight-line homotopy
    int q_samples = 48;        // accepted samples per Q(t,z) average
    std::uint64_t seed = 1;
};

// Warp h_Lambda(t,z) = t z + B(t,z) Lambda with derivatives; B is linear in c.
struct WarpJet {
    CMatrix B;
    CMatrix Bt;
    CMatrix Bx[kMaxReal];
    double bound = 0.0;  // sum_i |B_i|
};

// Dyadic time s = delta(A_p) (1 - t).
inline double dyadic_time(const LocalChart& chart, double t) { return chart.depth_a * (1.0 - t); }

WarpJet warp_jet(const LocalChart& chart, const PartitionSystem& parts, double c, double t, const CPoint& z,
                 bool derivatives = true);

CPoint h_lambda(const LocalChart& chart, const PartitionSystem& parts, const HomotopyConfig& cfg, const CVector& lambda,
                double t, const CPoint& z);
// Finite differences with steps fd_step (t) and fd_step * delta(z) (z), one-sided at t in {0, 1}.
CVector h_velocity(const LocalChart& chart, const PartitionSystem& parts, const HomotopyConfig& cfg,
                   const CVector& lambda, double t, const CPoint& z);
CVector h_direction_derivative(const LocalChart& chart, const PartitionSystem& parts, const HomotopyConfig& cfg,
                               const CVector& lambda, double t, const CPoint& z, const CVector& v);

// Q(t,z): B(tz, s) if s >= -rho(z), else (s / -rho(z)) B(tz, -rho(z)), s the dyadic time.
bool in_Q(const LocalChart& chart, double t, const CPoint& z, const CPoint& w);

struct ContainmentAudit {
    double c = 0.0;
    int q = 0;
    int samples = 0;
    std::vector<std::pair<double, int>> violations;  // (c, count) for every tried c
};

// Violation counts of Q_1 subset Q for c = 2^{-q}, indexed by q (entry 0 unused).
std::vector<int> containment_audit(const LocalChart& chart, const PartitionSystem& parts,
                                   const std::vector<CPoint>& targets, int samples, std::uint64_t seed, int q_max);
// Largest 2^{-q} with no Q_1 subset Q violation over the samples.
ContainmentAudit select_c(const LocalChart& chart, const PartitionSystem& parts, const std::vector<CPoint>& targets,
                          int samples = 1000, std::uint64_t seed = 1, int q_max = 12);

// [t0, t1] where tz (z in B(center, spread)) can meet the support, widened by margin.
std::pair<double, double> t_range(const Support& support, const CPoint& center, double spread, double warp,
                                  double margin = 0.05);

struct HomotopyEstimate {
    std::vector<Coeffs> values;  // real-basis (p-1)-forms, one per bundle member
    std::vector<double> stderr_;
    int n_lambda = 0;
    int n_t = 0;
};

class McBudgetExceeded : public NumericalError {
public:
    McBudgetExceeded(HomotopyEstimate partial, double stderr_value);
    const HomotopyEstimate& partial() const { return partial_; }

private:
    HomotopyEstimate partial_;
};

// Bundle of the same degree p >= 1; H maps to degree p - 1.
HomotopyEstimate homotopy_bundle(const LocalChart& chart, const PartitionSystem& parts, const HomotopyConfig& cfg,
                                 const FormBundle& theta, const CPoint& z);
// H(theta)(z)(v); v is ignored for degree one.
Complex homotopy_apply(const LocalChart& chart, const PartitionSystem& parts, const HomotopyConfig& cfg,
                       const SmoothFormField& theta, const CPoint& z, const CVector& v = CVector(),
                       double* stderr_out = nullptr);
// z -> H(theta)(z) as a field.
SmoothFormField homotopy_field(std::shared_ptr<const LocalChart> chart, std::shared_ptr<const PartitionSystem> parts,
                               HomotopyConfig cfg, SmoothFormField theta);

// psi(z) = S(|z|/R - 1): 0 on B(0,R), 1 outside B(0,2R).
double radial_cutoff(const CPoint& z, double R);
RVector radial_cutoff_gradient(const CPoint& z, double R);

// Straight-line homotopy from c of a closed p-form (p = 1, 2), n_s Gauss nodes.
Coeffs straight_line_homotopy(const SmoothFormField& beta, const CPoint& c, const CPoint& x, int n_s);

struct CutoffSolution {
    SmoothFormField w;       // H(psi T) + tau
    SmoothFormField h_part;  // H(psi T)
    SmoothFormField beta;    // H(dpsi ^ T)
    SmoothFormField tau;
    CPoint center;           // base point of tau
    double R = 0.0;
    double closedness = 0.0;
    std::function<double(const CPoint&)> h_stderr;  // MC standard error of H(psi T) at a point
};

// T closed of degree 2 in chart coordinates. R <= 0 picks r2/4.
CutoffSolution cutoff_solve(std::shared_ptr<const LocalChart> chart, std::shared_ptr<const PartitionSystem> parts,
                            const HomotopyConfig& cfg, const SmoothFormField& T, double R = 0.0,
                            double closed_tol = 1e-3);

// Several nonnegative scalar fields at once.
using ScalarBundle = std::function<void(const CPoint&, double*)>;

std::vector<double> averaging_T(const LocalChart& chart, const HomotopyConfig& cfg, const ScalarBundle& f, int count,
                                const CPoint& z);
double averaging_T(const LocalChart& chart, const HomotopyConfig& cfg, const std::function<double(const CPoint&)>& f,
                   const CPoint& z);

struct ResidualReport {
    double max = 0.0;
    double mean = 0.0;
    double mc_stderr = 0.0;
    double scale = 1.0;  // sup |theta| on the grid; residuals are divided by it
    int points = 0;
    int n_lambda = 0;
    int n_t = 0;
    std::vector<double> per_point;
};

// |d H(theta) + H(d theta) - theta| on the grid, d by central differences with step fd_rel * delta(z).
// dtheta may be empty for closed theta.
std::vector<ResidualReport> verify_homotopy_identity(const LocalChart& chart, const PartitionSystem& parts,
                                                     const HomotopyConfig& cfg, const FormBundle& theta,
                                                     const FormBundle* dtheta, const std::vector<CPoint>& grid,
                                                     double fd_rel = 1e-3);

// 20^{n-1} boundary points of B(p, 0.8 r2) times per_axis depths log-spaced in [eta1/8, 0.9 eta1], chart coordinates.
std::vector<CPoint> w_grid(const LocalChart& chart, int per_axis = 20, std::uint64_t seed = 1);

// Closed test forms d(chi eta_m) with chi a bump on B(center, radius) and affine random eta_m, scaled so that
// sup |theta| over the probe points is 1 for each member. Degree 1 (eta scalar) or 2.
FormBundle closed_test_forms(int n, int degree, const CPoint& center, double radius, int count, std::uint64_t seed,
                             const std::vector<CPoint>& probes);
// The potentials chi eta_m (degree - 1) with the same scaling.
FormBundle test_potentials(int n, int degree, const CPoint& center, double radius, int count, std::uint64_t seed,
                           const std::vector<CPoint>& probes);

}  // namespace lcx
