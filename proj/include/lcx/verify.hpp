#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lcx/domain.hpp"
#include "lcx/homotopy.hpp"

namespace lcx {

struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;  // the measured quantity compared against the bound
    double bound = 0.0;
    std::string detail;
};

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct SuiteReport {
    std::string suite;
    std::vector<Check> checks;
    std::vector<Table> tables;
    bool pass() const;
};

enum class Budget { Small, Default, Large };
Budget parse_budget(const std::string& name);
std::string budget_name(Budget b);

// Geometry. Domains without a closed form for tau are skipped by the oracle check.
Check check_tau_oracle(const Domain& d);
Check check_scaling_law(const std::vector<Domain>& domains, int samples, std::uint64_t seed, Table* table = nullptr);
Check check_directional_decomposition(const std::vector<Domain>& domains, int samples, std::uint64_t seed,
                                      Table* table = nullptr);
Check check_pseudo_distance(const Domain& d, int pairs, int triples, std::uint64_t seed, Table* table = nullptr);
Check check_frame_stability(const Domain& d, int samples, std::uint64_t seed);
Check check_ball_equivalence(const Domain& d, int samples, std::uint64_t seed);

// Carleson norms on the ball.
Check check_dirac_norm(int boundary_samples);
Check check_bmo(std::uint64_t seed);
Check check_norm_homogeneity(std::uint64_t seed);

// Mollification of closed hyperplane currents near random boundary points.
Check check_mollify_bounds(int currents, std::uint64_t seed, Table* table = nullptr);
Check check_mollify_global(int currents, std::uint64_t seed);

struct HomotopySetup {
    std::shared_ptr<LocalChart> chart;
    std::shared_ptr<PartitionSystem> parts;
    std::vector<CPoint> grid;
    HomotopyConfig cfg;
    ContainmentAudit audit;
};

// Chart at p, W grid with per_axis^(n-1) x per_axis points, partition along the segments, c from the audit.
HomotopySetup make_homotopy_setup(const Domain& d, const CPoint& p, int per_axis, std::uint64_t seed,
                                  int audit_samples = 1000);

Check check_endpoints(const HomotopySetup& s, int samples, std::uint64_t seed);
Check check_containment(const HomotopySetup& s, int samples, std::uint64_t seed);
Check check_bump_depths(const HomotopySetup& s, int samples, std::uint64_t seed);
// Residual of dH(theta) = theta for `forms` closed test forms on points (empty: the whole grid);
// the budget is then quadrupled on refine_points grid points.
Check check_identity(const HomotopySetup& s, int forms, const std::vector<CPoint>& points, int refine_points,
                     std::uint64_t seed, Table* table = nullptr, double bound = 5e-3);
Check check_cutoff(const HomotopySetup& s, int points, std::uint64_t seed, Table* table = nullptr, double bound = 5e-3);
// Grid-norm ratio of chi_W T(f) against chi_V f for bump sums f, at cloud and 2 x cloud.
Check check_averaging(const HomotopySetup& s, int functions, int cloud, std::uint64_t seed, Table* table = nullptr);

SuiteReport verify_geometry(const Domain& d, Budget b, std::uint64_t seed);
SuiteReport verify_carleson(const Domain& d, Budget b, std::uint64_t seed);
SuiteReport verify_mollify(const Domain& d, Budget b, std::uint64_t seed);
SuiteReport verify_homotopy(const Domain& d, Budget b, std::uint64_t seed);
// name in {geometry, carleson, mollify, homotopy}; throws "unknown-suite" otherwise.
SuiteReport run_suite(const std::string& name, const Domain& d, Budget b, std::uint64_t seed);

}  // namespace lcx
