#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "lcx/types.hpp"

namespace lcx {

// Per-task seed derivation: splitmix64 over (seed, FNV-1a(tag), index).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0);

// Halton sequence with a seeded Cranley-Patterson rotation.
class Halton {
public:
    Halton(int dim, std::uint64_t seed, std::uint64_t skip = 0);
    int dim() const { return dim_; }
    // Point with the given index, coordinates in [0,1).
    void point(std::uint64_t index, double* out) const;
    std::vector<double> point(std::uint64_t index) const;

private:
    int dim_;
    std::uint64_t skip_;
    std::vector<double> shift_;
};

double radical_inverse(int base, std::uint64_t index);

// Deterministic maps from the unit cube.
CVector unit_sphere_point(int n, const double* u);   // needs 2n coordinates
CVector polydisk_point(int n, const double* u);      // uniform on the unit polydisk, 2n coordinates
CVector ball_point(int n, const double* u);          // uniform on the unit ball, 2n+1 coordinates

// n directions quasi-uniform on S^{2n-1}.
std::vector<CVector> sphere_directions(int n, int count, std::uint64_t seed);

// Fibonacci lattice on S^2.
std::vector<Eigen::Vector3d> fibonacci_sphere(int count);

struct GaussRule {
    std::vector<double> nodes;    // on [0,1]
    std::vector<double> weights;  // sum to 1
};
const GaussRule& gauss_legendre(int order);

// Smooth monotone step: 0 for x <= 0, 1 for x >= 1.
double smooth_step(double x);
double smooth_step_derivative(double x);

}  // namespace lcx
