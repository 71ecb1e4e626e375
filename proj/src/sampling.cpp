#include "lcx/sampling.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

#include "lcx/error.hpp"

namespace lcx {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return splitmix(splitmix(seed ^ splitmix(h)) + index);
}

double radical_inverse(int base, std::uint64_t index) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

Halton::Halton(int dim, std::uint64_t seed, std::uint64_t skip) : dim_(dim), skip_(skip), shift_(dim) {
    if (dim <= 0 || dim > static_cast<int>(std::size(kPrimes))) fail("bad-dimension", "halton dimension");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto& s : shift_) s = uni(rng);
}

void Halton::point(std::uint64_t index, double* out) const {
    for (int d = 0; d < dim_; ++d) {
        double v = radical_inverse(kPrimes[d], index + skip_ + 1) + shift_[d];
        out[d] = v - std::floor(v);
    }
}

std::vector<double> Halton::point(std::uint64_t index) const {
    std::vector<double> u(dim_);
    point(index, u.data());
    return u;
}

CVector unit_sphere_point(int n, const double* u) {
    CVector z(n);
    for (int j = 0; j < n; ++j) {
        double r = std::sqrt(-2.0 * std::log(std::max(u[2 * j], 1e-300)));
        double a = 2.0 * std::numbers::pi * u[2 * j + 1];
        z(j) = {r * std::cos(a), r * std::sin(a)};
    }
    double nz = z.norm();
    if (nz < 1e-300) {
        z.setZero();
        z(0) = 1.0;
        return z;
    }
    return z / nz;
}

CVector polydisk_point(int n, const double* u) {
    CVector z(n);
    for (int j = 0; j < n; ++j) z(j) = std::polar(std::sqrt(u[2 * j]), 2.0 * std::numbers::pi * u[2 * j + 1]);
    return z;
}

CVector ball_point(int n, const double* u) {
    return unit_sphere_point(n, u) * std::pow(u[2 * n], 1.0 / (2 * n));
}

std::vector<CVector> sphere_directions(int n, int count, std::uint64_t seed) {
    Halton h(2 * n, seed);
    std::vector<CVector> out;
    out.reserve(count);
    double u[kMaxReal];
    for (int i = 0; i < count; ++i) {
        h.point(i, u);
        out.push_back(unit_sphere_point(n, u));
    }
    return out;
}

std::vector<Eigen::Vector3d> fibonacci_sphere(int count) {
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(count);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        double z = 1.0 - (2.0 * i + 1.0) / count;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double a = golden * i;
        pts.emplace_back(r * std::cos(a), r * std::sin(a), z);
    }
    return pts;
}

const GaussRule& gauss_legendre(int order) {
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;
    GaussRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 1.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = 0.5 * (1.0 - x);
        rule.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return cache.emplace(order, std::move(rule)).first->second;
}

double smooth_step(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double g = 1.0 / x - 1.0 / (1.0 - x);
    if (g > 700) return 0.0;
    return 1.0 / (1.0 + std::exp(g));
}

double smooth_step_derivative(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    double f = smooth_step(x);
    return f * (1.0 - f) * (1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x)));
}

}  // namespace lcx
