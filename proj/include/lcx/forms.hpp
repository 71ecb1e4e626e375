#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "lcx/types.hpp"

namespace lcx {

// Real-basis forms: coefficients over sorted index tuples of the real coordinates, stored by bitmask.
int binomial(int n, int k);
int form_size(int n, int degree);  // C(2n, degree)
const std::vector<unsigned>& basis_masks(int n, int degree);
int basis_index(int n, int degree, unsigned mask);

// Complex-basis kinds used for currents and norms.
//  Scalar: 1 entry.  One: 2n entries (dz block, then dzbar block).  ZeroOne: n entries (dzbar).
//  OneOne: n*n entries T1(i,j) of dz_i ^ dzbar_j, row major.
//  Two: n(2n-1) entries: T0 (i<j, dz_i ^ dz_j), then T1 (n*n), then T2 (i<j, dzbar_i ^ dzbar_j).
enum class FormKind { Scalar, One, ZeroOne, OneOne, Two };

int kind_size(FormKind kind, int n);
int kind_degree(FormKind kind);
std::string kind_name(FormKind kind);
FormKind parse_kind(const std::string& name);

Coeffs complex_to_real(FormKind kind, int n, const Coeffs& c);
// Inverse for Scalar, One and Two; ZeroOne and OneOne return their block of the full decomposition.
Coeffs real_to_complex(FormKind kind, int n, const Coeffs& r);

// Pairing used by the k-norm: omega(v) for degree one,
// T(u1,u2) = sum T0 u1_i u2_j + T1 u1_i conj(u2_j) + T2 conj(u1_i) conj(u2_j) for degree two.
Complex pair(FormKind kind, int n, const Coeffs& c, const CVector& u1, const CVector& u2 = CVector());

// Exterior algebra on real coefficients.
Coeffs wedge(int n, int p, const Coeffs& a, int q, const Coeffs& b);
Coeffs interior(int n, int p, const Coeffs& w, const RVector& y);
// (J^* alpha)_B = sum_I alpha_I det J[I, B], with J(i, b) = d h_i / d x_b.
Coeffs pullback(int n, int q, const Coeffs& alpha, const RMatrix& J);
// omega(v_1, ..., v_p) on real vectors.
Complex evaluate(int n, int p, const Coeffs& w, const std::vector<RVector>& vs);

// Scalar with real-coordinate gradient, for building exact test forms.
struct Jet {
    Complex v;
    CRVector d;
};
Jet jet_constant(int n, Complex c);
Jet jet_coordinate(const CPoint& z, int a);
// |z - c|^2
Jet jet_sqdist(const CPoint& z, const CPoint& c);
Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator*(Complex s, const Jet& a);
// f(a) for real-valued a.
Jet apply(const Jet& a, double f, double df);

struct Support {
    CPoint center;                                         // bounding ball
    double radius = std::numeric_limits<double>::infinity();
    CPoint hole_center;                                    // field vanishes on this ball
    double hole_radius = 0.0;

    bool may_contain(const CPoint& z) const;
};

// Smooth form of real degree 0..3 given by real-basis coefficient functions.
struct SmoothFormField {
    int n = 2;
    int degree = 2;
    std::function<Coeffs(const CPoint&)> eval;
    Support support;

    Coeffs operator()(const CPoint& z) const;
};

// Several fields sharing one evaluation (all of the same degree).
struct FormBundle {
    int n = 2;
    int degree = 2;
    int count = 1;
    std::function<void(const CPoint&, Coeffs*)> eval;
    Support support;
};

FormBundle bundle(const std::vector<SmoothFormField>& fields);

// d(chi * eta) for a scalar-valued (degree 0) or 1-form-valued jet potential.
// potential(z) returns 2n+... : for degree 0 a single jet, for degree 1 one jet per real coordinate.
SmoothFormField exact_form(int n, int potential_degree, std::function<std::vector<Jet>(const CPoint&)> potential,
                           Support support);
// The potential chi * eta itself as a form field.
SmoothFormField potential_form(int n, int potential_degree, std::function<std::vector<Jet>(const CPoint&)> potential,
                               Support support);

// Centered finite-difference exterior derivative at z with step h; order 2 or 4 stencils.
Coeffs fd_exterior_derivative(const std::function<Coeffs(const CPoint&)>& f, int n, int degree, const CPoint& z,
                              double h, int order = 2);
// Same with precomputed partial derivatives d_a omega (2n entries).
Coeffs exterior_from_partials(int n, int degree, const std::vector<Coeffs>& partials);

double sup_norm(const Coeffs& c);

// Sup over points of |d_h f| relative to the sup of the partials it cancels.
struct ClosednessDefect {
    double d_sup = 0.0;
    double partial_sup = 0.0;
    double value_sup = 0.0;
    double relative() const { return partial_sup > 0.0 ? d_sup / partial_sup : 0.0; }
};
ClosednessDefect closedness_defect(const std::function<Coeffs(const CPoint&)>& f, int n, int degree,
                                   const std::vector<CPoint>& points, double h, int order = 4);

// Order-zero current: weighted point atoms with complex-basis coefficients.
struct Atom {
    CPoint z;
    Coeffs c;
};

struct DiscreteCurrent {
    int n = 2;
    FormKind kind = FormKind::Scalar;
    std::vector<Atom> atoms;

    double total_mass() const;
};

DiscreteCurrent operator*(double s, const DiscreteCurrent& t);
DiscreteCurrent operator+(const DiscreteCurrent& a, const DiscreteCurrent& b);

}  // namespace lcx
