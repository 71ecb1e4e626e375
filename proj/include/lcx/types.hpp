#pragma once

#include <Eigen/Core>
#include <complex>

namespace lcx {

inline constexpr int kMaxDim = 4;       // complex dimension
inline constexpr int kMaxReal = 2 * kMaxDim;
inline constexpr int kMaxCoeffs = 70;   // C(8,4)

template <typename Scalar>
using CVectorT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
template <typename Scalar>
using CMatrixT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
template <typename Scalar>
using RVectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, kMaxReal, 1>;
template <typename Scalar>
using RMatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxReal, kMaxReal>;
template <typename Scalar>
using CoeffsT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1, 0, kMaxCoeffs, 1>;
template <typename Scalar>
using CRVectorT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1, 0, kMaxReal, 1>;

using Complex = std::complex<double>;
using CVector = CVectorT<double>;
using CPoint = CVector;
using CMatrix = CMatrixT<double>;
using RVector = RVectorT<double>;
using RMatrix = RMatrixT<double>;
using Coeffs = CoeffsT<double>;
using CRVector = CRVectorT<double>;  // complex values on real coordinates

// Real coordinates: x_{2j} = Re z_j, x_{2j+1} = Im z_j.
template <typename Scalar>
RVectorT<Scalar> to_real(const CVectorT<Scalar>& z) {
    RVectorT<Scalar> x(2 * z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        x(2 * j) = z(j).real();
        x(2 * j + 1) = z(j).imag();
    }
    return x;
}

template <typename Scalar>
CVectorT<Scalar> to_complex(const RVectorT<Scalar>& x) {
    CVectorT<Scalar> z(x.size() / 2);
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = {x(2 * j), x(2 * j + 1)};
    return z;
}

// Unit vector along real coordinate a.
inline CVector real_axis(int n, int a) {
    CVector e = CVector::Zero(n);
    e(a / 2) = (a % 2 == 0) ? Complex(1, 0) : Complex(0, 1);
    return e;
}

// Hermitian inner product <u, v> = sum u_j conj(v_j).
template <typename Scalar>
std::complex<Scalar> hdot(const CVectorT<Scalar>& u, const CVectorT<Scalar>& v) {
    return v.dot(u);
}

}  // namespace lcx
