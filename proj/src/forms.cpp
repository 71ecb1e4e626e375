#include "lcx/forms.hpp"

#include <Eigen/LU>
#include <array>
#include <bit>

#include "lcx/error.hpp"

namespace lcx {

namespace {

struct BasisTable {
    std::vector<unsigned> masks;
    std::vector<int> index;  // by mask, -1 if not of this degree
};

struct KindTable {
    Eigen::MatrixXcd to_real;    // real coefficients = to_real * complex coefficients
    Eigen::MatrixXcd from_real;  // inverse (square kinds)
};

struct Tables {
    // [n][degree]
    std::array<std::array<BasisTable, kMaxReal + 1>, kMaxDim + 1> basis;
    // [n][kind] for One and Two
    std::array<std::array<KindTable, 5>, kMaxDim + 1> kinds;
};

CRVector dz(int n, int j, bool bar) {
    CRVector c = CRVector::Zero(2 * n);
    c(2 * j) = 1.0;
    c(2 * j + 1) = bar ? Complex(0, -1) : Complex(0, 1);
    return c;
}

const Tables& tables();

Coeffs wedge_covectors(int n, const CRVector& a, const CRVector& b) {
    const auto& bt = tables().basis[n][2];
    Coeffs out(bt.masks.size());
    for (std::size_t i = 0; i < bt.masks.size(); ++i) {
        unsigned m = bt.masks[i];
        int x = std::countr_zero(m);
        int y = 31 - std::countl_zero(m);
        out(i) = a(x) * b(y) - a(y) * b(x);
    }
    return out;
}

Tables build_tables() {
    Tables t;
    for (int n = 1; n <= kMaxDim; ++n) {
        const int N = 2 * n;
        for (int p = 0; p <= N; ++p) {
            BasisTable& b = t.basis[n][p];
            b.index.assign(1u << N, -1);
            // lexicographic order of sorted tuples
            std::vector<unsigned> ms;
            for (unsigned m = 0; m < (1u << N); ++m)
                if (std::popcount(m) == p) ms.push_back(m);
            std::sort(ms.begin(), ms.end(), [](unsigned x, unsigned y) {
                while (x && y) {
                    int a = std::countr_zero(x), c = std::countr_zero(y);
                    if (a != c) return a < c;
                    x &= x - 1;
                    y &= y - 1;
                }
                return false;
            });
            b.masks = ms;
            for (std::size_t i = 0; i < ms.size(); ++i) b.index[ms[i]] = static_cast<int>(i);
        }
    }
    return t;
}

const Tables& tables() {
    static const Tables t = [] {
        Tables tb = build_tables();
        return tb;
    }();
    return t;
}

const KindTable& kind_table(FormKind kind, int n) {
    static const std::array<std::array<KindTable, 5>, kMaxDim + 1> kt = [] {
        std::array<std::array<KindTable, 5>, kMaxDim + 1> out;
        for (int n = 1; n <= kMaxDim; ++n) {
            const int N = 2 * n;
            // One
            Eigen::MatrixXcd M1(N, N);
            for (int j = 0; j < n; ++j) {
                M1.col(j) = dz(n, j, false);
                M1.col(n + j) = dz(n, j, true);
            }
            out[n][static_cast<int>(FormKind::One)] = {M1, M1.inverse()};
            // Two
            const int m2 = n * (2 * n - 1);
            Eigen::MatrixXcd M2(binomial(N, 2), m2);
            int col = 0;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) M2.col(col++) = wedge_covectors(n, dz(n, i, false), dz(n, j, false));
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) M2.col(col++) = wedge_covectors(n, dz(n, i, false), dz(n, j, true));
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) M2.col(col++) = wedge_covectors(n, dz(n, i, true), dz(n, j, true));
            out[n][static_cast<int>(FormKind::Two)] = {M2, M2.fullPivLu().inverse()};
        }
        return out;
    }();
    if (n < 1 || n > kMaxDim) fail("bad-dimension", "form dimension");
    return kt[n][static_cast<int>(kind)];
}

}  // namespace

int binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    int r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

int form_size(int n, int degree) { return binomial(2 * n, degree); }

const std::vector<unsigned>& basis_masks(int n, int degree) { return tables().basis[n][degree].masks; }

int basis_index(int n, int degree, unsigned mask) { return tables().basis[n][degree].index[mask]; }

int kind_size(FormKind kind, int n) {
    switch (kind) {
        case FormKind::Scalar: return 1;
        case FormKind::One: return 2 * n;
        case FormKind::ZeroOne: return n;
        case FormKind::OneOne: return n * n;
        case FormKind::Two: return n * (2 * n - 1);
    }
    return 0;
}

int kind_degree(FormKind kind) {
    switch (kind) {
        case FormKind::Scalar: return 0;
        case FormKind::One:
        case FormKind::ZeroOne: return 1;
        default: return 2;
    }
}

std::string kind_name(FormKind kind) {
    switch (kind) {
        case FormKind::Scalar: return "0";
        case FormKind::One: return "1";
        case FormKind::ZeroOne: return "(0,1)";
        case FormKind::OneOne: return "(1,1)";
        case FormKind::Two: return "2";
    }
    return "?";
}

FormKind parse_kind(const std::string& name) {
    if (name == "0" || name == "measure") return FormKind::Scalar;
    if (name == "1") return FormKind::One;
    if (name == "(0,1)") return FormKind::ZeroOne;
    if (name == "(1,1)") return FormKind::OneOne;
    if (name == "2") return FormKind::Two;
    fail("bad-degree", "unknown degree '" + name + "'");
}

Coeffs complex_to_real(FormKind kind, int n, const Coeffs& c) {
    switch (kind) {
        case FormKind::Scalar: return c;
        case FormKind::One: return kind_table(FormKind::One, n).to_real * c;
        case FormKind::ZeroOne: {
            Coeffs full = Coeffs::Zero(2 * n);
            full.tail(n) = c;
            return kind_table(FormKind::One, n).to_real * full;
        }
        case FormKind::OneOne: {
            const int m0 = n * (n - 1) / 2;
            Coeffs full = Coeffs::Zero(n * (2 * n - 1));
            full.segment(m0, n * n) = c;
            return kind_table(FormKind::Two, n).to_real * full;
        }
        case FormKind::Two: return kind_table(FormKind::Two, n).to_real * c;
    }
    fail("bad-degree", "complex_to_real");
}

Coeffs real_to_complex(FormKind kind, int n, const Coeffs& r) {
    switch (kind) {
        case FormKind::Scalar: return r;
        case FormKind::One: return kind_table(FormKind::One, n).from_real * r;
        case FormKind::ZeroOne: return (kind_table(FormKind::One, n).from_real * r).tail(n);
        case FormKind::OneOne: {
            Coeffs full = kind_table(FormKind::Two, n).from_real * r;
            return full.segment(n * (n - 1) / 2, n * n);
        }
        case FormKind::Two: return kind_table(FormKind::Two, n).from_real * r;
    }
    fail("bad-degree", "real_to_complex");
}

Complex pair(FormKind kind, int n, const Coeffs& c, const CVector& u1, const CVector& u2) {
    Complex s = 0.0;
    switch (kind) {
        case FormKind::Scalar: return c(0);
        case FormKind::One:
            for (int j = 0; j < n; ++j) s += c(j) * u1(j) + c(n + j) * std::conj(u1(j));
            return s;
        case FormKind::ZeroOne:
            for (int j = 0; j < n; ++j) s += c(j) * std::conj(u1(j));
            return s;
        case FormKind::OneOne:
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) s += c(i * n + j) * u1(i) * std::conj(u2(j));
            return s;
        case FormKind::Two: {
            int k = 0;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) s += c(k++) * u1(i) * u2(j);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) s += c(k++) * u1(i) * std::conj(u2(j));
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) s += c(k++) * std::conj(u1(i)) * std::conj(u2(j));
            return s;
        }
    }
    return s;
}

Coeffs wedge(int n, int p, const Coeffs& a, int q, const Coeffs& b) {
    const auto& ma = basis_masks(n, p);
    const auto& mb = basis_masks(n, q);
    Coeffs out = Coeffs::Zero(form_size(n, p + q));
    for (std::size_t i = 0; i < ma.size(); ++i) {
        if (a(i) == 0.0) continue;
        for (std::size_t j = 0; j < mb.size(); ++j) {
            if (ma[i] & mb[j]) continue;
            // sign of sorting the concatenation I, J
            int inv = 0;
            for (unsigned m = mb[j]; m; m &= m - 1) {
                int bit = std::countr_zero(m);
                inv += std::popcount(ma[i] >> (bit + 1));
            }
            Complex v = a(i) * b(j);
            out(basis_index(n, p + q, ma[i] | mb[j])) += (inv & 1) ? -v : v;
        }
    }
    return out;
}

Coeffs interior(int n, int p, const Coeffs& w, const RVector& y) {
    if (p == 0) fail("bad-degree", "interior product of a scalar");
    const auto& ms = basis_masks(n, p);
    Coeffs out = Coeffs::Zero(form_size(n, p - 1));
    for (std::size_t i = 0; i < ms.size(); ++i) {
        int k = 0;
        for (unsigned m = ms[i]; m; m &= m - 1, ++k) {
            int a = std::countr_zero(m);
            Complex v = y(a) * w(i);
            out(basis_index(n, p - 1, ms[i] & ~(1u << a))) += (k & 1) ? -v : v;
        }
    }
    return out;
}

Coeffs pullback(int n, int q, const Coeffs& alpha, const RMatrix& J) {
    if (q == 0) return alpha;
    const auto& ms = basis_masks(n, q);
    Coeffs out = Coeffs::Zero(ms.size());
    if (q == 1) {
        for (int b = 0; b < 2 * n; ++b) {
            Complex s = 0.0;
            for (int i = 0; i < 2 * n; ++i) s += alpha(i) * J(i, b);
            out(b) = s;
        }
        return out;
    }
    int rows[4], cols[4];
    for (std::size_t B = 0; B < ms.size(); ++B) {
        int k = 0;
        for (unsigned m = ms[B]; m; m &= m - 1) cols[k++] = std::countr_zero(m);
        Complex s = 0.0;
        for (std::size_t I = 0; I < ms.size(); ++I) {
            if (alpha(I) == 0.0) continue;
            k = 0;
            for (unsigned m = ms[I]; m; m &= m - 1) rows[k++] = std::countr_zero(m);
            Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4> sub(q, q);
            for (int r = 0; r < q; ++r)
                for (int c = 0; c < q; ++c) sub(r, c) = J(rows[r], cols[c]);
            s += alpha(I) * sub.determinant();
        }
        out(B) = s;
    }
    return out;
}

Complex evaluate(int n, int p, const Coeffs& w, const std::vector<RVector>& vs) {
    if (static_cast<int>(vs.size()) != p) fail("bad-degree", "evaluate needs one vector per degree");
    Coeffs cur = w;
    for (int k = 0; k < p; ++k) cur = interior(n, p - k, cur, vs[k]);
    return cur(0);
}

Jet jet_constant(int n, Complex c) { return {c, CRVector::Zero(2 * n)}; }

Jet jet_coordinate(const CPoint& z, int a) {
    Jet j{a % 2 == 0 ? z(a / 2).real() : z(a / 2).imag(), CRVector::Zero(2 * z.size())};
    j.d(a) = 1.0;
    return j;
}

Jet jet_sqdist(const CPoint& z, const CPoint& c) {
    RVector x = to_real<double>(CVector(z - c));
    return {x.squaredNorm(), (2.0 * x).cast<Complex>()};
}

Jet operator+(const Jet& a, const Jet& b) { return {a.v + b.v, a.d + b.d}; }
Jet operator-(const Jet& a, const Jet& b) { return {a.v - b.v, a.d - b.d}; }
Jet operator*(const Jet& a, const Jet& b) { return {a.v * b.v, a.v * b.d + b.v * a.d}; }
Jet operator*(Complex s, const Jet& a) { return {s * a.v, s * a.d}; }
Jet apply(const Jet& a, double f, double df) { return {f, df * a.d}; }

bool Support::may_contain(const CPoint& z) const {
    if (std::isfinite(radius) && (z - center).norm() > radius) return false;
    if (hole_radius > 0.0 && (z - hole_center).norm() < hole_radius) return false;
    return true;
}

Coeffs SmoothFormField::operator()(const CPoint& z) const {
    if (!support.may_contain(z)) return Coeffs::Zero(form_size(n, degree));
    return eval(z);
}

FormBundle bundle(const std::vector<SmoothFormField>& fields) {
    if (fields.empty()) fail("bad-degree", "empty bundle");
    FormBundle b;
    b.n = fields[0].n;
    b.degree = fields[0].degree;
    b.count = static_cast<int>(fields.size());
    b.support = fields[0].support;
    for (const auto& f : fields) {
        if (f.degree != b.degree || f.n != b.n) fail("bad-degree", "bundle members must share the degree");
        if (f.support.hole_radius < b.support.hole_radius) b.support.hole_radius = f.support.hole_radius;
        if (!std::isfinite(f.support.radius)) b.support.radius = f.support.radius;
    }
    if (std::isfinite(b.support.radius)) {
        // a ball containing every member support
        double r = 0;
        for (const auto& f : fields) r = std::max(r, (f.support.center - b.support.center).norm() + f.support.radius);
        b.support.radius = r;
    }
    auto fs = fields;
    b.eval = [fs](const CPoint& z, Coeffs* out) {
        for (std::size_t i = 0; i < fs.size(); ++i) out[i] = fs[i](z);
    };
    return b;
}

SmoothFormField exact_form(int n, int potential_degree, std::function<std::vector<Jet>(const CPoint&)> potential,
                           Support support) {
    SmoothFormField f;
    f.n = n;
    f.degree = potential_degree + 1;
    f.support = std::move(support);
    if (potential_degree == 0) {
        f.eval = [potential](const CPoint& z) { return Coeffs(potential(z)[0].d); };
    } else if (potential_degree == 1) {
        f.eval = [potential, n](const CPoint& z) {
            auto eta = potential(z);
            const auto& ms = basis_masks(n, 2);
            Coeffs out(ms.size());
            for (std::size_t i = 0; i < ms.size(); ++i) {
                int a = std::countr_zero(ms[i]);
                int b = 31 - std::countl_zero(ms[i]);
                out(i) = eta[b].d(a) - eta[a].d(b);
            }
            return out;
        };
    } else {
        fail("bad-degree", "exact_form supports scalar and 1-form potentials");
    }
    return f;
}

SmoothFormField potential_form(int n, int potential_degree, std::function<std::vector<Jet>(const CPoint&)> potential,
                               Support support) {
    SmoothFormField f;
    f.n = n;
    f.degree = potential_degree;
    f.support = std::move(support);
    f.eval = [potential, potential_degree, n](const CPoint& z) {
        auto eta = potential(z);
        Coeffs out(form_size(n, potential_degree));
        for (int i = 0; i < out.size(); ++i) out(i) = eta[i].v;
        return out;
    };
    return f;
}

Coeffs exterior_from_partials(int n, int degree, const std::vector<Coeffs>& partials) {
    const auto& ms = basis_masks(n, degree + 1);
    Coeffs out = Coeffs::Zero(ms.size());
    for (std::size_t A = 0; A < ms.size(); ++A) {
        int k = 0;
        for (unsigned m = ms[A]; m; m &= m - 1, ++k) {
            int a = std::countr_zero(m);
            Complex v = partials[a](basis_index(n, degree, ms[A] & ~(1u << a)));
            out(A) += (k & 1) ? -v : v;
        }
    }
    return out;
}

namespace {

Coeffs partial(const std::function<Coeffs(const CPoint&)>& f, int n, const CPoint& z, int a, double h, int order) {
    CVector e = real_axis(n, a);
    if (order == 4)
        return (8.0 * (f(z + h * e) - f(z - h * e)) - (f(z + 2.0 * h * e) - f(z - 2.0 * h * e))) / (12.0 * h);
    return (f(z + h * e) - f(z - h * e)) / (2.0 * h);
}

}  // namespace

Coeffs fd_exterior_derivative(const std::function<Coeffs(const CPoint&)>& f, int n, int degree, const CPoint& z,
                              double h, int order) {
    std::vector<Coeffs> partials(2 * n);
    for (int a = 0; a < 2 * n; ++a) partials[a] = partial(f, n, z, a, h, order);
    return exterior_from_partials(n, degree, partials);
}

ClosednessDefect closedness_defect(const std::function<Coeffs(const CPoint&)>& f, int n, int degree,
                                   const std::vector<CPoint>& points, double h, int order) {
    ClosednessDefect out;
    std::vector<Coeffs> partials(2 * n);
    for (const auto& z : points) {
        out.value_sup = std::max(out.value_sup, sup_norm(f(z)));
        for (int a = 0; a < 2 * n; ++a) {
            partials[a] = partial(f, n, z, a, h, order);
            out.partial_sup = std::max(out.partial_sup, sup_norm(partials[a]));
        }
        out.d_sup = std::max(out.d_sup, sup_norm(exterior_from_partials(n, degree, partials)));
    }
    return out;
}

double sup_norm(const Coeffs& c) { return c.size() ? c.cwiseAbs().maxCoeff() : 0.0; }

double DiscreteCurrent::total_mass() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.c.cwiseAbs().sum();
    return m;
}

DiscreteCurrent operator*(double s, const DiscreteCurrent& t) {
    DiscreteCurrent out = t;
    for (auto& a : out.atoms) a.c *= s;
    return out;
}

DiscreteCurrent operator+(const DiscreteCurrent& a, const DiscreteCurrent& b) {
    if (a.kind != b.kind || a.n != b.n) fail("bad-degree", "adding currents of different degree");
    DiscreteCurrent out = a;
    out.atoms.insert(out.atoms.end(), b.atoms.begin(), b.atoms.end());
    return out;
}

}  // namespace lcx
