#include "lcx/io.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "lcx/error.hpp"

namespace lcx {

Json point_to_json(const CPoint& z) {
    Json a = Json::array();
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        a.push_back(z(j).real());
        a.push_back(z(j).imag());
    }
    return a;
}

CPoint point_from_json(const Json& j) {
    if (!j.is_array() || j.empty() || j.size() % 2 != 0 || j.size() > 2 * kMaxDim)
        fail("bad-format", "point must be [re, im, ...] with at most " + std::to_string(kMaxDim) + " coordinates");
    CPoint z(j.size() / 2);
    for (std::size_t k = 0; k < j.size() / 2; ++k) z(k) = {j[2 * k].get<double>(), j[2 * k + 1].get<double>()};
    return z;
}

Json complex_to_json(Complex c) { return Json::array({c.real(), c.imag()}); }

Complex complex_from_json(const Json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
    fail("bad-format", "coefficient must be a number or [re, im]");
}

Json domain_to_json(const Domain& d) {
    Json j;
    j["name"] = d.name();
    if (d.name() == "ball")
        j["params"] = Json::array({d.dim()});
    else
        j["params"] = d.exponents();
    const DomainConstants& c = d.constants();
    j["constants"] = {{"eta0", c.eta0}, {"c0", c.c0}, {"delta1", c.delta1}, {"eps0", c.eps0}};
    return j;
}

Domain domain_from_json(const Json& j) {
    if (j.is_string()) return parse_domain(j.get<std::string>());
    if (!j.is_object() || !j.contains("name")) fail("bad-format", "domain needs a name");
    std::vector<int> params;
    if (j.contains("params")) params = j["params"].get<std::vector<int>>();
    Domain d = builtin_domain(j["name"].get<std::string>(), params);
    if (j.contains("constants")) {
        const Json& c = j["constants"];
        DomainConstants& k = d.constants();
        k.eta0 = c.value("eta0", k.eta0);
        k.c0 = c.value("c0", k.c0);
        k.delta1 = c.value("delta1", k.delta1);
        k.eps0 = c.value("eps0", k.eps0);
        if (!(k.eta0 > 0 && k.c0 > 0 && k.delta1 > 0 && k.eps0 > 0)) fail("bad-format", "constants must be positive");
    }
    return d;
}

Json current_to_json(const DiscreteCurrent& t) {
    Json j;
    j["n"] = t.n;
    j["degree"] = kind_degree(t.kind);
    j["kind"] = kind_name(t.kind);
    Json atoms = Json::array();
    for (const auto& a : t.atoms) {
        Json c = Json::array();
        for (Eigen::Index k = 0; k < a.c.size(); ++k) c.push_back(complex_to_json(a.c(k)));
        atoms.push_back({{"z", point_to_json(a.z)}, {"coeffs", c}});
    }
    j["atoms"] = atoms;
    return j;
}

namespace {

FormKind infer_kind(const Json& j, int n, int count) {
    if (j.contains("kind")) return parse_kind(j["kind"].get<std::string>());
    if (!j.contains("degree")) fail("bad-format", "current needs a degree");
    const Json& d = j["degree"];
    if (d.is_string()) return parse_kind(d.get<std::string>());
    switch (d.get<int>()) {
        case 0: return FormKind::Scalar;
        case 1:
            if (count < 0 || count == 2 * n) return FormKind::One;
            if (count == n) return FormKind::ZeroOne;
            break;
        case 2:
            if (count == n * n) return FormKind::OneOne;
            if (count < 0 || count == n * (2 * n - 1)) return FormKind::Two;
            break;
        default: break;
    }
    fail("bad-degree", "degree " + d.dump() + " with " + std::to_string(count) + " coefficients");
}

}  // namespace

DiscreteCurrent current_from_json(const Json& j) {
    if (!j.is_object()) fail("bad-format", "current must be an object");
    const Json atoms = j.value("atoms", Json::array());
    if (!atoms.is_array()) fail("bad-format", "atoms must be an array");
    DiscreteCurrent t;
    t.n = j.value("n", atoms.empty() ? 2 : static_cast<int>(atoms[0].at("z").size() / 2));
    const int count = atoms.empty() ? -1 : static_cast<int>(atoms[0].at("coeffs").size());
    t.kind = infer_kind(j, t.n, count);
    const int size = kind_size(t.kind, t.n);
    for (const auto& a : atoms) {
        Atom at;
        at.z = point_from_json(a.at("z"));
        if (at.z.size() != t.n) fail("bad-format", "atom dimension mismatch");
        const Json& c = a.at("coeffs");
        if (!c.is_array() || static_cast<int>(c.size()) != size)
            fail("bad-degree", "expected " + std::to_string(size) + " coefficients for degree " + kind_name(t.kind));
        at.c.resize(size);
        for (int k = 0; k < size; ++k) at.c(k) = complex_from_json(c[k]);
        t.atoms.push_back(std::move(at));
    }
    return t;
}

DiscreteCurrent read_current(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("bad-format", "cannot open " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail("bad-format", path + ": " + e.what());
    }
    try {
        return current_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        fail("bad-format", path + ": " + e.what());
    }
}

Json frame_to_json(const ExtremalFrame& f) {
    Json j;
    j["center"] = point_to_json(f.center);
    j["scale"] = f.scale;
    Json v = Json::array();
    for (Eigen::Index k = 0; k < f.vectors.cols(); ++k) v.push_back(point_to_json(f.vectors.col(k)));
    j["vectors"] = v;
    j["radii"] = f.radii;
    return j;
}

Json report_to_json(const CarlesonReport& r, bool with_tents) {
    Json j;
    j["norm"] = r.norm_value;
    j["max_ratio"] = r.max_ratio;
    j["total_mass"] = r.total_mass;
    j["witness_point"] = r.witness_point.size() ? point_to_json(r.witness_point) : Json();
    j["witness_scale"] = r.witness_scale;
    j["label"] = r.label;
    j["tents"] = r.per_tent.size();
    if (with_tents) {
        Json t = Json::array();
        for (const auto& e : r.per_tent)
            t.push_back({{"xi", point_to_json(e.xi)}, {"eps", e.eps}, {"mass", e.mass}, {"area", e.area},
                         {"ratio", e.ratio}});
        j["per_tent"] = t;
    }
    return j;
}

Json residual_to_json(const ResidualReport& r) {
    Json j;
    j["max"] = r.max;
    j["mean"] = r.mean;
    j["mc_stderr"] = r.mc_stderr;
    j["scale"] = r.scale;
    j["budgets"] = {{"n_lambda", r.n_lambda}, {"n_t", r.n_t}, {"points", r.points}};
    return j;
}

namespace {

void put(std::ostream& os, double v) { os << std::setprecision(17) << v; }

}  // namespace

void write_tent_csv(std::ostream& os, const CarlesonReport& r) {
    const int n = r.per_tent.empty() ? 0 : static_cast<int>(r.per_tent[0].xi.size());
    for (int a = 0; a < 2 * n; ++a) os << "xi" << a << ',';
    os << "eps,mass,area,ratio\n";
    for (const auto& t : r.per_tent) {
        for (int a = 0; a < 2 * n; ++a) {
            put(os, a % 2 ? t.xi(a / 2).imag() : t.xi(a / 2).real());
            os << ',';
        }
        put(os, t.eps);
        os << ',';
        put(os, t.mass);
        os << ',';
        put(os, t.area);
        os << ',';
        put(os, t.ratio);
        os << '\n';
    }
}

void write_grid_csv(std::ostream& os, const std::vector<CPoint>& points, const std::vector<Coeffs>& values) {
    if (points.size() != values.size()) fail("bad-format", "grid dump needs one value per point");
    const int n = points.empty() ? 0 : static_cast<int>(points[0].size());
    const int m = values.empty() ? 0 : static_cast<int>(values[0].size());
    for (int a = 0; a < 2 * n; ++a) os << 'x' << a << ',';
    for (int k = 0; k < m; ++k) os << "re" << k << ",im" << k << (k + 1 < m ? "," : "");
    os << '\n';
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (int a = 0; a < 2 * n; ++a) {
            put(os, a % 2 ? points[i](a / 2).imag() : points[i](a / 2).real());
            os << ',';
        }
        for (int k = 0; k < m; ++k) {
            put(os, values[i](k).real());
            os << ',';
            put(os, values[i](k).imag());
            if (k + 1 < m) os << ',';
        }
        os << '\n';
    }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace lcx
