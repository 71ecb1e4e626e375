#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lcx/carleson.hpp"
#include "lcx/covering.hpp"
#include "lcx/error.hpp"
#include "lcx/geometry.hpp"
#include "lcx/homotopy.hpp"
#include "lcx/io.hpp"
#include "lcx/mollify.hpp"
#include "lcx/sampling.hpp"
#include "lcx/verify.hpp"

using namespace lcx;

namespace {

enum Exit { kOk = 0, kUsage = 2, kNumerical = 3, kInvariant = 4 };

struct Options {
    std::string domain = "ball";
    std::uint64_t seed = 1;
    std::string budget = "default";
    std::string out;
    std::string format = "json";
};

struct Budgets {
    int n_lambda = 4096;
    int n_t = 64;
    int boundary_samples = 32;
    int mc_samples = 512;
};

Budgets budgets_for(Budget b) {
    switch (b) {
        case Budget::Small: return {1024, 64, 16, 256};
        case Budget::Default: return {4096, 64, 32, 512};
        case Budget::Large: return {16384, 64, 64, 2048};
    }
    return {};
}

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Domain load_domain(const std::string& descriptor) {
    if (descriptor.size() > 5 && descriptor.substr(descriptor.size() - 5) == ".json") {
        std::ifstream in(descriptor);
        if (!in) throw UsageError("cannot open domain file " + descriptor);
        return domain_from_json(Json::parse(in));
    }
    return parse_domain(descriptor);
}

// n numbers: real coordinates; 2n numbers: re, im pairs.
CVector parse_vector(const std::string& text, int n, const std::string& what) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(what + ": bad number '" + item + "'");
        }
    }
    CVector z(n);
    if (static_cast<int>(v.size()) == n) {
        for (int j = 0; j < n; ++j) z(j) = v[j];
    } else if (static_cast<int>(v.size()) == 2 * n) {
        for (int j = 0; j < n; ++j) z(j) = {v[2 * j], v[2 * j + 1]};
    } else {
        throw UsageError(what + ": expected " + std::to_string(n) + " or " + std::to_string(2 * n) + " numbers");
    }
    return z;
}

// Boundary points are kept, interior points are projected.
CPoint to_boundary(const Domain& d, const CPoint& z) {
    const double r = d.rho(z);
    if (std::abs(r) <= 1e-12) return z;
    if (r > 0.0) throw UsageError("--point lies outside the domain");
    return project_to_boundary(d, z);
}

struct Output {
    const Options& opt;
    Json config;

    void emit(const Json& result, const std::string& csv) const {
        Json doc;
        doc["config"] = config;
        doc["result"] = result;
        const std::string text = dump_json(doc);
        if (!opt.out.empty()) {
            write(opt.out + ".json", text);
            if (!csv.empty()) write(opt.out + ".csv", csv);
        }
        std::cout << (opt.format == "csv" && !csv.empty() ? csv : text);
    }

    void extra(const std::string& suffix, const std::string& text) const {
        if (!opt.out.empty()) write(opt.out + "." + suffix, text);
    }

    static void write(const std::string& path, const std::string& text) {
        std::ofstream f(path);
        if (!f) throw UsageError("cannot write " + path);
        f << text;
    }
};

Json base_config(const Options& opt, const Domain& d, const std::string& command) {
    Budgets b = budgets_for(parse_budget(opt.budget));
    Json c;
    c["command"] = command;
    c["domain"] = domain_to_json(d);
    c["seed"] = opt.seed;
    c["budget"] = opt.budget;
    c["budgets"] = {{"n_lambda", b.n_lambda}, {"n_t", b.n_t}, {"boundary_samples", b.boundary_samples},
                    {"mc_samples", b.mc_samples}};
    c["format"] = opt.format;
    c["out"] = opt.out;
    return c;
}

std::string csv_line(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << '\n';
    return os.str();
}

std::string slug(std::string s) {
    for (char& ch : s)
        if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '-';
    return s;
}

Json tau_provenance(const Domain& d) {
    TauOptions t;
    return {{"c0", d.constants().c0}, {"angles", t.angles}, {"fine_angles", t.fine_angles}, {"rel_tol", t.rel_tol}};
}

// ---------------------------------------------------------------- geom

struct GeomArgs {
    std::string point, dir, to;
    double eps = 1e-3;
    bool d1 = false;
    double radius = 0.02, depth_min = 0.005, depth_max = 0.02;
    std::size_t max_count = 20000;
};

int run_geom(const Options& opt, const std::string& query, const GeomArgs& a) {
    Domain d = load_domain(opt.domain);
    const int n = d.dim();
    Output out{opt, base_config(opt, d, "geom " + query)};
    Json r;
    std::string csv;
    if (query == "tau") {
        CPoint z = parse_vector(a.point, n, "--point");
        CVector v = parse_vector(a.dir, n, "--dir");
        if (v.norm() == 0.0) throw UsageError("--dir must be nonzero");
        v.normalize();
        out.config["args"] = {{"point", point_to_json(z)}, {"dir", point_to_json(v)}, {"eps", a.eps}};
        double t = tau(d, z, v, a.eps);
        r = {{"tau", t}, {"provenance", tau_provenance(d)}};
        csv = "eps,tau\n" + csv_line({a.eps, t});
    } else if (query == "frame") {
        CPoint z = parse_vector(a.point, n, "--point");
        out.config["args"] = {{"point", point_to_json(z)}, {"eps", a.eps}};
        ExtremalFrame f = extremal_frame(d, z, a.eps);
        double gram = (f.vectors.adjoint() * f.vectors - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
        r["frame"] = frame_to_json(f);
        r["orthonormality"] = {{"max_gram_error", gram}, {"pass", gram <= 1e-10}};
        r["provenance"] = tau_provenance(d);
        csv = "k,tau";
        for (int a2 = 0; a2 < 2 * n; ++a2) csv += ",v" + std::to_string(a2);
        csv += "\n";
        for (int k = 0; k < n; ++k) {
            std::vector<double> row{double(k), f.radii[k]};
            for (int j = 0; j < n; ++j) {
                row.push_back(f.vectors(j, k).real());
                row.push_back(f.vectors(j, k).imag());
            }
            csv += csv_line(row);
        }
    } else if (query == "distance") {
        CPoint z = parse_vector(a.point, n, "--point");
        CPoint w = parse_vector(a.to, n, "--to");
        out.config["args"] = {{"point", point_to_json(z)}, {"to", point_to_json(w)}, {"kind", a.d1 ? "d1" : "d"}};
        double v = a.d1 ? pseudo_distance_d1(d, z, w) : pseudo_distance_d(d, z, w);
        r = {{"kind", a.d1 ? "d1" : "d"}, {"distance", v}, {"provenance", tau_provenance(d)}};
        csv = "distance\n" + csv_line({v});
    } else if (query == "covering") {
        CPoint p = to_boundary(d, parse_vector(a.point, n, "--point"));
        CoveringRegion reg{p, a.radius, a.depth_min, a.depth_max};
        out.config["args"] = {{"point", point_to_json(p)}, {"radius", a.radius}, {"depth_min", a.depth_min},
                              {"depth_max", a.depth_max}, {"max_count", a.max_count}};
        Covering cov = minimal_covering(d, reg, a.max_count);
        Json arr = Json::array();
        csv = "j,scale";
        for (int a2 = 0; a2 < 2 * n; ++a2) csv += ",center" + std::to_string(a2);
        for (int k = 0; k < n; ++k) csv += ",tau" + std::to_string(k);
        csv += "\n";
        for (std::size_t j = 0; j < cov.index.size(); ++j) {
            const Polydisk& P = cov.index[j];
            Json pj = frame_to_json(P.frame);
            pj["dilation"] = P.dilation;
            arr.push_back(pj);
            std::vector<double> row{double(j), P.frame.scale};
            for (int k = 0; k < n; ++k) {
                row.push_back(P.frame.center(k).real());
                row.push_back(P.frame.center(k).imag());
            }
            for (double t : P.frame.radii) row.push_back(t);
            csv += csv_line(row);
        }
        r["polydisks"] = arr;
        r["stats"] = {{"count", cov.index.size()}, {"samples", cov.stats.samples},
                      {"min_multiplicity", cov.stats.min_multiplicity},
                      {"max_multiplicity", cov.stats.max_multiplicity},
                      {"mean_multiplicity", cov.stats.mean_multiplicity}};
    } else {
        throw UsageError("unknown geom query '" + query + "'");
    }
    out.emit(r, csv);
    return kOk;
}

// ---------------------------------------------------------------- norm

struct NormArgs {
    std::string current;
    int scales = 6;
    double s = 0.0;
};

int run_norm(const Options& opt, const NormArgs& a) {
    Domain d = load_domain(opt.domain);
    Budgets b = budgets_for(parse_budget(opt.budget));
    DiscreteCurrent t = read_current(a.current);
    if (!t.atoms.empty() && t.n != d.dim()) throw UsageError("current dimension does not match the domain");
    t.n = d.dim();
    Output out{opt, base_config(opt, d, "norm")};
    out.config["args"] = {{"current", a.current}, {"scales", a.scales}, {"s", a.s}};
    CarlesonGrid g = a.s > 0.0 ? s_grid(d, a.s, b.boundary_samples, a.scales, opt.seed)
                               : default_grid(d, b.boundary_samples, a.scales, opt.seed);
    g.tent_samples = b.mc_samples;
    TentSet tents(d, g);
    CarlesonReport rep = t.kind == FormKind::Scalar ? carleson_norm_measure(tents, t) : carleson_norm_current(tents, t);
    if (t.kind == FormKind::Scalar) rep.label = "measure";
    std::ostringstream csv;
    write_tent_csv(csv, rep);
    Json r = report_to_json(rep);
    r["kind"] = kind_name(t.kind);
    r["atoms"] = t.atoms.size();
    r["grid"] = {{"boundary_points", g.boundary.size()}, {"scales", g.scales}};
    r["note"] = "grid-relative lower estimate";
    out.extra("tents.csv", csv.str());
    out.emit(r, csv.str());
    return kOk;
}

// ---------------------------------------------------------------- solve-d

struct SolveArgs {
    std::string current;
    std::string fixture;
    std::string point;
    double eps = 0.004;
    int grid = 2;
    double closed_tol = 1e-3;
    double R = 0.0;
};

int run_solve(const Options& opt, const SolveArgs& a) {
    Domain d = load_domain(opt.domain);
    const int n = d.dim();
    Budgets b = budgets_for(parse_budget(opt.budget));
    if (a.current.empty() == a.fixture.empty()) throw UsageError("give exactly one of --current and --fixture");
    if (!a.fixture.empty() && a.fixture != "exact" && a.fixture != "zero")
        throw UsageError("--fixture must be exact or zero");
    CPoint p = CPoint::Zero(n);
    p(0) = 1.0;
    if (!a.point.empty()) p = parse_vector(a.point, n, "--point");
    p = to_boundary(d, p);

    Output out{opt, base_config(opt, d, "solve-d")};
    out.config["args"] = {{"point", point_to_json(p)}, {"grid", a.grid}, {"closed_tol", a.closed_tol}, {"R", a.R}};
    if (!a.current.empty()) {
        out.config["args"]["current"] = a.current;
        out.config["args"]["eps"] = a.eps;
    } else {
        out.config["args"]["fixture"] = a.fixture;
    }

    HomotopySetup s = make_homotopy_setup(d, p, a.grid, opt.seed);
    s.cfg.n_lambda = b.n_lambda;
    s.cfg.n_t = b.n_t;
    const LocalChart& ch = *s.chart;
    const CPoint pc = ch.chart(ch.p);
    SmoothFormField T;
    T.n = n;
    T.degree = 2;
    if (a.fixture == "exact") {
        FormBundle f = closed_test_forms(n, 2, pc, 1.5 * ch.depth_a, 1, derive_seed(opt.seed, "fixture"), s.grid);
        T.support = f.support;
        T.eval = [f](const CPoint& z) {
            Coeffs o;
            f.eval(z, &o);
            return o;
        };
    } else if (a.fixture == "zero") {
        T.support.center = pc;
        T.support.radius = ch.depth_a;
        const int size = form_size(n, 2);
        T.eval = [size](const CPoint&) { return Coeffs(Coeffs::Zero(size)); };
    } else {
        DiscreteCurrent t = read_current(a.current);
        if (kind_degree(t.kind) != 2) fail("bad-degree", "solve-d takes a current of degree two");
        if (!t.atoms.empty() && t.n != n) throw UsageError("current dimension does not match the domain");
        t.n = n;
        SmoothFormField te = mollify_current(t, make_mollifier(n, a.eps));
        T.support.center = pc;
        T.support.radius = ch.r1;
        if (te.support.radius > 0.0 && te.support.radius < ch.r1) {
            T.support.center = ch.chart(te.support.center);
            T.support.radius = te.support.radius;
        }
        LocalChart c = ch;
        T.eval = [te, c](const CPoint& z) { return te.eval(c.ambient(z)); };
    }
    CutoffSolution sol = cutoff_solve(s.chart, s.parts, s.cfg, T, a.R, a.closed_tol);

    ResidualReport rep;
    rep.n_lambda = s.cfg.n_lambda;
    rep.n_t = s.cfg.n_t;
    rep.points = static_cast<int>(s.grid.size());
    double scale = 0.0, se = 0.0, beta = 0.0;
    std::vector<double> res;
    std::vector<Coeffs> wv;
    std::vector<CPoint> amb;
    for (const auto& z : s.grid) {
        Coeffs t = T(z);
        Coeffs dw = fd_exterior_derivative(sol.w.eval, n, 1, z, 1e-3 * ch.delta(z));
        res.push_back(sup_norm(dw - t));
        scale = std::max(scale, sup_norm(t));
        se = std::max(se, sol.h_stderr(z));
        beta = std::max(beta, sup_norm(sol.beta(z)));
        wv.push_back(sol.w(z));
        amb.push_back(ch.ambient(z));
    }
    rep.scale = scale > 0.0 ? scale : 1.0;
    for (double v : res) {
        rep.max = std::max(rep.max, v / rep.scale);
        rep.mean += v / rep.scale / res.size();
    }
    rep.mc_stderr = se / rep.scale;

    Json r = residual_to_json(rep);
    r["chart"] = {{"p", point_to_json(ch.p)}, {"a", point_to_json(ch.a)}, {"r1", ch.r1}, {"r2", ch.r2},
                  {"eta1", ch.eta1}, {"depth_a", ch.depth_a}};
    r["c"] = s.cfg.c;
    r["R"] = sol.R;
    r["closedness"] = sol.closedness;
    r["sup_beta"] = beta;
    r["sup_T"] = scale;
    std::ostringstream csv;
    write_grid_csv(csv, amb, wv);
    out.extra("grid.csv", csv.str());
    out.emit(r, csv.str());
    return kOk;
}

// ---------------------------------------------------------------- verify

int run_verify(const Options& opt, const std::string& suite) {
    if (suite != "geometry" && suite != "carleson" && suite != "mollify" && suite != "homotopy")
        throw UsageError("unknown suite '" + suite + "' (geometry, carleson, mollify, homotopy)");
    Domain d = load_domain(opt.domain);
    Output out{opt, base_config(opt, d, "verify " + suite)};
    SuiteReport rep = run_suite(suite, d, parse_budget(opt.budget), opt.seed);
    Json r;
    r["suite"] = rep.suite;
    r["pass"] = rep.pass();
    Json checks = Json::array();
    std::string csv = "check,pass,value,bound,detail\n";
    for (const auto& c : rep.checks) {
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"bound", c.bound},
                          {"detail", c.detail}});
        std::ostringstream os;
        os.precision(17);
        os << c.name << ',' << (c.pass ? "pass" : "fail") << ',' << c.value << ',' << c.bound << ",\"" << c.detail
           << "\"\n";
        csv += os.str();
    }
    r["checks"] = checks;
    Json tables = Json::array();
    for (const auto& t : rep.tables) {
        tables.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows}});
        std::string tc;
        for (std::size_t i = 0; i < t.columns.size(); ++i) tc += (i ? "," : "") + t.columns[i];
        tc += "\n";
        for (const auto& row : t.rows) tc += csv_line(row);
        out.extra(slug(t.name) + ".csv", tc);
    }
    r["tables"] = tables;
    out.emit(r, csv);
    for (const auto& c : rep.checks)
        if (!c.pass) std::cerr << "invariant failed: " << c.name << ": " << c.detail << "\n";
    return rep.pass() ? kOk : kInvariant;
}

bool usage_code(const std::string& code) {
    return code == "bad-format" || code == "bad-degree" || code == "unknown-domain" || code == "unknown-suite" ||
           code == "bad-config";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local solutions of d on lineally convex domains"};
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;
    app.add_option("--domain", opt.domain, "ball, ball:3, ellipsoid:1,2 or a JSON file");
    app.add_option("--seed", opt.seed, "seed of every random stream");
    app.add_option("--budget", opt.budget, "small, default or large")
        ->check(CLI::IsMember({"small", "default", "large"}));
    app.add_option("--out", opt.out, "output prefix; writes PREFIX.json and CSV tables");
    app.add_option("--format", opt.format, "stdout format")->check(CLI::IsMember({"json", "csv"}));

    auto* geom = app.add_subcommand("geom", "tau, frame, distance or covering");
    geom->require_subcommand(1);
    GeomArgs ga;
    std::string query;
    auto* gtau = geom->add_subcommand("tau", "directional radius tau(point, dir, eps)");
    gtau->add_option("--point", ga.point)->required();
    gtau->add_option("--dir", ga.dir)->required();
    gtau->add_option("--eps", ga.eps)->required();
    auto* gframe = geom->add_subcommand("frame", "extremal frame at (point, eps)");
    gframe->add_option("--point", ga.point)->required();
    gframe->add_option("--eps", ga.eps)->required();
    auto* gdist = geom->add_subcommand("distance", "pseudo-distance d, or d1 with --d1");
    gdist->add_option("--point", ga.point)->required();
    gdist->add_option("--to", ga.to)->required();
    gdist->add_flag("--d1", ga.d1);
    auto* gcov = geom->add_subcommand("covering", "greedy covering of a boundary layer");
    gcov->add_option("--point", ga.point)->required();
    gcov->add_option("--radius", ga.radius);
    gcov->add_option("--depth-min", ga.depth_min);
    gcov->add_option("--depth-max", ga.depth_max);
    gcov->add_option("--max-count", ga.max_count);
    for (auto* sc : {gtau, gframe, gdist, gcov}) sc->callback([sc, &query] { query = sc->get_name(); });

    auto* norm = app.add_subcommand("norm", "Carleson norm of a discrete current file");
    NormArgs na;
    norm->add_option("--current", na.current)->required();
    norm->add_option("--scales", na.scales);
    norm->add_option("--s", na.s, "restrict scales to (s, eps0]");

    auto* solve = app.add_subcommand("solve-d", "local solution of dw = T near a boundary point");
    SolveArgs sa;
    solve->add_option("--current", sa.current, "discrete current of degree two");
    solve->add_option("--fixture", sa.fixture, "exact or zero");
    solve->add_option("--point", sa.point, "boundary point (projected)");
    solve->add_option("--eps", sa.eps, "mollifier scale for discrete input");
    solve->add_option("--grid", sa.grid, "points per axis of the W grid");
    solve->add_option("--closed-tol", sa.closed_tol);
    solve->add_option("--cutoff-radius", sa.R);

    auto* verify = app.add_subcommand("verify", "invariant suites");
    std::string suite;
    verify->add_option("suite", suite, "geometry, carleson, mollify or homotopy")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (geom->parsed()) return run_geom(opt, query, ga);
        if (norm->parsed()) return run_norm(opt, na);
        if (solve->parsed()) return run_solve(opt, sa);
        if (verify->parsed()) return run_verify(opt, suite);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage_code(e.code()) ? kUsage : kNumerical;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kUsage;
}
