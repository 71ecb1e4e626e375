#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "lcx/carleson.hpp"
#include "lcx/domain.hpp"
#include "lcx/forms.hpp"
#include "lcx/homotopy.hpp"

namespace lcx {

using Json = nlohmann::ordered_json;

// Points as [re, im, re, im, ...].
Json point_to_json(const CPoint& z);
CPoint point_from_json(const Json& j);
// Complex numbers as [re, im]; plain numbers read as real.
Json complex_to_json(Complex c);
Complex complex_from_json(const Json& j);

// {name, params, constants{eta0, c0, delta1, eps0}}
Json domain_to_json(const Domain& d);
Domain domain_from_json(const Json& j);

// {degree, kind, atoms: [{z, coeffs}]}; kind is optional on input and inferred from degree and coefficient count.
Json current_to_json(const DiscreteCurrent& t);
DiscreteCurrent current_from_json(const Json& j);
DiscreteCurrent read_current(const std::string& path);

Json frame_to_json(const ExtremalFrame& f);
Json report_to_json(const CarlesonReport& r, bool with_tents = false);
// {max, mean, mc_stderr, budgets{n_lambda, n_t, points}}
Json residual_to_json(const ResidualReport& r);

// xi, eps, mass, area, ratio per tent.
void write_tent_csv(std::ostream& os, const CarlesonReport& r);
// One row per point: real coordinates, then re/im of every coefficient.
void write_grid_csv(std::ostream& os, const std::vector<CPoint>& points, const std::vector<Coeffs>& values);

// Fixed number formatting so equal inputs give byte-identical files.
std::string dump_json(const Json& j);

}  // namespace lcx
