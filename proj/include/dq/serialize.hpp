#pragma once

#include "dq/formal.hpp"
#include "dq/functional.hpp"
#include "dq/grid.hpp"

#include <json.hpp>

namespace dq {

using json = nlohmann::json;

json grid_to_json(const ModeGrid& g);
GridPtr grid_from_json(const json& j);

json mode_vector_to_json(const ModeVector& v);
ModeVector mode_vector_from_json(const json& j, GridPtr grid);

json cauchy_to_json(const CauchyData& d);
CauchyData cauchy_from_json(const json& j, GridPtr grid);

// {grid_hash, max_degree, terms: [{m, n, alpha, beta, re, im}]} with alpha
// the sorted abar mode indices and beta the sorted a mode indices.
json functional_to_json(const PolyFunctional& F);
PolyFunctional functional_from_json(const json& j, GridPtr grid);

// {dim, degree_cap, terms: [{n, out, in_multi_index, re, im}]}; the
// coefficient is that of the sorted multi-index monomial (tensor entry summed
// over slot orderings).
json formal_series_to_json(const FormalSeries& F);
FormalSeries formal_series_from_json(const json& j);

json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& j);

} // namespace dq
