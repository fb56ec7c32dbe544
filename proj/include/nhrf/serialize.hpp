#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nhrf/ansatz.hpp"
#include "nhrf/flow.hpp"
#include "nhrf/geroch.hpp"

namespace nhrf {

using json = nlohmann::ordered_json;

// Malformed or schema-violating input.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json chart_to_json(const Chart& c);
Chart chart_from_json(const json& j);

// {"chart", "g", "h", "N", "provenance", "excluded"}; expressions as strings.
json metric_to_json(const GeneratedMetric& g);
GeneratedMetric metric_from_json(const json& j);

// block name -> "i,j,k" -> expression, indices labelled from chart.first_index;
// zero entries omitted.
json coefficient_table(const Chart& c, const std::string& block, const Table3& t, int a0, int a1,
                       int b0, int b1, int c0, int c1);
json connection_to_json(const DConnection& conn);

json report_to_json(const ResidualReport& r);  // summary only, no per-point data

// Grid section: {"axes": {"x2": [min, max, count], ...}, "fixed": {...}, "random": n}.
// Axes follow chart order. A positive "random" draws that many uniform points
// with `seed` instead of the tensor grid. count_override > 0 replaces all counts.
std::vector<Point> grid_from_json(const json& j, const Chart& c, unsigned long long seed,
                                  int count_override = 0);

// Expressions in the recipe's "functions" object.
Expr function_expr(const json& fns, const std::string& name, const Chart& c);
std::vector<Expr> function_list(const json& fns, const std::string& name, const Chart& c,
                                std::size_t count);

Source source_from_json(const json& j, const Chart& c);
SolutionRecipe solution_recipe_from_json(const json& j, const Chart& c);
VacuumLCRecipe vacuum_lc_from_json(const json& j);
SourcedLCRecipe sourced_lc_from_json(const json& j);
FlowRecipe flow_recipe_from_json(const json& j);
LCFlowRecipe lc_flow_recipe_from_json(const json& j);
Axis chi_from_json(const json& j);
Line2Reading line2_from_json(const json& j);

KillingData killing_from_json(const json& j, const Chart& c);
// beta defaults to mu when absent
GerochPotentials potentials_from_json(const json& j, const Chart& c);
Polarizations polarizations_from_json(const json& j, const Chart& c);

}  // namespace nhrf
