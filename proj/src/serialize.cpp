#include "nhrf/serialize.hpp"

#include <algorithm>

namespace nhrf {

namespace {

Expr parse_in(const std::string& src, const Chart& c, const std::string& what) {
    try {
        return parse(src, c.names());
    } catch (const ExprError& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

Expr expr_value(const json& v, const Chart& c, const std::string& what) {
    if (v.is_number()) return num(v.get<double>());
    if (v.is_string()) return parse_in(v.get<std::string>(), c, what);
    throw ConfigError(what + ": expected an expression string or a number");
}

const json& need(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field \"") + key + "\"");
    return j.at(key);
}

double number_or(const json& j, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number()) throw ConfigError(std::string("\"") + key + "\" must be a number");
    return j.at(key).get<double>();
}

template <std::size_t K>
std::array<int, K> signatures(const json& j, std::array<int, K> dflt) {
    if (!j.contains("signatures")) return dflt;
    const json& s = j.at("signatures");
    if (!s.is_array() || s.size() != K)
        throw ConfigError("\"signatures\" needs " + std::to_string(K) + " entries");
    std::array<int, K> out{};
    for (std::size_t i = 0; i < K; ++i) {
        if (!s[i].is_number_integer() || (s[i].get<int>() != 1 && s[i].get<int>() != -1))
            throw ConfigError("signatures must be +1 or -1");
        out[i] = s[i].get<int>();
    }
    return out;
}

json matrix_to_json(const ExprMatrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (int k = 0; k < m.cols(); ++k) r.push_back(to_string(m(i, k)));
        rows.push_back(r);
    }
    return rows;
}

ExprMatrix matrix_from_json(const json& j, int rows, int cols, const Chart& c, const char* what) {
    if (!j.is_array() || int(j.size()) != rows) throw ConfigError(std::string(what) + ": wrong row count");
    ExprMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const json& r = j[std::size_t(i)];
        if (!r.is_array() || int(r.size()) != cols) throw ConfigError(std::string(what) + ": wrong column count");
        for (int k = 0; k < cols; ++k) m(i, k) = expr_value(r[std::size_t(k)], c, what);
    }
    return m;
}

Chart flow_chart4() { return chart4d({"chi"}); }
Chart flow_chart5() { return chart5d({"chi"}); }

}  // namespace

json chart_to_json(const Chart& c) {
    return json{{"n", c.n}, {"m", c.m}, {"coords", c.coords}, {"params", c.params},
                {"first_index", c.first_index}};
}

Chart chart_from_json(const json& j) {
    try {
        return Chart::make(need(j, "n").get<int>(), need(j, "m").get<int>(),
                           need(j, "coords").get<std::vector<std::string>>(),
                           j.value("params", std::vector<std::string>{}), j.value("first_index", 1));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("chart: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("chart: ") + e.what());
    }
}

json metric_to_json(const GeneratedMetric& g) {
    json ex = json::array();
    for (const auto& l : g.excluded)
        ex.push_back({{"label", l.label}, {"f", to_string(l.f)}, {"margin", l.margin}});
    return json{{"chart", chart_to_json(g.chart)},
                {"g", matrix_to_json(g.d.g)},
                {"h", matrix_to_json(g.d.h)},
                {"N", matrix_to_json(g.N.N)},
                {"provenance",
                 {{"family", g.provenance.family},
                  {"recipe_hash", g.provenance.recipe_hash},
                  {"chain", g.provenance.chain}}},
                {"excluded", ex}};
}

GeneratedMetric metric_from_json(const json& j) {
    GeneratedMetric g;
    g.chart = chart_from_json(need(j, "chart"));
    const int n = g.chart.n, m = g.chart.m;
    g.d.g = matrix_from_json(need(j, "g"), n, n, g.chart, "g");
    g.d.h = matrix_from_json(need(j, "h"), m, m, g.chart, "h");
    g.N = j.contains("N") ? NConnection{matrix_from_json(j.at("N"), n, m, g.chart, "N")}
                          : NConnection::zero(g.chart);
    try {
        if (j.contains("provenance")) {
            const json& p = j.at("provenance");
            g.provenance = {p.value("family", ""), p.value("recipe_hash", ""),
                            p.value("chain", std::vector<std::string>{})};
        }
        if (j.contains("excluded"))
            for (const auto& l : j.at("excluded"))
                g.excluded.push_back({need(l, "label").get<std::string>(),
                                      expr_value(need(l, "f"), g.chart, "excluded"),
                                      l.value("margin", 1e-9)});
    } catch (const json::exception& e) {
        throw ConfigError(std::string("metric: ") + e.what());
    }
    return g;
}

json coefficient_table(const Chart& c, const std::string& block, const Table3& t, int a0, int a1,
                       int b0, int b1, int c0, int c1) {
    json out = json::object();
    for (int a = a0; a < a1; ++a)
        for (int b = b0; b < b1; ++b)
            for (int k = c0; k < c1; ++k) {
                const Expr& e = t(a, b, k);
                if (e.is_zero()) continue;
                std::string key = std::to_string(a + c.first_index) + "," +
                                  std::to_string(b + c.first_index) + "," +
                                  std::to_string(k + c.first_index);
                out[key] = to_string(e);
            }
    return json{{block, out}};
}

json connection_to_json(const DConnection& conn) {
    const Chart& c = conn.geo.chart();
    const int n = c.n, D = c.dim();
    json out = json::object();
    for (const auto& part : {coefficient_table(c, "L_h", conn.Gamma, 0, n, 0, n, 0, n),
                             coefficient_table(c, "L_v", conn.Gamma, n, D, n, D, 0, n),
                             coefficient_table(c, "C_h", conn.Gamma, 0, n, 0, n, n, D),
                             coefficient_table(c, "C_v", conn.Gamma, n, D, n, D, n, D)})
        out.update(part);
    return out;
}

json report_to_json(const ResidualReport& r) {
    return json{{"equation", r.label}, {"max_abs", r.max_abs}, {"mean_abs", r.mean_abs},
                {"tolerance", r.tolerance}, {"points", r.points.size()}, {"pass", r.pass}};
}

std::vector<Point> grid_from_json(const json& j, const Chart& c, unsigned long long seed,
                                  int count_override) {
    if (!j.is_object()) throw ConfigError("grid: expected an object");
    const json& axes = need(j, "axes");
    if (!axes.is_object()) throw ConfigError("grid.axes: expected an object");
    Point fixed;
    if (j.contains("fixed"))
        for (const auto& [k, v] : j.at("fixed").items()) {
            if (!v.is_number()) throw ConfigError("grid.fixed." + k + ": expected a number");
            fixed[k] = v.get<double>();
        }
    std::vector<std::string> known = c.names();
    for (const auto& [k, v] : axes.items())
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw ConfigError("grid: unknown axis " + k);
    std::vector<Axis> ax;
    for (const auto& name : known) {
        if (!axes.contains(name)) continue;
        const json& a = axes.at(name);
        if (!a.is_array() || a.size() != 3 || !a[0].is_number() || !a[1].is_number() ||
            !a[2].is_number_integer())
            throw ConfigError("grid.axes." + name + ": expected [min, max, count]");
        Axis x{name, a[0].get<double>(), a[1].get<double>(), a[2].get<int>()};
        if (count_override > 0) x.count = count_override;
        if (x.count < 2) throw ConfigError("grid.axes." + name + ": count must be >= 2");
        if (!(x.max > x.min)) throw ConfigError("grid.axes." + name + ": max must exceed min");
        ax.push_back(x);
    }
    if (ax.empty()) throw ConfigError("grid: no axes");
    int random = j.value("random", 0);
    if (random > 0) return random_points(ax, std::size_t(random), seed, fixed);
    return Grid(ax, fixed).points();
}

Expr function_expr(const json& fns, const std::string& name, const Chart& c) {
    if (!fns.is_object() || !fns.contains(name)) throw ConfigError("functions: missing \"" + name + "\"");
    return expr_value(fns.at(name), c, "functions." + name);
}

std::vector<Expr> function_list(const json& fns, const std::string& name, const Chart& c,
                                std::size_t count) {
    if (!fns.is_object() || !fns.contains(name)) return std::vector<Expr>(count, num(0.0));
    const json& v = fns.at(name);
    if (!v.is_array()) return std::vector<Expr>(count, expr_value(v, c, "functions." + name));
    if (v.size() != count)
        throw ConfigError("functions." + name + ": need " + std::to_string(count) + " entries");
    std::vector<Expr> out;
    for (const auto& e : v) out.push_back(expr_value(e, c, "functions." + name));
    return out;
}

Source source_from_json(const json& j, const Chart& c) {
    if (j.is_string() && j.get<std::string>() == "vacuum") return Source::vacuum();
    if (!j.is_object()) throw ConfigError("source: expected \"vacuum\" or an object");
    if (j.contains("lambda")) {
        if (!j.at("lambda").is_number()) throw ConfigError("source.lambda: expected a number");
        return Source::cosmological(j.at("lambda").get<double>());
    }
    Source s;
    if (j.contains("Y2")) s.Y2 = expr_value(j.at("Y2"), c, "source.Y2");
    if (j.contains("Y4")) s.Y4 = expr_value(j.at("Y4"), c, "source.Y4");
    if (depends_on(s.Y4, "v")) throw ConfigError("source.Y4 must not depend on v");
    return s;
}

SolutionRecipe solution_recipe_from_json(const json& j, const Chart& c) {
    const json& f = need(j, "functions");
    SolutionRecipe r;
    r.eps = signatures<5>(j, {1, 1, 1, 1, 1});
    r.g2 = function_expr(f, "g2", c);
    r.g3 = function_expr(f, "g3", c);
    r.f = function_expr(f, "f", c);
    r.f0 = f.contains("f0") ? function_expr(f, "f0", c) : num(0.0);
    r.h0 = f.contains("h0") ? function_expr(f, "h0", c) : num(1.0);
    r.varsigma0 = f.contains("varsigma0") ? function_expr(f, "varsigma0", c) : num(1.0);
    r.n1 = function_list(f, "n1", c, std::size_t(c.n));
    r.n2 = function_list(f, "n2", c, std::size_t(c.n));
    r.v0 = number_or(j, "v0", 0.0);
    return r;
}

VacuumLCRecipe vacuum_lc_from_json(const json& j) {
    Chart c = chart4d();
    const json& f = need(j, "functions");
    VacuumLCRecipe r;
    r.eps = signatures<4>(j, {1, 1, 1, 1});
    r.psi = function_expr(f, "psi", c);
    r.b = function_expr(f, "b", c);
    r.b0 = f.contains("b0") ? function_expr(f, "b0", c) : num(0.0);
    r.n2 = f.contains("n2") ? function_expr(f, "n2", c) : num(0.0);
    r.n3 = f.contains("n3") ? function_expr(f, "n3", c) : num(0.0);
    r.h0 = number_or(j, "h0", 1.0);
    return r;
}

SourcedLCRecipe sourced_lc_from_json(const json& j) {
    Chart c = chart4d();
    const json& f = need(j, "functions");
    SourcedLCRecipe r;
    r.eps = signatures<2>(j, {1, 1});
    r.psi = function_expr(f, "psi", c);
    r.h4 = function_expr(f, "h4", c);
    r.h5 = function_expr(f, "h5", c);
    r.n2 = f.contains("n2") ? function_expr(f, "n2", c) : num(0.0);
    r.n3 = f.contains("n3") ? function_expr(f, "n3", c) : num(0.0);
    r.source = j.contains("source") ? source_from_json(j.at("source"), c) : Source::vacuum();
    return r;
}

Axis chi_from_json(const json& j) {
    if (!j.contains("chi")) return {"chi", 0.0, 1.0, 3};
    const json& x = j.at("chi");
    Axis a{"chi", number_or(x, "min", 0.0), number_or(x, "max", 1.0), x.value("count", 3)};
    if (a.count < 1) throw ConfigError("chi.count must be >= 1");
    return a;
}

Line2Reading line2_from_json(const json& j) {
    std::string s = j.value("line2", std::string("default"));
    if (s == "default") return Line2Reading::Default;
    if (s == "literal") return Line2Reading::Literal;
    throw ConfigError("line2: expected \"default\" or \"literal\"");
}

FlowRecipe flow_recipe_from_json(const json& j) {
    Chart c = flow_chart5();
    const json& f = need(j, "functions");
    FlowRecipe r;
    r.eps = signatures<3>(j, {1, 1, 1});
    r.varpi = function_expr(f, "varpi", c);
    r.h5 = function_expr(f, "h5", c);
    r.h0 = f.contains("h0") ? function_expr(f, "h0", c) : num(1.0);
    r.sigma40 = f.contains("sigma40") ? function_expr(f, "sigma40", c) : num(1.0);
    r.n1 = f.contains("n1") ? function_expr(f, "n1", c) : num(0.0);
    r.n2 = f.contains("n2") ? function_expr(f, "n2", c) : num(0.0);
    r.lambda = number_or(j, "lambda", 0.0);
    r.v0 = number_or(j, "v0", 1.0);
    r.chi = chi_from_json(j);
    return r;
}

LCFlowRecipe lc_flow_recipe_from_json(const json& j) {
    Chart c = flow_chart4();
    const json& f = need(j, "functions");
    LCFlowRecipe r;
    r.eps = signatures<2>(j, {1, 1});
    r.psi = function_expr(f, "psi", c);
    r.h4 = function_expr(f, "h4", c);
    r.h5 = function_expr(f, "h5", c);
    if (f.contains("w2") != f.contains("w3")) throw ConfigError("functions: give both w2 and w3 or neither");
    if (f.contains("w2")) {
        r.w2 = function_expr(f, "w2", c);
        r.w3 = function_expr(f, "w3", c);
    }
    r.n2 = f.contains("n2") ? function_expr(f, "n2", c) : num(0.0);
    r.lambda = number_or(j, "lambda", 0.0);
    r.chi = chi_from_json(j);
    return r;
}

KillingData killing_from_json(const json& j, const Chart& c) {
    if (!j.is_array() || j.size() != std::size_t(c.dim()))
        throw ConfigError("killing: need one covariant component per coordinate");
    KillingData k;
    for (const auto& e : j) k.xi.push_back(expr_value(e, c, "killing"));
    return k;
}

GerochPotentials potentials_from_json(const json& j, const Chart& c) {
    auto vec = [&](const char* key) {
        const json& v = need(j, key);
        if (!v.is_array() || v.size() != std::size_t(c.dim()))
            throw ConfigError(std::string("potentials.") + key + ": need " + std::to_string(c.dim()) + " entries");
        std::vector<Expr> out;
        for (const auto& e : v) out.push_back(expr_value(e, c, std::string("potentials.") + key));
        return out;
    };
    GerochPotentials p;
    p.omega = j.contains("omega") ? expr_value(j.at("omega"), c, "potentials.omega") : num(0.0);
    p.alpha = vec("alpha");
    p.mu = vec("mu");
    p.beta = j.contains("beta") ? vec("beta") : p.mu;
    return p;
}

Polarizations polarizations_from_json(const json& j, const Chart& c) {
    Polarizations p;
    auto list = [&](const char* key, int count) {
        std::vector<Expr> out;
        if (!j.contains(key)) return out;
        const json& v = j.at(key);
        if (!v.is_array() || int(v.size()) != count)
            throw ConfigError(std::string("polarizations.") + key + ": wrong size");
        for (const auto& e : v) out.push_back(expr_value(e, c, std::string("polarizations.") + key));
        return out;
    };
    p.eta_h = list("eta_h", c.n);
    p.eta_v = list("eta_v", c.m);
    if (j.contains("eta_N")) p.eta_N = matrix_from_json(j.at("eta_N"), c.n, c.m, c, "polarizations.eta_N");
    return p;
}

}  // namespace nhrf
