#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "nhrf/serialize.hpp"

namespace nhrf {

namespace fs = std::filesystem;

namespace {

json load_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

struct Loaded {
    json j;
    fs::path dir;  // relative references resolve here
};

Loaded load_config(const RunConfig& cfg) {
    if (cfg.config.empty()) throw ConfigError("--config is required");
    Loaded l{load_json(cfg.config), fs::path(cfg.config).parent_path()};
    if (!l.j.is_object()) throw ConfigError("config must be a JSON object");
    return l;
}

// "metric": "file.json" or an inline metric object
GeneratedMetric metric_ref(const json& ref, const fs::path& dir) {
    if (ref.is_string()) return metric_from_json(load_json(dir / ref.get<std::string>()));
    if (ref.is_object()) return metric_from_json(ref);
    throw ConfigError("metric reference must be a path or an object");
}

double tolerance(const RunConfig& cfg, const json& j, double dflt) {
    double t = cfg.tol ? *cfg.tol : j.value("tolerance", dflt);
    if (!(t > 0.0)) throw ConfigError("tolerance must be positive");
    return t;
}

std::vector<Point> grid(const RunConfig& cfg, const json& j, const Chart& c) {
    if (!j.contains("grid")) throw ConfigError("missing \"grid\"");
    return grid_from_json(j.at("grid"), c, cfg.seed, cfg.count);
}

// Loci that vanish identically make the recipe unusable on any grid.
void require_nondegenerate(const GeneratedMetric& g) {
    for (const auto& l : g.excluded)
        if (simplify(l.f).is_zero())
            throw DegenerateRecipe("recipe degenerate: " + l.label + " vanishes identically");
}

// Grid points on an excluded locus are evaluation failures for verify.
void require_evaluable(const GeneratedMetric& g, const std::vector<Point>& pts) {
    for (const auto& p : pts) {
        auto hit = Grid::violations(p, g.excluded);
        if (!hit.empty()) throw PointEvalError("singular metric (" + hit.front() + ")", p);
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw ConfigError("cannot write " + path);
    o << text;
}

void write_csv(const std::string& path, const std::vector<ResidualReport>& reps) {
    if (path.empty()) return;
    std::ostringstream s;
    write_csv_header(s);
    for (const auto& r : reps) write_csv_rows(s, r);
    write_text(path, s.str());
}

bool print_reports(std::ostream& out, const std::vector<ResidualReport>& reps) {
    bool ok = true;
    for (const auto& r : reps) {
        out << r.summary() << '\n';
        ok = ok && r.pass;
    }
    return ok;
}

void append(std::vector<ResidualReport>& to, std::vector<ResidualReport> from) {
    for (auto& r : from) to.push_back(std::move(r));
}

int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const FlowClassViolated& e) {
        err << "error: " << e.what() << '\n';
        return kResidualFail;
    } catch (const PotentialsNotVerified& e) {
        err << "error: " << e.what() << '\n';
        return kUnverified;
    } catch (const DegenerateRecipe& e) {
        err << "error: " << e.what() << '\n';
        return kDegenerate;
    } catch (const EvalError& e) {
        err << "error: evaluation failed: " << e.what() << '\n';
        return kEvalError;
    } catch (const ExprError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const json::exception& e) {
        err << "error: bad config: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kEvalError;
    }
}

std::string family_of(const json& j) {
    if (!j.contains("family") || !j.at("family").is_string()) throw ConfigError("missing \"family\"");
    return j.at("family").get<std::string>();
}

int generate_impl(const RunConfig& cfg, std::ostream& out) {
    Loaded l = load_config(cfg);
    const json& j = l.j;
    std::string fam = family_of(j);
    double tol = tolerance(cfg, j, 1e-8);
    GeneratedMetric m;
    std::vector<ResidualReport> reps;
    if (fam == "general_5d" || fam == "general_4d") {
        Chart c = fam == "general_5d" ? chart5d() : chart4d();
        SolutionRecipe r = solution_recipe_from_json(j, c);
        Source s = j.contains("source") ? source_from_json(j.at("source"), c) : Source::vacuum();
        m = fam == "general_5d" ? generate_5d(r, s) : generate_4d(r, s);
        require_nondegenerate(m);
        if (j.contains("grid")) {
            auto pts = grid(cfg, j, c);
            require_clear(m, pts);
            reps = recipe_checks(m, s, pts, tol, cfg.jobs);
        }
    } else if (fam == "vacuum_lc" || fam == "sourced_lc") {
        auto pts = grid(cfg, j, chart4d());
        LCResult res = fam == "vacuum_lc"
                           ? generate_vacuum_lc(vacuum_lc_from_json(j), pts, tol, cfg.jobs)
                           : generate_sourced_lc(sourced_lc_from_json(j), pts, tol,
                                                 line2_from_json(j), cfg.jobs);
        m = std::move(res.metric);
        reps = std::move(res.reports);
    } else {
        throw ConfigError("unknown family \"" + fam + "\"");
    }
    bool ok = print_reports(out, reps);
    std::string text = metric_to_json(m).dump(2) + "\n";
    if (cfg.out.empty())
        out << text;
    else
        write_text(cfg.out, text);
    return ok ? kPass : kResidualFail;
}

int verify_impl(const RunConfig& cfg, std::ostream& out) {
    Loaded l = load_config(cfg);
    const json& j = l.j;
    if (!j.contains("metric")) throw ConfigError("missing \"metric\"");
    GeneratedMetric m = metric_ref(j.at("metric"), l.dir);
    double tol = tolerance(cfg, j, 1e-8);
    auto pts = grid(cfg, j, m.chart);
    Source s = j.contains("source") ? source_from_json(j.at("source"), m.chart) : Source::vacuum();
    std::vector<std::string> checks = j.value("checks", std::vector<std::string>{"ricci"});
    require_evaluable(m, pts);

    std::vector<ResidualReport> reps;
    for (const auto& c : checks) {
        if (c == "ricci")
            append(reps, ansatz_ricci_reports(m, s, pts, tol, cfg.jobs));
        else if (c == "recipe")
            append(reps, recipe_checks(m, s, pts, tol, cfg.jobs));
        else if (c == "lc_compat")
            append(reps, check_lc_compatibility(m.chart, m.d, m.N, pts, tol, cfg.jobs));
        else if (c == "lc_ricci")
            reps.push_back(lc_ricci_residual(m, pts, tol, cfg.jobs));
        else if (c == "torsion")
            reps.push_back(max_abs_report(
                "torsion", all_entries(torsion(canonical_dconnection(m.chart, m.d, m.N)).T), pts,
                tol, cfg.jobs));
        else
            throw ConfigError("unknown check \"" + c + "\"");
    }
    bool ok = print_reports(out, reps);
    write_csv(cfg.out, reps);
    return ok ? kPass : kResidualFail;
}

// Summaries grouped by chi sample, in sample order.
void print_by_chi(std::ostream& out, const std::vector<ResidualReport>& reps,
                  const std::vector<double>& chis) {
    for (double chi : chis) {
        out << "[chi=" << format_real(chi) << "]\n";
        for (const auto& r : reps) {
            std::vector<Point> pts;
            std::vector<double> res;
            for (std::size_t i = 0; i < r.points.size() && i < r.residuals.size(); ++i) {
                auto it = r.points[i].find("chi");
                if (it != r.points[i].end() && it->second == chi) {
                    pts.push_back(r.points[i]);
                    res.push_back(r.residuals[i]);
                }
            }
            if (!pts.empty()) out << make_report(r.label, pts, res, r.tolerance).summary() << '\n';
        }
    }
}

int flow_impl(const RunConfig& cfg, std::ostream& out) {
    Loaded l = load_config(cfg);
    const json& j = l.j;
    std::string fam = family_of(j);
    double tol = tolerance(cfg, j, 1e-8);
    FlowFamily family;
    std::vector<ResidualReport> reps;
    std::vector<Point> base;
    if (fam == "solution") {
        FlowRecipe r = flow_recipe_from_json(j);
        base = grid(cfg, j, chart5d({"chi"}));
        FlowBuild b = build_flow_solution(r, base, tol, cfg.jobs);
        family = std::move(b.family);
        reps = std::move(b.reports);
    } else if (fam == "lc") {
        LCFlowRecipe r = lc_flow_recipe_from_json(j);
        base = grid(cfg, j, chart4d({"chi"}));
        LCFlowBuild b = build_lc_flow(r, base, tol, line2_from_json(j), cfg.jobs);
        family = std::move(b.family);
        reps = std::move(b.reports);
    } else if (fam == "metric") {
        if (!j.contains("metric")) throw ConfigError("missing \"metric\"");
        family.metric = metric_ref(j.at("metric"), l.dir);
        family.lambda = j.value("lambda", 0.0);
        family.chi = chi_from_json(j);
        base = grid(cfg, j, family.metric.chart);
    } else {
        throw ConfigError("unknown flow family \"" + fam + "\"");
    }
    auto chis = chi_samples(family.chi);
    auto pts = with_chi(base, chis);
    require_clear(family.metric, pts);
    append(reps, flow_residuals(family, pts, tol, cfg.jobs));

    print_by_chi(out, reps, chis);
    bool ok = true;
    for (const auto& r : reps) ok = ok && r.pass;
    out << "FLOW pass=" << (ok ? "true" : "false") << '\n';
    write_csv(cfg.out, reps);
    return ok ? kPass : kResidualFail;
}

int geroch_impl(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Loaded l = load_config(cfg);
    const json& j = l.j;
    if (!j.contains("seed")) throw ConfigError("missing \"seed\"");
    GeneratedMetric cur = metric_ref(j.at("seed"), l.dir);
    if (cur.chart.dim() == 5) cur = slice_4d(cur);
    const Chart chart = cur.chart;
    double tol = tolerance(cfg, j, 1e-8);
    auto pts = grid(cfg, j, chart);
    const json steps = j.value("steps", json::array());
    if (!steps.is_array()) throw ConfigError("\"steps\" must be an array");

    std::vector<ResidualReport> reps;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const json& st = steps[i];
        std::string kind = st.value("kind", "");
        if (kind == "geroch") {
            if (!st.contains("theta") || !st.at("theta").is_number())
                throw ConfigError("geroch step needs a numeric \"theta\"");
            if (!st.contains("killing") || !st.contains("potentials"))
                throw ConfigError("geroch step needs \"killing\" and \"potentials\"");
            double theta = st.at("theta").get<double>();
            GerochSeed seed = verify_geroch(cur, killing_from_json(st.at("killing"), chart),
                                            potentials_from_json(st.at("potentials"), chart), pts,
                                            tol, cfg.jobs);
            out << "[step " << i << " geroch theta=" << format_real(theta) << "]\n";
            print_reports(out, seed.reports);
            append(reps, seed.reports);
            if (!seed.verified) {
                err << "error: potentials not verified at step " << i << '\n';
                return kUnverified;
            }
            cur = apply_geroch(seed, theta);
        } else if (kind == "deform") {
            if (!st.contains("polarizations")) throw ConfigError("deform step needs \"polarizations\"");
            out << "[step " << i << " deform]\n";
            cur = nonholonomic_deform(cur, polarizations_from_json(st.at("polarizations"), chart), pts);
        } else {
            throw ConfigError("unknown step kind \"" + kind + "\"");
        }
    }

    bool ok = true;
    std::vector<std::string> checks = j.value("checks", std::vector<std::string>{});
    for (const auto& c : checks) {
        if (c != "lc_ricci") throw ConfigError("unknown check \"" + c + "\"");
        out << "[result]\n";
        ResidualReport r = lc_ricci_residual(cur, pts, tol, cfg.jobs);
        ok = print_reports(out, {r}) && ok;
        reps.push_back(std::move(r));
    }
    std::string text = metric_to_json(cur).dump(2) + "\n";
    if (cfg.out.empty())
        out << text;
    else
        write_text(cfg.out, text);
    return ok ? kPass : kResidualFail;
}

Point parse_point(const std::string& s) {
    Point p;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("--at expects name=value pairs");
        try {
            p[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
        } catch (const std::logic_error&) {
            throw ConfigError("--at: bad number in \"" + item + "\"");
        }
    }
    return p;
}

}  // namespace

int cmd_generate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] { return generate_impl(cfg, out); });
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] { return verify_impl(cfg, out); });
}

int cmd_flow(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] { return flow_impl(cfg, out); });
}

int cmd_geroch(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] { return geroch_impl(cfg, out, err); });
}

int cmd_expr_check(const ExprCheck& c, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        std::vector<std::string> vars = chart5d({"chi"}).names();
        Point at = parse_point(c.at);
        for (const auto& [k, v] : at)
            if (std::find(vars.begin(), vars.end(), k) == vars.end()) vars.push_back(k);
        Expr e = parse(c.expr, vars);
        Expr s = simplify(e);
        out << "parsed: " << to_string(e) << '\n';
        out << "simplified: " << to_string(s) << '\n';
        Expr d;
        if (!c.wrt.empty()) {
            d = simplify(diff(e, c.wrt));
            out << "d/d" << c.wrt << ": " << to_string(d) << '\n';
        }
        if (!c.at.empty()) {
            out << "value: " << format_real(eval(s, at)) << '\n';
            if (!c.wrt.empty()) out << "derivative: " << format_real(eval(d, at)) << '\n';
        }
        return int(kPass);
    });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"nonholonomic metric generator and residual checker", "nhrf_cli"};
    app.require_subcommand(1);

    RunConfig cfg;
    auto common = [&](CLI::App* s, bool metric_out) {
        s->add_option("--config", cfg.config, "JSON run description")->required();
        s->add_option("--out", cfg.out, metric_out ? "metric JSON output" : "CSV report output");
        s->add_option("--tol", cfg.tol, "tolerance override")->check(CLI::PositiveNumber);
        s->add_option("--jobs", cfg.jobs, "worker threads (0 = all cores)");
        s->add_option("--seed", cfg.seed, "seed for random point suites");
        s->add_option("--count", cfg.count, "points per grid axis")->check(CLI::Range(2, 100000));
    };
    auto* gen = app.add_subcommand("generate", "build a metric from a recipe");
    common(gen, true);
    auto* ver = app.add_subcommand("verify", "evaluate residuals of a metric on a grid");
    common(ver, false);
    auto* flo = app.add_subcommand("flow", "check a flow family per chi sample");
    common(flo, false);
    auto* ger = app.add_subcommand("geroch", "run a transform chain on a seed metric");
    common(ger, true);

    ExprCheck ec;
    auto* ex = app.add_subcommand("expr", "expression utilities");
    ex->require_subcommand(1);
    auto* chk = ex->add_subcommand("check", "parse, simplify, differentiate, evaluate");
    chk->add_option("expression", ec.expr)->required();
    chk->add_option("--wrt", ec.wrt, "differentiate with respect to");
    chk->add_option("--at", ec.at, "evaluation point, e.g. x2=1,v=0.5");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kPass : kConfigError;
    }
    if (*gen) return cmd_generate(cfg, out, err);
    if (*ver) return cmd_verify(cfg, out, err);
    if (*flo) return cmd_flow(cfg, out, err);
    if (*ger) return cmd_geroch(cfg, out, err);
    return cmd_expr_check(ec, out, err);
}

}  // namespace nhrf
