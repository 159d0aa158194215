#include "fracbessel_cli/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "fracbessel/errors.hpp"
#include "fracbessel/specfun.hpp"

namespace fracbessel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

// JSON has no infinities; those become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    return out;
}

json describe_problem(const ProblemSpec& p) {
    json terms = json::array();
    for (const auto& t : p.op.terms()) terms.push_back({{"lambda", t.lambda}, {"order", t.order}});
    json source;
    if (p.source.kind() == SourceFunction::Kind::tabulated) {
        const TabulatedSource* table = p.source.table();
        source = {{"kind", "tabulated"}, {"t_nodes", table->t_nodes().size()}, {"x_nodes", table->x_nodes().size()}};
    } else {
        json list = json::array();
        for (const auto& term : p.source.terms()) {
            list.push_back({{"time", term.time.description()}, {"space", term.space.description()}});
        }
        source = {{"kind", "separable"}, {"terms", list}};
    }
    source["theorem_compliant"] = p.source.theorem_compliant();
    return {
        {"nu", p.nu.value()},
        {"alpha", p.op.alpha()},
        {"lower_order_terms", terms},
        {"M", p.M},
        {"T", p.T},
        {"modes", p.modes},
        {"time_intervals", p.time_intervals},
        {"time_stride", p.time_stride},
        {"threads", p.threads},
        {"verify", p.verify},
        {"source", source},
        {"tolerances",
         {{"ml", p.tol.ml},
          {"quadrature", p.tol.quadrature},
          {"margin", p.tol.margin},
          {"mode_residual", p.tol.mode_residual},
          {"pde_residual", p.tol.pde_residual},
          {"nonlocal", p.tol.nonlocal},
          {"boundary", p.tol.boundary},
          {"tail", p.tol.tail}}},
    };
}

json resonant_list(const std::vector<ResonantMode>& modes) {
    json out = json::array();
    for (const auto& r : modes) {
        out.push_back({{"k", r.k},
                       {"u0_at_T", r.u0_at_T},
                       {"margin", r.margin},
                       {"forbidden_M", number(r.forbidden_M)}});
    }
    return out;
}

void write_solution(const SolutionGrid& g, const fs::path& path) {
    auto out = open_output(path);
    out << "t,x,u\n";
    for (std::size_t j = 0; j < g.t.size(); ++j) {
        const std::string t = format_double(g.t[j]);
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            out << t << ',' << format_double(g.x[i]) << ',' << format_double(g.at(j, i)) << '\n';
        }
    }
}

void write_modes(const SolutionGrid& g, const fs::path& path) {
    auto out = open_output(path);
    out << "k,gamma,max_abs_f,max_abs_U,u0_at_T,margin,forbidden_M,amplitude,residual,residual_all_nodes\n";
    for (const auto& m : g.modes) {
        out << m.k << ',' << format_double(m.gamma) << ',' << format_double(m.max_abs_f) << ','
            << format_double(m.max_abs_U) << ',' << format_double(m.u0_at_T) << ',' << format_double(m.margin)
            << ',' << format_double(m.forbidden_M) << ',' << format_double(m.amplitude) << ','
            << (m.verified ? format_double(m.residual.observed) : "") << ','
            << (m.verified ? format_double(m.residual.observed_all) : "") << '\n';
    }
}

json describe_grid(const SolutionGrid& g) {
    json modes = json::array();
    for (const auto& m : g.modes) {
        json entry{{"k", m.k},
                   {"gamma", m.gamma},
                   {"u0_at_T", m.u0_at_T},
                   {"margin", m.margin},
                   {"forbidden_M", number(m.forbidden_M)},
                   {"amplitude", m.amplitude},
                   {"max_abs_U", m.max_abs_U},
                   {"max_abs_f", m.max_abs_f}};
        if (m.verified) {
            entry["residual"] = {{"observed", m.residual.observed},
                                 {"observed_all_nodes", m.residual.observed_all},
                                 {"first_node", m.residual.first_node},
                                 {"tolerance", m.residual.tolerance},
                                 {"pass", m.residual.pass}};
        }
        modes.push_back(entry);
    }
    const FieldDiagnostics& f = g.field;
    json flux = json::array();
    for (std::size_t i = 0; i < f.flux_defect.size(); ++i) flux.push_back({{"x", f.flux_x[i]}, {"defect", f.flux_defect[i]}});
    json field{{"max_abs_u", f.max_abs_u},
               {"nonlocal_defect", f.nonlocal_defect},
               {"boundary_defect", f.boundary_defect},
               {"flux", flux},
               {"pde_residual", f.pde_residual},
               {"pde_scale", f.pde_scale},
               {"tail_indicator", f.tail_indicator},
               {"tail_exponent", f.tail_exponent},
               {"truncation_warning", f.truncation_warning}};
    if (f.has_initial_velocity) field["initial_velocity_defect"] = f.initial_velocity_defect;
    json checks = json::array();
    for (const auto& c : g.checks) {
        checks.push_back({{"name", c.name}, {"observed", c.observed}, {"tolerance", c.tolerance}, {"pass", c.pass}});
    }
    return {{"modes", modes}, {"field", field}, {"checks", checks}, {"warnings", g.warnings}};
}

void write_json(const json& j, const fs::path& path) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

void prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

}  // namespace

int run_solve(const RunConfig& config, std::ostream& log) {
    prepare_dir(config.out_dir);
    json diag{{"problem", describe_problem(config.problem)}};
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    const fs::path report = config.out_dir / "diagnostics.json";
    try {
        const SolutionGrid grid = assemble(config.problem);
        write_solution(grid, config.out_dir / "solution.csv");
        write_modes(grid, config.out_dir / "modes.csv");
        diag.update(describe_grid(grid));
        const bool pass = grid.all_checks_pass();
        diag["status"] = pass ? "ok" : "check_failed";
        diag["seconds"] = elapsed();
        write_json(diag, report);
        for (const auto& c : grid.checks) {
            log << (c.pass ? "PASS " : "FAIL ") << c.name << " observed=" << format_double(c.observed)
                << " tolerance=" << format_double(c.tolerance) << '\n';
        }
        for (const auto& w : grid.warnings) log << "warning: " << w << '\n';
        return pass ? kExitOk : kExitCheckFailed;
    } catch (const ResonanceError& e) {
        diag["status"] = "resonance";
        diag["message"] = e.what();
        diag["resonant_modes"] = resonant_list(e.modes());
        diag["seconds"] = elapsed();
        write_json(diag, report);
        log << "resonance: " << e.what() << '\n';
        for (const auto& r : e.modes()) {
            log << "  mode " << r.k << " U0(T)=" << format_double(r.u0_at_T) << " margin=" << format_double(r.margin)
                << " forbidden M=" << format_double(r.forbidden_M) << '\n';
        }
        return kExitResonance;
    } catch (const ConvergenceError& e) {
        diag["status"] = "nonconvergence";
        diag["message"] = e.what();
        diag["layers_used"] = e.layers_used();
        diag["last_magnitude"] = number(e.last_magnitude());
        diag["seconds"] = elapsed();
        write_json(diag, report);
        log << "non-convergence: " << e.what() << '\n';
        return kExitNonConvergence;
    }
}

int run_zeros(double nu, std::size_t count, std::ostream& out) {
    const BesselZeroTable table = bessel_zeros(BesselOrder(nu), count);
    out << "k,gamma\n";
    for (std::size_t k = 1; k <= table.size(); ++k) out << k << ',' << format_double(table.gamma(k)) << '\n';
    return kExitOk;
}

int run_ml(const MLParams& params, double tol, std::ostream& out) {
    const MLValue v = ml_multinomial(params, tol);
    out << "value,layers_used,tail_estimate\n"
        << format_double(v.value) << ',' << v.layers_used << ',' << format_double(v.tail_estimate) << '\n';
    return kExitOk;
}

}  // namespace fracbessel::cli
