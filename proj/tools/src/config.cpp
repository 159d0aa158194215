#include "fracbessel_cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fracbessel/errors.hpp"

namespace fracbessel::cli {

namespace {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

double parse_double(const std::string& raw, const std::string& what) {
    const std::string s = boost::trim_copy(raw);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError(what + ": '" + raw + "' is not a number");
    }
    return v;
}

std::size_t parse_count(const std::string& raw, const std::string& what) {
    const std::string s = boost::trim_copy(raw);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError(what + ": '" + raw + "' is not a non-negative integer");
    }
    return v;
}

bool parse_bool(const std::string& raw, const std::string& what) {
    const std::string s = boost::to_lower_copy(boost::trim_copy(raw));
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw ConfigError(what + ": '" + raw + "' is not a boolean");
}

// Read-once view of one INI section that rejects keys nobody asked for.
class Section {
public:
    Section(std::string name, const pt::ptree& tree) : name_(std::move(name)), tree_(tree) {
        for (const auto& [key, child] : tree_) {
            if (!child.empty()) throw ConfigError("[" + name_ + "]: nested keys are not supported");
            if (!keys_.insert(key).second) throw ConfigError("[" + name_ + "] " + key + ": duplicate key");
        }
    }

    bool has(const std::string& key) const { return keys_.count(key) != 0; }

    std::string text(const std::string& key) {
        used_.insert(key);
        return boost::trim_copy(tree_.get<std::string>(key));
    }
    std::string text(const std::string& key, const std::string& fallback) {
        return has(key) ? text(key) : fallback;
    }
    double number(const std::string& key, double fallback) {
        return has(key) ? parse_double(text(key), where(key)) : fallback;
    }
    double number(const std::string& key) {
        require(key);
        return parse_double(text(key), where(key));
    }
    std::size_t count(const std::string& key, std::size_t fallback) {
        return has(key) ? parse_count(text(key), where(key)) : fallback;
    }
    bool flag(const std::string& key, bool fallback) { return has(key) ? parse_bool(text(key), where(key)) : fallback; }
    std::vector<double> list(const std::string& key) {
        require(key);
        return parse_list(text(key), where(key));
    }

    std::vector<std::string> keys() const { return {keys_.begin(), keys_.end()}; }

    void finish() const {
        for (const auto& k : keys_) {
            if (!used_.count(k)) throw ConfigError("[" + name_ + "] " + k + ": unknown key");
        }
    }

    std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

private:
    void require(const std::string& key) const {
        if (!has(key)) throw ConfigError(where(key) + ": required");
    }

    std::string name_;
    const pt::ptree& tree_;
    std::set<std::string> keys_;
    std::set<std::string> used_;
};

XProfile read_x_profile(Section& s, BesselOrder nu) {
    const std::string kind = s.text("x_profile", "zero");
    const double scale = s.number("x_scale", 1.0);
    if (kind == "zero") return XProfile::zero();
    if (kind == "bessel_mode") {
        const std::size_t m = s.count("x_mode", 1);
        if (m == 0) throw ConfigError(s.where("x_mode") + ": modes are numbered from 1");
        return XProfile::bessel_mode(nu, m, scale);
    }
    if (kind == "polynomial") return XProfile::polynomial(s.number("x_p"), s.number("x_q"), scale);
    if (kind == "compliant") return XProfile::compliant(nu, scale);
    throw ConfigError(s.where("x_profile") + ": unknown profile '" + kind + "'");
}

TProfile read_t_profile(Section& s) {
    const std::string kind = s.text("t_profile", "constant");
    if (kind == "constant") return TProfile::constant(s.number("t_value", 1.0));
    if (kind == "polynomial") return TProfile::polynomial(s.list("t_coeffs"));
    if (kind == "sine") {
        return TProfile::sine(s.number("t_amplitude", 1.0), s.number("t_omega"), s.number("t_phase", 0.0));
    }
    if (kind == "exponential") return TProfile::exponential(s.number("t_amplitude", 1.0), s.number("t_rate"));
    throw ConfigError(s.where("t_profile") + ": unknown profile '" + kind + "'");
}

// One [source] or [source.<label>] section; returns false for kind = zero.
bool read_source_section(Section& s, BesselOrder nu, const fs::path& base, SourceFunction& out, bool first) {
    const std::string kind = s.text("kind", "separable");
    if (kind == "zero") return false;
    if (kind == "tabulated") {
        if (!first || !out.is_zero()) throw ConfigError(s.where("kind") + ": a tabulated source must be the only source");
        fs::path file = s.text("file");
        if (file.is_relative()) file = base / file;
        out = SourceFunction::tabulated(load_table(file));
        return true;
    }
    if (kind != "separable") throw ConfigError(s.where("kind") + ": unknown source kind '" + kind + "'");
    if (out.kind() == SourceFunction::Kind::tabulated) {
        throw ConfigError(s.where("kind") + ": a tabulated source must be the only source");
    }
    out.add(read_t_profile(s), read_x_profile(s, nu));
    return true;
}

void set_tolerance(SolverTolerances& tol, const std::string& name, double value, const std::string& where) {
    static const std::map<std::string, double SolverTolerances::*> fields{
        {"ml", &SolverTolerances::ml},
        {"quadrature", &SolverTolerances::quadrature},
        {"margin", &SolverTolerances::margin},
        {"mode_residual", &SolverTolerances::mode_residual},
        {"pde_residual", &SolverTolerances::pde_residual},
        {"nonlocal", &SolverTolerances::nonlocal},
        {"boundary", &SolverTolerances::boundary},
        {"tail", &SolverTolerances::tail},
    };
    const auto it = fields.find(name);
    if (it == fields.end()) throw ConfigError(where + ": unknown tolerance '" + name + "'");
    if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError(where + ": tolerances must be positive");
    if (name == "ml" && value < 1e-15) throw ConfigError(where + ": the Mittag-Leffler tolerance must be >= 1e-15");
    tol.*(it->second) = value;
}

}  // namespace

std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<std::string> parts;
    boost::split(parts, text, boost::is_any_of(","));
    std::vector<double> out;
    for (const auto& p : parts) out.push_back(parse_double(p, what));
    return out;
}

void apply_tolerance_override(SolverTolerances& tol, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("--tol " + assignment + ": expected name=value");
    const std::string name = boost::trim_copy(assignment.substr(0, eq));
    set_tolerance(tol, name, parse_double(assignment.substr(eq + 1), "--tol " + name), "--tol");
}

TabulatedSource load_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open table '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty table");
    boost::trim(line);
    std::vector<std::string> header;
    boost::split(header, line, boost::is_any_of(","));
    if (header.size() != 3 || boost::trim_copy(header[0]) != "t" || boost::trim_copy(header[1]) != "x") {
        throw ConfigError(path.string() + ": header must be 't,x,<value>'");
    }
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> v;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        boost::trim(line);
        if (line.empty()) continue;
        const auto cols = parse_list(line, path.string() + " line " + std::to_string(row));
        if (cols.size() != 3) throw ConfigError(path.string() + " line " + std::to_string(row) + ": expected 3 columns");
        if (t.empty() || cols[0] != t.back()) t.push_back(cols[0]);
        if (t.size() == 1) x.push_back(cols[1]);
        v.push_back(cols[2]);
    }
    if (t.size() < 2 || x.size() < 2 || v.size() != t.size() * x.size()) {
        throw ConfigError(path.string() + ": rows must form a full tensor grid of at least 2 x 2 nodes");
    }
    try {
        return TabulatedSource(std::move(t), std::move(x), std::move(v));
    } catch (const DomainError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

RunConfig default_config() {
    RunConfig c;
    c.problem.source = SourceFunction::separable(TProfile::constant(1.0), XProfile::compliant(c.problem.nu));
    c.problem.source.mark_theorem_compliant();
    return c;
}

RunConfig load_config(const fs::path& path) {
    pt::ptree tree;
    try {
        pt::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");

    static const std::set<std::string> known{"problem", "operator", "grid", "tolerances", "verify", "output", "check"};
    std::map<std::string, Section> sections;
    std::vector<std::string> source_names;
    for (const auto& [name, child] : tree) {
        if (child.empty() && !child.data().empty()) throw ConfigError("config: key '" + name + "' outside a section");
        if (name == "source" || boost::starts_with(name, "source.")) {
            source_names.push_back(name);
        } else if (!known.count(name)) {
            throw ConfigError("config: unknown section [" + name + "]");
        }
        sections.try_emplace(name, name, child);
    }
    auto section = [&](const std::string& name) -> Section& {
        static const pt::ptree empty;
        return sections.try_emplace(name, name, empty).first->second;
    };

    RunConfig c;
    ProblemSpec& p = c.problem;
    try {
        Section& prob = section("problem");
        p.nu = BesselOrder(prob.number("nu", 1.0));
        p.M = prob.number("M", 0.0);
        p.T = prob.number("T", 1.0);
        p.modes = prob.count("modes", kDefaultModes);
        p.threads = static_cast<unsigned>(prob.count("threads", 1));
        prob.finish();

        Section& op = section("operator");
        const double alpha = op.number("alpha");
        std::vector<std::pair<std::size_t, LowerOrderTerm>> terms;
        for (const auto& key : op.keys()) {
            if (key == "alpha") continue;
            if (!boost::starts_with(key, "term")) continue;
            const std::size_t index = parse_count(key.substr(4), op.where(key));
            const auto v = op.list(key);
            if (v.size() != 2) throw ConfigError(op.where(key) + ": expected 'lambda, order'");
            terms.emplace_back(index, LowerOrderTerm{v[0], v[1]});
        }
        op.finish();
        if (terms.size() > kMaxLowerOrderTerms) {
            throw ConfigError("[operator]: " + std::to_string(terms.size()) + " lower-order terms exceed the cap of " +
                              std::to_string(kMaxLowerOrderTerms));
        }
        std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<LowerOrderTerm> ordered;
        for (const auto& t : terms) ordered.push_back(t.second);
        p.op = TimeOperator(alpha, std::move(ordered));

        std::sort(source_names.begin(), source_names.end());
        bool first = true;
        bool compliant = false;
        for (const auto& name : source_names) {
            Section& s = section(name);
            if (name == "source") compliant = s.flag("theorem_compliant", false);
            read_source_section(s, p.nu, base, p.source, first);
            first = false;
            s.finish();
        }
        if (compliant) p.source.mark_theorem_compliant();

        Section& grid = section("grid");
        p.time_intervals = grid.count("time_intervals", p.time_intervals);
        p.time_stride = grid.count("time_stride", p.time_stride);
        p.residual_x_nodes = grid.count("residual_x_nodes", p.residual_x_nodes);
        if (grid.has("x_nodes")) {
            p.x_grid = grid.list("x_nodes");
        } else if (grid.has("x_count")) {
            const double lo = grid.number("x_min", 0.01);
            const double hi = grid.number("x_max", 1.0);
            const std::size_t n = grid.count("x_count", 100);
            if (n < 2 || !(lo < hi)) throw ConfigError("[grid]: need x_count >= 2 and x_min < x_max");
            for (std::size_t i = 0; i < n; ++i) {
                p.x_grid.push_back(i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
            }
        }
        grid.finish();

        Section& tol = section("tolerances");
        for (const auto& key : tol.keys()) {
            set_tolerance(p.tol, key, parse_double(tol.text(key), tol.where(key)), tol.where(key));
        }
        tol.finish();

        Section& verify = section("verify");
        p.verify = verify.flag("enabled", true);
        verify.finish();

        Section& output = section("output");
        if (output.has("dir")) {
            c.out_dir = output.text("dir");
            if (c.out_dir.is_relative()) c.out_dir = base / c.out_dir;
        }
        output.finish();

        Section& check = section("check");
        c.seed = check.count("seed", c.seed);
        if (check.has("suites")) {
            std::vector<std::string> names;
            const std::string raw = check.text("suites");
            boost::split(names, raw, boost::is_any_of(","));
            for (auto& n : names) {
                boost::trim(n);
                if (!n.empty()) c.suites.push_back(n);
            }
        }
        check.finish();

        p.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

}  // namespace fracbessel::cli
