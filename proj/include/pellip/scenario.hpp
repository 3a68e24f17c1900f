#pragma once

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <regex>

#include "potentials.hpp"

namespace pellip {

using json = nlohmann::ordered_json;

/// Field-level configuration error.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// "name(arg, ...)" split into the name and its arguments parsed as a JSON array.
struct PresetCall {
    std::string name;
    json args = json::array();
};

inline PresetCall parse_preset_call(const std::string& text, const std::string& field) {
    static const std::regex re(R"(^\s*([A-Za-z][A-Za-z0-9_\-]*)\s*(?:\((.*)\))?\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, re)) throw ConfigError(field + ": cannot parse preset '" + text + "'");
    PresetCall c;
    c.name = m[1];
    if (m[2].matched) {
        try {
            c.args = json::parse("[" + m[2].str() + "]");
        } catch (const json::parse_error&) {
            throw ConfigError(field + ": malformed arguments in '" + text + "'");
        }
    }
    return c;
}

struct PresetInfo {
    std::string kind;  // matrix | potential | bc
    std::string signature;
    std::string help;
};

inline const std::vector<PresetInfo>& builtin_presets() {
    static const std::vector<PresetInfo> v{
        {"matrix", "identity", "A = I"},
        {"matrix", "rotation(kappa)", "A = e^{i kappa} I"},
        {"matrix", "shear(s, phase)", "A = I + s e^{i phase} E_12 (2D only)"},
        {"matrix", "{\"matrix\": [[[re, im], ...], ...]}", "constant complex matrix"},
        {"potential", "zero", "V = 0"},
        {"potential", "hardy(power)", "V_- = dist(x, D)^-power, D = Dirichlet nodes, capped one cell from D"},
        {"potential", "well(depth, [x0, x1, y0, y1])", "V_- = depth on the box"},
        {"potential", "ridge(height, [x0, x1, y0, y1])", "V_+ = height on the box"},
        {"potential", "coulomb-like(c, [cx, cy], cap)", "V_- = min(c / |x - center|, cap)"},
        {"potential", "csv(path)", "signed nodal values in node order"},
        {"bc", "dirichlet", "all boundary nodes Dirichlet"},
        {"bc", "neumann", "no Dirichlet nodes"},
        {"bc", "mixed-left-edge", "Dirichlet on the x = x0 edge"},
    };
    return v;
}

/// Alias presets read from *.json files in a plugin directory:
/// {"name": ..., "kind": "matrix"|"potential"|"bc", "expands_to": <preset>}.
struct PresetRegistry {
    std::map<std::string, std::pair<std::string, json>> aliases;  // name -> (kind, expansion)

    static PresetRegistry load(const std::string& plugin_dir) {
        PresetRegistry r;
        if (plugin_dir.empty()) return r;
        namespace fs = std::filesystem;
        if (!fs::is_directory(plugin_dir)) throw ConfigError("plugins: not a directory: " + plugin_dir);
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(plugin_dir))
            if (e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::ifstream in(f);
            json j;
            try {
                j = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ConfigError("plugin " + f.string() + ": " + e.what());
            }
            if (!j.contains("name") || !j.contains("kind") || !j.contains("expands_to"))
                throw ConfigError("plugin " + f.string() + ": needs name, kind and expands_to");
            r.aliases[j["name"].get<std::string>()] = {j["kind"].get<std::string>(), j["expands_to"]};
        }
        return r;
    }

    json expand(const json& v, const std::string& kind) const {
        if (!v.is_string()) return v;
        const auto call = parse_preset_call(v.get<std::string>(), kind);
        auto it = aliases.find(call.name);
        if (it == aliases.end() || it->second.first != kind) return v;
        return it->second.second;
    }

    std::string listing() const {
        std::ostringstream os;
        for (const char* kind : {"matrix", "potential", "bc"}) {
            os << kind << ":\n";
            for (const auto& p : builtin_presets())
                if (p.kind == kind) os << "  " << p.signature << "    " << p.help << "\n";
            for (const auto& [name, a] : aliases)
                if (a.first == kind) os << "  " << name << "    alias for " << a.second.dump() << "\n";
        }
        return os.str();
    }
};

inline double arg_number(const PresetCall& c, std::size_t i, const std::string& field) {
    if (i >= c.args.size() || !c.args[i].is_number())
        throw ConfigError(field + ": " + c.name + " expects a number as argument " + std::to_string(i + 1));
    return c.args[i].get<double>();
}

inline void expect_arity(const PresetCall& c, std::size_t n, const std::string& field) {
    if (c.args.size() != n)
        throw ConfigError(field + ": " + c.name + " takes " + std::to_string(n) + " argument(s), got " +
                          std::to_string(c.args.size()));
}

inline CMat matrix_from_json(const json& m, int dim, const std::string& field) {
    if (!m.is_array() || static_cast<int>(m.size()) != dim)
        throw ConfigError(field + ": expected " + std::to_string(dim) + " rows");
    CMat A(dim, dim);
    for (int i = 0; i < dim; ++i) {
        if (!m[i].is_array() || static_cast<int>(m[i].size()) != dim)
            throw ConfigError(field + ": row " + std::to_string(i) + " must have " + std::to_string(dim) + " entries");
        for (int j = 0; j < dim; ++j) {
            const json& e = m[i][j];
            if (e.is_number()) A(i, j) = e.get<double>();
            else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
                A(i, j) = cplx(e[0].get<double>(), e[1].get<double>());
            else throw ConfigError(field + ": entry (" + std::to_string(i) + "," + std::to_string(j) + ") must be a number or [re, im]");
        }
    }
    return A;
}

inline MatrixField matrix_preset(const json& v, int dim, const std::string& field = "A") {
    if (v.is_object()) {
        if (!v.contains("matrix")) throw ConfigError(field + ": object form needs a 'matrix' entry");
        return MatrixField::constant(matrix_from_json(v["matrix"], dim, field + ".matrix"));
    }
    if (!v.is_string()) throw ConfigError(field + ": expected a preset string or {\"matrix\": ...}");
    const auto c = parse_preset_call(v.get<std::string>(), field);
    const CMat I = CMat::Identity(dim, dim);
    if (c.name == "identity") {
        expect_arity(c, 0, field);
        return MatrixField::constant(I);
    }
    if (c.name == "rotation") {
        expect_arity(c, 1, field);
        return MatrixField::constant(std::polar(1.0, arg_number(c, 0, field)) * I);
    }
    if (c.name == "shear") {
        expect_arity(c, 2, field);
        if (dim != 2) throw ConfigError(field + ": shear needs a 2D grid");
        CMat A = I;
        A(0, 1) = std::polar(arg_number(c, 0, field), arg_number(c, 1, field));
        return MatrixField::constant(A);
    }
    throw ConfigError(field + ": unknown matrix preset '" + c.name + "'");
}

inline BoundaryCondition bc_preset(const json& v, const Grid& g, const std::string& field = "bc") {
    if (!v.is_string()) throw ConfigError(field + ": expected dirichlet, neumann or mixed-left-edge");
    const auto c = parse_preset_call(v.get<std::string>(), field);
    if (c.name == "dirichlet") return BoundaryCondition::full_dirichlet(g);
    if (c.name == "neumann") return BoundaryCondition::neumann(g);
    if (c.name == "mixed-left-edge") return BoundaryCondition::mixed_left_edge(g);
    throw ConfigError(field + ": unknown boundary preset '" + c.name + "'");
}

inline Box box_arg(const PresetCall& c, std::size_t i, int dim, const std::string& field) {
    if (i >= c.args.size() || !c.args[i].is_array() || static_cast<int>(c.args[i].size()) != 2 * dim)
        throw ConfigError(field + ": " + c.name + " expects a region [x0, x1" + (dim == 2 ? ", y0, y1]" : "]"));
    Box b;
    for (int a = 0; a < dim; ++a) {
        b.lo[a] = c.args[i][2 * a].get<double>();
        b.hi[a] = c.args[i][2 * a + 1].get<double>();
    }
    return b;
}

inline Potential potential_preset(const json& v, const Grid& g, const BoundaryCondition& bc,
                                  const PresetRegistry& reg, const std::string& base_dir, const std::string& field = "V") {
    if (v.is_array()) {
        std::vector<Potential> parts;
        for (std::size_t i = 0; i < v.size(); ++i)
            parts.push_back(potential_preset(reg.expand(v[i], "potential"), g, bc, reg, base_dir,
                                             field + "[" + std::to_string(i) + "]"));
        return combine(parts, g.nodes());
    }
    auto resolve = [&](const std::string& p) {
        namespace fs = std::filesystem;
        return fs::path(p).is_absolute() || base_dir.empty() ? p : (fs::path(base_dir) / p).string();
    };
    if (v.is_object()) {
        if (v.contains("csv")) return potential_from_csv(g, resolve(v["csv"].get<std::string>()));
        throw ConfigError(field + ": object form needs a 'csv' entry");
    }
    if (!v.is_string()) throw ConfigError(field + ": expected a preset string, a list of presets or {\"csv\": path}");
    const auto c = parse_preset_call(v.get<std::string>(), field);
    if (c.name == "zero") return Potential::zero(g.nodes());
    if (c.name == "hardy") {
        expect_arity(c, 1, field);
        return hardy_preset(g, bc.dirichlet, arg_number(c, 0, field));
    }
    if (c.name == "well") {
        expect_arity(c, 2, field);
        return well_preset(g, arg_number(c, 0, field), box_arg(c, 1, g.dim, field));
    }
    if (c.name == "ridge") {
        expect_arity(c, 2, field);
        return ridge_preset(g, arg_number(c, 0, field), box_arg(c, 1, g.dim, field));
    }
    if (c.name == "coulomb-like") {
        expect_arity(c, 3, field);
        if (!c.args[1].is_array() || static_cast<int>(c.args[1].size()) != g.dim)
            throw ConfigError(field + ": coulomb-like center must have " + std::to_string(g.dim) + " coordinates");
        std::array<double, 2> ctr{c.args[1][0].get<double>(), g.dim == 2 ? c.args[1][1].get<double>() : 0.0};
        return coulomb_preset(g, arg_number(c, 0, field), ctr, arg_number(c, 2, field));
    }
    if (c.name == "csv") {
        if (c.args.size() != 1 || !c.args[0].is_string()) throw ConfigError(field + ": csv expects a quoted path");
        return potential_from_csv(g, resolve(c.args[0].get<std::string>()));
    }
    throw ConfigError(field + ": unknown potential preset '" + c.name + "'");
}

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> v{"ellipticity", "bellman", "subcritical", "semigroup", "bilinear"};
    return v;
}

struct Options {
    std::size_t bellman_samples = 20000;
    std::size_t contractivity_samples = 20;
    std::size_t bilinear_pairs = 10;
    std::vector<double> betas{0.0, 0.5, 0.9, 0.99};
    std::vector<double> t_grid = log_grid(1e-4, 1.0, 20);
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 1;
    Grid grid;
    json A_spec = "identity", V_spec = "zero", bc_spec = "dirichlet";
    MatrixField A;
    Potential V;
    BoundaryCondition bc;
    double p = 2.0;
    double delta = 0.05;
    std::optional<double> alpha;  // explicit perturbation strength; else the subcritical certificate
    std::optional<double> mu, sigma;
    std::vector<std::string> suites = suite_names();
    bool expect_pass = true;
    std::string output = "out";
    Options opt;
    json source;  // the configuration as read
};

namespace detail {

inline double get_number(const json& j, const std::string& key, const std::string& field) {
    if (!j[key].is_number()) throw ConfigError(field + ": expected a number");
    return j[key].get<double>();
}

inline int get_int(const json& j, const std::string& key, const std::string& field, int lo) {
    if (!j[key].is_number_integer() || j[key].get<long long>() < lo)
        throw ConfigError(field + ": expected an integer >= " + std::to_string(lo));
    return j[key].get<int>();
}

}  // namespace detail

inline Grid grid_from_json(const json& g) {
    if (!g.is_object()) throw ConfigError("grid: expected an object");
    for (const auto& [k, v] : g.items())
        if (k != "dim" && k != "nodes" && k != "extent" && k != "allow_large") throw ConfigError("grid." + k + ": unknown field");
    if (!g.contains("dim")) throw ConfigError("grid.dim: missing");
    const int dim = detail::get_int(g, "dim", "grid.dim", 1);
    if (dim > 2) throw ConfigError("grid.dim: must be 1 or 2");
    if (!g.contains("nodes")) throw ConfigError("grid.nodes: missing");
    std::array<int, 2> n{0, 1};
    const json& nj = g["nodes"];
    if (nj.is_number_integer()) {
        n = {nj.get<int>(), dim == 2 ? nj.get<int>() : 1};
    } else if (nj.is_array() && static_cast<int>(nj.size()) == dim) {
        for (int a = 0; a < dim; ++a) {
            if (!nj[a].is_number_integer()) throw ConfigError("grid.nodes: entries must be integers");
            n[a] = nj[a].get<int>();
        }
    } else {
        throw ConfigError("grid.nodes: expected an integer or one integer per axis");
    }
    const bool large = g.value("allow_large", false);
    for (int a = 0; a < dim; ++a) {
        if (n[a] < 3) throw ConfigError("grid.nodes: need at least 3 nodes per axis");
        if (n[a] > 64 && !large) throw ConfigError("grid.nodes: more than 64 per axis needs \"allow_large\": true");
    }
    std::array<std::array<double, 2>, 2> ext{{{0.0, 1.0}, {0.0, 1.0}}};
    if (g.contains("extent")) {
        const json& e = g["extent"];
        if (!e.is_array() || static_cast<int>(e.size()) != dim) throw ConfigError("grid.extent: expected one [lo, hi] per axis");
        for (int a = 0; a < dim; ++a) {
            if (!e[a].is_array() || e[a].size() != 2 || !e[a][0].is_number() || !e[a][1].is_number())
                throw ConfigError("grid.extent: expected [lo, hi] pairs");
            ext[a] = {e[a][0].get<double>(), e[a][1].get<double>()};
            if (!(ext[a][1] > ext[a][0])) throw ConfigError("grid.extent: need lo < hi");
        }
    }
    return dim == 1 ? Grid::line(n[0], ext[0][0], ext[0][1])
                    : Grid::rect(n[0], n[1], ext[0][0], ext[0][1], ext[1][0], ext[1][1]);
}

inline std::vector<double> number_list(const json& j, const std::string& field) {
    if (!j.is_array()) throw ConfigError(field + ": expected a list of numbers");
    std::vector<double> v;
    for (const auto& x : j) {
        if (!x.is_number()) throw ConfigError(field + ": expected a list of numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

inline Scenario scenario_from_json(const json& j, const PresetRegistry& reg = {}, const std::string& base_dir = "") {
    if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
    static const std::vector<std::string> known{"name", "seed", "grid", "A", "V", "bc", "p", "delta", "alpha",
                                                "mu", "sigma", "suites", "expect", "output", "options", "description"};
    for (const auto& [k, v] : j.items())
        if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError(k + ": unknown field");
    Scenario s;
    s.source = j;
    if (!j.contains("name") || !j["name"].is_string() || j["name"].get<std::string>().empty())
        throw ConfigError("name: missing or not a string");
    s.name = j["name"];
    if (j.contains("seed")) s.seed = static_cast<std::uint64_t>(detail::get_int(j, "seed", "seed", 0));
    if (!j.contains("grid")) throw ConfigError("grid: missing");
    s.grid = grid_from_json(j["grid"]);
    if (j.contains("bc")) s.bc_spec = reg.expand(j["bc"], "bc");
    s.bc = bc_preset(s.bc_spec, s.grid);
    if (j.contains("A")) s.A_spec = reg.expand(j["A"], "matrix");
    s.A = matrix_preset(s.A_spec, s.grid.dim);
    if (j.contains("V")) s.V_spec = reg.expand(j["V"], "potential");
    try {
        s.V = potential_preset(s.V_spec, s.grid, s.bc, reg, base_dir);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("V: ") + e.what());
    } catch (const std::runtime_error& e) {
        if (dynamic_cast<const ConfigError*>(&e)) throw;
        throw ConfigError(std::string("V: ") + e.what());
    }
    if (!j.contains("p")) throw ConfigError("p: missing");
    s.p = detail::get_number(j, "p", "p");
    if (!(s.p > 1)) throw ConfigError("p: must exceed 1");
    if (j.contains("delta")) {
        s.delta = detail::get_number(j, "delta", "delta");
        if (!(s.delta > 0 && s.delta < 1)) throw ConfigError("delta: must lie in (0, 1)");
    }
    if (j.contains("alpha") && !j["alpha"].is_null()) {
        s.alpha = detail::get_number(j, "alpha", "alpha");
        if (*s.alpha < 0) throw ConfigError("alpha: must be nonnegative");
    }
    if (j.contains("mu")) s.mu = detail::get_number(j, "mu", "mu");
    if (j.contains("sigma")) s.sigma = detail::get_number(j, "sigma", "sigma");
    if (j.contains("suites")) {
        const json& sj = j["suites"];
        if (sj.is_string() && sj.get<std::string>() == "all") {
            s.suites = suite_names();
        } else if (sj.is_array()) {
            s.suites.clear();
            for (const auto& x : sj) {
                if (!x.is_string()) throw ConfigError("suites: entries must be strings");
                const std::string n = x;
                if (std::find(suite_names().begin(), suite_names().end(), n) == suite_names().end())
                    throw ConfigError("suites: unknown suite '" + n + "'");
                s.suites.push_back(n);
            }
        } else {
            throw ConfigError("suites: expected \"all\" or a list");
        }
    }
    if (j.contains("expect")) {
        if (!j["expect"].is_string()) throw ConfigError("expect: expected \"pass\" or \"fail\"");
        const std::string e = j["expect"];
        if (e != "pass" && e != "fail") throw ConfigError("expect: expected \"pass\" or \"fail\"");
        s.expect_pass = e == "pass";
    }
    if (j.contains("output")) {
        if (!j["output"].is_string()) throw ConfigError("output: expected a path");
        s.output = j["output"];
    }
    if (j.contains("options")) {
        const json& o = j["options"];
        if (!o.is_object()) throw ConfigError("options: expected an object");
        for (const auto& [k, v] : o.items()) {
            const std::string f = "options." + k;
            if (k == "bellman_samples") s.opt.bellman_samples = detail::get_int(o, k, f, 1);
            else if (k == "contractivity_samples") s.opt.contractivity_samples = detail::get_int(o, k, f, 1);
            else if (k == "bilinear_pairs") s.opt.bilinear_pairs = detail::get_int(o, k, f, 1);
            else if (k == "betas") {
                s.opt.betas = number_list(v, f);
                for (double b : s.opt.betas)
                    if (b < 0 || b >= 1) throw ConfigError(f + ": each beta must lie in [0, 1)");
            } else if (k == "t_grid") {
                const auto t = number_list(v, f);
                if (t.size() != 3 || !(t[0] > 0) || !(t[1] > t[0]) || t[2] < 2)
                    throw ConfigError(f + ": expected [t_min, t_max, count] with 0 < t_min < t_max");
                s.opt.t_grid = log_grid(t[0], t[1], static_cast<int>(t[2]));
            } else {
                throw ConfigError(f + ": unknown option");
            }
        }
    }
    return s;
}

inline Scenario load_scenario(const std::string& path, const PresetRegistry& reg = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    return scenario_from_json(j, reg, std::filesystem::path(path).parent_path().string());
}

}  // namespace pellip
