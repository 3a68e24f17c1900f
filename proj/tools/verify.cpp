#include <CLI11.hpp>

#include <iostream>

#include <pellip/suites.hpp>

using namespace pellip;

namespace {

// Sets a dotted path ("grid.nodes", "options.betas") in a JSON object.
void set_path(json& j, const std::string& path, const json& value) {
    json* cur = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw ConfigError("--param: empty path component in '" + path + "'");
        if (dot == std::string::npos) {
            (*cur)[key] = value;
            return;
        }
        cur = &(*cur)[key];
        start = dot + 1;
    }
}

json parse_value(const std::string& s) {
    try {
        return json::parse(s);
    } catch (const json::parse_error&) {
        return s;
    }
}

// Splits on commas outside brackets and quotes.
std::vector<std::string> split_values(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    bool quoted = false;
    for (char c : s) {
        if (c == '"') quoted = !quoted;
        if (!quoted && (c == '[' || c == '{' || c == '(')) ++depth;
        if (!quoted && (c == ']' || c == '}' || c == ')')) --depth;
        if (c == ',' && depth == 0 && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void print_summary(const RunOutcome& o, const std::string& dir) {
    for (const auto& s : o.suites) {
        std::cout << (s.passed() ? "pass " : "FAIL ") << s.name;
        if (!s.error.empty()) std::cout << "  error: " << s.error;
        std::cout << "\n";
        for (const auto& c : s.checks)
            if (!c.passed) std::cout << "    " << (c.asserted ? "failed: " : "note: ") << c.name << "\n";
    }
    std::cout << o.report["name"].get<std::string>() << ": " << (o.passed ? "passed" : "failed") << " (expected "
              << o.report["expect"].get<std::string>() << ")  report: " << dir << "/report.json\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical checks for p-elliptic operators with potentials"};
    app.require_subcommand(1);
    std::string plugins;
    app.add_option("--plugins", plugins, "directory of alias preset files (*.json)");

    auto* run = app.add_subcommand("run", "run the suites of a scenario");
    std::string scenario_path, out_dir;
    bool parallel = false;
    std::vector<std::string> only;
    run->add_option("scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--out", out_dir, "output directory (default: the scenario's output field)");
    run->add_flag("--parallel", parallel, "run suites concurrently, writing per-suite reports");
    run->add_option("--suite", only, "restrict to these suites");

    app.add_subcommand("presets", "list matrix, potential and boundary presets");

    auto* sweep = app.add_subcommand("sweep", "rerun a scenario over values of one parameter");
    std::string sweep_scenario, param, values, sweep_out;
    sweep->add_option("scenario", sweep_scenario, "scenario file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--param", param, "dotted path, e.g. alpha or grid.nodes")->required();
    sweep->add_option("--values", values, "comma separated JSON values")->required();
    sweep->add_option("-o,--out", sweep_out, "output directory");
    sweep->add_flag("--parallel", parallel, "run suites concurrently");

    CLI11_PARSE(app, argc, argv);

    try {
        const PresetRegistry reg = PresetRegistry::load(plugins);
        if (app.got_subcommand("presets")) {
            std::cout << reg.listing();
            return 0;
        }
        if (app.got_subcommand("run")) {
            Scenario sc = load_scenario(scenario_path, reg);
            if (!only.empty()) {
                for (const auto& s : only)
                    if (std::find(suite_names().begin(), suite_names().end(), s) == suite_names().end())
                        throw ConfigError("--suite: unknown suite '" + s + "'");
                sc.suites = only;
            }
            const std::string dir = out_dir.empty() ? sc.output : out_dir;
            const auto o = run_scenario(sc, parallel);
            write_outputs(o, dir, parallel);
            print_summary(o, dir);
            return o.matches_expectation ? 0 : 1;
        }
        if (app.got_subcommand("sweep")) {
            std::ifstream in(sweep_scenario);
            json base;
            try {
                base = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
            }
            const std::string base_dir = std::filesystem::path(sweep_scenario).parent_path().string();
            const std::string root = sweep_out.empty() ? base.value("output", std::string("out")) + "/sweep" : sweep_out;
            std::filesystem::create_directories(root);
            std::ofstream summary(std::filesystem::path(root) / "sweep.csv");
            summary << "index,value,passed,matches_expectation\n";
            bool all = true;
            const auto list = split_values(values);
            for (std::size_t i = 0; i < list.size(); ++i) {
                json j = base;
                const json v = parse_value(list[i]);
                set_path(j, param, v);
                const Scenario sc = scenario_from_json(j, reg, base_dir);
                const std::string dir = (std::filesystem::path(root) / std::to_string(i)).string();
                const auto o = run_scenario(sc, parallel);
                write_outputs(o, dir, parallel);
                std::cout << "[" << param << " = " << v.dump() << "] ";
                print_summary(o, dir);
                summary << i << ",\"" << v.dump() << "\"," << o.passed << "," << o.matches_expectation << "\n";
                all = all && o.matches_expectation;
            }
            return all ? 0 : 1;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
