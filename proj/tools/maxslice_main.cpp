/// maxslice CLI: runs scenario files and suites, lists available scenarios.
///
/// Subcommands:
///   run <file>    execute one scenario; exit 0 iff its assertions pass
///   suite <dir>   execute every *.json scenario in a directory
///   list [dir]    list scenario files with their task types
///
/// Common flags: --out <dir>, --seed <u64>, --grid-override NxM, --quiet.
/// MAXSLICE_THREADS caps suite parallelism.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "maxslice/scenario.hpp"

namespace {

std::optional<std::array<int, 2>> parse_grid_override(const std::string& text) {
    if (text.empty()) return std::nullopt;
    std::array<int, 2> out{0, 0};
    const auto x = text.find('x');
    if (x == std::string::npos) {
        out[0] = std::stoi(text);
        out[1] = out[0];
    } else {
        out[0] = std::stoi(text.substr(0, x));
        out[1] = std::stoi(text.substr(x + 1));
    }
    return out;
}

int cmd_list(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        std::string name = f.stem().string();
        std::string tasks;
        try {
            nlohmann::json j;
            in >> j;
            name = j.value("name", name);
            for (const auto& t : j.value("tasks", nlohmann::json::array())) {
                if (!tasks.empty()) tasks += ",";
                tasks += t.value("type", "?");
            }
        } catch (...) {
            tasks = "(unparseable)";
        }
        std::cout << name << "  [" << f.filename().string() << "]  " << tasks << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"maxslice: maximal spacelike hypersurface scenario runner"};
    app.require_subcommand(1);

    std::string out_dir = "out";
    std::string seed_text;
    std::string grid_text;
    bool quiet = false;
    app.add_option("--out", out_dir, "output directory for reports");
    app.add_option("--seed", seed_text, "override the scenario seed");
    app.add_option("--grid-override", grid_text, "grid override, e.g. 128 or 64x64");
    app.add_flag("--quiet", quiet, "suppress per-scenario output");

    std::string run_file;
    auto* run = app.add_subcommand("run", "run one scenario file");
    run->add_option("file", run_file, "scenario file")->required();

    std::string suite_dir;
    auto* suite = app.add_subcommand("suite", "run every scenario in a directory");
    suite->add_option("dir", suite_dir, "scenario directory")->required();

    std::string list_dir = "scenarios";
    auto* list = app.add_subcommand("list", "list scenarios in a directory");
    list->add_option("dir", list_dir, "scenario directory");

    CLI11_PARSE(app, argc, argv);

    maxslice::RunOptions options;
    options.out_dir = out_dir;
    options.quiet = quiet;
    if (!seed_text.empty()) options.seed_override = std::stoull(seed_text);
    try {
        options.grid_override = parse_grid_override(grid_text);
    } catch (const std::exception&) {
        std::cerr << "invalid --grid-override '" << grid_text << "'\n";
        return 2;
    }

    try {
        if (run->parsed()) {
            const maxslice::RunReport r = maxslice::run_scenario(run_file, options);
            return r.passed ? 0 : 1;
        }
        if (suite->parsed()) {
            const maxslice::SuiteReport s = maxslice::run_suite(suite_dir, options);
            if (!quiet) std::cout << "\n" << s.summary;
            for (const auto& err : s.hard_errors) std::cerr << "error: " << err << "\n";
            return s.passed ? 0 : 1;
        }
        if (list->parsed()) return cmd_list(list_dir);
    } catch (const maxslice::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
