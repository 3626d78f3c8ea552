// Command-line front end: design-point, scenario-list, contour, validate, mc-check.

#include "rst/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> output_dir;
    bool print = false;

    std::optional<int> starts;
    std::optional<std::string> target;
    std::optional<double> eta;
    std::optional<double> epsilon;
    std::optional<std::size_t> pool;
    std::optional<std::size_t> list;
    std::optional<int> resolution;
    std::optional<std::size_t> n_sims;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    cmd->add_option("--output-dir", o.output_dir, "directory for reports (overrides RST_OUTPUT_DIR and the config)");
    cmd->add_flag("--stdout", o.print, "also print the report to standard output");
}

rst::RunConfig build_config(const Overrides& o) {
    rst::RunConfig c = rst::load_config(o.config);
    if (o.seed) c.seed = c.solver.seed = *o.seed;
    if (o.threads) c.threads = c.solver.threads = *o.threads;
    if (o.starts) c.solver.n_starts = *o.starts;
    if (o.target) c.sets.target = *o.target == "neighbourhood" ? rst::TargetSet::Neighbourhood : rst::TargetSet::NearOptimal;
    if (o.eta) c.sets.eta = *o.eta;
    if (o.epsilon) c.sets.epsilon = *o.epsilon;
    if (o.pool) c.sets.pool_size = *o.pool;
    if (o.list) c.sets.list_size = *o.list;
    if (o.resolution) c.contour.resolution = *o.resolution;
    if (o.n_sims) c.mc.n_sims = *o.n_sims;
    return c;
}

fs::path output_dir(const Overrides& o, const rst::RunConfig& c) {
    if (o.output_dir) return *o.output_dir;
    if (const char* env = std::getenv("RST_OUTPUT_DIR"); env && *env) return env;
    return c.resolve(c.output_dir);
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw rst::InvalidInput("cannot write " + path.string());
    out << text;
}

int run(const std::string& command, const Overrides& o) {
    const rst::RunConfig config = build_config(o);
    const fs::path dir = output_dir(o, config);
    fs::create_directories(dir);

    rst::Outcome outcome;
    if (command == "design-point") {
        outcome = rst::run_design_point(config);
    } else if (command == "scenario-list") {
        outcome = rst::run_scenario_list(config);
    } else if (command == "contour") {
        const fs::path csv_path = dir / "contour.csv";
        std::ofstream csv(csv_path, std::ios::binary);
        if (!csv) throw rst::InvalidInput("cannot write " + csv_path.string());
        outcome = rst::run_contour(config, csv);
        outcome.report["grid"]["file"] = csv_path.filename().string();
    } else if (command == "validate") {
        outcome = rst::run_validate(config);
    } else {
        outcome = rst::run_mc_check(config);
    }

    std::string name = command;
    std::replace(name.begin(), name.end(), '-', '_');
    const fs::path report_path = dir / (name + ".json");
    const std::string text = outcome.report.dump(2) + "\n";
    write_file(report_path, text);
    if (o.print) std::cout << text;
    std::cerr << command << ": " << outcome.report.value("status", "ok") << " (report " << report_path.string() << ")\n";
    return outcome.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reverse stress testing: design points and scenario sets for a credit portfolio"};
    app.require_subcommand(1);
    Overrides o;

    auto* design = app.add_subcommand("design-point", "solve for the most plausible breach scenario");
    add_common(design, o);
    design->add_option("--starts", o.starts, "number of solver starts")->check(CLI::PositiveNumber);

    auto* list = app.add_subcommand("scenario-list", "build a diverse list of plausible breach scenarios");
    add_common(list, o);
    list->add_option("--starts", o.starts, "number of solver starts")->check(CLI::PositiveNumber);
    list->add_option("--target", o.target, "target set")->check(CLI::IsMember({"neighbourhood", "near-optimal"}));
    auto* eta = list->add_option("--eta", o.eta, "neighbourhood radius (squared Mahalanobis)");
    auto* eps = list->add_option("--epsilon", o.epsilon, "near-optimal slack");
    eta->excludes(eps);
    list->add_option("--pool", o.pool, "candidate pool size");
    list->add_option("--list", o.list, "number of scenarios to report");

    auto* contour = app.add_subcommand("contour", "write a 2-D grid of d^2, ratio, breach and set membership");
    add_common(contour, o);
    contour->add_option("--resolution", o.resolution, "grid points per axis");

    auto* validate = app.add_subcommand("validate", "load all inputs and run consistency checks");
    add_common(validate, o);

    auto* mc = app.add_subcommand("mc-check", "compare the analytic loss quantile with Monte Carlo");
    add_common(mc, o);
    mc->add_option("--n-sims", o.n_sims, "number of Monte Carlo scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : rst::exit_code::invalid_input;
    }
    if (o.eta && !o.target) o.target = "neighbourhood";
    if (o.epsilon && !o.target) o.target = "near-optimal";

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, o);
    } catch (const rst::InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return rst::exit_code::invalid_input;
    } catch (const rst::InfeasibleProblem& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return rst::exit_code::infeasible;
    } catch (const rst::NonConvergence& e) {
        std::cerr << "no convergence: " << e.what() << "\n";
        return rst::exit_code::non_convergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return rst::exit_code::failure;
    }
}
