// Command-line front-end: run or validate a JSON experiment config.
//
// Exit codes:
//   0  success
//   1  I/O failure or unexpected error
//   2  config schema problem (diagnostics name the offending keys)
//   3  requested constraint level unreachable for the problem
//   4  numerical failure while evaluating statistics or solving

#include <cstdint>
#include <iostream>

#include "CLI11.hpp"

#include "jointdet/experiment.hpp"

namespace {

int validate_main(const std::string& config_path) {
    const auto cfg = jointdet::experiment::load_config(config_path);
    const auto issues = jointdet::experiment::validate_config(cfg);
    if (issues.empty()) {
        std::cout << "config is valid: " << config_path << "\n";
        return 0;
    }
    std::cout << issues.size() << " problem" << (issues.size() == 1 ? "" : "s")
              << " found in " << config_path << ":\n";
    for (const auto& d : issues)
        std::cout << "  " << (d.path.empty() ? "<root>" : d.path) << ": " << d.message
                  << "\n";
    return 2;
}

int run_main(const std::string& config_path, const jointdet::experiment::Options& opt) {
    const auto cfg = jointdet::experiment::load_config(config_path);
    const auto rep = jointdet::experiment::run_config(cfg, opt);
    for (const auto& line : rep.lines) std::cout << line << "\n";
    for (const auto& file : rep.files) std::cout << "wrote: " << file << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-sample joint detection and parameter estimation experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    double alpha = 0.0;
    std::string output;

    CLI::App* run = app.add_subcommand("run", "run the experiment described by a config");
    run->add_option("--config", config_path, "path to a JSON config")->required();
    run->add_option("--seed", seed, "override the config's random seed");
    run->add_option("--samples", samples, "override the Monte Carlo sample budget");
    run->add_option("--alpha", alpha, "override the target constraint level");
    run->add_option("--output", output, "override the output directory");

    CLI::App* validate =
        app.add_subcommand("validate", "check a config and list schema problems");
    validate->add_option("--config", config_path, "path to a JSON config")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return validate_main(config_path);
        jointdet::experiment::Options opt;
        if (run->count("--seed")) opt.seed = seed;
        if (run->count("--samples")) opt.samples = samples;
        if (run->count("--alpha")) opt.alpha = alpha;
        if (run->count("--output")) opt.output = output;
        return run_main(config_path, opt);
    } catch (const jointdet::infeasible& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const jointdet::numerical_domain& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const jointdet::undefined_statistic& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const jointdet::precondition_violation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const jointdet::instance_too_large& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const jointdet::invalid_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const jointdet::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
