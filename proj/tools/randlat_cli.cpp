// Command-line front end: one subcommand per experiment kind, plus a
// validate-only pass. Exit codes: 0 success, 2 spec violation, 3 numerical
// precondition failure, 4 I/O failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "randlat/experiment.hpp"

namespace {

randlat::json load_spec(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::ios_base::failure("cannot read spec file: " + path);
    randlat::json spec;
    try {
        is >> spec;
    } catch (const std::exception& e) {
        throw randlat::SchemaError({std::string("spec is not valid JSON: ") + e.what()});
    }
    return spec;
}

struct Options {
    std::string spec_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

int run_kind(const std::string& kind, const Options& opt) {
    randlat::json spec = load_spec(opt.spec_path);
    if (spec.contains("kind") && spec["kind"] != kind)
        throw randlat::SchemaError({"$.kind: spec says '" +
                                    spec["kind"].get<std::string>() +
                                    "' but the subcommand is '" + kind + "'"});
    spec["kind"] = kind;
    auto manifest = randlat::run_experiment(spec, opt.out_dir, opt.seed, opt.threads);
    std::cout << "wrote " << manifest.outputs.size() << " output file(s)";
    if (!opt.out_dir.empty()) std::cout << " under " << opt.out_dir;
    std::cout << " in " << manifest.wall_clock_seconds << " s\n";
    for (const auto& o : manifest.outputs)
        std::cout << "  " << o.file << "  (" << o.bytes << " bytes)\n";
    return 0;
}

int validate_only(const Options& opt) {
    randlat::json spec = load_spec(opt.spec_path);
    auto errs = randlat::validate_spec(spec);
    if (errs.empty()) {
        std::cout << "ok\n";
        return 0;
    }
    std::cerr << "spec has " << errs.size() << " violation(s):\n";
    for (const auto& e : errs) std::cerr << "  - " << e << "\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic lattice experiments: sampling, statistics, geometry, energies"};
    app.require_subcommand(1);

    Options opt;
    std::string active;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--spec", opt.spec_path, "experiment spec file (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        if (needs_out) cmd->add_option("--out", opt.out_dir, "output directory");
        cmd->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t s) { opt.seed = s; }, "master seed override");
        cmd->add_option_function<unsigned>(
            "--threads", [&](unsigned t) { opt.threads = t; },
            "worker threads (0 = hardware)");
    };

    for (const std::string& kind : randlat::experiment_kinds()) {
        auto* cmd = app.add_subcommand(kind, "run a '" + kind + "' experiment");
        add_common(cmd, true);
        cmd->callback([&active, kind] { active = kind; });
    }
    auto* val = app.add_subcommand("validate", "validate a spec file without running it");
    add_common(val, false);
    val->callback([&active] { active = "validate"; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (active == "validate") return validate_only(opt);
        return run_kind(active, opt);
    } catch (const randlat::SchemaError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "precondition failed: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "precondition failed: " << e.what() << "\n";
        return 3;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "i/o failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
