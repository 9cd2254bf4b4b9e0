// Experiment driver. Subcommands cover the full pipeline: train, sparse,
// uq, reference, report, preset. Exit codes: 0 success, 2 configuration
// or schema error, 3 non-finite arithmetic, 4 iteration cap reached
// without convergence, 5 I/O failure, 1 anything else.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pc2/errors.hpp"
#include "pc2/experiment.hpp"
#include "pc2/reference.hpp"
#include "pc2/surrogate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNonFinite = 3;
constexpr int kExitIterationCap = 4;
constexpr int kExitIo = 5;

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::string out_dir;
    std::string cache_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config = true) {
    auto* config =
        cmd->add_option("--config", args.config_path, "Experiment config file");
    auto* preset =
        cmd->add_option("--preset", args.preset, "Shipped experiment preset");
    config->excludes(preset);
    if (needs_config) {
        // one of the two must identify the experiment
        cmd->callback([&args, cmd] {
            if (args.config_path.empty() && args.preset.empty())
                throw CLI::ValidationError(cmd->get_name(),
                                           "needs --config or --preset");
        });
    }
    cmd->add_option("--seed", args.seed, "Override the config seed");
    cmd->add_option("--out", args.out_dir, "Output directory override");
    cmd->add_option("--cache-dir", args.cache_dir,
                    "Reference solution cache (default: PC2_CACHE_DIR or "
                    "pc2-cache)");
    cmd->add_option("--threads", args.threads,
                    "Worker threads for per-sample reference solves");
}

std::string effective_cache_dir(const CommonArgs& args) {
    if (!args.cache_dir.empty()) return args.cache_dir;
    if (const char* env = std::getenv("PC2_CACHE_DIR"); env && *env) return env;
    return "pc2-cache";
}

pc2::Json load_config(const CommonArgs& args) {
    if (!args.preset.empty()) return pc2::preset_config(args.preset);
    std::ifstream in(args.config_path);
    if (!in) throw pc2::IoError("cannot read config " + args.config_path);
    try {
        pc2::Json j;
        in >> j;
        return j;
    } catch (const pc2::Json::parse_error& e) {
        throw pc2::SchemaError("config " + args.config_path + ": " + e.what());
    }
}

pc2::Experiment load_experiment(const CommonArgs& args) {
    pc2::set_data_generation_threads(args.threads);
    return pc2::build_experiment(load_config(args), effective_cache_dir(args),
                                 args.seed);
}

std::string out_dir_for(const pc2::Experiment& exp, const CommonArgs& args) {
    return args.out_dir.empty() ? exp.report.out_dir : args.out_dir;
}

void print_losses(const pc2::LossBreakdown& losses) {
    std::cout << "  data " << losses.data << ", pde " << losses.pde << ", ic "
              << losses.ic << ", bc " << losses.bc;
    for (std::size_t i = 0; i < losses.inequality.size(); ++i)
        std::cout << ", ineq" << i << " " << losses.inequality[i];
    std::cout << ", total " << losses.total << "\n";
}

int finish_training(const pc2::TrainResult& result, const std::string& out) {
    std::cout << "model: " << out << "/model.pc2 (" << result.model.terms()
              << " terms)\n";
    std::cout << "iterations " << result.iterations << ", evaluations "
              << result.function_evaluations
              << (result.converged ? ", converged" : ", not converged")
              << (result.line_search_stalled ? " (line search stalled)" : "")
              << "\n";
    print_losses(result.losses);
    if (!result.converged && result.hit_iteration_cap) {
        std::cerr << "pc2: stopped at the iteration cap before reaching the "
                     "gradient tolerance\n";
        return kExitIterationCap;
    }
    return kExitOk;
}

int cmd_train(const CommonArgs& args) {
    const pc2::Experiment exp = load_experiment(args);
    const std::string out = out_dir_for(exp, args);
    const pc2::TrainResult result = pc2::run_train(exp, out);
    return finish_training(result, out);
}

int cmd_sparse(const CommonArgs& args) {
    const pc2::Experiment exp = load_experiment(args);
    const std::string out = out_dir_for(exp, args);
    const pc2::SparseResult result = pc2::run_sparse(exp, out);
    std::cout << "sparse path: " << result.path.size() << " candidate sizes, "
              << (result.reached_target ? "target reached"
                                        : "target not reached")
              << ", kept " << result.selected.size() << " terms\n";
    return finish_training(result.best, out);
}

int cmd_uq(const CommonArgs& args, const std::string& model_path) {
    const pc2::Experiment exp = load_experiment(args);
    const std::string out = out_dir_for(exp, args);
    pc2::SurrogateModel model;
    if (!model_path.empty()) {
        model = pc2::load_model(model_path);
    } else if (exp.sparse_enabled) {
        model = pc2::run_sparse(exp, out).best.model;
    } else {
        model = pc2::run_train(exp, out).model;
    }
    pc2::run_uq(exp, model, out);
    std::cout << "uq outputs written under " << out << "\n";
    return kExitOk;
}

/// Quick analytic sanity checks of the reference solvers; the rigorous
/// versions live in the test suite. Returns false on any mismatch.
bool reference_self_test() {
    bool ok = true;
    const double pi = std::numbers::pi;

    // Heat: Neumann re-expansion of sin(4 pi x) in cosines, evaluated at
    // the domain center where only even cosine modes contribute.
    {
        pc2::Heat2dParams p;
        p.alpha = 0.01;
        p.nx = p.ny = 65;
        p.nt = 200;
        const pc2::Heat2dSolution sol = pc2::heat2d_solve(p);
        const auto series = [&](double x, double t) {
            double s = 0.0;
            for (int m = 1; m <= 41; m += 2) {
                const double b = 16.0 / (pi * (16.0 - m * m));
                s += b * std::exp(-m * m * pi * pi * p.alpha * t) *
                     std::cos(m * pi * x);
            }
            return 0.5 * s;
        };
        const double got = sol.at(0.3, 0.7, 1.0);
        const double want = series(0.3, 1.0) + series(0.7, 1.0);
        const double err = std::abs(got - want);
        std::cout << "heat2d   u(0.3,0.7,1) = " << got << " vs series " << want
                  << " (|err| " << err << ")\n";
        ok = ok && err < 2e-4;
    }

    // Burgers at nu = 0.1 against the Cole-Hopf Fourier series.
    {
        pc2::BurgersParams p;
        p.nu = 0.1;
        const pc2::BurgersSolution sol = pc2::burgers_solve(p);
        const auto cole_hopf = [&](double x, double t) {
            const double z = 1.0 / (2.0 * pi * p.nu);
            double num = 0.0, den = std::cyl_bessel_i(0, z);
            for (int n = 1; n <= 40; ++n) {
                const double in = std::cyl_bessel_i(n, z);
                const double decay = std::exp(-n * n * pi * pi * p.nu * t);
                num += 2.0 * in * decay * n * std::sin(n * pi * x);
                den += 2.0 * in * decay * std::cos(n * pi * x);
            }
            return 2.0 * pi * p.nu * num / den;
        };
        const double got = sol.at(0.5, 0.3);
        const double want = cole_hopf(0.5, 0.3);
        const double err = std::abs(got - want);
        std::cout << "burgers  u(0.5,0.3) = " << got << " vs Cole-Hopf " << want
                  << " (|err| " << err << ")\n";
        ok = ok && err < 1e-4;
    }

    // Beam with constant modulus against the closed-form deflection.
    {
        pc2::BeamParams p;
        p.modulus = [](double) { return 8e10; };
        const pc2::BeamSolution sol = pc2::beam_solve(p);
        const double want = 5.0 * p.load * std::pow(p.length, 4) /
                            (384.0 * 8e10 * p.inertia);
        const double got = sol.at(0.5 * p.length);
        const double err = std::abs(got - want);
        std::cout << "beam     w(L/2) = " << got << " vs closed form " << want
                  << " (|err| " << err << ")\n";
        ok = ok && err < 1e-3 * std::abs(want);
    }

    std::cout << (ok ? "self-test passed\n" : "self-test FAILED\n");
    return ok;
}

int cmd_reference(const CommonArgs& args, bool self_test) {
    if (self_test) return reference_self_test() ? kExitOk : kExitFailure;
    const pc2::Experiment exp = load_experiment(args);
    const std::string out = out_dir_for(exp, args);
    const pc2::ReferenceRun run =
        pc2::run_reference(exp, out, effective_cache_dir(args));
    std::cout << "cache key: " << run.cache_key
              << (run.cache_hit ? " (hit)" : " (computed)") << "\n"
              << "field: " << run.csv_path << "\n";
    return kExitOk;
}

int cmd_report(const std::string& run_root, const std::string& out_dir) {
    const std::string out = out_dir.empty() ? run_root : out_dir;
    pc2::run_report(run_root, out);
    std::cout << "report: " << out << "/report.md\n";
    return kExitOk;
}

int cmd_preset(const std::string& name, const std::string& out_path) {
    if (name.empty()) {
        for (const std::string& p : pc2::preset_names()) std::cout << p << "\n";
        return kExitOk;
    }
    const pc2::Json config = pc2::preset_config(name);
    if (out_path.empty()) {
        std::cout << config.dump(2) << "\n";
        return kExitOk;
    }
    const std::filesystem::path path(out_path);
    if (!path.parent_path().empty())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw pc2::IoError("cannot write " + out_path);
    out << config.dump(2) << "\n";
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Physics-constrained polynomial chaos surrogates"};
    app.require_subcommand(1);

    CommonArgs train_args, sparse_args, uq_args, ref_args;
    std::string uq_model, report_root, report_out, preset_name, preset_out;
    bool self_test = false;

    add_common(app.add_subcommand("train", "Train a full-basis surrogate"),
               train_args);
    add_common(app.add_subcommand("sparse", "Train a basis-adaptive surrogate"),
               sparse_args);

    CLI::App* uq =
        app.add_subcommand("uq", "Moments, Sobol indices and PDFs of a model");
    add_common(uq, uq_args);
    uq->add_option("--model", uq_model,
                   "Existing model file (default: train first)");

    CLI::App* ref =
        app.add_subcommand("reference", "Solve and cache the reference problem");
    add_common(ref, ref_args, false);
    ref->add_flag("--self-test", self_test,
                  "Check the solvers against analytic solutions and exit");

    CLI::App* rep = app.add_subcommand("report", "Consolidate run summaries");
    rep->add_option("run_root", report_root, "Directory tree with run outputs")
        ->required();
    rep->add_option("--out", report_out, "Report output directory");

    CLI::App* pre = app.add_subcommand("preset", "Print or save a preset config");
    pre->add_option("name", preset_name, "Preset name (omit to list)");
    pre->add_option("--out", preset_out, "Write the config to this file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("train")) return cmd_train(train_args);
        if (app.got_subcommand("sparse")) return cmd_sparse(sparse_args);
        if (app.got_subcommand("uq")) return cmd_uq(uq_args, uq_model);
        if (app.got_subcommand("reference"))
            return cmd_reference(ref_args, self_test);
        if (app.got_subcommand("report"))
            return cmd_report(report_root, report_out);
        if (app.got_subcommand("preset"))
            return cmd_preset(preset_name, preset_out);
        return kExitFailure;
    } catch (const pc2::SchemaError& e) {
        std::cerr << "pc2: " << e.what() << "\n";
        return kExitConfig;
    } catch (const pc2::ConfigError& e) {
        std::cerr << "pc2: " << e.what() << "\n";
        return kExitConfig;
    } catch (const pc2::NonFiniteError& e) {
        std::cerr << "pc2: " << e.what() << "\n";
        return kExitNonFinite;
    } catch (const pc2::IoError& e) {
        std::cerr << "pc2: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "pc2: " << e.what() << "\n";
        return kExitFailure;
    }
}
