#ifndef PC2_EXPERIMENT_HPP
#define PC2_EXPERIMENT_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pc2/constraints.hpp"
#include "pc2/randomfield.hpp"
#include "pc2/sparse.hpp"
#include "pc2/trainer.hpp"

namespace pc2 {

using Json = nlohmann::json;

/// Problem families. The kind selects which named sources exist, how
/// training data is generated, and which reference solver backs
/// validation.
enum class ProblemKind : std::uint8_t { Heat2d, Burgers, Eos, Beam };

const char* problem_kind_name(ProblemKind k);
ProblemKind problem_kind_from_name(const std::string& name);

/// Reference solver resolution overrides; 0 keeps the solver default.
struct ReferenceSpec {
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::size_t nt = 0;
};

/// Post-processing request. Moment fields are tabulated on a regular
/// grid over the free deterministic dimensions (the fixed map pins the
/// others); PDF and Sobol outputs are produced per probe point.
struct ReportSpec {
    std::string out_dir;
    std::map<std::size_t, double> fixed; ///< det dimension -> pinned value
    std::vector<std::size_t> grid;       ///< nodes per free det dimension
    Eigen::MatrixXd probe_points;        ///< rows: deterministic points
    std::size_t pdf_samples = 100000;
    std::vector<std::size_t> validation_grid; ///< reference comparison grid
};

/// Beam problem constants and the stiffness random field. The field is
/// the dimensionless modulus ratio E(x)/E_mean with mean 1, expanded in
/// kl_modes Karhunen-Loeve terms.
struct BeamSetup {
    double length = 10.0;
    double load = -5000.0;
    double inertia = 1e-4;
    double modulus_mean = 80e9;
    double cov = 0.05;
    double correlation_fraction = 0.5;
    std::size_t kl_modes = 7;
    std::size_t kl_grid = 513;
    KlExpansion kl;
};

/// Synthetic equation-of-state dataset: a full labelled grid over
/// (V, T). Training rounds draw train_count rows from it; the rest is
/// validation.
struct EosSetup {
    bool pressure = true; ///< false trains the energy surrogate
    Eigen::MatrixXd grid_points;
    Eigen::VectorXd grid_values;
    std::size_t train_count = 8;
};

/// Fully assembled experiment, ready for the pipeline entry points.
struct Experiment {
    std::string name;
    ProblemKind kind = ProblemKind::Heat2d;
    std::uint64_t seed = 0;

    std::vector<std::string> dim_names;
    DomainScaling scaling;
    std::optional<std::size_t> time_dim;
    std::vector<std::size_t> random_dims; ///< ascending positions

    MultiIndexSet indices;
    ConstraintSet constraints;
    TrainingData data;

    TrainOptions train_options;
    bool sparse_enabled = false;
    SparseOptions sparse_options;

    ReferenceSpec reference;
    ReportSpec report;

    /// Kind constants for reference runs (0 when the coefficient is a
    /// random dimension instead).
    double diffusivity = 0.0;
    double viscosity = 0.0;
    std::optional<BeamSetup> beam;
    std::optional<EosSetup> eos;

    Json config;                  ///< validated input, echoed verbatim
    std::uint64_t config_hash = 0;

    std::size_t degree = 0;

    bool deterministic() const { return random_dims.empty(); }
};

/// Shipped experiment presets.
std::vector<std::string> preset_names();
Json preset_config(const std::string& name);

/// Worker threads used for per-sample reference solves during data
/// generation (default 1; results do not depend on the count).
void set_data_generation_threads(unsigned n);

/// Validates the configuration against the strict schema (unknown keys
/// rejected everywhere) and assembles the experiment: basis, sources,
/// collocation points, and training data. Reference-solver-backed labels
/// are memoized under cache_dir when it is nonempty. seed_override
/// replaces the config seed without editing the config.
Experiment build_experiment(const Json& config, const std::string& cache_dir = "",
                            std::optional<std::uint64_t> seed_override = {});

/// Closed forms behind the synthetic equation-of-state dataset.
/// Pressure decreases in V for all V > 0, T > 0; energy increases in T.
double eos_pressure(double volume, double temperature);
double eos_energy(double volume, double temperature);

/// Row permutation of the EOS grid for one training round; the first
/// train_count entries form the training set. Rounds are independent
/// substreams of the experiment seed.
std::vector<std::size_t> eos_split(const Experiment& exp, std::uint64_t round);

/// Training data of one EOS round (round 0 is what build_experiment
/// already placed in the experiment).
TrainingData eos_training_data(const Experiment& exp, std::uint64_t round);

/// Mean squared error of the model against the problem's reference
/// solution on a regular grid (nodes per dimension, inclusive bounds).
/// Deterministic problems only.
double reference_mse(const Experiment& exp, const SurrogateModel& model,
                     std::span<const std::size_t> grid);

/// ---- Pipelines -------------------------------------------------------
/// Each entry point creates out_dir, writes its artifacts there, and
/// returns the primary result. Model files and CSV outputs depend only
/// on the config and the seed; wall-clock timings go to summary.json
/// only. Every CSV starts with a `# config <hash>` line.

/// model.pc2, train_log.csv, summary.json, field.csv (deterministic
/// problems with a report grid).
TrainResult run_train(const Experiment& exp, const std::string& out_dir);

/// model.pc2, sparse_path.csv, summary.json.
SparseResult run_sparse(const Experiment& exp, const std::string& out_dir);

/// moments.csv over the report grid plus sobol.csv and pdf_<k>.csv per
/// probe point. Requires at least one random dimension.
void run_uq(const Experiment& exp, const SurrogateModel& model,
            const std::string& out_dir);

struct ReferenceRun {
    std::string cache_key;
    bool cache_hit = false;
    std::string csv_path;
};

/// Solves the reference problem at the configured resolution (random
/// dimensions pinned to their distribution means), caches the exported
/// field, and writes it as CSV.
ReferenceRun run_reference(const Experiment& exp, const std::string& out_dir,
                           const std::string& cache_dir);

/// Scans run_root for summary.json files and consolidates them into
/// report.csv and report.md under out_dir. Throws when no summaries are
/// found.
void run_report(const std::string& run_root, const std::string& out_dir);

} // namespace pc2

#endif
