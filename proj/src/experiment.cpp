#include "pc2/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <set>
#include <sstream>
#include <utility>

#include "pc2/errors.hpp"
#include "pc2/postprocess.hpp"
#include "pc2/reference.hpp"
#include "pc2/sampling.hpp"
#include "pc2/surrogate.hpp"

namespace pc2 {

namespace fs = std::filesystem;

namespace {

unsigned g_threads = 1;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::ofstream open_output(const fs::path& path) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file " + path.string());
    return out;
}

/// Index-stable parallel loop used for per-sample reference solves.
template <typename Fn>
void parallel_rows(std::size_t n, Fn&& fn) {
    const std::size_t threads = std::min<std::size_t>(g_threads, n > 0 ? n : 1);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::future<void>> parts;
    parts.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t begin = n * t / threads;
        const std::size_t end = n * (t + 1) / threads;
        parts.push_back(std::async(std::launch::async, [begin, end, &fn] {
            for (std::size_t i = begin; i < end; ++i) fn(i);
        }));
    }
    for (auto& p : parts) p.get();
}

// ---- strict JSON access -------------------------------------------------

void expect_object(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void check_keys(const Json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

const Json* maybe(const Json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const Json& require(const Json& obj, const std::string& where, const char* key) {
    const Json* v = maybe(obj, key);
    if (!v) throw ConfigError(where + ": missing key '" + key + "'");
    return *v;
}

double as_number(const Json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    return v.get<double>();
}

std::size_t as_count(const Json& v, const std::string& where) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ConfigError(where + ": expected a nonnegative integer");
    const auto n = v.get<std::int64_t>();
    if (n < 0) throw ConfigError(where + ": expected a nonnegative integer");
    return static_cast<std::size_t>(n);
}

std::string as_string(const Json& v, const std::string& where) {
    if (!v.is_string()) throw ConfigError(where + ": expected a string");
    return v.get<std::string>();
}

bool as_bool(const Json& v, const std::string& where) {
    if (!v.is_boolean()) throw ConfigError(where + ": expected a boolean");
    return v.get<bool>();
}

double number_or(const Json& obj, const std::string& where, const char* key,
                 double def) {
    const Json* v = maybe(obj, key);
    return v ? as_number(*v, where + "." + key) : def;
}

std::size_t count_or(const Json& obj, const std::string& where, const char* key,
                     std::size_t def) {
    const Json* v = maybe(obj, key);
    return v ? as_count(*v, where + "." + key) : def;
}

bool bool_or(const Json& obj, const std::string& where, const char* key,
             bool def) {
    const Json* v = maybe(obj, key);
    return v ? as_bool(*v, where + "." + key) : def;
}

// ---- problem layout -----------------------------------------------------

struct ParsedDims {
    std::vector<std::string> names;
    std::vector<ScaledDimension> scaled;
    std::vector<std::size_t> random;
};

ParsedDims parse_dimensions(const Json& arr, const std::string& where) {
    if (!arr.is_array() || arr.empty())
        throw ConfigError(where + ": expected a nonempty array");
    ParsedDims out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string here = where + "[" + std::to_string(i) + "]";
        const Json& d = arr[i];
        expect_object(d, here);
        check_keys(d, here,
                   {"name", "distribution", "lower", "upper", "mean", "std",
                    "random"});
        const std::string name = as_string(require(d, here, "name"), here + ".name");
        if (name.empty() || !seen.insert(name).second)
            throw ConfigError(here + ": dimension names must be nonempty and unique");
        const std::string dist =
            maybe(d, "distribution")
                ? as_string(*maybe(d, "distribution"), here + ".distribution")
                : "uniform";
        const bool random = bool_or(d, here, "random", false);
        ScaledDimension sd;
        if (dist == "uniform") {
            sd.family = PolynomialFamily::LegendreOrthonormal;
            sd.lower = as_number(require(d, here, "lower"), here + ".lower");
            sd.upper = as_number(require(d, here, "upper"), here + ".upper");
            if (maybe(d, "mean") || maybe(d, "std"))
                throw ConfigError(here + ": mean/std apply to gaussian dimensions only");
            if (!(sd.upper > sd.lower))
                throw ConfigError(here + ": upper must exceed lower");
        } else if (dist == "gaussian") {
            sd.family = PolynomialFamily::HermiteOrthonormal;
            sd.lower = as_number(require(d, here, "mean"), here + ".mean");
            sd.upper = as_number(require(d, here, "std"), here + ".std");
            if (maybe(d, "lower") || maybe(d, "upper"))
                throw ConfigError(here + ": lower/upper apply to uniform dimensions only");
            if (!(sd.upper > 0.0)) throw ConfigError(here + ": std must be positive");
            if (!random)
                throw ConfigError(here + ": gaussian dimensions must be random");
        } else {
            throw ConfigError(here + ": distribution must be uniform or gaussian");
        }
        out.names.push_back(name);
        out.scaled.push_back(sd);
        if (random) out.random.push_back(i);
    }
    return out;
}

void require_unit_interval(const Experiment& exp, std::size_t dim,
                           const char* what) {
    const ScaledDimension& d = exp.scaling.dim(dim);
    if (d.family != PolynomialFamily::LegendreOrthonormal || d.lower != 0.0 ||
        d.upper != 1.0)
        throw ConfigError(std::string("problem: ") + what +
                          " must be uniform on [0, 1] for this problem kind");
}

bool is_random(const Experiment& exp, std::size_t dim) {
    return std::find(exp.random_dims.begin(), exp.random_dims.end(), dim) !=
           exp.random_dims.end();
}

/// Kind-specific dimension layout. The reference solvers and the named
/// sources address coordinates by position, so the layouts are fixed.
void validate_layout(const Experiment& exp) {
    const std::size_t n = exp.scaling.dims();
    switch (exp.kind) {
    case ProblemKind::Heat2d: {
        if (n != 3 && n != 4)
            throw ConfigError("problem: heat2d needs dimensions [x, y, t] or "
                              "[x, y, t, coefficient]");
        require_unit_interval(exp, 0, "dimension 0 (x)");
        require_unit_interval(exp, 1, "dimension 1 (y)");
        if (!exp.time_dim || *exp.time_dim != 2)
            throw ConfigError("problem: heat2d requires time_dimension to be "
                              "dimension 2");
        if (exp.scaling.dim(2).lower != 0.0 || !(exp.scaling.dim(2).upper > 0.0))
            throw ConfigError("problem: heat2d time must start at 0");
        for (std::size_t d = 0; d < 3; ++d)
            if (is_random(exp, d))
                throw ConfigError("problem: heat2d space/time dimensions cannot "
                                  "be random");
        if (n == 4 &&
            (!is_random(exp, 3) ||
             exp.scaling.dim(3).family != PolynomialFamily::LegendreOrthonormal))
            throw ConfigError("problem: heat2d dimension 3 must be a uniform "
                              "random coefficient");
        if (n == 3 && exp.diffusivity <= 0.0)
            throw ConfigError("problem: deterministic heat2d needs diffusivity > 0");
        break;
    }
    case ProblemKind::Burgers: {
        if (n != 2 && n != 3)
            throw ConfigError("problem: burgers needs dimensions [x, t] or "
                              "[x, t, coefficient]");
        require_unit_interval(exp, 0, "dimension 0 (x)");
        if (!exp.time_dim || *exp.time_dim != 1)
            throw ConfigError("problem: burgers requires time_dimension to be "
                              "dimension 1");
        if (exp.scaling.dim(1).lower != 0.0 || !(exp.scaling.dim(1).upper > 0.0))
            throw ConfigError("problem: burgers time must start at 0");
        for (std::size_t d = 0; d < 2; ++d)
            if (is_random(exp, d))
                throw ConfigError("problem: burgers space/time dimensions cannot "
                                  "be random");
        if (n == 3 &&
            (!is_random(exp, 2) ||
             exp.scaling.dim(2).family != PolynomialFamily::LegendreOrthonormal))
            throw ConfigError("problem: burgers dimension 2 must be a uniform "
                              "random coefficient");
        if (n == 2 && exp.viscosity <= 0.0)
            throw ConfigError("problem: deterministic burgers needs viscosity > 0");
        break;
    }
    case ProblemKind::Eos: {
        if (n != 2 || !exp.random_dims.empty())
            throw ConfigError("problem: eos needs exactly two deterministic "
                              "dimensions [V, T]");
        if (exp.time_dim)
            throw ConfigError("problem: eos has no time dimension");
        if (!(exp.scaling.dim(0).lower > 0.0))
            throw ConfigError("problem: eos volume range must be positive");
        if (exp.scaling.dim(1).lower < 0.0)
            throw ConfigError("problem: eos temperature range must be nonnegative");
        break;
    }
    case ProblemKind::Beam: {
        if (!exp.beam) throw ConfigError("problem: beam setup missing");
        if (n < 2)
            throw ConfigError("problem: beam needs [x, z_1 .. z_r] dimensions");
        if (exp.time_dim)
            throw ConfigError("problem: beam has no time dimension");
        const ScaledDimension& x = exp.scaling.dim(0);
        if (x.family != PolynomialFamily::LegendreOrthonormal || x.lower != 0.0 ||
            std::abs(x.upper - exp.beam->length) > 1e-12 * exp.beam->length)
            throw ConfigError("problem: beam dimension 0 must be uniform on "
                              "[0, length]");
        if (is_random(exp, 0))
            throw ConfigError("problem: beam spatial dimension cannot be random");
        if (exp.random_dims.size() != n - 1)
            throw ConfigError("problem: beam dimensions 1.. must all be random");
        for (std::size_t d = 1; d < n; ++d) {
            const ScaledDimension& z = exp.scaling.dim(d);
            if (z.family != PolynomialFamily::HermiteOrthonormal ||
                z.lower != 0.0 || z.upper != 1.0)
                throw ConfigError("problem: beam random dimensions must be "
                                  "standard gaussian");
        }
        if (n - 1 != exp.beam->kl_modes)
            throw ConfigError("problem: beam random dimension count must equal "
                              "the KL mode count");
        break;
    }
    }
}

std::vector<std::size_t> det_dims(const Experiment& exp) {
    std::vector<std::size_t> det;
    for (std::size_t d = 0; d < exp.scaling.dims(); ++d)
        if (!is_random(exp, d)) det.push_back(d);
    return det;
}

std::string dims_signature(const Experiment& exp) {
    std::ostringstream s;
    for (std::size_t d = 0; d < exp.scaling.dims(); ++d) {
        const ScaledDimension& sd = exp.scaling.dim(d);
        s << exp.dim_names[d] << ':' << family_name(sd.family) << ':'
          << fmt(sd.lower) << ':' << fmt(sd.upper) << ':'
          << (is_random(exp, d) ? 'r' : 'd') << '|';
    }
    return s.str();
}

// ---- training data generation --------------------------------------------

Heat2dParams heat_params(const Experiment& exp, double alpha) {
    Heat2dParams p;
    p.alpha = alpha;
    if (exp.reference.nx) p.nx = exp.reference.nx;
    if (exp.reference.ny) p.ny = exp.reference.ny;
    if (exp.reference.nt) p.nt = exp.reference.nt;
    p.t_end = exp.scaling.dim(2).upper;
    return p;
}

BurgersParams burgers_params(const Experiment& exp, double nu) {
    BurgersParams p;
    p.nu = nu;
    if (exp.reference.nx) p.nx = exp.reference.nx;
    if (exp.reference.nt) p.nt = exp.reference.nt;
    p.t_end = exp.scaling.dim(1).upper;
    return p;
}

BeamParams beam_params(const Experiment& exp,
                       std::function<double(double)> modulus) {
    const BeamSetup& b = *exp.beam;
    BeamParams p;
    p.length = b.length;
    p.load = b.load;
    p.inertia = b.inertia;
    if (exp.reference.nx) p.nx = exp.reference.nx;
    p.modulus = std::move(modulus);
    return p;
}

std::function<double(double)> beam_modulus(const Experiment& exp,
                                           std::vector<double> xi) {
    const auto kl = std::make_shared<KlExpansion>(exp.beam->kl);
    const double mean = exp.beam->modulus_mean;
    return [kl, mean, xi = std::move(xi)](double x) {
        return mean * kl->evaluate(x, xi);
    };
}

Eigen::VectorXd generate_labels(const Experiment& exp,
                                const Eigen::MatrixXd& points) {
    const std::size_t n = static_cast<std::size_t>(points.rows());
    Eigen::VectorXd values(points.rows());
    switch (exp.kind) {
    case ProblemKind::Heat2d: {
        if (exp.deterministic()) {
            const Heat2dSolution sol = heat2d_solve(heat_params(exp, exp.diffusivity));
            for (std::size_t i = 0; i < n; ++i)
                values[i] = sol.at(points(i, 0), points(i, 1), points(i, 2));
        } else {
            parallel_rows(n, [&](std::size_t i) {
                const Heat2dSolution sol =
                    heat2d_solve(heat_params(exp, points(i, 3)));
                values[i] = sol.at(points(i, 0), points(i, 1), points(i, 2));
            });
        }
        break;
    }
    case ProblemKind::Burgers: {
        if (exp.deterministic()) {
            const BurgersSolution sol =
                burgers_solve(burgers_params(exp, exp.viscosity));
            for (std::size_t i = 0; i < n; ++i)
                values[i] = sol.at(points(i, 0), points(i, 1));
        } else {
            parallel_rows(n, [&](std::size_t i) {
                const BurgersSolution sol =
                    burgers_solve(burgers_params(exp, points(i, 2)));
                values[i] = sol.at(points(i, 0), points(i, 1));
            });
        }
        break;
    }
    case ProblemKind::Beam: {
        parallel_rows(n, [&](std::size_t i) {
            std::vector<double> xi(static_cast<std::size_t>(points.cols()) - 1);
            for (std::size_t j = 0; j < xi.size(); ++j)
                xi[j] = points(i, static_cast<Eigen::Index>(j + 1));
            const BeamSolution sol =
                beam_solve(beam_params(exp, beam_modulus(exp, std::move(xi))));
            values[i] = sol.at(points(i, 0));
        });
        break;
    }
    case ProblemKind::Eos:
        throw ConfigError("eos data comes from the synthetic grid, not the "
                          "sampler");
    }
    if (!values.allFinite())
        throw NonFiniteError("data generation produced non-finite labels");
    return values;
}

void generate_training_data(Experiment& exp, std::size_t count,
                            const std::string& cache_dir) {
    if (count == 0) return;

    SampleSpec spec;
    spec.n_points = count;
    spec.seed = derive_stream_seed(exp.seed, "ED");
    for (const ScaledDimension& d : exp.scaling.all())
        spec.dims.push_back(SampleDim::from_scaled(d));
    exp.data.points = lhs_sample(spec);

    std::ostringstream key;
    key << problem_kind_name(exp.kind) << "-data|n=" << count
        << "|seed=" << exp.seed << "|dims=" << dims_signature(exp)
        << "|nx=" << exp.reference.nx << "|ny=" << exp.reference.ny
        << "|nt=" << exp.reference.nt;
    if (exp.kind == ProblemKind::Heat2d && exp.deterministic())
        key << "|alpha=" << fmt(exp.diffusivity);
    if (exp.kind == ProblemKind::Burgers && exp.deterministic())
        key << "|nu=" << fmt(exp.viscosity);
    if (exp.kind == ProblemKind::Beam) {
        const BeamSetup& b = *exp.beam;
        key << "|L=" << fmt(b.length) << "|q=" << fmt(b.load)
            << "|I=" << fmt(b.inertia) << "|E=" << fmt(b.modulus_mean)
            << "|cov=" << fmt(b.cov) << "|lc=" << fmt(b.correlation_fraction)
            << "|modes=" << b.kl_modes << "|klgrid=" << b.kl_grid;
    }

    Eigen::MatrixXd cached;
    if (!cache_dir.empty() && cache_load_matrix(cache_dir, key.str(), cached) &&
        cached.rows() == exp.data.points.rows() && cached.cols() == 1) {
        exp.data.values = cached.col(0);
        return;
    }
    exp.data.values = generate_labels(exp, exp.data.points);
    if (!cache_dir.empty())
        cache_store_matrix(cache_dir, key.str(), exp.data.values);
}

// ---- config blocks --------------------------------------------------------

TrainOptions parse_training(const Json* block) {
    TrainOptions opt;
    if (!block) return opt;
    const std::string where = "training";
    expect_object(*block, where);
    check_keys(*block, where,
               {"adaptive_weights", "weights", "gradient_tolerance",
                "max_iterations", "warm_start", "penalty_rounds",
                "penalty_growth", "violation_tolerance"});
    opt.adaptive_weights = bool_or(*block, where, "adaptive_weights", true);
    opt.gradient_tolerance =
        number_or(*block, where, "gradient_tolerance", 1e-8);
    if (!(opt.gradient_tolerance > 0.0))
        throw ConfigError("training.gradient_tolerance must be positive");
    opt.max_iterations = count_or(*block, where, "max_iterations", 0);
    opt.warm_start_least_squares = bool_or(*block, where, "warm_start", true);
    opt.penalty_rounds = count_or(*block, where, "penalty_rounds", 0);
    opt.penalty_growth = number_or(*block, where, "penalty_growth", 10.0);
    if (!(opt.penalty_growth > 1.0))
        throw ConfigError("training.penalty_growth must exceed 1");
    opt.violation_tolerance =
        number_or(*block, where, "violation_tolerance", 1e-6);
    if (opt.violation_tolerance < 0.0)
        throw ConfigError("training.violation_tolerance must be nonnegative");
    if (const Json* w = maybe(*block, "weights")) {
        expect_object(*w, "training.weights");
        check_keys(*w, "training.weights", {"data", "pde", "ic", "bc", "inequality"});
        opt.weight_data = number_or(*w, "training.weights", "data", 1.0);
        opt.weight_pde = number_or(*w, "training.weights", "pde", 1.0);
        opt.weight_ic = number_or(*w, "training.weights", "ic", 1.0);
        opt.weight_bc = number_or(*w, "training.weights", "bc", 1.0);
        opt.weight_inequality =
            number_or(*w, "training.weights", "inequality", 1.0);
        for (double v : {opt.weight_data, opt.weight_pde, opt.weight_ic,
                         opt.weight_bc, opt.weight_inequality})
            if (v < 0.0) throw ConfigError("training.weights must be nonnegative");
    }
    return opt;
}

void parse_sparse(const Json* block, Experiment& exp) {
    exp.sparse_options.train = exp.train_options;
    if (!block) return;
    const std::string where = "sparse";
    expect_object(*block, where);
    check_keys(*block, where,
               {"enabled", "target_loss", "min_terms", "step", "max_terms"});
    exp.sparse_enabled = bool_or(*block, where, "enabled", true);
    exp.sparse_options.target_loss =
        number_or(*block, where, "target_loss", 1e-6);
    if (!(exp.sparse_options.target_loss > 0.0))
        throw ConfigError("sparse.target_loss must be positive");
    exp.sparse_options.min_terms = count_or(*block, where, "min_terms", 0);
    exp.sparse_options.step = count_or(*block, where, "step", 0);
    exp.sparse_options.max_terms = count_or(*block, where, "max_terms", 0);
}

void parse_reference(const Json* block, Experiment& exp) {
    if (!block) return;
    const std::string where = "reference";
    expect_object(*block, where);
    switch (exp.kind) {
    case ProblemKind::Heat2d:
        check_keys(*block, where, {"nx", "ny", "nt"});
        exp.reference.nx = count_or(*block, where, "nx", 0);
        exp.reference.ny = count_or(*block, where, "ny", 0);
        exp.reference.nt = count_or(*block, where, "nt", 0);
        break;
    case ProblemKind::Burgers:
        check_keys(*block, where, {"nx", "nt"});
        exp.reference.nx = count_or(*block, where, "nx", 0);
        exp.reference.nt = count_or(*block, where, "nt", 0);
        break;
    case ProblemKind::Beam:
        check_keys(*block, where, {"nx"});
        exp.reference.nx = count_or(*block, where, "nx", 0);
        break;
    case ProblemKind::Eos:
        check_keys(*block, where, {});
        break;
    }
    for (std::size_t v : {exp.reference.nx, exp.reference.ny, exp.reference.nt})
        if (v != 0 && v < 3)
            throw ConfigError("reference: resolutions must be at least 3");
}

void parse_report(const Json* block, Experiment& exp) {
    exp.report.out_dir = "runs/" + exp.name;
    const std::vector<std::size_t> det = det_dims(exp);
    if (!block) return;
    const std::string where = "report";
    expect_object(*block, where);
    check_keys(*block, where,
               {"out_dir", "fixed", "grid", "probe_points", "pdf_samples",
                "validation_grid"});
    if (const Json* v = maybe(*block, "out_dir")) {
        exp.report.out_dir = as_string(*v, "report.out_dir");
        if (exp.report.out_dir.empty())
            throw ConfigError("report.out_dir must be nonempty");
    }
    if (const Json* v = maybe(*block, "fixed")) {
        expect_object(*v, "report.fixed");
        for (const auto& item : v->items()) {
            const auto pos = std::find(exp.dim_names.begin(), exp.dim_names.end(),
                                       item.key());
            if (pos == exp.dim_names.end())
                throw ConfigError("report.fixed: unknown dimension '" +
                                  item.key() + "'");
            const std::size_t d =
                static_cast<std::size_t>(pos - exp.dim_names.begin());
            if (is_random(exp, d))
                throw ConfigError("report.fixed: dimension '" + item.key() +
                                  "' is random");
            const double val = as_number(item.value(), "report.fixed." + item.key());
            const ScaledDimension& sd = exp.scaling.dim(d);
            if (val < sd.lower || val > sd.upper)
                throw ConfigError("report.fixed: value for '" + item.key() +
                                  "' is outside the dimension range");
            exp.report.fixed[d] = val;
        }
    }
    std::size_t n_free = 0;
    for (std::size_t d : det)
        if (!exp.report.fixed.count(d)) ++n_free;
    if (const Json* v = maybe(*block, "grid")) {
        if (!v->is_array())
            throw ConfigError("report.grid: expected an array");
        for (const Json& g : *v) {
            const std::size_t n = as_count(g, "report.grid");
            if (n < 2) throw ConfigError("report.grid: need at least 2 nodes");
            exp.report.grid.push_back(n);
        }
        if (exp.report.grid.size() != n_free)
            throw ConfigError("report.grid: need one entry per free "
                              "deterministic dimension (" +
                              std::to_string(n_free) + ")");
    }
    if (const Json* v = maybe(*block, "probe_points")) {
        if (!v->is_array())
            throw ConfigError("report.probe_points: expected an array");
        exp.report.probe_points.resize(static_cast<Eigen::Index>(v->size()),
                                       static_cast<Eigen::Index>(det.size()));
        for (std::size_t i = 0; i < v->size(); ++i) {
            const Json& row = (*v)[i];
            if (!row.is_array() || row.size() != det.size())
                throw ConfigError("report.probe_points: each point needs one "
                                  "coordinate per deterministic dimension");
            for (std::size_t j = 0; j < det.size(); ++j) {
                const double val = as_number(row[j], "report.probe_points");
                const ScaledDimension& sd = exp.scaling.dim(det[j]);
                if (val < sd.lower || val > sd.upper)
                    throw ConfigError("report.probe_points: coordinate outside "
                                      "the dimension range");
                exp.report.probe_points(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(j)) = val;
            }
        }
    }
    exp.report.pdf_samples = count_or(*block, where, "pdf_samples", 100000);
    if (exp.report.pdf_samples < 100)
        throw ConfigError("report.pdf_samples: need at least 100 samples");
    if (const Json* v = maybe(*block, "validation_grid")) {
        if (!v->is_array())
            throw ConfigError("report.validation_grid: expected an array");
        for (const Json& g : *v) {
            const std::size_t n = as_count(g, "report.validation_grid");
            if (n < 2)
                throw ConfigError("report.validation_grid: need at least 2 nodes");
            exp.report.validation_grid.push_back(n);
        }
        if (!exp.deterministic())
            throw ConfigError("report.validation_grid: only deterministic "
                              "problems have a single reference solution");
        if (exp.report.validation_grid.size() != exp.scaling.dims())
            throw ConfigError("report.validation_grid: need one entry per "
                              "dimension");
    }
}

} // namespace

// ---- public helpers -------------------------------------------------------

const char* problem_kind_name(ProblemKind k) {
    switch (k) {
    case ProblemKind::Heat2d: return "heat2d";
    case ProblemKind::Burgers: return "burgers";
    case ProblemKind::Eos: return "eos";
    case ProblemKind::Beam: return "beam";
    }
    return "?";
}

ProblemKind problem_kind_from_name(const std::string& name) {
    if (name == "heat2d") return ProblemKind::Heat2d;
    if (name == "burgers") return ProblemKind::Burgers;
    if (name == "eos") return ProblemKind::Eos;
    if (name == "beam") return ProblemKind::Beam;
    throw ConfigError("unknown problem kind '" + name + "'");
}

double eos_pressure(double volume, double temperature) {
    const double iv = 1.0 / volume;
    return 50.0 * iv * iv * iv + 10.0 * temperature * iv;
}

double eos_energy(double volume, double temperature) {
    const double iv = 1.0 / volume;
    return 15.0 * temperature * (1.0 + 0.1 * iv) + 20.0 * iv * iv;
}

void set_data_generation_threads(unsigned n) { g_threads = n == 0 ? 1 : n; }

// ---- build ------------------------------------------------------------------

Experiment build_experiment(const Json& config, const std::string& cache_dir,
                            std::optional<std::uint64_t> seed_override) {
    expect_object(config, "config");
    check_keys(config, "config",
               {"format", "name", "seed", "problem", "basis", "training",
                "sparse", "stochastic", "reference", "report"});
    const std::string format =
        as_string(require(config, "config", "format"), "config.format");
    if (format != "pc2-experiment/1")
        throw ConfigError("config.format: expected pc2-experiment/1");

    Experiment exp;
    exp.name = as_string(require(config, "config", "name"), "config.name");
    if (exp.name.empty()) throw ConfigError("config.name must be nonempty");
    exp.seed = static_cast<std::uint64_t>(
        as_count(require(config, "config", "seed"), "config.seed"));
    if (seed_override) exp.seed = *seed_override;

    const Json& problem = require(config, "config", "problem");
    expect_object(problem, "problem");
    check_keys(problem, "problem",
               {"kind", "dimensions", "time_dimension", "pde",
                "initial_condition", "boundary", "inequalities", "collocation",
                "data", "diffusivity", "viscosity", "quantity", "length",
                "load", "inertia", "modulus_mean"});
    exp.kind = problem_kind_from_name(
        as_string(require(problem, "problem", "kind"), "problem.kind"));

    ParsedDims dims =
        parse_dimensions(require(problem, "problem", "dimensions"),
                         "problem.dimensions");
    exp.dim_names = dims.names;
    exp.scaling = DomainScaling(dims.scaled);
    exp.random_dims = dims.random;

    if (const Json* v = maybe(problem, "time_dimension")) {
        const std::string tname = as_string(*v, "problem.time_dimension");
        const auto pos =
            std::find(exp.dim_names.begin(), exp.dim_names.end(), tname);
        if (pos == exp.dim_names.end())
            throw ConfigError("problem.time_dimension: unknown dimension '" +
                              tname + "'");
        exp.time_dim = static_cast<std::size_t>(pos - exp.dim_names.begin());
        if (is_random(exp, *exp.time_dim))
            throw ConfigError("problem.time_dimension cannot be random");
    }

    // Kind constants.
    if (const Json* v = maybe(problem, "diffusivity")) {
        if (exp.kind != ProblemKind::Heat2d)
            throw ConfigError("problem.diffusivity only applies to heat2d");
        exp.diffusivity = as_number(*v, "problem.diffusivity");
        if (!(exp.diffusivity > 0.0))
            throw ConfigError("problem.diffusivity must be positive");
    }
    if (const Json* v = maybe(problem, "viscosity")) {
        if (exp.kind != ProblemKind::Burgers)
            throw ConfigError("problem.viscosity only applies to burgers");
        exp.viscosity = as_number(*v, "problem.viscosity");
        if (!(exp.viscosity > 0.0))
            throw ConfigError("problem.viscosity must be positive");
    }
    if (exp.kind == ProblemKind::Eos) {
        const std::string q =
            as_string(require(problem, "problem", "quantity"), "problem.quantity");
        exp.eos.emplace();
        if (q == "pressure") exp.eos->pressure = true;
        else if (q == "energy") exp.eos->pressure = false;
        else throw ConfigError("problem.quantity must be pressure or energy");
    } else if (maybe(problem, "quantity")) {
        throw ConfigError("problem.quantity only applies to eos");
    }

    if (exp.kind != ProblemKind::Beam) {
        for (const char* key : {"length", "load", "inertia", "modulus_mean"})
            if (maybe(problem, key))
                throw ConfigError(std::string("problem.") + key +
                                  " only applies to the beam problem");
        if (maybe(config, "stochastic"))
            throw ConfigError("stochastic block only applies to the beam problem");
    } else {
        exp.beam.emplace();
        BeamSetup& b = *exp.beam;
        b.length = as_number(require(problem, "problem", "length"), "problem.length");
        b.load = as_number(require(problem, "problem", "load"), "problem.load");
        b.inertia =
            as_number(require(problem, "problem", "inertia"), "problem.inertia");
        b.modulus_mean = as_number(require(problem, "problem", "modulus_mean"),
                                   "problem.modulus_mean");
        if (!(b.length > 0.0) || !(b.inertia > 0.0) || !(b.modulus_mean > 0.0))
            throw ConfigError("problem: beam length, inertia and modulus_mean "
                              "must be positive");
        const Json& stoch = require(config, "config", "stochastic");
        expect_object(stoch, "stochastic");
        check_keys(stoch, "stochastic", {"kl"});
        const Json& kl = require(stoch, "stochastic", "kl");
        expect_object(kl, "stochastic.kl");
        check_keys(kl, "stochastic.kl",
                   {"cov", "correlation_fraction", "modes", "grid"});
        b.cov = as_number(require(kl, "stochastic.kl", "cov"), "stochastic.kl.cov");
        b.correlation_fraction =
            as_number(require(kl, "stochastic.kl", "correlation_fraction"),
                      "stochastic.kl.correlation_fraction");
        b.kl_modes = as_count(require(kl, "stochastic.kl", "modes"),
                              "stochastic.kl.modes");
        b.kl_grid = count_or(kl, "stochastic.kl", "grid", 513);
        if (!(b.cov > 0.0) || !(b.correlation_fraction > 0.0) || b.kl_modes == 0)
            throw ConfigError("stochastic.kl: cov, correlation_fraction and "
                              "modes must be positive");
        b.kl = kl_expand(
            exponential_covariance(b.cov, b.correlation_fraction * b.length),
            b.length, b.kl_modes, b.kl_grid, 1.0);
    }

    validate_layout(exp);

    // Named sources.
    SourceRegistry sources;
    switch (exp.kind) {
    case ProblemKind::Heat2d:
        sources.add("heat_ic", [](std::span<const double> p) {
            return heat2d_initial(p[0], p[1]);
        });
        if (exp.diffusivity > 0.0) {
            const double a = exp.diffusivity;
            sources.add("diffusivity", [a](std::span<const double>) { return a; });
        }
        break;
    case ProblemKind::Burgers:
        sources.add("burgers_ic",
                    [](std::span<const double> p) { return burgers_initial(p[0]); });
        if (exp.viscosity > 0.0) {
            const double nu = exp.viscosity;
            sources.add("viscosity", [nu](std::span<const double>) { return nu; });
        }
        break;
    case ProblemKind::Beam: {
        const auto kl = std::make_shared<const KlExpansion>(exp.beam->kl);
        const std::size_t modes = exp.beam->kl_modes;
        sources.add("beam_stiffness_ratio",
                    [kl, modes](std::span<const double> p) {
                        return kl->evaluate(p[0], p.subspan(1, modes));
                    });
        const double length = exp.beam->length;
        const double load = exp.beam->load;
        const double scale = exp.beam->modulus_mean * exp.beam->inertia;
        sources.add("beam_moment_scaled", [length, load, scale](
                                              std::span<const double> p) {
            return beam_moment(p[0], length, load) / scale;
        });
        break;
    }
    case ProblemKind::Eos:
        break;
    }

    // Basis.
    const Json& basis = require(config, "config", "basis");
    expect_object(basis, "basis");
    check_keys(basis, "basis", {"degree", "max_terms"});
    exp.degree = as_count(require(basis, "basis", "degree"), "basis.degree");
    const std::size_t max_terms =
        count_or(basis, "basis", "max_terms", kDefaultMaxBasisTerms);
    exp.indices = total_degree_index_set(exp.scaling.dims(),
                                         static_cast<int>(exp.degree), max_terms);

    // Constraint expressions.
    const ExprContext ctx{exp.dim_names, &sources};
    ExprPtr pde, ic;
    if (const Json* v = maybe(problem, "pde"))
        pde = parse_expression(as_string(*v, "problem.pde"), ctx);
    if (const Json* v = maybe(problem, "initial_condition"))
        ic = parse_expression(as_string(*v, "problem.initial_condition"), ctx);

    std::vector<BoundaryFace> faces;
    if (const Json* v = maybe(problem, "boundary")) {
        if (!v->is_array()) throw ConfigError("problem.boundary: expected an array");
        for (std::size_t i = 0; i < v->size(); ++i) {
            const std::string here = "problem.boundary[" + std::to_string(i) + "]";
            const Json& f = (*v)[i];
            expect_object(f, here);
            check_keys(f, here, {"dimension", "side", "residual"});
            const std::string dname =
                as_string(require(f, here, "dimension"), here + ".dimension");
            const auto pos =
                std::find(exp.dim_names.begin(), exp.dim_names.end(), dname);
            if (pos == exp.dim_names.end())
                throw ConfigError(here + ": unknown dimension '" + dname + "'");
            BoundaryFace face;
            face.dim = static_cast<std::size_t>(pos - exp.dim_names.begin());
            if (is_random(exp, face.dim) ||
                exp.scaling.dim(face.dim).family !=
                    PolynomialFamily::LegendreOrthonormal)
                throw ConfigError(here + ": faces need a bounded deterministic "
                                  "dimension");
            const std::string side =
                as_string(require(f, here, "side"), here + ".side");
            if (side == "lower") face.upper = false;
            else if (side == "upper") face.upper = true;
            else throw ConfigError(here + ".side must be lower or upper");
            face.residual = parse_expression(
                as_string(require(f, here, "residual"), here + ".residual"), ctx);
            faces.push_back(std::move(face));
        }
    }

    std::vector<ExprPtr> inequalities;
    if (const Json* v = maybe(problem, "inequalities")) {
        if (!v->is_array())
            throw ConfigError("problem.inequalities: expected an array");
        for (const Json& e : *v)
            inequalities.push_back(
                parse_expression(as_string(e, "problem.inequalities"), ctx));
    }

    std::size_t n_pde = 0, n_ic = 0, n_bc = 0, n_ineq = 0;
    std::vector<std::size_t> ineq_grid;
    if (const Json* v = maybe(problem, "collocation")) {
        expect_object(*v, "problem.collocation");
        check_keys(*v, "problem.collocation",
                   {"pde", "initial", "boundary", "inequality",
                    "inequality_grid"});
        n_pde = count_or(*v, "problem.collocation", "pde", 0);
        n_ic = count_or(*v, "problem.collocation", "initial", 0);
        n_bc = count_or(*v, "problem.collocation", "boundary", 0);
        n_ineq = count_or(*v, "problem.collocation", "inequality", 0);
        if (const Json* g = maybe(*v, "inequality_grid")) {
            if (!g->is_array() || g->size() != exp.scaling.dims())
                throw ConfigError("problem.collocation.inequality_grid: expected "
                                  "one node count per dimension");
            for (const Json& e : *g) {
                const std::size_t n =
                    as_count(e, "problem.collocation.inequality_grid");
                if (n < 2)
                    throw ConfigError("problem.collocation.inequality_grid: need "
                                      "at least 2 nodes per dimension");
                ineq_grid.push_back(n);
            }
            for (const ScaledDimension& d : exp.scaling.all())
                if (d.family != PolynomialFamily::LegendreOrthonormal)
                    throw ConfigError("problem.collocation.inequality_grid "
                                      "requires bounded dimensions");
        }
    }
    if (n_bc > 0 && faces.empty())
        throw ConfigError("problem.collocation.boundary needs boundary faces");
    if (!ineq_grid.empty() && n_ineq > 0)
        throw ConfigError("problem.collocation: inequality and inequality_grid "
                          "are mutually exclusive");
    if (!inequalities.empty() && n_ineq == 0 && ineq_grid.empty())
        throw ConfigError("problem.collocation.inequality must be positive when "
                          "inequalities are declared");
    if (inequalities.empty() && (n_ineq > 0 || !ineq_grid.empty()))
        throw ConfigError("problem.collocation.inequality needs inequality "
                          "expressions");

    exp.constraints = build_pde_constraints(exp.scaling, exp.time_dim, pde, n_pde,
                                            ic, n_ic, faces, n_bc, exp.seed);
    // Tensor-grid collocation covers edges and corners, which latin
    // hypercube samples leave open; one-sided penalties are only as good
    // as their worst coverage gap.
    Eigen::MatrixXd ineq_grid_points;
    if (!ineq_grid.empty()) {
        std::size_t total = 1;
        for (std::size_t g : ineq_grid) total *= g;
        ineq_grid_points.resize(static_cast<Eigen::Index>(total),
                                static_cast<Eigen::Index>(exp.scaling.dims()));
        for (std::size_t r = 0; r < total; ++r) {
            std::size_t rem = r;
            for (std::size_t j = ineq_grid.size(); j-- > 0;) {
                const std::size_t i = rem % ineq_grid[j];
                rem /= ineq_grid[j];
                const ScaledDimension& d = exp.scaling.dim(j);
                ineq_grid_points(static_cast<Eigen::Index>(r),
                                 static_cast<Eigen::Index>(j)) =
                    d.lower + (d.upper - d.lower) * static_cast<double>(i) /
                                  static_cast<double>(ineq_grid[j] - 1);
            }
        }
    }
    for (std::size_t i = 0; i < inequalities.size(); ++i) {
        if (!ineq_grid.empty()) {
            exp.constraints.inequalities.push_back(
                {inequalities[i], ineq_grid_points});
            continue;
        }
        SampleSpec spec;
        spec.n_points = n_ineq;
        spec.seed = derive_stream_seed(exp.seed, "INEQ" + std::to_string(i));
        for (const ScaledDimension& d : exp.scaling.all())
            spec.dims.push_back(SampleDim::from_scaled(d));
        exp.constraints.inequalities.push_back(
            {inequalities[i], lhs_sample(spec)});
    }

    exp.train_options = parse_training(maybe(config, "training"));
    parse_sparse(maybe(config, "sparse"), exp);
    parse_reference(maybe(config, "reference"), exp);
    parse_report(maybe(config, "report"), exp);

    // Training data.
    std::size_t data_count = 0;
    if (const Json* v = maybe(problem, "data")) {
        expect_object(*v, "problem.data");
        if (exp.kind == ProblemKind::Eos) {
            check_keys(*v, "problem.data", {"grid", "train_count"});
            const Json& grid = require(*v, "problem.data", "grid");
            if (!grid.is_array() || grid.size() != 2)
                throw ConfigError("problem.data.grid: expected [n_V, n_T]");
            const std::size_t nv = as_count(grid[0], "problem.data.grid");
            const std::size_t nt = as_count(grid[1], "problem.data.grid");
            if (nv < 2 || nt < 2)
                throw ConfigError("problem.data.grid: need at least 2 nodes per "
                                  "dimension");
            exp.eos->train_count = as_count(
                require(*v, "problem.data", "train_count"), "problem.data.train_count");
            if (exp.eos->train_count == 0 || exp.eos->train_count > nv * nt)
                throw ConfigError("problem.data.train_count must be in "
                                  "[1, grid size]");
            const ScaledDimension& dv = exp.scaling.dim(0);
            const ScaledDimension& dt = exp.scaling.dim(1);
            exp.eos->grid_points.resize(static_cast<Eigen::Index>(nv * nt), 2);
            exp.eos->grid_values.resize(static_cast<Eigen::Index>(nv * nt));
            for (std::size_t i = 0; i < nv; ++i) {
                const double vv = dv.lower + (dv.upper - dv.lower) *
                                                 static_cast<double>(i) /
                                                 static_cast<double>(nv - 1);
                for (std::size_t j = 0; j < nt; ++j) {
                    const double tt = dt.lower + (dt.upper - dt.lower) *
                                                     static_cast<double>(j) /
                                                     static_cast<double>(nt - 1);
                    const Eigen::Index r = static_cast<Eigen::Index>(i * nt + j);
                    exp.eos->grid_points(r, 0) = vv;
                    exp.eos->grid_points(r, 1) = tt;
                    exp.eos->grid_values[r] = exp.eos->pressure
                                                  ? eos_pressure(vv, tt)
                                                  : eos_energy(vv, tt);
                }
            }
            exp.data = eos_training_data(exp, 0);
        } else {
            check_keys(*v, "problem.data", {"count"});
            data_count = count_or(*v, "problem.data", "count", 0);
        }
    } else if (exp.kind == ProblemKind::Eos) {
        throw ConfigError("problem.data: the eos problem needs its synthetic "
                          "grid definition");
    }
    if (exp.kind != ProblemKind::Eos)
        generate_training_data(exp, data_count, cache_dir);

    if (exp.data.size() == 0 && exp.constraints.equalities.empty() &&
        exp.constraints.inequalities.empty())
        throw ConfigError("experiment defines neither data nor constraints");

    exp.config = config;
    exp.config["seed"] = exp.seed;
    exp.config_hash = fnv1a64(exp.config.dump());
    return exp;
}

std::vector<std::size_t> eos_split(const Experiment& exp, std::uint64_t round) {
    if (!exp.eos) throw ConfigError("eos_split: not an eos experiment");
    const std::size_t n = static_cast<std::size_t>(exp.eos->grid_points.rows());
    Rng rng(derive_stream_seed(exp.seed, "ED" + std::to_string(round)));
    const std::vector<std::uint32_t> perm = rng.permutation(n);
    return {perm.begin(), perm.end()};
}

TrainingData eos_training_data(const Experiment& exp, std::uint64_t round) {
    const std::vector<std::size_t> split = eos_split(exp, round);
    const std::size_t k = exp.eos->train_count;
    TrainingData data;
    data.points.resize(static_cast<Eigen::Index>(k), 2);
    data.values.resize(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        data.points.row(static_cast<Eigen::Index>(i)) =
            exp.eos->grid_points.row(static_cast<Eigen::Index>(split[i]));
        data.values[static_cast<Eigen::Index>(i)] =
            exp.eos->grid_values[static_cast<Eigen::Index>(split[i])];
    }
    return data;
}

// ---- reference comparison ---------------------------------------------------

namespace {

Eigen::MatrixXd full_grid(const Experiment& exp,
                          std::span<const std::size_t> grid) {
    std::size_t total = 1;
    for (std::size_t g : grid) total *= g;
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(total),
                        static_cast<Eigen::Index>(grid.size()));
    for (std::size_t r = 0; r < total; ++r) {
        std::size_t rem = r;
        for (std::size_t j = grid.size(); j-- > 0;) {
            const std::size_t i = rem % grid[j];
            rem /= grid[j];
            const ScaledDimension& d = exp.scaling.dim(j);
            pts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
                d.lower + (d.upper - d.lower) * static_cast<double>(i) /
                              static_cast<double>(grid[j] - 1);
        }
    }
    return pts;
}

} // namespace

double reference_mse(const Experiment& exp, const SurrogateModel& model,
                     std::span<const std::size_t> grid) {
    if (!exp.deterministic())
        throw ConfigError("reference_mse: stochastic problems have no single "
                          "reference solution");
    if (grid.size() != exp.scaling.dims())
        throw DimensionMismatch("reference_mse: need one grid size per dimension");
    for (std::size_t g : grid)
        if (g < 2) throw ConfigError("reference_mse: need at least 2 nodes");

    const Eigen::MatrixXd pts = full_grid(exp, grid);
    const Eigen::VectorXd predicted = model.evaluate(pts);

    Eigen::VectorXd truth(pts.rows());
    switch (exp.kind) {
    case ProblemKind::Heat2d: {
        const Heat2dSolution sol = heat2d_solve(heat_params(exp, exp.diffusivity));
        for (Eigen::Index i = 0; i < pts.rows(); ++i)
            truth[i] = sol.at(pts(i, 0), pts(i, 1), pts(i, 2));
        break;
    }
    case ProblemKind::Burgers: {
        const BurgersSolution sol =
            burgers_solve(burgers_params(exp, exp.viscosity));
        for (Eigen::Index i = 0; i < pts.rows(); ++i)
            truth[i] = sol.at(pts(i, 0), pts(i, 1));
        break;
    }
    case ProblemKind::Eos: {
        for (Eigen::Index i = 0; i < pts.rows(); ++i)
            truth[i] = exp.eos->pressure ? eos_pressure(pts(i, 0), pts(i, 1))
                                         : eos_energy(pts(i, 0), pts(i, 1));
        break;
    }
    case ProblemKind::Beam:
        throw ConfigError("reference_mse: the beam problem is stochastic");
    }
    return (predicted - truth).squaredNorm() / static_cast<double>(pts.rows());
}

// ---- pipelines ----------------------------------------------------------------

namespace {

Eigen::MatrixXd report_grid_points(const Experiment& exp,
                                   std::vector<std::size_t>& det_out) {
    det_out = det_dims(exp);
    std::vector<std::size_t> free;
    for (std::size_t d : det_out)
        if (!exp.report.fixed.count(d)) free.push_back(d);
    if (exp.report.grid.size() != free.size())
        throw ConfigError("report.grid is not configured for this experiment");
    std::size_t total = 1;
    for (std::size_t g : exp.report.grid) total *= g;

    Eigen::MatrixXd pts(static_cast<Eigen::Index>(total),
                        static_cast<Eigen::Index>(det_out.size()));
    for (std::size_t r = 0; r < total; ++r) {
        std::size_t rem = r;
        std::vector<double> freev(free.size());
        for (std::size_t j = free.size(); j-- > 0;) {
            const std::size_t i = rem % exp.report.grid[j];
            rem /= exp.report.grid[j];
            const ScaledDimension& d = exp.scaling.dim(free[j]);
            freev[j] = d.lower + (d.upper - d.lower) * static_cast<double>(i) /
                                     static_cast<double>(exp.report.grid[j] - 1);
        }
        std::size_t fi = 0;
        for (std::size_t j = 0; j < det_out.size(); ++j) {
            const auto fixed = exp.report.fixed.find(det_out[j]);
            pts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
                fixed != exp.report.fixed.end() ? fixed->second : freev[fi++];
        }
    }
    return pts;
}

void finalize_model(const Experiment& exp, SurrogateModel& model,
                    const std::string& pipeline) {
    model.metadata["experiment"] = exp.name;
    model.metadata["kind"] = problem_kind_name(exp.kind);
    model.metadata["pipeline"] = pipeline;
    model.metadata["seed"] = std::to_string(exp.seed);
    model.metadata["config"] = hash_hex(exp.config_hash);
    model.metadata["generator"] = "mt19937_64/v1";
}

Json losses_json(const LossBreakdown& b) {
    double pen = 0.0;
    for (double v : b.inequality) pen += v;
    Json j;
    j["data"] = b.data;
    j["pde"] = b.pde;
    j["ic"] = b.ic;
    j["bc"] = b.bc;
    j["penalty"] = pen;
    j["total"] = b.total;
    return j;
}

Json weights_json(const LossBreakdown& b) {
    Json j;
    j["data"] = b.weight_data;
    j["pde"] = b.weight_pde;
    j["ic"] = b.weight_ic;
    j["bc"] = b.weight_bc;
    j["inequality"] = b.weight_inequality;
    return j;
}

Json base_summary(const Experiment& exp, const std::string& pipeline) {
    Json j;
    j["config_hash"] = hash_hex(exp.config_hash);
    j["pipeline"] = pipeline;
    j["name"] = exp.name;
    j["kind"] = problem_kind_name(exp.kind);
    j["seed"] = exp.seed;
    j["degree"] = exp.degree;
    j["dims"] = exp.scaling.dims();
    j["basis_terms"] = exp.indices.size();
    j["data_points"] = exp.data.size();
    return j;
}

void fill_train_summary(Json& j, const TrainResult& result) {
    j["model_terms"] = result.model.terms();
    j["iterations"] = result.iterations;
    j["function_evaluations"] = result.function_evaluations;
    j["converged"] = result.converged;
    j["hit_iteration_cap"] = result.hit_iteration_cap;
    j["line_search_stalled"] = result.line_search_stalled;
    j["losses"] = losses_json(result.losses);
    j["weights"] = weights_json(result.losses);
}

void write_summary(const Json& j, const std::string& out_dir) {
    std::ofstream out = open_output(fs::path(out_dir) / "summary.json");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed writing summary.json under " + out_dir);
}

void maybe_validate(const Experiment& exp, const SurrogateModel& model, Json& j) {
    if (exp.report.validation_grid.empty() || !exp.deterministic()) return;
    j["validation_mse"] = reference_mse(exp, model, exp.report.validation_grid);
}

void write_field_csv(const Experiment& exp, const SurrogateModel& model,
                     const std::string& out_dir) {
    if (!exp.deterministic() || exp.report.grid.empty()) return;
    std::vector<std::size_t> det;
    const Eigen::MatrixXd pts = report_grid_points(exp, det);
    const Eigen::VectorXd values = model.evaluate(pts);
    std::ofstream out = open_output(fs::path(out_dir) / "field.csv");
    out << "# config " << hash_hex(exp.config_hash) << "\n";
    for (std::size_t j = 0; j < det.size(); ++j)
        out << exp.dim_names[det[j]] << ',';
    out << "value\n";
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        for (Eigen::Index j = 0; j < pts.cols(); ++j) out << fmt(pts(i, j)) << ',';
        out << fmt(values[i]) << "\n";
    }
    if (!out) throw IoError("failed writing field.csv under " + out_dir);
}

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

} // namespace

TrainResult run_train(const Experiment& exp, const std::string& out_dir) {
    fs::create_directories(out_dir);
    TrainOptions opt = exp.train_options;
    opt.iteration_log_path = (fs::path(out_dir) / "train_log.csv").string();
    opt.iteration_log_comment = "config " + hash_hex(exp.config_hash);

    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result =
        train(exp.indices, exp.scaling, exp.data, exp.constraints, opt);
    const double seconds = elapsed_since(t0);

    finalize_model(exp, result.model, "train");
    save_model(result.model, (fs::path(out_dir) / "model.pc2").string());
    write_field_csv(exp, result.model, out_dir);

    Json summary = base_summary(exp, "train");
    fill_train_summary(summary, result);
    summary["elapsed_seconds"] = seconds;
    maybe_validate(exp, result.model, summary);
    write_summary(summary, out_dir);
    return result;
}

SparseResult run_sparse(const Experiment& exp, const std::string& out_dir) {
    fs::create_directories(out_dir);
    SparseOptions opt = exp.sparse_options;
    opt.report_path = (fs::path(out_dir) / "sparse_path.csv").string();
    opt.report_comment = "config " + hash_hex(exp.config_hash);

    const auto t0 = std::chrono::steady_clock::now();
    SparseResult result = sparse_pc2_train(exp.indices, exp.scaling, exp.data,
                                           exp.constraints, opt);
    const double seconds = elapsed_since(t0);

    finalize_model(exp, result.best.model, "sparse");
    save_model(result.best.model, (fs::path(out_dir) / "model.pc2").string());
    write_field_csv(exp, result.best.model, out_dir);

    Json summary = base_summary(exp, "sparse");
    fill_train_summary(summary, result.best);
    summary["elapsed_seconds"] = seconds;
    summary["selected_terms"] = result.selected.size();
    summary["reached_target"] = result.reached_target;
    summary["path_evaluations"] = result.path.size();
    maybe_validate(exp, result.best.model, summary);
    write_summary(summary, out_dir);
    return result;
}

void run_uq(const Experiment& exp, const SurrogateModel& model,
            const std::string& out_dir) {
    if (exp.random_dims.empty())
        throw ConfigError("uq: the experiment has no random dimensions");
    fs::create_directories(out_dir);
    const ReducedPce reduced = reduce(model, exp.random_dims);
    const std::string header = "# config " + hash_hex(exp.config_hash) + "\n";

    if (!exp.report.grid.empty()) {
        std::vector<std::size_t> det;
        const Eigen::MatrixXd pts = report_grid_points(exp, det);
        std::ofstream out = open_output(fs::path(out_dir) / "moments.csv");
        out << header;
        for (std::size_t j = 0; j < det.size(); ++j)
            out << exp.dim_names[det[j]] << ',';
        out << "mean,std\n";
        std::vector<double> x(det.size());
        for (Eigen::Index i = 0; i < pts.rows(); ++i) {
            for (std::size_t j = 0; j < det.size(); ++j)
                x[j] = pts(i, static_cast<Eigen::Index>(j));
            const MomentEstimate m = conditional_moments(reduced, x);
            for (double v : x) out << fmt(v) << ',';
            out << fmt(m.mean) << ',' << fmt(std::sqrt(std::max(m.variance, 0.0)))
                << "\n";
        }
        if (!out) throw IoError("failed writing moments.csv under " + out_dir);
    }

    if (exp.report.probe_points.rows() > 0) {
        const std::vector<std::size_t> det = det_dims(exp);
        std::ofstream sobol = open_output(fs::path(out_dir) / "sobol.csv");
        sobol << header << "point";
        for (std::size_t d : det) sobol << ',' << exp.dim_names[d];
        for (std::size_t r : exp.random_dims)
            sobol << ",first_" << exp.dim_names[r];
        for (std::size_t r : exp.random_dims)
            sobol << ",total_" << exp.dim_names[r];
        sobol << ",mean,std\n";
        for (Eigen::Index k = 0; k < exp.report.probe_points.rows(); ++k) {
            std::vector<double> x(det.size());
            for (std::size_t j = 0; j < det.size(); ++j)
                x[j] = exp.report.probe_points(k, static_cast<Eigen::Index>(j));
            const Eigen::VectorXd s1 = sobol_first_order(reduced, x);
            const Eigen::VectorXd st = sobol_total(reduced, x);
            const MomentEstimate m = conditional_moments(reduced, x);
            sobol << k;
            for (double v : x) sobol << ',' << fmt(v);
            for (Eigen::Index j = 0; j < s1.size(); ++j) sobol << ',' << fmt(s1[j]);
            for (Eigen::Index j = 0; j < st.size(); ++j) sobol << ',' << fmt(st[j]);
            sobol << ',' << fmt(m.mean) << ','
                  << fmt(std::sqrt(std::max(m.variance, 0.0))) << "\n";

            const PdfEstimate pdf = pdf_estimate(
                reduced, x, exp.report.pdf_samples,
                derive_stream_seed(exp.seed, "pdf" + std::to_string(k)));
            std::ofstream pout = open_output(
                fs::path(out_dir) / ("pdf_" + std::to_string(k) + ".csv"));
            pout << header << "# point";
            for (double v : x) pout << ' ' << fmt(v);
            pout << "\n# bandwidth " << fmt(pdf.bandwidth) << "\nvalue,density\n";
            for (Eigen::Index j = 0; j < pdf.grid.size(); ++j)
                pout << fmt(pdf.grid[j]) << ',' << fmt(pdf.density[j]) << "\n";
            if (!pout)
                throw IoError("failed writing pdf CSV under " + out_dir);
        }
        if (!sobol) throw IoError("failed writing sobol.csv under " + out_dir);
    }
}

ReferenceRun run_reference(const Experiment& exp, const std::string& out_dir,
                           const std::string& cache_dir) {
    fs::create_directories(out_dir);
    ReferenceRun run;

    // Random coefficients are pinned to their distribution means.
    const auto dim_mean = [&](std::size_t d) {
        const ScaledDimension& sd = exp.scaling.dim(d);
        return sd.family == PolynomialFamily::HermiteOrthonormal
                   ? sd.lower
                   : 0.5 * (sd.lower + sd.upper);
    };

    Eigen::MatrixXd field;
    std::ostringstream key;
    switch (exp.kind) {
    case ProblemKind::Heat2d: {
        const double alpha =
            exp.deterministic() ? exp.diffusivity : dim_mean(3);
        const Heat2dParams p = heat_params(exp, alpha);
        key << "heat2d|alpha=" << fmt(alpha) << "|nx=" << p.nx << "|ny=" << p.ny
            << "|nt=" << p.nt << "|t_end=" << fmt(p.t_end);
        run.cache_key = key.str();
        if (cache_dir.empty() ||
            !cache_load_matrix(cache_dir, run.cache_key, field)) {
            const Heat2dSolution sol = heat2d_solve(p);
            field = sol.frames.back();
            if (!cache_dir.empty())
                cache_store_matrix(cache_dir, run.cache_key, field);
        } else {
            run.cache_hit = true;
        }
        // Final-time frame: rows follow x, columns follow y.
        std::ofstream out = open_output(fs::path(out_dir) / "reference.csv");
        out << "# config " << hash_hex(exp.config_hash) << "\n# cache "
            << run.cache_key << "\nx,y,u\n";
        for (Eigen::Index i = 0; i < field.rows(); ++i)
            for (Eigen::Index j = 0; j < field.cols(); ++j) {
                const double x = static_cast<double>(i) /
                                 static_cast<double>(field.rows() - 1);
                const double y = static_cast<double>(j) /
                                 static_cast<double>(field.cols() - 1);
                out << fmt(x) << ',' << fmt(y) << ',' << fmt(field(i, j)) << "\n";
            }
        if (!out) throw IoError("failed writing reference.csv under " + out_dir);
        run.csv_path = (fs::path(out_dir) / "reference.csv").string();
        return run;
    }
    case ProblemKind::Burgers: {
        const double nu = exp.deterministic() ? exp.viscosity : dim_mean(2);
        const BurgersParams p = burgers_params(exp, nu);
        key << "burgers|nu=" << fmt(nu) << "|nx=" << p.nx << "|nt=" << p.nt
            << "|t_end=" << fmt(p.t_end);
        run.cache_key = key.str();
        if (cache_dir.empty() ||
            !cache_load_matrix(cache_dir, run.cache_key, field)) {
            const BurgersSolution sol = burgers_solve(p);
            field = sol.frames;
            if (!cache_dir.empty())
                cache_store_matrix(cache_dir, run.cache_key, field);
        } else {
            run.cache_hit = true;
        }
        std::ofstream out = open_output(fs::path(out_dir) / "reference.csv");
        out << "# config " << hash_hex(exp.config_hash) << "\n# cache "
            << run.cache_key << "\nt,x,u\n";
        for (Eigen::Index k = 0; k < field.rows(); ++k)
            for (Eigen::Index i = 0; i < field.cols(); ++i) {
                const double t = p.t_end * static_cast<double>(k) /
                                 static_cast<double>(field.rows() - 1);
                const double x = static_cast<double>(i) /
                                 static_cast<double>(field.cols() - 1);
                out << fmt(t) << ',' << fmt(x) << ',' << fmt(field(k, i)) << "\n";
            }
        if (!out) throw IoError("failed writing reference.csv under " + out_dir);
        run.csv_path = (fs::path(out_dir) / "reference.csv").string();
        return run;
    }
    case ProblemKind::Beam: {
        const BeamSetup& b = *exp.beam;
        const double mean = b.modulus_mean;
        BeamParams p = beam_params(exp, [mean](double) { return mean; });
        key << "beam|L=" << fmt(b.length) << "|q=" << fmt(b.load)
            << "|I=" << fmt(b.inertia) << "|E=" << fmt(mean) << "|nx=" << p.nx;
        run.cache_key = key.str();
        if (cache_dir.empty() ||
            !cache_load_matrix(cache_dir, run.cache_key, field)) {
            const BeamSolution sol = beam_solve(p);
            field.resize(sol.xs.size(), 2);
            field.col(0) = sol.xs;
            field.col(1) = sol.w;
            if (!cache_dir.empty())
                cache_store_matrix(cache_dir, run.cache_key, field);
        } else {
            run.cache_hit = true;
        }
        std::ofstream out = open_output(fs::path(out_dir) / "reference.csv");
        out << "# config " << hash_hex(exp.config_hash) << "\n# cache "
            << run.cache_key << "\nx,w\n";
        for (Eigen::Index i = 0; i < field.rows(); ++i)
            out << fmt(field(i, 0)) << ',' << fmt(field(i, 1)) << "\n";
        if (!out) throw IoError("failed writing reference.csv under " + out_dir);
        run.csv_path = (fs::path(out_dir) / "reference.csv").string();
        return run;
    }
    case ProblemKind::Eos: {
        const EosSetup& e = *exp.eos;
        key << "eos|" << (e.pressure ? "pressure" : "energy")
            << "|n=" << e.grid_points.rows() << "|dims=" << dims_signature(exp);
        run.cache_key = key.str();
        if (cache_dir.empty() ||
            !cache_load_matrix(cache_dir, run.cache_key, field)) {
            field.resize(e.grid_points.rows(), 3);
            field.leftCols(2) = e.grid_points;
            field.col(2) = e.grid_values;
            if (!cache_dir.empty())
                cache_store_matrix(cache_dir, run.cache_key, field);
        } else {
            run.cache_hit = true;
        }
        std::ofstream out = open_output(fs::path(out_dir) / "reference.csv");
        out << "# config " << hash_hex(exp.config_hash) << "\n# cache "
            << run.cache_key << "\nV,T," << (e.pressure ? "P" : "E") << "\n";
        for (Eigen::Index i = 0; i < field.rows(); ++i)
            out << fmt(field(i, 0)) << ',' << fmt(field(i, 1)) << ','
                << fmt(field(i, 2)) << "\n";
        if (!out) throw IoError("failed writing reference.csv under " + out_dir);
        run.csv_path = (fs::path(out_dir) / "reference.csv").string();
        return run;
    }
    }
    throw ConfigError("run_reference: unhandled problem kind");
}

void run_report(const std::string& run_root, const std::string& out_dir) {
    std::vector<fs::path> summaries;
    if (fs::exists(run_root))
        for (const auto& entry : fs::recursive_directory_iterator(run_root))
            if (entry.is_regular_file() &&
                entry.path().filename() == "summary.json")
                summaries.push_back(entry.path());
    std::sort(summaries.begin(), summaries.end());
    if (summaries.empty())
        throw ConfigError("report: no runs found under " + run_root);

    std::vector<Json> rows;
    for (const fs::path& p : summaries) {
        std::ifstream in(p);
        if (!in) throw IoError("report: cannot read " + p.string());
        Json j;
        try {
            in >> j;
        } catch (const Json::parse_error& e) {
            throw SchemaError("report: malformed summary " + p.string() + ": " +
                              e.what());
        }
        rows.push_back(std::move(j));
    }

    const auto text = [](const Json& j, const char* key) -> std::string {
        const auto it = j.find(key);
        if (it == j.end()) return "";
        if (it->is_string()) return it->get<std::string>();
        return it->dump();
    };
    const auto loss = [&](const Json& j, const char* key) -> std::string {
        const auto it = j.find("losses");
        if (it == j.end() || !it->contains(key)) return "";
        return (*it)[key].dump();
    };

    fs::create_directories(out_dir);
    {
        std::ofstream csv = open_output(fs::path(out_dir) / "report.csv");
        csv << "name,pipeline,kind,config,seed,degree,basis_terms,model_terms,"
               "data_points,iterations,converged,loss_data,loss_pde,loss_ic,"
               "loss_bc,loss_penalty,loss_total,validation_mse\n";
        for (const Json& j : rows) {
            csv << text(j, "name") << ',' << text(j, "pipeline") << ','
                << text(j, "kind") << ',' << text(j, "config_hash") << ','
                << text(j, "seed") << ',' << text(j, "degree") << ','
                << text(j, "basis_terms") << ',' << text(j, "model_terms") << ','
                << text(j, "data_points") << ',' << text(j, "iterations") << ','
                << text(j, "converged") << ',' << loss(j, "data") << ','
                << loss(j, "pde") << ',' << loss(j, "ic") << ',' << loss(j, "bc")
                << ',' << loss(j, "penalty") << ',' << loss(j, "total") << ','
                << text(j, "validation_mse") << "\n";
        }
        if (!csv) throw IoError("report: failed writing report.csv");
    }
    {
        std::ofstream md = open_output(fs::path(out_dir) / "report.md");
        md << "# Experiment results\n\n";
        md << "| Name | Pipeline | Kind | p | Basis | Model | Data | Iter | "
              "Converged | Total loss | Validation MSE | Seconds |\n";
        md << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
        for (const Json& j : rows) {
            md << "| " << text(j, "name") << " | " << text(j, "pipeline")
               << " | " << text(j, "kind") << " | " << text(j, "degree")
               << " | " << text(j, "basis_terms") << " | "
               << text(j, "model_terms") << " | " << text(j, "data_points")
               << " | " << text(j, "iterations") << " | "
               << text(j, "converged") << " | " << loss(j, "total") << " | "
               << text(j, "validation_mse") << " | "
               << text(j, "elapsed_seconds") << " |\n";
        }
        if (!md) throw IoError("report: failed writing report.md");
    }
}

// ---- presets -------------------------------------------------------------------

namespace {

Json dim_uniform(const char* name, double lo, double hi, bool random = false) {
    Json d;
    d["name"] = name;
    d["distribution"] = "uniform";
    d["lower"] = lo;
    d["upper"] = hi;
    if (random) d["random"] = true;
    return d;
}

Json dim_gaussian(const std::string& name, double mean, double sd) {
    Json d;
    d["name"] = name;
    d["distribution"] = "gaussian";
    d["mean"] = mean;
    d["std"] = sd;
    d["random"] = true;
    return d;
}

Json preset_heat2d_det() {
    Json c;
    c["format"] = "pc2-experiment/1";
    c["name"] = "heat2d_det";
    c["seed"] = 1001;
    c["problem"]["kind"] = "heat2d";
    c["problem"]["diffusivity"] = 0.01;
    c["problem"]["dimensions"] = {dim_uniform("x", 0.0, 1.0),
                                  dim_uniform("y", 0.0, 1.0),
                                  dim_uniform("t", 0.0, 1.0)};
    c["problem"]["time_dimension"] = "t";
    c["problem"]["pde"] =
        "(- (dt u) (* (source diffusivity) (+ (dxx u) (dyy u))))";
    c["problem"]["initial_condition"] = "(- u (source heat_ic))";
    c["problem"]["boundary"] = {
        Json{{"dimension", "x"}, {"side", "lower"}, {"residual", "(dx u)"}},
        Json{{"dimension", "x"}, {"side", "upper"}, {"residual", "(dx u)"}},
        Json{{"dimension", "y"}, {"side", "lower"}, {"residual", "(dy u)"}},
        Json{{"dimension", "y"}, {"side", "upper"}, {"residual", "(dy u)"}}};
    c["problem"]["collocation"] = {{"pde", 2000}, {"initial", 200}, {"boundary", 200}};
    c["problem"]["data"] = {{"count", 0}};
    c["basis"]["degree"] = 10;
    c["training"] = {{"adaptive_weights", true}, {"gradient_tolerance", 1e-8}};
    c["reference"] = {{"nx", 99}, {"ny", 99}, {"nt", 490}};
    c["report"] = {{"out_dir", "runs/heat2d_det"},
                   {"grid", {26, 26, 6}},
                   {"validation_grid", {50, 50, 50}}};
    return c;
}

Json preset_heat2d_stoch() {
    Json c = preset_heat2d_det();
    c["name"] = "heat2d_stoch";
    c["seed"] = 1002;
    c["problem"].erase("diffusivity");
    c["problem"]["dimensions"].push_back(
        dim_uniform("a", 0.001, 0.01, true));
    c["problem"]["pde"] = "(- (dt u) (* a (+ (dxx u) (dyy u))))";
    c["problem"]["collocation"] = {{"pde", 4000}, {"initial", 400}, {"boundary", 400}};
    c["basis"]["degree"] = 8;
    c["reference"] = {{"nx", 65}, {"ny", 65}, {"nt", 100}};
    c["report"] = {{"out_dir", "runs/heat2d_stoch"},
                   {"fixed", {{"t", 1.0}}},
                   {"grid", {100, 100}},
                   {"probe_points", {{0.25, 0.25, 1.0}, {0.5, 0.5, 1.0}}},
                   {"pdf_samples", 100000}};
    return c;
}

Json preset_burgers_det() {
    Json c;
    c["format"] = "pc2-experiment/1";
    c["name"] = "burgers_det";
    c["seed"] = 1003;
    c["problem"]["kind"] = "burgers";
    c["problem"]["viscosity"] = 0.01;
    c["problem"]["dimensions"] = {dim_uniform("x", 0.0, 1.0),
                                  dim_uniform("t", 0.0, 0.3)};
    c["problem"]["time_dimension"] = "t";
    c["problem"]["pde"] =
        "(- (+ (dt u) (* u (dx u))) (* (source viscosity) (dxx u)))";
    c["problem"]["initial_condition"] = "(- u (source burgers_ic))";
    c["problem"]["boundary"] = {
        Json{{"dimension", "x"}, {"side", "lower"}, {"residual", "u"}},
        Json{{"dimension", "x"}, {"side", "upper"}, {"residual", "u"}}};
    c["problem"]["collocation"] = {{"pde", 3000}, {"initial", 250}, {"boundary", 250}};
    c["problem"]["data"] = {{"count", 0}};
    c["basis"]["degree"] = 14;
    c["training"] = {{"adaptive_weights", true}, {"gradient_tolerance", 1e-8}};
    c["reference"] = {{"nx", 513}, {"nt", 600}};
    c["report"] = {{"out_dir", "runs/burgers_det"},
                   {"grid", {101, 7}},
                   {"validation_grid", {50, 50}}};
    return c;
}

Json preset_burgers_stoch() {
    Json c = preset_burgers_det();
    c["name"] = "burgers_stoch";
    c["seed"] = 1004;
    c["problem"].erase("viscosity");
    c["problem"]["dimensions"].push_back(dim_uniform("nu", 0.01, 0.1, true));
    c["problem"]["pde"] = "(- (+ (dt u) (* u (dx u))) (* nu (dxx u)))";
    c["problem"]["collocation"] = {{"pde", 4000}, {"initial", 300}, {"boundary", 300}};
    c["basis"]["degree"] = 10;
    c["reference"] = {{"nx", 257}, {"nt", 300}};
    c["report"] = {{"out_dir", "runs/burgers_stoch"},
                   {"fixed", {{"t", 0.3}}},
                   {"grid", {101}},
                   {"probe_points", {{0.25, 0.3}, {0.5, 0.3}}},
                   {"pdf_samples", 100000}};
    return c;
}

Json preset_eos_synthetic() {
    Json c;
    c["format"] = "pc2-experiment/1";
    c["name"] = "eos_synthetic";
    c["seed"] = 1005;
    c["problem"]["kind"] = "eos";
    c["problem"]["quantity"] = "pressure";
    c["problem"]["dimensions"] = {dim_uniform("V", 0.5, 2.0),
                                  dim_uniform("T", 0.3, 2.0)};
    // Strict margin plus a slope cap: the true isotherm slope lies in
    // [-2480, -10] on the domain, so requiring -5000 <= dP/dV <= -1 keeps
    // the truth feasible, forces fits strictly inside the sign condition
    // between collocation points, and bounds the flat directions an
    // interpolating fit could otherwise drift along.
    c["problem"]["inequalities"] = {"(- (neg (dV u)) 1)",
                                    "(- 5000 (neg (dV u)))"};
    c["problem"]["collocation"] = {{"inequality_grid", {150, 150}}};
    c["problem"]["data"] = {{"grid", {12, 8}}, {"train_count", 8}};
    c["basis"]["degree"] = 4;
    c["training"] = {{"adaptive_weights", true},
                     {"gradient_tolerance", 1e-10},
                     {"penalty_rounds", 3}};
    c["report"] = {{"out_dir", "runs/eos_synthetic"},
                   {"grid", {50, 50}},
                   {"validation_grid", {100, 100}}};
    return c;
}

Json preset_beam_kl() {
    Json c;
    c["format"] = "pc2-experiment/1";
    c["name"] = "beam_kl";
    c["seed"] = 1006;
    c["problem"]["kind"] = "beam";
    c["problem"]["length"] = 10.0;
    c["problem"]["load"] = -5000.0;
    c["problem"]["inertia"] = 1e-4;
    c["problem"]["modulus_mean"] = 8e10;
    Json dims = Json::array();
    dims.push_back(dim_uniform("x", 0.0, 10.0));
    for (int i = 1; i <= 7; ++i)
        dims.push_back(dim_gaussian("z" + std::to_string(i), 0.0, 1.0));
    c["problem"]["dimensions"] = dims;
    c["problem"]["pde"] =
        "(- (* (source beam_stiffness_ratio) (dxx u)) (source beam_moment_scaled))";
    c["problem"]["boundary"] = {
        Json{{"dimension", "x"}, {"side", "lower"}, {"residual", "u"}},
        Json{{"dimension", "x"}, {"side", "upper"}, {"residual", "u"}}};
    c["problem"]["collocation"] = {{"pde", 3000}, {"boundary", 400}};
    c["problem"]["data"] = {{"count", 100}};
    c["stochastic"]["kl"] = {{"cov", 0.05},
                             {"correlation_fraction", 0.5},
                             {"modes", 7},
                             {"grid", 513}};
    c["basis"]["degree"] = 4;
    c["training"] = {{"adaptive_weights", true}, {"gradient_tolerance", 1e-9}};
    c["sparse"] = {{"enabled", true},
                   {"target_loss", 1e-9},
                   {"max_terms", 120}};
    c["reference"] = {{"nx", 1025}};
    c["report"] = {{"out_dir", "runs/beam_kl"},
                   {"grid", {201}},
                   {"probe_points", {{5.0}}},
                   {"pdf_samples", 100000}};
    return c;
}

} // namespace

std::vector<std::string> preset_names() {
    return {"heat2d_det",   "heat2d_stoch", "burgers_det",
            "burgers_stoch", "eos_synthetic", "beam_kl"};
}

Json preset_config(const std::string& name) {
    if (name == "heat2d_det") return preset_heat2d_det();
    if (name == "heat2d_stoch") return preset_heat2d_stoch();
    if (name == "burgers_det") return preset_burgers_det();
    if (name == "burgers_stoch") return preset_burgers_stoch();
    if (name == "eos_synthetic") return preset_eos_synthetic();
    if (name == "beam_kl") return preset_beam_kl();
    throw ConfigError("unknown preset '" + name + "'");
}

} // namespace pc2
