#include "pc2/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <utility>

#include "pc2/errors.hpp"
#include "pc2/sampling.hpp"

namespace pc2 {

LarResult lar_path(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets) {
    if (design.rows() != targets.size())
        throw DimensionMismatch("lar_path: row count does not match target count");
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (n < 2) throw Error("lar_path: need at least two rows");

    LarResult result;
    result.final_coefficients = Eigen::VectorXd::Zero(p);

    const Eigen::VectorXd col_mean = design.colwise().mean();
    Eigen::MatrixXd xc = design.rowwise() - col_mean.transpose();
    Eigen::VectorXd col_norm(p);
    std::vector<std::size_t> eligible;
    for (Eigen::Index j = 0; j < p; ++j) {
        col_norm[j] = xc.col(j).norm();
        const double raw = design.col(j).norm();
        if (col_norm[j] <= 1e-12 * (raw + 1.0)) {
            if (!result.intercept && std::abs(col_mean[j]) > 0.0)
                result.intercept = static_cast<std::size_t>(j);
            else
                result.degenerate.push_back(static_cast<std::size_t>(j));
        } else {
            xc.col(j) /= col_norm[j];
            eligible.push_back(static_cast<std::size_t>(j));
        }
    }

    const double y_mean = targets.mean();
    const Eigen::VectorXd yc = targets.array() - y_mean;

    // beta lives in the centered unit-norm column space.
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd residual = yc;
    std::vector<std::size_t> active;
    std::vector<bool> is_active(static_cast<std::size_t>(p), false);

    result.complete = true;
    while (active.size() < eligible.size()) {
        const Eigen::VectorXd corr = xc.transpose() * residual;

        if (active.empty()) {
            std::size_t best = eligible[0];
            for (std::size_t j : eligible)
                if (std::abs(corr[static_cast<Eigen::Index>(j)]) >
                    std::abs(corr[static_cast<Eigen::Index>(best)]))
                    best = j;
            active.push_back(best);
            is_active[best] = true;
            result.entry_order.push_back(best);
        }

        const std::size_t a = active.size();
        const double big_c = std::abs(corr[static_cast<Eigen::Index>(active[0])]);

        Eigen::MatrixXd xa(n, static_cast<Eigen::Index>(a));
        for (std::size_t k = 0; k < a; ++k) {
            const double s = corr[static_cast<Eigen::Index>(active[k])] >= 0.0 ? 1.0 : -1.0;
            xa.col(static_cast<Eigen::Index>(k)) =
                s * xc.col(static_cast<Eigen::Index>(active[k]));
        }
        const Eigen::MatrixXd gram = xa.transpose() * xa;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        const Eigen::VectorXd ginv1 =
            ldlt.solve(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(a)));
        const double denom = ginv1.sum();
        if (!(denom > 0.0) || !ginv1.allFinite()) {
            // Active set no longer identifiable (rank-limited path).
            result.complete = false;
            break;
        }
        const double aa = 1.0 / std::sqrt(denom);
        const Eigen::VectorXd w = aa * ginv1;
        const Eigen::VectorXd u = xa * w;
        const Eigen::VectorXd proj = xc.transpose() * u;

        double gamma = big_c / aa; // full step to the joint least squares fit
        std::size_t entering = std::numeric_limits<std::size_t>::max();
        for (std::size_t j : eligible) {
            if (is_active[j]) continue;
            const double cj = corr[static_cast<Eigen::Index>(j)];
            const double ajv = proj[static_cast<Eigen::Index>(j)];
            for (const double cand : {(big_c - cj) / (aa - ajv), (big_c + cj) / (aa + ajv)}) {
                if (cand > 1e-12 && cand < gamma) {
                    gamma = cand;
                    entering = j;
                }
            }
        }

        for (std::size_t k = 0; k < a; ++k) {
            const double s = corr[static_cast<Eigen::Index>(active[k])] >= 0.0 ? 1.0 : -1.0;
            beta[static_cast<Eigen::Index>(active[k])] +=
                gamma * s * w[static_cast<Eigen::Index>(k)];
        }
        residual -= gamma * u;

        if (entering == std::numeric_limits<std::size_t>::max()) {
            // No event before the least squares point of the active set.
            result.complete = active.size() == eligible.size();
            break;
        }
        active.push_back(entering);
        is_active[entering] = true;
        result.entry_order.push_back(entering);
    }

    if (active.size() == eligible.size() && !active.empty() && result.complete) {
        // Land exactly on the least squares fit of the eligible columns.
        Eigen::MatrixXd xa(n, static_cast<Eigen::Index>(active.size()));
        for (std::size_t k = 0; k < active.size(); ++k)
            xa.col(static_cast<Eigen::Index>(k)) =
                xc.col(static_cast<Eigen::Index>(active[k]));
        const Eigen::VectorXd full =
            xa.colPivHouseholderQr().solve(yc);
        for (std::size_t k = 0; k < active.size(); ++k)
            beta[static_cast<Eigen::Index>(active[k])] =
                full[static_cast<Eigen::Index>(k)];
    }

    // Back to the original column scale, intercept folded in.
    double intercept_value = y_mean;
    for (std::size_t j : eligible) {
        const Eigen::Index jj = static_cast<Eigen::Index>(j);
        result.final_coefficients[jj] = beta[jj] / col_norm[jj];
        intercept_value -= result.final_coefficients[jj] * col_mean[jj];
    }
    if (result.intercept) {
        const Eigen::Index jj = static_cast<Eigen::Index>(*result.intercept);
        result.final_coefficients[jj] = intercept_value / col_mean[jj];
    }
    return result;
}

SparseResult sparse_pc2_train(const MultiIndexSet& indices,
                              const DomainScaling& scaling,
                              const TrainingData& data,
                              const ConstraintSet& constraints,
                              const SparseOptions& options) {
    if (data.size() == 0)
        throw ConfigError("sparse_pc2_train: ranking requires training data");

    const TrainingProblem full(indices, scaling, data, constraints);
    SparseResult result;
    result.ranking = lar_path(full.data_design(), full.data_targets());

    // Ranked candidate columns: intercept carrier first (the mean term is
    // always kept), then in activation order.
    std::vector<std::size_t> ranked;
    if (result.ranking.intercept) ranked.push_back(*result.ranking.intercept);
    for (std::size_t j : result.ranking.entry_order) ranked.push_back(j);

    if (ranked.empty()) throw Error("sparse_pc2_train: no usable columns");

    const std::size_t dims = scaling.dims();
    std::size_t min_terms =
        options.min_terms > 0 ? options.min_terms : std::max<std::size_t>(10, dims + 1);
    std::size_t step =
        options.step > 0 ? options.step : std::max<std::size_t>(5, indices.size() / 50);
    std::size_t cap = options.max_terms > 0
                          ? std::min(options.max_terms, ranked.size())
                          : ranked.size();
    min_terms = std::min(min_terms, cap);

    std::ofstream report;
    if (!options.report_path.empty()) {
        report.open(options.report_path);
        if (report && !options.report_comment.empty())
            report << "# " << options.report_comment << "\n";
        if (!report)
            throw IoError("sparse_pc2_train: cannot open report " + options.report_path);
        report << "n_terms,data,pde,ic,bc,penalty,total\n";
    }

    std::size_t k = min_terms;
    while (true) {
        std::vector<std::size_t> cols(ranked.begin(),
                                      ranked.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(cols.begin(), cols.end());

        const TrainingProblem sub = full.subset(cols);
        const MultiIndexSet sub_indices = indices.subset(cols);
        TrainResult tr = train(sub, sub_indices, scaling, options.train);

        if (report.is_open()) {
            double pen = 0.0;
            for (double v : tr.losses.inequality) pen += v;
            report << k << ',' << tr.losses.data << ',' << tr.losses.pde << ','
                   << tr.losses.ic << ',' << tr.losses.bc << ',' << pen << ','
                   << tr.losses.total << '\n';
        }
        result.path.push_back({k, tr.losses});
        if (result.path.size() == 1 ||
            tr.losses.total < result.best.losses.total) {
            result.best = std::move(tr);
            result.selected = cols;
        }

        if (result.path.back().losses.total < options.target_loss) {
            result.reached_target = true;
            break;
        }
        if (k >= cap) break;
        k = std::min(k + step, cap);
    }
    return result;
}

BaselineFit baseline_sparse_fit(const Eigen::MatrixXd& design,
                                const Eigen::VectorXd& targets,
                                double holdout_fraction, std::uint64_t seed) {
    if (design.rows() != targets.size())
        throw DimensionMismatch("baseline_sparse_fit: row/target mismatch");
    const std::size_t n = static_cast<std::size_t>(design.rows());
    if (n < 3) throw ConfigError("baseline_sparse_fit: need at least three rows");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
        throw ConfigError("baseline_sparse_fit: holdout fraction must be in (0, 1)");

    std::size_t n_hold = static_cast<std::size_t>(
        std::lround(holdout_fraction * static_cast<double>(n)));
    n_hold = std::clamp<std::size_t>(n_hold, 1, n - 2);

    Rng rng(derive_stream_seed(seed, "baseline-holdout"));
    const std::vector<std::uint32_t> perm = rng.permutation(n);

    const auto take_rows = [&](std::size_t begin, std::size_t end,
                               Eigen::MatrixXd& x, Eigen::VectorXd& y) {
        x.resize(static_cast<Eigen::Index>(end - begin), design.cols());
        y.resize(static_cast<Eigen::Index>(end - begin));
        for (std::size_t i = begin; i < end; ++i) {
            x.row(static_cast<Eigen::Index>(i - begin)) =
                design.row(static_cast<Eigen::Index>(perm[i]));
            y[static_cast<Eigen::Index>(i - begin)] =
                targets[static_cast<Eigen::Index>(perm[i])];
        }
    };
    Eigen::MatrixXd x_hold, x_fit;
    Eigen::VectorXd y_hold, y_fit;
    take_rows(0, n_hold, x_hold, y_hold);
    take_rows(n_hold, n, x_fit, y_fit);

    const LarResult path = lar_path(x_fit, y_fit);

    const auto prefix_support = [&](std::size_t k) {
        std::vector<std::size_t> cols;
        if (path.intercept) cols.push_back(*path.intercept);
        cols.insert(cols.end(), path.entry_order.begin(),
                    path.entry_order.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(cols.begin(), cols.end());
        return cols;
    };
    const auto subset_fit = [&](const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                const std::vector<std::size_t>& cols) {
        Eigen::MatrixXd sub(x.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j)
            sub.col(static_cast<Eigen::Index>(j)) =
                x.col(static_cast<Eigen::Index>(cols[j]));
        return Eigen::VectorXd(sub.colPivHouseholderQr().solve(y));
    };

    BaselineFit best;
    bool have_best = false;
    const std::size_t max_prefix =
        std::min(path.entry_order.size(),
                 static_cast<std::size_t>(x_fit.rows()) -
                     (path.intercept ? 1u : 0u));
    const std::size_t first_prefix = path.intercept ? 0 : 1;
    for (std::size_t k = first_prefix; k <= max_prefix; ++k) {
        const std::vector<std::size_t> cols = prefix_support(k);
        if (cols.empty()) continue;
        Eigen::MatrixXd sub_hold(x_hold.rows(),
                                 static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j)
            sub_hold.col(static_cast<Eigen::Index>(j)) =
                x_hold.col(static_cast<Eigen::Index>(cols[j]));
        const Eigen::VectorXd c = subset_fit(x_fit, y_fit, cols);
        const double err =
            (sub_hold * c - y_hold).squaredNorm() / static_cast<double>(n_hold);
        if (!have_best || err < best.holdout_error) {
            have_best = true;
            best.selected = cols;
            best.holdout_error = err;
        }
    }
    if (!have_best) throw Error("baseline_sparse_fit: empty candidate path");

    // Refit the chosen support on every row.
    Eigen::MatrixXd sub_all(design.rows(),
                            static_cast<Eigen::Index>(best.selected.size()));
    for (std::size_t j = 0; j < best.selected.size(); ++j)
        sub_all.col(static_cast<Eigen::Index>(j)) =
            design.col(static_cast<Eigen::Index>(best.selected[j]));
    const Eigen::VectorXd c = sub_all.colPivHouseholderQr().solve(targets);
    best.coefficients = Eigen::VectorXd::Zero(design.cols());
    for (std::size_t j = 0; j < best.selected.size(); ++j)
        best.coefficients[static_cast<Eigen::Index>(best.selected[j])] =
            c[static_cast<Eigen::Index>(j)];
    return best;
}

} // namespace pc2
