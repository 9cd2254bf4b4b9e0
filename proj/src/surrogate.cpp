#include "pc2/surrogate.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "pc2/errors.hpp"
#include "pc2/sampling.hpp"

namespace pc2 {

void SurrogateModel::validate() const {
    if (indices.dims() != scaling.dims())
        throw DimensionMismatch("SurrogateModel: index set and scaling disagree on dimension count");
    if (static_cast<std::size_t>(coefficients.size()) != indices.size())
        throw DimensionMismatch("SurrogateModel: coefficient count does not match basis size");
    for (const ScaledDimension& d : scaling.all()) d.validate();
}

double SurrogateModel::evaluate(std::span<const double> x_phys) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < indices.size(); ++k)
        acc += coefficients[static_cast<Eigen::Index>(k)] *
               multivariate_eval(indices[k], scaling, x_phys);
    return acc;
}

double SurrogateModel::evaluate_partial(std::span<const double> x_phys,
                                        std::span<const int> orders) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < indices.size(); ++k)
        acc += coefficients[static_cast<Eigen::Index>(k)] *
               multivariate_partial(indices[k], scaling, x_phys, orders);
    return acc;
}

Eigen::VectorXd SurrogateModel::evaluate(const Eigen::MatrixXd& x_phys) const {
    return build_design_matrix(indices, scaling, x_phys) * coefficients;
}

namespace {

Eigen::MatrixXd build_matrix(const MultiIndexSet& indices,
                             const DomainScaling& scaling,
                             const Eigen::MatrixXd& x_phys,
                             std::span<const int> orders) {
    if (static_cast<std::size_t>(x_phys.cols()) != scaling.dims())
        throw DimensionMismatch("design matrix: point dimension does not match scaling");
    if (indices.dims() != scaling.dims())
        throw DimensionMismatch("design matrix: index set dimension does not match scaling");

    const std::size_t m = scaling.dims();
    const std::size_t n = static_cast<std::size_t>(x_phys.rows());
    const bool plain = orders.empty();

    Eigen::MatrixXd design(static_cast<Eigen::Index>(n),
                           static_cast<Eigen::Index>(indices.size()));
    std::vector<double> x(m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j)
            x[j] = x_phys(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        for (std::size_t k = 0; k < indices.size(); ++k) {
            const double v = plain
                                 ? multivariate_eval(indices[k], scaling, x)
                                 : multivariate_partial(indices[k], scaling, x, orders);
            design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
        }
    }
    return design;
}

} // namespace

Eigen::MatrixXd build_design_matrix(const MultiIndexSet& indices,
                                    const DomainScaling& scaling,
                                    const Eigen::MatrixXd& x_phys) {
    return build_matrix(indices, scaling, x_phys, {});
}

Eigen::MatrixXd build_partial_matrix(const MultiIndexSet& indices,
                                     const DomainScaling& scaling,
                                     const Eigen::MatrixXd& x_phys,
                                     std::span<const int> orders) {
    if (orders.size() != scaling.dims())
        throw DimensionMismatch("build_partial_matrix: orders length does not match dimensions");
    return build_matrix(indices, scaling, x_phys, orders);
}

Eigen::VectorXd ols_solve(const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& targets) {
    if (design.rows() != targets.size())
        throw DimensionMismatch("ols_solve: row count does not match target count");
    if (design.rows() < design.cols())
        throw UnderdeterminedSystem("ols_solve: fewer rows than columns");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < design.cols())
        throw RankDeficient("ols_solve: design matrix is numerically rank deficient");
    return qr.solve(targets);
}

namespace {

constexpr const char* kModelFormat = "pc2-model/1";

std::string hexfloat(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_hexfloat(const std::string& s, const char* what) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || errno != 0)
        throw SchemaError(std::string("model file: bad number in ") + what);
    return v;
}

} // namespace

void save_model(const SurrogateModel& model, const std::string& path) {
    model.validate();

    std::ostringstream body;
    body << "format " << kModelFormat << "\n";
    body << "dims " << model.dims() << "\n";
    body << "terms " << model.terms() << "\n";
    for (const ScaledDimension& d : model.scaling.all())
        body << "dim " << family_name(d.family) << " " << hexfloat(d.lower)
             << " " << hexfloat(d.upper) << "\n";
    for (std::size_t k = 0; k < model.terms(); ++k) {
        body << "term";
        for (int a : model.indices[k]) body << " " << a;
        body << " " << hexfloat(model.coefficients[static_cast<Eigen::Index>(k)])
             << "\n";
    }
    for (const auto& [key, value] : model.metadata) {
        if (key.find_first_of(" \n") != std::string::npos ||
            value.find('\n') != std::string::npos)
            throw SchemaError("model metadata keys must be atoms and values single-line");
        body << "meta " << key << " " << value << "\n";
    }

    const std::string text = body.str();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_model: cannot open " + path);
    out << text;
    char sum[32];
    std::snprintf(sum, sizeof sum, "%016" PRIx64, fnv1a64(text));
    out << "checksum " << sum << "\n";
    if (!out) throw IoError("save_model: write failed for " + path);
}

SurrogateModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_model: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    const std::size_t sum_pos = text.rfind("checksum ");
    if (sum_pos == std::string::npos)
        throw SchemaError("model file: missing checksum line");
    const std::string body = text.substr(0, sum_pos);
    {
        std::istringstream tail(text.substr(sum_pos));
        std::string word, stored;
        tail >> word >> stored;
        char sum[32];
        std::snprintf(sum, sizeof sum, "%016" PRIx64, fnv1a64(body));
        if (stored != sum)
            throw SchemaError("model file: checksum mismatch (file corrupted or edited)");
    }

    std::istringstream lines(body);
    std::string tag;
    lines >> tag;
    std::string format;
    lines >> format;
    if (tag != "format" || format != kModelFormat)
        throw SchemaError("model file: unsupported format tag");

    std::size_t dims = 0, terms = 0;
    lines >> tag >> dims;
    if (tag != "dims") throw SchemaError("model file: expected dims");
    lines >> tag >> terms;
    if (tag != "terms") throw SchemaError("model file: expected terms");

    SurrogateModel model;
    std::vector<ScaledDimension> sdims;
    std::vector<int> flat;
    flat.reserve(dims * terms);
    Eigen::VectorXd coeffs(static_cast<Eigen::Index>(terms));
    std::size_t seen_terms = 0;

    while (lines >> tag) {
        if (tag == "dim") {
            std::string fam, lo, hi;
            lines >> fam >> lo >> hi;
            sdims.push_back({family_from_name(fam), parse_hexfloat(lo, "dim bounds"),
                             parse_hexfloat(hi, "dim bounds")});
        } else if (tag == "term") {
            if (seen_terms >= terms) throw SchemaError("model file: extra term lines");
            for (std::size_t j = 0; j < dims; ++j) {
                int a;
                if (!(lines >> a)) throw SchemaError("model file: truncated term line");
                flat.push_back(a);
            }
            std::string c;
            lines >> c;
            coeffs[static_cast<Eigen::Index>(seen_terms)] =
                parse_hexfloat(c, "coefficient");
            ++seen_terms;
        } else if (tag == "meta") {
            std::string key;
            lines >> key;
            std::string value;
            std::getline(lines, value);
            if (!value.empty() && value.front() == ' ') value.erase(0, 1);
            model.metadata[key] = value;
        } else {
            throw SchemaError("model file: unknown line tag '" + tag + "'");
        }
    }

    if (sdims.size() != dims) throw SchemaError("model file: dim line count mismatch");
    if (seen_terms != terms) throw SchemaError("model file: term line count mismatch");

    model.scaling = DomainScaling(sdims);
    model.indices = MultiIndexSet(dims, std::move(flat));
    model.coefficients = std::move(coeffs);
    model.validate();
    return model;
}

} // namespace pc2
