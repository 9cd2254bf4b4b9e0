#include "pc2/constraints.hpp"

#include "pc2/surrogate.hpp"

#include <array>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "pc2/errors.hpp"
#include "pc2/sampling.hpp"

namespace pc2 {

void SourceRegistry::add(const std::string& name, SourceFn fn) {
    if (!fn) throw Error("SourceRegistry::add: empty function for '" + name + "'");
    if (!fns_.emplace(name, std::move(fn)).second)
        throw Error("SourceRegistry::add: duplicate source '" + name + "'");
}

const SourceFn& SourceRegistry::get(const std::string& name) const {
    const auto it = fns_.find(name);
    if (it == fns_.end())
        throw ConfigError("unknown source term '" + name + "'");
    return it->second;
}

bool SourceRegistry::contains(const std::string& name) const {
    return fns_.count(name) != 0;
}

ExprPtr Expr::surrogate(std::vector<int> orders) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::SurrogateTerm;
    e->orders = std::move(orders);
    return e;
}

ExprPtr Expr::coordinate(std::size_t dim) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Coordinate;
    e->coord = dim;
    return e;
}

ExprPtr Expr::constant(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Constant;
    e->value = v;
    return e;
}

ExprPtr Expr::make_source(std::string name, SourceFn fn) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::SourceTerm;
    e->source_name = std::move(name);
    e->source = std::move(fn);
    return e;
}

ExprPtr Expr::sum(std::vector<ExprPtr> terms) {
    if (terms.empty()) throw Error("Expr::sum: needs at least one term");
    if (terms.size() == 1) return terms.front();
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Sum;
    e->children = std::move(terms);
    return e;
}

ExprPtr Expr::product(std::vector<ExprPtr> factors) {
    if (factors.empty()) throw Error("Expr::product: needs at least one factor");
    if (factors.size() == 1) return factors.front();
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Product;
    e->children = std::move(factors);
    return e;
}

ExprPtr Expr::power(ExprPtr base, int k) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Power;
    e->exponent = k;
    e->children = {std::move(base)};
    return e;
}

ExprPtr Expr::negate(ExprPtr inner) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Negate;
    e->children = {std::move(inner)};
    return e;
}

int coefficient_degree(const Expr& e) {
    switch (e.kind) {
    case Expr::Kind::Constant:
    case Expr::Kind::Coordinate:
    case Expr::Kind::SourceTerm:
        return 0;
    case Expr::Kind::SurrogateTerm:
        return 1;
    case Expr::Kind::Negate:
        return coefficient_degree(*e.children[0]);
    case Expr::Kind::Sum: {
        int d = 0;
        for (const ExprPtr& c : e.children) d = std::max(d, coefficient_degree(*c));
        return d;
    }
    case Expr::Kind::Product: {
        int d = 0;
        for (const ExprPtr& c : e.children) d += coefficient_degree(*c);
        return std::min(d, 2);
    }
    case Expr::Kind::Power: {
        const int d = coefficient_degree(*e.children[0]);
        if (d == 0 || e.exponent == 0) return 0;
        if (e.exponent == 1) return d;
        return 2;
    }
    }
    throw Error("coefficient_degree: unhandled node kind");
}

std::string to_string(const Expr& e, std::span<const std::string> dim_names) {
    const auto name = [&](std::size_t d) -> std::string {
        return d < dim_names.size() ? dim_names[d] : "#" + std::to_string(d);
    };
    switch (e.kind) {
    case Expr::Kind::SurrogateTerm: {
        bool plain = true;
        for (int o : e.orders) plain = plain && o == 0;
        if (plain) return "u";
        std::string s = "(diff u";
        for (std::size_t d = 0; d < e.orders.size(); ++d)
            if (e.orders[d] > 0)
                s += " " + name(d) + " " + std::to_string(e.orders[d]);
        return s + ")";
    }
    case Expr::Kind::Coordinate:
        return name(e.coord);
    case Expr::Kind::Constant: {
        std::ostringstream os;
        os << e.value;
        return os.str();
    }
    case Expr::Kind::SourceTerm:
        return "(source " + e.source_name + ")";
    case Expr::Kind::Negate:
        return "(neg " + to_string(*e.children[0], dim_names) + ")";
    case Expr::Kind::Power:
        return "(pow " + to_string(*e.children[0], dim_names) + " " +
               std::to_string(e.exponent) + ")";
    case Expr::Kind::Sum:
    case Expr::Kind::Product: {
        std::string s = e.kind == Expr::Kind::Sum ? "(+" : "(*";
        for (const ExprPtr& c : e.children) s += " " + to_string(*c, dim_names);
        return s + ")";
    }
    }
    throw Error("to_string: unhandled node kind");
}

namespace {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> toks;
    std::string cur;
    for (char c : text) {
        if (c == '(' || c == ')') {
            if (!cur.empty()) { toks.push_back(cur); cur.clear(); }
            toks.push_back(std::string(1, c));
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) { toks.push_back(cur); cur.clear(); }
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) toks.push_back(cur);
    return toks;
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && errno == 0;
}

bool parse_int(const std::string& s, int& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || errno != 0) return false;
    out = static_cast<int>(v);
    return true;
}

class ExprParser {
public:
    ExprParser(std::vector<std::string> toks, const ExprContext& ctx)
        : toks_(std::move(toks)), ctx_(ctx) {
        for (std::size_t d = 0; d < ctx.dim_names.size(); ++d) {
            const std::string& n = ctx.dim_names[d];
            double dummy;
            if (n.empty() || n == "u" || parse_number(n, dummy))
                throw ConfigError("invalid dimension name '" + n + "'");
            if (!dims_.emplace(n, d).second)
                throw ConfigError("duplicate dimension name '" + n + "'");
        }
    }

    ExprPtr run() {
        ExprPtr e = parse();
        if (pos_ != toks_.size())
            throw ConfigError("expression: trailing tokens after '" + peek_prev() + "'");
        return e;
    }

private:
    std::vector<std::string> toks_;
    std::size_t pos_ = 0;
    const ExprContext& ctx_;
    std::map<std::string, std::size_t> dims_;

    const std::string& next() {
        if (pos_ >= toks_.size())
            throw ConfigError("expression: unexpected end of input");
        return toks_[pos_++];
    }
    std::string peek_prev() const { return pos_ == 0 ? "" : toks_[pos_ - 1]; }
    bool at_close() const { return pos_ < toks_.size() && toks_[pos_] == ")"; }

    void expect_close(const std::string& op) {
        if (next() != ")")
            throw ConfigError("expression: expected ')' after (" + op + " ...)");
    }

    ExprPtr parse() {
        const std::string tok = next();
        if (tok == ")") throw ConfigError("expression: unexpected ')'");
        if (tok != "(") return atom(tok);

        const std::string op = next();
        if (op == "+" || op == "*") {
            std::vector<ExprPtr> kids;
            while (!at_close()) kids.push_back(parse());
            if (kids.empty())
                throw ConfigError("expression: (" + op + ") needs operands");
            expect_close(op);
            return op == "+" ? Expr::sum(std::move(kids))
                             : Expr::product(std::move(kids));
        }
        if (op == "-") {
            std::vector<ExprPtr> kids;
            while (!at_close()) kids.push_back(parse());
            if (kids.empty())
                throw ConfigError("expression: (-) needs operands");
            expect_close(op);
            if (kids.size() == 1) return Expr::negate(kids[0]);
            std::vector<ExprPtr> terms{kids[0]};
            for (std::size_t i = 1; i < kids.size(); ++i)
                terms.push_back(Expr::negate(kids[i]));
            return Expr::sum(std::move(terms));
        }
        if (op == "neg") {
            ExprPtr e = parse();
            expect_close(op);
            return Expr::negate(std::move(e));
        }
        if (op == "pow") {
            ExprPtr base = parse();
            int k;
            if (!parse_int(next(), k))
                throw ConfigError("expression: (pow e k) needs an integer exponent");
            expect_close(op);
            return Expr::power(std::move(base), k);
        }
        if (op == "source") {
            const std::string name = next();
            if (!ctx_.sources)
                throw ConfigError("expression: no sources available for '" + name + "'");
            const SourceFn& fn = ctx_.sources->get(name);
            expect_close(op);
            return Expr::make_source(name, fn);
        }
        if (op == "diff") {
            ExprPtr base = parse();
            if (base->kind != Expr::Kind::SurrogateTerm)
                throw ConfigError("expression: diff applies to the surrogate only");
            std::vector<int> orders = base->orders;
            bool any = false;
            while (!at_close()) {
                const std::string dn = next();
                const auto it = dims_.find(dn);
                if (it == dims_.end())
                    throw ConfigError("expression: unknown dimension '" + dn + "' in diff");
                int k;
                if (!parse_int(next(), k) || k < 1)
                    throw ConfigError("expression: diff needs a positive integer order");
                orders[it->second] += k;
                any = true;
            }
            if (!any)
                throw ConfigError("expression: diff needs at least one dimension/order pair");
            expect_close(op);
            return Expr::surrogate(std::move(orders));
        }
        if (op.size() >= 2 && op[0] == 'd') {
            // Shorthand (dxx u) for single-letter dimension names.
            std::vector<int> orders(ctx_.dim_names.size(), 0);
            bool ok = true;
            for (std::size_t i = 1; i < op.size(); ++i) {
                const auto it = dims_.find(std::string(1, op[i]));
                if (it == dims_.end()) { ok = false; break; }
                orders[it->second] += 1;
            }
            if (ok) {
                ExprPtr base = parse();
                if (base->kind != Expr::Kind::SurrogateTerm)
                    throw ConfigError("expression: " + op + " applies to the surrogate only");
                for (std::size_t d = 0; d < orders.size(); ++d)
                    orders[d] += base->orders[d];
                expect_close(op);
                return Expr::surrogate(std::move(orders));
            }
        }
        throw ConfigError("expression: unknown operator '" + op + "'");
    }

    ExprPtr atom(const std::string& tok) {
        double v;
        if (parse_number(tok, v)) return Expr::constant(v);
        if (tok == "u")
            return Expr::surrogate(std::vector<int>(ctx_.dim_names.size(), 0));
        const auto it = dims_.find(tok);
        if (it != dims_.end()) return Expr::coordinate(it->second);
        throw ConfigError("expression: unknown symbol '" + tok + "'");
    }
};

} // namespace

ExprPtr parse_expression(const std::string& text, const ExprContext& ctx) {
    return ExprParser(tokenize(text), ctx).run();
}

const char* constraint_kind_name(ConstraintKind k) {
    switch (k) {
    case ConstraintKind::Pde: return "PDE";
    case ConstraintKind::InitialCondition: return "IC";
    case ConstraintKind::BoundaryCondition: return "BC";
    }
    return "?";
}

namespace {

std::vector<SampleDim> sample_dims_for(const DomainScaling& scaling) {
    std::vector<SampleDim> out;
    out.reserve(scaling.dims());
    for (const ScaledDimension& d : scaling.all())
        out.push_back(SampleDim::from_scaled(d));
    return out;
}

Eigen::MatrixXd sample_with_fixed(const DomainScaling& scaling,
                                  std::size_t fixed_dim, double fixed_value,
                                  std::size_t n, std::uint64_t seed) {
    SampleSpec spec;
    spec.n_points = n;
    spec.seed = seed;
    for (std::size_t d = 0; d < scaling.dims(); ++d)
        if (d != fixed_dim)
            spec.dims.push_back(SampleDim::from_scaled(scaling.dim(d)));
    if (spec.dims.empty()) {
        Eigen::MatrixXd only(static_cast<Eigen::Index>(n), 1);
        only.setConstant(fixed_value);
        return only;
    }
    return insert_fixed_column(lhs_sample(spec), fixed_dim, fixed_value);
}

} // namespace

ConstraintSet build_pde_constraints(const DomainScaling& scaling,
                                    std::optional<std::size_t> time_dim,
                                    const ExprPtr& pde_residual, std::size_t n_pde,
                                    const ExprPtr& ic_residual, std::size_t n_ic,
                                    const std::vector<BoundaryFace>& faces,
                                    std::size_t n_bc,
                                    std::uint64_t root_seed) {
    if (time_dim && *time_dim >= scaling.dims())
        throw DimensionMismatch("build_pde_constraints: time dimension out of range");
    if (time_dim &&
        scaling.dim(*time_dim).family != PolynomialFamily::LegendreOrthonormal)
        throw ConfigError("build_pde_constraints: time dimension must be bounded");

    ConstraintSet set;

    if (n_pde > 0) {
        if (!pde_residual)
            throw ConfigError("build_pde_constraints: interior points requested without a residual");
        SampleSpec spec{n_pde, sample_dims_for(scaling),
                        derive_stream_seed(root_seed, "domain")};
        set.equalities.push_back({ConstraintKind::Pde, pde_residual, lhs_sample(spec)});
    }

    if (n_ic > 0) {
        if (!ic_residual)
            throw ConfigError("build_pde_constraints: IC points requested without a residual");
        if (!time_dim)
            throw ConfigError("build_pde_constraints: IC points need a time dimension");
        const double t0 = scaling.dim(*time_dim).lower;
        set.equalities.push_back(
            {ConstraintKind::InitialCondition, ic_residual,
             sample_with_fixed(scaling, *time_dim, t0, n_ic,
                               derive_stream_seed(root_seed, "IC"))});
    }

    if (n_bc > 0 && !faces.empty()) {
        const std::size_t base = n_bc / faces.size();
        const std::size_t rem = n_bc % faces.size();
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const BoundaryFace& face = faces[f];
            if (face.dim >= scaling.dims())
                throw DimensionMismatch("build_pde_constraints: face dimension out of range");
            if (!face.residual)
                throw ConfigError("build_pde_constraints: face without a residual");
            const std::size_t n_f = base + (f < rem ? 1 : 0);
            if (n_f == 0) continue;
            const ScaledDimension& d = scaling.dim(face.dim);
            const double bound = face.upper ? d.upper : d.lower;
            set.equalities.push_back(
                {ConstraintKind::BoundaryCondition, face.residual,
                 sample_with_fixed(scaling, face.dim, bound, n_f,
                                   derive_stream_seed(root_seed,
                                                      "BC" + std::to_string(f)))});
        }
    }

    return set;
}

namespace {

constexpr std::size_t kMaxTuples = 8;

struct NodeVal {
    double v = 0.0;
    std::array<double, kMaxTuples> t{};
};

struct PointContext {
    const double* x;
    const double* tuple_values;
    std::size_t point_index;
    const std::map<const Expr*, Eigen::VectorXd>* sources;
    const std::map<const Expr*, std::size_t>* tuple_of_node;
    std::size_t n_tuples;
};

NodeVal eval_node(const Expr& e, const PointContext& ctx) {
    NodeVal out;
    switch (e.kind) {
    case Expr::Kind::SurrogateTerm: {
        const std::size_t t = ctx.tuple_of_node->at(&e);
        out.v = ctx.tuple_values[t];
        out.t[t] = 1.0;
        return out;
    }
    case Expr::Kind::Coordinate:
        out.v = ctx.x[e.coord];
        return out;
    case Expr::Kind::Constant:
        out.v = e.value;
        return out;
    case Expr::Kind::SourceTerm:
        out.v = ctx.sources->at(&e)[static_cast<Eigen::Index>(ctx.point_index)];
        return out;
    case Expr::Kind::Negate: {
        out = eval_node(*e.children[0], ctx);
        out.v = -out.v;
        for (std::size_t t = 0; t < ctx.n_tuples; ++t) out.t[t] = -out.t[t];
        return out;
    }
    case Expr::Kind::Sum: {
        for (const ExprPtr& c : e.children) {
            const NodeVal k = eval_node(*c, ctx);
            out.v += k.v;
            for (std::size_t t = 0; t < ctx.n_tuples; ++t) out.t[t] += k.t[t];
        }
        return out;
    }
    case Expr::Kind::Product: {
        out = eval_node(*e.children[0], ctx);
        for (std::size_t i = 1; i < e.children.size(); ++i) {
            const NodeVal k = eval_node(*e.children[i], ctx);
            for (std::size_t t = 0; t < ctx.n_tuples; ++t)
                out.t[t] = out.t[t] * k.v + out.v * k.t[t];
            out.v *= k.v;
        }
        return out;
    }
    case Expr::Kind::Power: {
        const NodeVal k = eval_node(*e.children[0], ctx);
        const int p = e.exponent;
        out.v = std::pow(k.v, p);
        const double dv = p == 0 ? 0.0 : p * std::pow(k.v, p - 1);
        for (std::size_t t = 0; t < ctx.n_tuples; ++t) out.t[t] = dv * k.t[t];
        return out;
    }
    }
    throw Error("eval_node: unhandled node kind");
}

void collect_nodes(const ExprPtr& e, std::size_t dims,
                   std::map<std::vector<int>, std::size_t>& tuple_ids,
                   std::vector<std::vector<int>>& tuples,
                   std::map<const Expr*, std::size_t>& tuple_of_node,
                   std::vector<const Expr*>& source_nodes) {
    switch (e->kind) {
    case Expr::Kind::SurrogateTerm: {
        if (e->orders.size() != dims)
            throw DimensionMismatch("CompiledResidual: derivative orders do not match dimensions");
        const auto [it, inserted] = tuple_ids.emplace(e->orders, tuples.size());
        if (inserted) tuples.push_back(e->orders);
        tuple_of_node[e.get()] = it->second;
        return;
    }
    case Expr::Kind::SourceTerm:
        source_nodes.push_back(e.get());
        return;
    case Expr::Kind::Coordinate:
        if (e->coord >= dims)
            throw DimensionMismatch("CompiledResidual: coordinate index out of range");
        return;
    case Expr::Kind::Constant:
        return;
    default:
        for (const ExprPtr& c : e->children)
            collect_nodes(c, dims, tuple_ids, tuples, tuple_of_node, source_nodes);
        return;
    }
}

} // namespace

CompiledResidual::CompiledResidual(ExprPtr expr, const MultiIndexSet& indices,
                                   const DomainScaling& scaling,
                                   Eigen::MatrixXd points)
    : points_(std::move(points)), n_coeffs_(indices.size()), expr_(std::move(expr)) {
    if (!expr_) throw Error("CompiledResidual: null expression");
    if (static_cast<std::size_t>(points_.cols()) != scaling.dims())
        throw DimensionMismatch("CompiledResidual: point dimension does not match scaling");

    const std::size_t dims = scaling.dims();
    const std::size_t n = n_points();

    std::map<std::vector<int>, std::size_t> tuple_ids;
    std::vector<const Expr*> source_nodes;
    collect_nodes(expr_, dims, tuple_ids, tuples_, tuple_of_node_, source_nodes);
    if (tuples_.size() > kMaxTuples)
        throw Error("CompiledResidual: too many distinct derivative tuples in one expression");

    for (const Expr* node : source_nodes) {
        if (source_values_.count(node)) continue;
        Eigen::VectorXd vals(static_cast<Eigen::Index>(n));
        std::vector<double> x(dims);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < dims; ++d)
                x[d] = points_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d));
            vals[static_cast<Eigen::Index>(i)] = node->source(x);
        }
        source_values_.emplace(node, std::move(vals));
    }

    tuple_design_.reserve(tuples_.size());
    for (const std::vector<int>& orders : tuples_)
        tuple_design_.push_back(build_partial_matrix(indices, scaling, points_, orders));

    linear_ = coefficient_degree(*expr_) <= 1;
    if (linear_) {
        // Affine residual: the tangents do not depend on the coefficients,
        // so one pass at zero coefficients yields the full matrix form.
        offset_.resize(static_cast<Eigen::Index>(n));
        Eigen::MatrixXd tangents(static_cast<Eigen::Index>(n),
                                 static_cast<Eigen::Index>(tuples_.size()));
        std::vector<double> x(dims);
        std::vector<double> vt(tuples_.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < dims; ++d)
                x[d] = points_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d));
            PointContext ctx{x.data(), vt.data(), i, &source_values_,
                             &tuple_of_node_, tuples_.size()};
            const NodeVal r = eval_node(*expr_, ctx);
            offset_[static_cast<Eigen::Index>(i)] = r.v;
            for (std::size_t t = 0; t < tuples_.size(); ++t)
                tangents(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = r.t[t];
        }
        design_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                        static_cast<Eigen::Index>(n_coeffs_));
        for (std::size_t t = 0; t < tuples_.size(); ++t)
            design_ += tangents.col(static_cast<Eigen::Index>(t)).asDiagonal() *
                       tuple_design_[t];
        tuple_design_.clear();
        tuple_design_.shrink_to_fit();
    }
}

CompiledResidual CompiledResidual::subset_columns(std::span<const std::size_t> columns) const {
    for (std::size_t c : columns)
        if (c >= n_coeffs_)
            throw DimensionMismatch("subset_columns: column index out of range");

    CompiledResidual out;
    out.points_ = points_;
    out.n_coeffs_ = columns.size();
    out.linear_ = linear_;
    out.expr_ = expr_;
    out.tuples_ = tuples_;
    out.source_values_ = source_values_;
    out.tuple_of_node_ = tuple_of_node_;
    out.offset_ = offset_;

    const auto slice = [&](const Eigen::MatrixXd& m) {
        Eigen::MatrixXd s(m.rows(), static_cast<Eigen::Index>(columns.size()));
        for (std::size_t k = 0; k < columns.size(); ++k)
            s.col(static_cast<Eigen::Index>(k)) =
                m.col(static_cast<Eigen::Index>(columns[k]));
        return s;
    };
    if (linear_) {
        out.design_ = slice(design_);
    } else {
        out.tuple_design_.reserve(tuple_design_.size());
        for (const Eigen::MatrixXd& m : tuple_design_)
            out.tuple_design_.push_back(slice(m));
    }
    return out;
}

CompiledResidual::Evaluation CompiledResidual::evaluate(const Eigen::VectorXd& coeffs,
                                                        bool with_tangents) const {
    if (static_cast<std::size_t>(coeffs.size()) != n_coeffs_)
        throw DimensionMismatch("CompiledResidual::evaluate: coefficient count mismatch");

    Evaluation out;
    const std::size_t n = n_points();
    if (linear_) {
        out.residuals = design_ * coeffs + offset_;
        return out;
    }

    const std::size_t T = tuples_.size();
    Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(T));
    for (std::size_t t = 0; t < T; ++t)
        values.col(static_cast<Eigen::Index>(t)) = tuple_design_[t] * coeffs;

    out.residuals.resize(static_cast<Eigen::Index>(n));
    if (with_tangents)
        out.tangents.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(T));

    const std::size_t dims = static_cast<std::size_t>(points_.cols());
    std::vector<double> x(dims);
    std::vector<double> vt(T);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dims; ++d)
            x[d] = points_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d));
        for (std::size_t t = 0; t < T; ++t)
            vt[t] = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
        PointContext ctx{x.data(), vt.data(), i, &source_values_, &tuple_of_node_, T};
        const NodeVal r = eval_node(*expr_, ctx);
        out.residuals[static_cast<Eigen::Index>(i)] = r.v;
        if (with_tangents)
            for (std::size_t t = 0; t < T; ++t)
                out.tangents(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = r.t[t];
    }
    return out;
}

void CompiledResidual::accumulate_jacobian_transpose(const Evaluation& eval,
                                                     const Eigen::VectorXd& w,
                                                     Eigen::VectorXd& grad) const {
    if (static_cast<std::size_t>(grad.size()) != n_coeffs_)
        throw DimensionMismatch("accumulate_jacobian_transpose: gradient size mismatch");
    if (w.size() != eval.residuals.size())
        throw DimensionMismatch("accumulate_jacobian_transpose: weight size mismatch");

    if (linear_) {
        grad.noalias() += design_.transpose() * w;
        return;
    }
    if (eval.tangents.size() == 0)
        throw Error("accumulate_jacobian_transpose: evaluation lacks tangents");
    for (std::size_t t = 0; t < tuples_.size(); ++t)
        grad.noalias() += tuple_design_[t].transpose() *
                          w.cwiseProduct(eval.tangents.col(static_cast<Eigen::Index>(t)));
}

} // namespace pc2
