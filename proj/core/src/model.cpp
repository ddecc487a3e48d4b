#include <gridtid/model.hpp>

#include <gridtid/numeric.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace gridtid {

std::uint64_t PredictorSchema::fingerprint() const {
    std::string joined;
    for (const auto& n : names) {
        joined += n;
        joined += '\n';
    }
    return fnv1a64(joined);
}

void validate_schema(const PredictorSchema& schema) {
    if (schema.names.empty()) throw SchemaMismatch("schema has no predictors");
    std::vector<std::string> sorted = schema.names;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw SchemaMismatch("schema has duplicate predictor names");
}

std::string unit_of(const std::string& predictor_name) {
    const auto pos = predictor_name.find(':');
    return pos == std::string::npos ? predictor_name : predictor_name.substr(0, pos);
}

std::vector<std::string> units_of(const PredictorSchema& schema) {
    std::vector<std::string> units;
    for (const auto& n : schema.names) {
        const std::string u = unit_of(n);
        if (std::find(units.begin(), units.end(), u) == units.end()) units.push_back(u);
    }
    return units;
}

std::vector<int> unit_indices(const PredictorSchema& schema, const std::string& unit) {
    std::vector<int> idx;
    for (int i = 0; i < schema.dimension(); ++i)
        if (unit_of(schema.names[static_cast<std::size_t>(i)]) == unit) idx.push_back(i);
    if (idx.empty()) throw SchemaMismatch("no predictors for unit '" + unit + "'");
    return idx;
}

void validate_observation(const Observation& obs, const PredictorSchema& schema) {
    const auto n = static_cast<std::size_t>(schema.dimension());
    if (static_cast<std::size_t>(obs.values.size()) != n || obs.available.size() != n)
        throw SchemaMismatch("observation length does not match schema dimension");
    if (obs.schema_id != schema.fingerprint())
        throw SchemaMismatch("observation schema fingerprint mismatch");
    for (std::size_t i = 0; i < n; ++i)
        if (obs.available[i] && !std::isfinite(obs.values[static_cast<Eigen::Index>(i)]))
            throw SchemaMismatch("available entry " + std::to_string(i) + " is not finite");
}

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kInverseTol = 1e-8;
constexpr double kPriorSumTol = 1e-12;

struct CholeskyResult {
    Eigen::MatrixXd precision;
    double log_det = 0.0;
};

// Cholesky-based inverse and log-determinant. If factorization fails,
// one absolute jitter of 1e-10 * trace/n is added to the diagonal before
// giving up.
CholeskyResult invert_covariance(Eigen::MatrixXd& cov, const std::string& what) {
    const auto n = cov.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        const double jitter = 1e-10 * cov.trace() / static_cast<double>(n);
        cov.diagonal().array() += jitter;
        llt.compute(cov);
        if (llt.info() != Eigen::Success)
            throw SingularCovariance("covariance not positive definite for " + what);
    }
    CholeskyResult out;
    const Eigen::MatrixXd L = llt.matrixL();
    out.log_det = 2.0 * L.diagonal().array().log().sum();
    out.precision = llt.solve(Eigen::MatrixXd::Identity(n, n));
    // Exact symmetry keeps the QP partition blocks transpose-consistent.
    out.precision = ((out.precision + out.precision.transpose()) * 0.5).eval();
    return out;
}

} // namespace

DaModel::DaModel(PredictorSchema schema, Standardization standardization,
                 SignalRanges signal_ranges, double lambda, std::vector<ClassParams> classes)
    : schema_(std::move(schema)),
      standardization_(std::move(standardization)),
      signal_ranges_(std::move(signal_ranges)),
      lambda_(lambda) {
    validate_schema(schema_);
    const int n = schema_.dimension();
    if (classes.size() < 2) throw ValidationError("model needs at least 2 classes");
    if (standardization_.shift.size() != n || standardization_.scale.size() != n)
        throw ValidationError("standardization length does not match schema");
    if ((standardization_.scale.array() <= 0.0).any())
        throw ValidationError("standardization scales must be positive");
    if (signal_ranges_.min.size() != n || signal_ranges_.max.size() != n)
        throw ValidationError("signal_ranges length does not match schema");
    if ((signal_ranges_.min.array() > signal_ranges_.max.array()).any())
        throw ValidationError("signal_ranges must satisfy min <= max");

    double prior_sum = 0.0;
    classes_.reserve(classes.size());
    for (auto& cp : classes) {
        if (cp.prior <= 0.0 || cp.prior > 1.0)
            throw ValidationError("class prior outside (0,1] for " + cp.label.str());
        if (cp.mean.size() != n || cp.covariance.rows() != n || cp.covariance.cols() != n)
            throw ValidationError("class parameter shape mismatch for " + cp.label.str());
        const double asym = (cp.covariance - cp.covariance.transpose()).cwiseAbs().maxCoeff();
        if (asym > kSymmetryTol)
            throw ValidationError("covariance not symmetric for " + cp.label.str());
        prior_sum += cp.prior;

        ClassStats cs;
        cs.label = std::move(cp.label);
        cs.prior = cp.prior;
        cs.mean = std::move(cp.mean);
        cs.covariance = std::move(cp.covariance);
        auto inv = invert_covariance(cs.covariance, "class " + cs.label.str());
        cs.precision = std::move(inv.precision);
        cs.log_det_cov = inv.log_det;
        const double residual =
            (cs.precision * cs.covariance - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
        if (residual > kInverseTol)
            throw SingularCovariance("precision*covariance deviates from identity for " +
                                     cs.label.str());
        classes_.push_back(std::move(cs));
    }
    if (std::abs(prior_sum - 1.0) > kPriorSumTol)
        throw ValidationError("class priors must sum to 1");

    for (std::size_t k = 0; k + 1 < classes_.size(); ++k)
        if (!(classes_[k].label < classes_[k + 1].label))
            throw ValidationError("classes must be strictly ordered by label");
}

int DaModel::class_index(const TopologyLabel& label) const {
    for (int k = 0; k < num_classes(); ++k)
        if (classes_[static_cast<std::size_t>(k)].label == label) return k;
    return -1;
}

std::vector<TopologyLabel> DaModel::labels() const {
    std::vector<TopologyLabel> out;
    out.reserve(classes_.size());
    for (const auto& c : classes_) out.push_back(c.label);
    return out;
}

Eigen::VectorXd DaModel::standardize(const Eigen::VectorXd& raw) const {
    return (raw - standardization_.shift).cwiseQuotient(standardization_.scale);
}

Eigen::VectorXd DaModel::destandardize(const Eigen::VectorXd& z) const {
    return standardization_.shift + z.cwiseProduct(standardization_.scale);
}

Eigen::VectorXd DaModel::class_mean_raw(int k) const {
    return destandardize(class_stats(k).mean);
}

Eigen::MatrixXd DaModel::class_cov_raw(int k) const {
    const auto& s = standardization_.scale;
    return s.asDiagonal() * class_stats(k).covariance * s.asDiagonal();
}

Eigen::VectorXd DaModel::check_and_standardize(const Observation& x) const {
    validate_observation(x, schema_);
    if (!x.complete())
        throw IncompleteObservation("observation has missing entries; recover them first");
    return standardize(x.values);
}

double DaModel::quad_form(int k, const Eigen::VectorXd& z) const {
    const auto& cs = class_stats(k);
    const Eigen::VectorXd d = z - cs.mean;
    return d.dot(cs.precision * d);
}

double DaModel::log_density(int k, const Observation& x) const {
    const Eigen::VectorXd z = check_and_standardize(x);
    const auto& cs = class_stats(k);
    return -0.5 * quad_form(k, z) - 0.5 * cs.log_det_cov -
           0.5 * dimension() * std::log(2.0 * std::numbers::pi);
}

double DaModel::discriminant_score(int k, const Observation& x) const {
    const Eigen::VectorXd z = check_and_standardize(x);
    return score_z(k, z);
}

double DaModel::score_z(int k, const Eigen::VectorXd& z) const {
    const auto& cs = class_stats(k);
    return -0.5 * quad_form(k, z) - 0.5 * cs.log_det_cov + std::log(cs.prior);
}

Eigen::VectorXd DaModel::posterior(const Observation& x) const {
    const Eigen::VectorXd z = check_and_standardize(x);
    return posterior_z(z);
}

Eigen::VectorXd DaModel::posterior_z(const Eigen::VectorXd& z) const {
    // log density + log prior differs from score_z by a class-independent
    // constant, so the same scores feed the posterior.
    Eigen::VectorXd lj(num_classes());
    for (int k = 0; k < num_classes(); ++k) lj[k] = score_z(k, z);
    const double lse = log_sum_exp(lj);
    Eigen::VectorXd p = (lj.array() - lse).exp();
    return p / p.sum();
}

Classification DaModel::classify(const Observation& x) const {
    const Eigen::VectorXd z = check_and_standardize(x);
    Classification out;
    out.posterior = posterior_z(z);
    int best = 0;
    double best_score = score_z(0, z);
    for (int k = 1; k < num_classes(); ++k) {
        const double s = score_z(k, z);
        if (s > best_score) {
            best_score = s;
            best = k;
        }
    }
    out.class_index = best;
    out.label = class_stats(best).label;
    return out;
}

DaModel fit(const std::vector<LabeledObservation>& dataset, const PredictorSchema& schema,
            const FitOptions& options, const std::vector<TopologyLabel>* class_enumeration) {
    validate_schema(schema);
    if (dataset.empty()) throw ValidationError("fit: empty dataset");
    if (options.lambda < 0.0 || options.lambda > 1.0)
        throw ValidationError("fit: shrinkage lambda must lie in [0,1]");
    const int n = schema.dimension();

    std::map<TopologyLabel, std::vector<const Observation*>> by_class;
    if (class_enumeration) {
        for (const auto& label : *class_enumeration) by_class[label];
    }
    for (const auto& row : dataset) {
        validate_observation(row.obs, schema);
        if (!row.obs.complete())
            throw IncompleteObservation("fit: training observations must be complete");
        if (class_enumeration && !by_class.count(row.label))
            throw ValidationError("fit: label " + row.label.str() + " not in enumeration");
        by_class[row.label].push_back(&row.obs);
    }
    for (const auto& [label, rows] : by_class)
        if (rows.empty()) throw EmptyClass("fit: class " + label.str() + " has no samples");
    if (by_class.size() < 2) throw ValidationError("fit: need at least 2 classes");

    const auto total = static_cast<double>(dataset.size());

    // Pooled z-score parameters and per-predictor training ranges.
    Standardization st;
    st.shift = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(n);
    SignalRanges ranges;
    ranges.min = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    ranges.max = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    for (const auto& row : dataset) {
        st.shift += row.obs.values;
        sq += row.obs.values.cwiseAbs2();
        ranges.min = ranges.min.cwiseMin(row.obs.values);
        ranges.max = ranges.max.cwiseMax(row.obs.values);
    }
    st.shift /= total;
    Eigen::VectorXd var = sq / total - st.shift.cwiseAbs2();
    st.scale = var.cwiseMax(0.0).cwiseSqrt();
    for (int j = 0; j < n; ++j)
        if (st.scale[j] <= 0.0) st.scale[j] = 1.0; // constant predictor

    std::vector<ClassParams> classes;
    classes.reserve(by_class.size());
    for (const auto& [label, rows] : by_class) {
        const auto nk = static_cast<double>(rows.size());
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
        for (const auto* obs : rows) mean += (obs->values - st.shift).cwiseQuotient(st.scale);
        mean /= nk;
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
        for (const auto* obs : rows) {
            const Eigen::VectorXd d = (obs->values - st.shift).cwiseQuotient(st.scale) - mean;
            cov.noalias() += d * d.transpose();
        }
        cov /= nk;
        const Eigen::VectorXd diag = cov.diagonal();
        cov = (1.0 - options.lambda) * cov;
        cov.diagonal() += options.lambda * diag;

        ClassParams cp;
        cp.label = label;
        cp.prior = nk / total;
        cp.mean = std::move(mean);
        cp.covariance = std::move(cov);
        classes.push_back(std::move(cp));
    }

    return DaModel(schema, std::move(st), std::move(ranges), options.lambda, std::move(classes));
}

} // namespace gridtid
