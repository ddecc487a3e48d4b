#pragma once

// Shared construction helpers for synthetic test models.

#include <gridtid/model.hpp>

#include <string>
#include <vector>

namespace testutil {

inline gridtid::PredictorSchema schema_of(int n, const std::string& prefix = "X") {
    gridtid::PredictorSchema s;
    for (int i = 0; i < n; ++i) s.names.push_back(prefix + std::to_string(i) + ":v");
    return s;
}

inline gridtid::TopologyLabel label(int i) {
    return {"C" + std::to_string(i + 1), "0"};
}

// Model with identity standardization and wide signal ranges, built from
// explicit per-class parameters.
inline gridtid::DaModel make_model(const gridtid::PredictorSchema& schema,
                                   std::vector<gridtid::ClassParams> classes,
                                   double range_halfwidth = 1e6) {
    const int n = schema.dimension();
    gridtid::Standardization st;
    st.shift = Eigen::VectorXd::Zero(n);
    st.scale = Eigen::VectorXd::Ones(n);
    gridtid::SignalRanges ranges;
    ranges.min = Eigen::VectorXd::Constant(n, -range_halfwidth);
    ranges.max = Eigen::VectorXd::Constant(n, range_halfwidth);
    return gridtid::DaModel(schema, std::move(st), std::move(ranges), 0.0, std::move(classes));
}

inline gridtid::Observation obs_of(const gridtid::PredictorSchema& schema, Eigen::VectorXd v) {
    return gridtid::Observation::complete_of(std::move(v), schema);
}

// Exact floating-point equality, coefficient by coefficient.
inline bool bits_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

} // namespace testutil
