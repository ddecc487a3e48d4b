#pragma once

#include <gridtid/errors.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace gridtid {

// Ordered list of predictor names. Names follow "UNIT:QUANTITY"
// (e.g. "DER2:V-"), which is what groups predictors into metered units.
struct PredictorSchema {
    std::vector<std::string> names;

    int dimension() const { return static_cast<int>(names.size()); }

    // FNV-1a over the joined names; observations carry this to detect
    // schema confusion between files and models.
    std::uint64_t fingerprint() const;

    bool operator==(const PredictorSchema&) const = default;
};

// Validates uniqueness and non-emptiness; throws SchemaMismatch.
void validate_schema(const PredictorSchema& schema);

// Unit tag of a predictor name ("DER2:P" -> "DER2").
std::string unit_of(const std::string& predictor_name);

// Distinct unit tags in schema order.
std::vector<std::string> units_of(const PredictorSchema& schema);

// Predictor indices belonging to one unit; throws SchemaMismatch if none.
std::vector<int> unit_indices(const PredictorSchema& schema, const std::string& unit);

// One measurement vector. Missing entries have available[i] == false and
// a NaN placeholder in values[i].
struct Observation {
    Eigen::VectorXd values;
    std::vector<bool> available;
    std::uint64_t schema_id = 0;

    bool complete() const {
        for (bool a : available)
            if (!a) return false;
        return true;
    }

    std::vector<int> missing_indices() const {
        std::vector<int> idx;
        for (int i = 0; i < static_cast<int>(available.size()); ++i)
            if (!available[i]) idx.push_back(i);
        return idx;
    }

    static Observation complete_of(Eigen::VectorXd v, const PredictorSchema& schema) {
        Observation obs;
        obs.available.assign(static_cast<std::size_t>(v.size()), true);
        obs.values = std::move(v);
        obs.schema_id = schema.fingerprint();
        return obs;
    }
};

// Length agreement and finiteness of available entries.
void validate_observation(const Observation& obs, const PredictorSchema& schema);

// Composite class identity: switching configuration x protective-device
// status. pd_status is a bit string, '0' = close, '1' = open, one
// character per device in feeder order.
struct TopologyLabel {
    std::string switch_config;
    std::string pd_status;

    auto operator<=>(const TopologyLabel&) const = default;

    std::string str() const { return switch_config + "-" + pd_status; }
};

} // namespace gridtid
