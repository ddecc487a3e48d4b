#pragma once

#include <gridtid/model.hpp>

#include <filesystem>
#include <string>

namespace gridtid {

// Self-describing JSON document: schema, shrinkage, standardization,
// signal ranges, and per-class {label, prior, mean, covariance} in
// standardized coordinates. Precision matrices and log-determinants are
// recomputed on load and verified against the model invariants.
std::string model_to_json(const DaModel& model);
DaModel model_from_json(const std::string& text);

void save_model(const DaModel& model, const std::filesystem::path& path);
DaModel load_model(const std::filesystem::path& path);

} // namespace gridtid
