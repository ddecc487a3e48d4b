#pragma once

#include <gridtid/model.hpp>

#include <filesystem>
#include <vector>

namespace gridtid {

// Labeled observation table plus the class enumeration it was drawn
// from. clean, when non-empty, mirrors rows with noise-free values for
// anomaly-injection experiments.
struct Dataset {
    PredictorSchema schema;
    std::vector<TopologyLabel> class_labels;
    std::vector<LabeledObservation> rows;
    std::vector<Observation> clean;

    bool has_clean() const { return clean.size() == rows.size() && !rows.empty(); }
};

// Delimited text, header = predictor names + label_config + label_pd,
// one observation per row, missing entries as empty fields.
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

// Same table with the clean values substituted (row order preserved).
void write_clean_csv(const Dataset& ds, const std::filesystem::path& path);

Dataset read_dataset_csv(const std::filesystem::path& path);

// Attaches the clean twin (same shape, same labels) to a dataset.
void attach_clean(Dataset& ds, const Dataset& clean_twin);

// Copy with the given predictor columns removed; class enumeration is
// preserved, clean values follow along.
Dataset drop_predictors(const Dataset& ds, const std::vector<int>& drop_idx);

} // namespace gridtid
