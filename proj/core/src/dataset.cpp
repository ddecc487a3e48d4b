#include <gridtid/dataset.hpp>

#include <gridtid/numeric.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace gridtid {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

void write_rows(const Dataset& ds, const std::vector<const Observation*>& obs,
                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (const auto& name : ds.schema.names) out << name << ',';
    out << "label_config,label_pd\n";
    for (std::size_t r = 0; r < obs.size(); ++r) {
        const Observation& o = *obs[r];
        for (Eigen::Index i = 0; i < o.values.size(); ++i) {
            if (o.available[static_cast<std::size_t>(i)]) out << format_double(o.values[i]);
            out << ',';
        }
        out << ds.rows[r].label.switch_config << ',' << ds.rows[r].label.pd_status << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::vector<const Observation*> obs;
    obs.reserve(ds.rows.size());
    for (const auto& row : ds.rows) obs.push_back(&row.obs);
    write_rows(ds, obs, path);
}

void write_clean_csv(const Dataset& ds, const std::filesystem::path& path) {
    if (!ds.has_clean()) throw ValidationError("dataset has no clean twin");
    std::vector<const Observation*> obs;
    obs.reserve(ds.clean.size());
    for (const auto& o : ds.clean) obs.push_back(&o);
    write_rows(ds, obs, path);
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");

    Dataset ds;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty dataset file '" + path.string() + "'");
    std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 3 || header[header.size() - 2] != "label_config" ||
        header.back() != "label_pd")
        throw ValidationError("dataset header must end with label_config,label_pd");
    ds.schema.names.assign(header.begin(), header.end() - 2);
    validate_schema(ds.schema);
    const std::size_t n = ds.schema.names.size();
    const std::uint64_t fp = ds.schema.fingerprint();

    std::set<TopologyLabel> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != n + 2)
            throw ValidationError("dataset line " + std::to_string(line_no) +
                                  ": wrong field count");
        LabeledObservation row;
        row.obs.values.resize(static_cast<Eigen::Index>(n));
        row.obs.available.assign(n, true);
        row.obs.schema_id = fp;
        for (std::size_t i = 0; i < n; ++i) {
            if (fields[i].empty()) {
                row.obs.available[i] = false;
                row.obs.values[static_cast<Eigen::Index>(i)] =
                    std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            double v = 0.0;
            const auto* first = fields[i].data();
            const auto* last = first + fields[i].size();
            const auto res = std::from_chars(first, last, v);
            if (res.ec != std::errc{} || res.ptr != last)
                throw ValidationError("dataset line " + std::to_string(line_no) + ": bad number '" +
                                      fields[i] + "'");
            row.obs.values[static_cast<Eigen::Index>(i)] = v;
        }
        row.label.switch_config = fields[n];
        row.label.pd_status = fields[n + 1];
        if (row.label.switch_config.empty())
            throw ValidationError("dataset line " + std::to_string(line_no) + ": empty label");
        validate_observation(row.obs, ds.schema);
        labels.insert(row.label);
        ds.rows.push_back(std::move(row));
    }
    ds.class_labels.assign(labels.begin(), labels.end());
    return ds;
}

void attach_clean(Dataset& ds, const Dataset& clean_twin) {
    if (clean_twin.schema != ds.schema)
        throw SchemaMismatch("clean twin schema differs from dataset schema");
    if (clean_twin.rows.size() != ds.rows.size())
        throw ValidationError("clean twin row count differs from dataset");
    ds.clean.clear();
    ds.clean.reserve(clean_twin.rows.size());
    for (std::size_t r = 0; r < clean_twin.rows.size(); ++r) {
        if (clean_twin.rows[r].label != ds.rows[r].label)
            throw ValidationError("clean twin labels differ at row " + std::to_string(r));
        ds.clean.push_back(clean_twin.rows[r].obs);
    }
}

Dataset drop_predictors(const Dataset& ds, const std::vector<int>& drop_idx) {
    const int n = ds.schema.dimension();
    std::vector<bool> drop(static_cast<std::size_t>(n), false);
    for (int i : drop_idx) {
        if (i < 0 || i >= n) throw ValidationError("drop_predictors: index out of range");
        drop[static_cast<std::size_t>(i)] = true;
    }
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
        if (!drop[static_cast<std::size_t>(i)]) keep.push_back(i);
    if (keep.empty()) throw ValidationError("drop_predictors: no predictors left");

    Dataset out;
    for (int i : keep) out.schema.names.push_back(ds.schema.names[static_cast<std::size_t>(i)]);
    out.class_labels = ds.class_labels;
    const std::uint64_t fp = out.schema.fingerprint();

    auto reduce = [&](const Observation& o) {
        Observation r;
        r.values.resize(static_cast<Eigen::Index>(keep.size()));
        r.available.resize(keep.size());
        r.schema_id = fp;
        for (std::size_t j = 0; j < keep.size(); ++j) {
            r.values[static_cast<Eigen::Index>(j)] = o.values[keep[j]];
            r.available[j] = o.available[static_cast<std::size_t>(keep[j])];
        }
        return r;
    };

    out.rows.reserve(ds.rows.size());
    for (const auto& row : ds.rows) out.rows.push_back({reduce(row.obs), row.label});
    out.clean.reserve(ds.clean.size());
    for (const auto& o : ds.clean) out.clean.push_back(reduce(o));
    return out;
}

} // namespace gridtid
