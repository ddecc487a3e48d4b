#include <gridtid/serialize.hpp>

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace gridtid {

using nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::VectorXd vector_from_json(const json& arr, const std::string& what) {
    if (!arr.is_array()) throw ValidationError("model JSON: " + what + " must be an array");
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

Eigen::MatrixXd matrix_from_json(const json& rows, const std::string& what) {
    if (!rows.is_array() || rows.empty())
        throw ValidationError("model JSON: " + what + " must be a non-empty array of rows");
    const std::size_t n = rows.size();
    Eigen::MatrixXd m(n, rows[0].size());
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != static_cast<std::size_t>(m.cols()))
            throw ValidationError("model JSON: ragged matrix for " + what);
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    }
    return m;
}

} // namespace

std::string model_to_json(const DaModel& model) {
    json j;
    j["format"] = "gridtid-da-model";
    j["format_version"] = 1;
    j["schema"] = model.schema().names;
    j["lambda"] = model.lambda();
    j["standardization"] = {{"shift", vector_to_json(model.standardization().shift)},
                            {"scale", vector_to_json(model.standardization().scale)}};
    j["signal_ranges"] = {{"min", vector_to_json(model.signal_ranges().min)},
                          {"max", vector_to_json(model.signal_ranges().max)}};
    json classes = json::array();
    for (const auto& cs : model.classes()) {
        json c;
        c["config"] = cs.label.switch_config;
        c["pd"] = cs.label.pd_status;
        c["prior"] = cs.prior;
        c["mean"] = vector_to_json(cs.mean);
        c["covariance"] = matrix_to_json(cs.covariance);
        classes.push_back(std::move(c));
    }
    j["classes"] = std::move(classes);
    return j.dump(2) + "\n";
}

DaModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model JSON parse error: ") + e.what());
    }
    try {
        if (j.value("format", std::string{}) != "gridtid-da-model")
            throw ValidationError("model JSON: unexpected format tag");
        if (j.value("format_version", 0) != 1)
            throw ValidationError("model JSON: unsupported format_version");

        PredictorSchema schema;
        schema.names = j.at("schema").get<std::vector<std::string>>();

        Standardization st;
        st.shift = vector_from_json(j.at("standardization").at("shift"), "shift");
        st.scale = vector_from_json(j.at("standardization").at("scale"), "scale");

        SignalRanges ranges;
        ranges.min = vector_from_json(j.at("signal_ranges").at("min"), "min");
        ranges.max = vector_from_json(j.at("signal_ranges").at("max"), "max");

        std::vector<ClassParams> classes;
        for (const auto& c : j.at("classes")) {
            ClassParams cp;
            cp.label.switch_config = c.at("config").get<std::string>();
            cp.label.pd_status = c.at("pd").get<std::string>();
            cp.prior = c.at("prior").get<double>();
            cp.mean = vector_from_json(c.at("mean"), "class mean");
            cp.covariance = matrix_from_json(c.at("covariance"), "class covariance");
            classes.push_back(std::move(cp));
        }

        return DaModel(std::move(schema), std::move(st), std::move(ranges),
                       j.at("lambda").get<double>(), std::move(classes));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model JSON field error: ") + e.what());
    }
}

void save_model(const DaModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model file '" + path.string() + "'");
    out << model_to_json(model);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

DaModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

} // namespace gridtid
