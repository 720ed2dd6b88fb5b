#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "mdlpart/evalkit.hpp"
#include "mdlpart/simgen.hpp"
#include "mdlpart/types.hpp"

namespace mdlpart {

constexpr int kFileSchemaVersion = 1;

struct CsvSchema {
    std::string id_column;
    std::vector<std::string> layer_columns;  // coarse to fine
    std::vector<std::string> feature_columns;
    std::string target_column;
};

namespace detail {

inline void check_schema(const CsvSchema& schema) {
    if (schema.id_column.empty() || schema.target_column.empty() ||
        schema.layer_columns.empty() || schema.feature_columns.empty())
        throw std::invalid_argument(
            "schema: need id, target, at least one layer and one feature column");
    std::vector<std::string> all;
    all.push_back(schema.id_column);
    all.insert(all.end(), schema.layer_columns.begin(), schema.layer_columns.end());
    all.insert(all.end(), schema.feature_columns.begin(), schema.feature_columns.end());
    all.push_back(schema.target_column);
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
        throw std::invalid_argument("schema: column sets must be disjoint");
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& field, int row, const std::string& column) {
    double value = 0.0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw std::runtime_error("csv: non-numeric value '" + field + "' at row " +
                                 std::to_string(row) + ", column '" + column + "'");
    return value;
}

/// One RFC-4180 record: comma separated, optional double-quoted fields with
/// "" escapes. Embedded newlines are not supported.
inline std::vector<std::string> split_csv_record(const std::string& line, int row) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current += ch;
            }
        } else if (ch == '"' && current.empty()) {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current += ch;
        }
    }
    if (quoted)
        throw std::runtime_error("csv: unterminated quote at row " + std::to_string(row));
    fields.push_back(std::move(current));
    return fields;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += "\"\"";
        else out += ch;
    }
    out += '"';
    return out;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    return out;
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad json in '" + path + "': " + e.what());
    }
    return j;
}

}  // namespace detail

inline CsvSchema load_schema_json(const std::string& path) {
    const nlohmann::json j = detail::load_json_file(path);
    CsvSchema schema;
    try {
        schema.id_column = j.at("id_column").get<std::string>();
        schema.layer_columns = j.at("layer_columns").get<std::vector<std::string>>();
        schema.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
        schema.target_column = j.at("target_column").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad schema in '" + path + "': " + e.what());
    }
    detail::check_schema(schema);
    return schema;
}

inline void write_schema_json(const std::string& path, const CsvSchema& schema) {
    detail::check_schema(schema);
    nlohmann::ordered_json j;
    j["schema_version"] = kFileSchemaVersion;
    j["id_column"] = schema.id_column;
    j["layer_columns"] = schema.layer_columns;
    j["feature_columns"] = schema.feature_columns;
    j["target_column"] = schema.target_column;
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

struct LoadedData {
    Dataset dataset;
    HierarchyTree tree;
    std::vector<std::string> row_ids;
};

/// Read a data CSV against the schema. Clusters are keyed by the tuple of
/// layer values from the top down, so nesting holds by construction; the
/// tree is still validated before returning.
inline LoadedData load_csv(const std::string& path, const CsvSchema& schema) {
    detail::check_schema(schema);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = detail::split_csv_record(line, 0);
    auto column_of = [&](const std::string& name) {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == name) return static_cast<int>(c);
        throw std::runtime_error("csv: missing column '" + name + "' in '" + path + "'");
    };
    const int id_col = column_of(schema.id_column);
    const int target_col = column_of(schema.target_column);
    std::vector<int> layer_cols, feature_cols;
    for (const auto& name : schema.layer_columns) layer_cols.push_back(column_of(name));
    for (const auto& name : schema.feature_columns) feature_cols.push_back(column_of(name));

    std::vector<std::string> row_ids;
    std::vector<std::vector<std::string>> labels(schema.layer_columns.size());
    std::vector<double> target;
    std::vector<double> features;  // row major
    int row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const std::vector<std::string> fields = detail::split_csv_record(line, row);
        if (fields.size() != header.size())
            throw std::runtime_error("csv: row " + std::to_string(row) + " has " +
                                     std::to_string(fields.size()) + " fields, header has " +
                                     std::to_string(header.size()));
        row_ids.push_back(fields[static_cast<std::size_t>(id_col)]);
        for (std::size_t k = 0; k < layer_cols.size(); ++k)
            labels[k].push_back(fields[static_cast<std::size_t>(layer_cols[k])]);
        for (std::size_t f = 0; f < feature_cols.size(); ++f)
            features.push_back(detail::parse_double(
                fields[static_cast<std::size_t>(feature_cols[f])], row,
                schema.feature_columns[f]));
        target.push_back(detail::parse_double(fields[static_cast<std::size_t>(target_col)], row,
                                              schema.target_column));
    }
    if (row == 0) throw std::runtime_error("csv: no data rows in '" + path + "'");

    const int n = row;
    const int d = static_cast<int>(feature_cols.size());
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            x(i, j) = features[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) +
                               static_cast<std::size_t>(j)];
    Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(target.data(), n);

    HierarchyTree tree = HierarchyTree::from_layer_labels(n, labels);
    const ValidationResult check = validate_tree(tree);
    if (!check.ok()) {
        std::string msg = "csv: hierarchy invalid in '" + path + "':";
        for (const auto& v : check.violations) msg += "\n  " + v.detail;
        throw std::runtime_error(msg);
    }
    return LoadedData{Dataset(std::move(x), std::move(y), schema.feature_columns),
                      std::move(tree), std::move(row_ids)};
}

inline CsvSchema default_schema(const Dataset& dataset, const HierarchyTree& tree) {
    CsvSchema schema;
    schema.id_column = "id";
    for (int k = 1; k <= tree.n_layers(); ++k)
        schema.layer_columns.push_back("layer" + std::to_string(k));
    if (!dataset.column_names.empty()) {
        schema.feature_columns = dataset.column_names;
    } else {
        for (int j = 1; j <= dataset.d(); ++j)
            schema.feature_columns.push_back("x" + std::to_string(j));
    }
    schema.target_column = "y";
    return schema;
}

/// Write dataset plus hierarchy as one CSV. Numeric values use shortest
/// round-trip formatting, so a reload reproduces every double bit for bit.
inline void write_data_csv(const std::string& path, const Dataset& dataset,
                           const HierarchyTree& tree, const CsvSchema& schema) {
    detail::check_schema(schema);
    if (static_cast<int>(schema.layer_columns.size()) != tree.n_layers())
        throw std::invalid_argument("write_data_csv: schema layer count mismatch");
    if (static_cast<int>(schema.feature_columns.size()) != dataset.d())
        throw std::invalid_argument("write_data_csv: schema feature count mismatch");
    auto out = detail::open_out(path);

    out << detail::csv_escape(schema.id_column);
    for (const auto& name : schema.layer_columns) out << ',' << detail::csv_escape(name);
    for (const auto& name : schema.feature_columns) out << ',' << detail::csv_escape(name);
    out << ',' << detail::csv_escape(schema.target_column) << '\n';

    for (int i = 0; i < dataset.n(); ++i) {
        out << i;
        for (int k = 1; k <= tree.n_layers(); ++k) {
            const ClusterId id = tree.membership(k, i);
            out << ',' << detail::csv_escape(tree.cluster(id).token());
        }
        for (int j = 0; j < dataset.d(); ++j)
            out << ',' << detail::format_double(dataset.features(i, j));
        out << ',' << detail::format_double(dataset.target(i)) << '\n';
    }
}

inline void write_truth_json(const std::string& path, const HierarchyTree& tree,
                             const GroundTruth& truth) {
    nlohmann::ordered_json j;
    j["schema_version"] = kFileSchemaVersion;
    nlohmann::ordered_json clusters = nlohmann::ordered_json::array();
    for (ClusterId id : truth.partition.cluster_ids()) {
        const Cluster& c = tree.cluster(id);
        nlohmann::ordered_json entry;
        entry["name"] = c.name;
        entry["layer"] = c.layer;
        entry["size"] = c.members.size();
        auto it = truth.generators.find(id);
        if (it != truth.generators.end()) {
            entry["generator"] = {{"kind", to_string(it->second.kind)},
                                  {"feature", it->second.feature + 1},
                                  {"c1", it->second.c1},
                                  {"c2", it->second.c2}};
        }
        clusters.push_back(std::move(entry));
    }
    j["clusters"] = std::move(clusters);
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

struct NamedClusterSummary {
    std::string name;
    int layer = 0;
    long long size = 0;
    std::string model_kind;
};

struct TruthSummary {
    std::vector<NamedClusterSummary> clusters;
};

inline TruthSummary load_truth_json(const std::string& path) {
    const nlohmann::json j = detail::load_json_file(path);
    TruthSummary summary;
    try {
        for (const auto& entry : j.at("clusters")) {
            NamedClusterSummary c;
            c.name = entry.at("name").get<std::string>();
            c.layer = entry.at("layer").get<int>();
            c.size = entry.at("size").get<long long>();
            summary.clusters.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad truth file '" + path + "': " + e.what());
    }
    return summary;
}

struct ReportMeta {
    std::string algorithm;  // "opt" | "greedy"
    std::string fit_kind;   // "linear" | "exponential"
    unsigned long long seed = 0;
    double partition_rmse = 0.0;
};

/// Report for one run: global scores plus one record per selected cluster,
/// in deterministic order.
inline void write_report_json(const std::string& path, const InferenceReport& report,
                              const HierarchyTree& tree, const Dataset& dataset,
                              const ReportMeta& meta) {
    nlohmann::ordered_json j;
    j["schema_version"] = kFileSchemaVersion;
    j["algorithm"] = meta.algorithm;
    j["fit_kind"] = meta.fit_kind;
    j["seed"] = meta.seed;
    j["n"] = dataset.n();
    j["d"] = dataset.d();
    j["gamma"] = report.gamma_used;
    j["gamma_prime"] = report.gamma_prime;
    j["partition_rmse"] = meta.partition_rmse;
    nlohmann::ordered_json clusters = nlohmann::ordered_json::array();
    for (ClusterId id : report.partition.cluster_ids()) {
        const Cluster& c = tree.cluster(id);
        const RegressionModel& model = report.optimal_models.at(id);
        nlohmann::ordered_json entry;
        entry["name"] = c.name;
        entry["layer"] = c.layer;
        entry["size"] = c.members.size();
        entry["model_kind"] = to_string(model.kind);
        entry["coefficients"] = std::vector<double>(
            model.coefficients.data(), model.coefficients.data() + model.coefficients.size());
        entry["param_bits"] = model.param_bits;
        if (auto it = report.eta.find(id); it != report.eta.end()) entry["eta"] = it->second;
        if (auto it = report.model_irr.find(id); it != report.model_irr.end())
            entry["model_irr"] = it->second;
        if (auto it = report.cluster_irr.find(id); it != report.cluster_irr.end())
            entry["cluster_irr"] = it->second;
        clusters.push_back(std::move(entry));
    }
    j["clusters"] = std::move(clusters);
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

struct ReportSummary {
    std::string algorithm;
    double gamma = 0.0;
    double gamma_prime = 0.0;
    double partition_rmse = 0.0;
    std::vector<NamedClusterSummary> clusters;
};

inline ReportSummary load_report_json(const std::string& path) {
    const nlohmann::json j = detail::load_json_file(path);
    ReportSummary summary;
    try {
        summary.algorithm = j.at("algorithm").get<std::string>();
        summary.gamma = j.at("gamma").get<double>();
        summary.gamma_prime = j.at("gamma_prime").get<double>();
        summary.partition_rmse = j.at("partition_rmse").get<double>();
        for (const auto& entry : j.at("clusters")) {
            NamedClusterSummary c;
            c.name = entry.at("name").get<std::string>();
            c.layer = entry.at("layer").get<int>();
            c.size = entry.at("size").get<long long>();
            c.model_kind = entry.at("model_kind").get<std::string>();
            summary.clusters.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad report file '" + path + "': " + e.what());
    }
    return summary;
}

/// Confusion from file summaries. Cluster names are canonical per tree
/// (full layer path), so name equality stands in for member-set equality.
inline Confusion confusion_by_name(const TruthSummary& truth, const ReportSummary& predicted) {
    std::map<std::string, long long> remaining;
    long long truth_total = 0;
    for (const auto& c : truth.clusters) {
        remaining[c.name] = c.size;
        truth_total += c.size;
    }
    Confusion out;
    for (const auto& c : predicted.clusters) {
        auto it = remaining.find(c.name);
        if (it != remaining.end()) {
            out.tp += it->second;
            remaining.erase(it);
        } else {
            out.fp += c.size;
        }
    }
    out.fn = truth_total - out.tp;
    return out;
}

inline void write_metrics_json(const std::string& path, const Confusion& c, const Scores& s,
                               double rmse_value) {
    nlohmann::ordered_json j;
    j["schema_version"] = kFileSchemaVersion;
    j["tp"] = c.tp;
    j["fp"] = c.fp;
    j["fn"] = c.fn;
    j["precision"] = s.precision;
    j["recall"] = s.recall;
    j["f1"] = s.f1;
    j["rmse"] = rmse_value;
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

/// DOT digraph of the hierarchy: one node per cluster, one edge per
/// parent-child link, selected clusters filled.
inline void write_dot(const std::string& path, const HierarchyTree& tree,
                      const InferenceReport& report) {
    auto out = detail::open_out(path);
    auto quote = [](const std::string& s) {
        std::string q = "\"";
        for (char ch : s) {
            if (ch == '"') q += '\\';
            q += ch;
        }
        q += '"';
        return q;
    };
    out << "digraph hierarchy {\n";
    out << "  rankdir=TB;\n  node [shape=box];\n";
    for (const auto& c : tree.clusters()) {
        const bool is_selected = report.partition.contains(c.id);
        const RegressionModel* model = nullptr;
        if (is_selected) {
            model = &report.optimal_models.at(c.id);
        } else if (auto it = report.models.find(c.id); it != report.models.end()) {
            model = &it->second;
        }
        std::string label = c.name + "\\nn=" + std::to_string(c.members.size());
        if (model) label += std::string("\\n") + to_string(model->kind);
        out << "  c" << c.id << " [label=" << quote(label);
        if (is_selected) out << ", style=filled, fillcolor=salmon";
        out << "];\n";
    }
    for (const auto& c : tree.clusters())
        for (ClusterId ch : c.children) out << "  c" << c.id << " -> c" << ch << ";\n";
    out << "}\n";
}

}  // namespace mdlpart
