#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "maxent/solver.hpp"

namespace maxent {

using json = nlohmann::ordered_json;

namespace detail {

/// Locale-independent decimal string with 17 significant digits, so every
/// double round-trips exactly.
inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double x = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw Error("malformed number '" + s + "'");
    return x;
}

inline json doubles_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(format_double(v[i]));
    return arr;
}

inline json doubles_to_json(const std::vector<double>& v) {
    json arr = json::array();
    for (double x : v) arr.push_back(format_double(x));
    return arr;
}

inline std::vector<double> doubles_from_json(const json& arr) {
    std::vector<double> out;
    for (const auto& x : arr) out.push_back(parse_double(x.get<std::string>()));
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// schema JSON

inline json schema_to_json(const DomainSchema& schema) {
    json blocks = json::array();
    for (const auto& b : schema.blocks()) {
        json j;
        j["name"] = b.name;
        j["kind"] = b.kind == BlockKind::Bit ? "bit" : "categorical";
        if (b.kind == BlockKind::OneHot) j["cardinality"] = b.cardinality;
        j["role"] = b.role == BlockRole::Feature ? "feature"
                                                 : (b.role == BlockRole::Label ? "label" : "protected");
        j["categories"] = b.categories;
        blocks.push_back(std::move(j));
    }
    return json{{"blocks", std::move(blocks)}};
}

inline DomainSchema schema_from_json(const json& j) {
    if (!j.contains("blocks") || !j["blocks"].is_array())
        throw SchemaError("schema JSON needs a 'blocks' array");
    std::vector<AttributeBlock> blocks;
    for (const auto& bj : j["blocks"]) {
        AttributeBlock b;
        b.name = bj.at("name").get<std::string>();
        const auto kind = bj.at("kind").get<std::string>();
        if (kind == "bit") {
            b.kind = BlockKind::Bit;
            b.cardinality = 2;
        } else if (kind == "categorical") {
            b.kind = BlockKind::OneHot;
            b.cardinality = bj.contains("cardinality")
                                ? bj["cardinality"].get<int>()
                                : static_cast<int>(bj.at("categories").size());
        } else {
            throw SchemaError("unknown block kind '" + kind + "'");
        }
        const auto role = bj.value("role", std::string("feature"));
        if (role == "feature")
            b.role = BlockRole::Feature;
        else if (role == "label")
            b.role = BlockRole::Label;
        else if (role == "protected")
            b.role = BlockRole::Protected;
        else
            throw SchemaError("unknown block role '" + role + "'");
        if (bj.contains("categories"))
            b.categories = bj["categories"].get<std::vector<std::string>>();
        else if (b.kind == BlockKind::Bit)
            b.categories = {"0", "1"};
        else
            for (int c = 0; c < b.cardinality; ++c) b.categories.push_back(std::to_string(c));
        blocks.push_back(std::move(b));
    }
    return DomainSchema(std::move(blocks));
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim surrounding spaces
        const auto a = cell.find_first_not_of(" \t\r");
        const auto b = cell.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace detail

struct RowError {
    std::size_t row;  // 1-based data row number
    std::string message;
};

/// Read a raw (decoded) CSV whose header matches the schema block names.
/// Bad rows are collected into `errors`; when skip_bad is false the first
/// error aborts the read by throwing it.
inline Dataset read_raw_csv(const DomainSchema& schema, std::istream& in, bool skip_bad,
                            std::vector<RowError>* errors = nullptr) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaMismatch("CSV is empty");
    const auto header = detail::split_csv_line(line);
    if (static_cast<int>(header.size()) != schema.block_count())
        throw SchemaMismatch("CSV has " + std::to_string(header.size()) +
                             " columns, schema has " + std::to_string(schema.block_count()));
    for (int b = 0; b < schema.block_count(); ++b)
        if (header[b] != schema.block(b).name)
            throw SchemaMismatch("CSV column '" + header[b] + "' does not match block '" +
                                 schema.block(b).name + "'");
    Dataset ds;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        try {
            ds.add(encode_record_labels(schema, detail::split_csv_line(line)));
        } catch (const Error& e) {
            if (!skip_bad) throw Error("row " + std::to_string(row) + ": " + e.what());
            if (errors) errors->push_back({row, e.what()});
        }
    }
    return ds;
}

inline Dataset read_raw_csv_file(const DomainSchema& schema, const std::filesystem::path& path,
                                 bool skip_bad = false, std::vector<RowError>* errors = nullptr) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return read_raw_csv(schema, in, skip_bad, errors);
}

inline std::vector<std::string> encoded_column_names(const DomainSchema& schema) {
    std::vector<std::string> names;
    for (const auto& b : schema.blocks()) {
        if (b.kind == BlockKind::Bit)
            names.push_back(b.name);
        else
            for (int c = 0; c < b.cardinality; ++c)
                names.push_back(b.name + "=" + b.categories[c]);
    }
    return names;
}

/// Encoded dataset CSV: one column per coordinate plus a trailing `freq`.
inline void write_encoded_csv(const DomainSchema& schema, const Dataset& ds, std::ostream& out) {
    const auto names = encoded_column_names(schema);
    for (const auto& n : names) out << n << ',';
    out << "freq\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (int j = 0; j < schema.dimension(); ++j)
            out << static_cast<int>(ds.point(i).bits[j]) << ',';
        out << ds.frequency(i) << '\n';
    }
}

inline Dataset read_encoded_csv(const DomainSchema& schema, std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaMismatch("encoded CSV is empty");
    const auto header = detail::split_csv_line(line);
    const auto names = encoded_column_names(schema);
    if (header.size() != names.size() + 1 || header.back() != "freq")
        throw SchemaMismatch("encoded CSV header does not match the schema");
    for (std::size_t i = 0; i < names.size(); ++i)
        if (header[i] != names[i])
            throw SchemaMismatch("encoded CSV column '" + header[i] + "' does not match '" +
                                 names[i] + "'");
    Dataset ds;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != names.size() + 1)
            throw Error("encoded CSV row " + std::to_string(row) + " has wrong arity");
        DataPoint p;
        p.bits.resize(schema.dimension());
        for (int j = 0; j < schema.dimension(); ++j) {
            if (cells[j] != "0" && cells[j] != "1")
                throw Error("encoded CSV row " + std::to_string(row) + ": bit column must be 0/1");
            p.bits[j] = cells[j] == "1";
        }
        if (!schema.valid_point(p))
            throw Error("encoded CSV row " + std::to_string(row) + ": invalid one-hot pattern");
        ds.add(std::move(p), std::stoll(cells.back()));
    }
    return ds;
}

/// Decoded samples CSV: header of block names, one row per record (expanded
/// by frequency when writing a dataset).
inline void write_decoded_csv(const DomainSchema& schema, const Dataset& ds, std::ostream& out) {
    for (int b = 0; b < schema.block_count(); ++b)
        out << schema.block(b).name << (b + 1 < schema.block_count() ? ',' : '\n');
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::string row;
        for (int b = 0; b < schema.block_count(); ++b) {
            const int v = schema.block_value(ds.point(i), b);
            row += schema.block(b).categories[v];
            row += b + 1 < schema.block_count() ? "," : "\n";
        }
        for (std::int64_t r = 0; r < ds.frequency(i); ++r) out << row;
    }
}

// ---------------------------------------------------------------------------
// model JSON

inline json model_to_json(const MaxEntModel& model, const SolverResult* diag = nullptr,
                          SolverMode mode = SolverMode::DampedNewton) {
    const auto& prior = model.prior;
    json j;
    j["format"] = "maxent-model/1";
    j["schema"] = schema_to_json(model.schema());
    j["C"] = detail::format_double(prior.uniform_coefficient());
    if (prior.tau())
        j["tau"] = detail::format_double(*prior.tau());
    else
        j["tau"] = nullptr;
    json support = json::array();
    for (const auto& p : prior.support()) {
        std::string bits(p.bits.size(), '0');
        for (std::size_t i = 0; i < p.bits.size(); ++i)
            if (p.bits[i]) bits[i] = '1';
        support.push_back(std::move(bits));
    }
    j["support"] = std::move(support);
    j["weights"] = detail::doubles_to_json(prior.weights());
    j["theta"] = detail::doubles_to_json(model.theta);
    j["lambda"] = detail::doubles_to_json(model.lambda);
    j["dual_value"] = detail::format_double(model.dual_value);
    if (diag) {
        j["solver"] = json{
            {"mode", mode == SolverMode::DampedNewton ? "damped_newton" : "box_newton"},
            {"iterations", diag->iterations},
            {"final_gradient_norm", detail::format_double(diag->final_gradient_norm)},
            {"converged", diag->converged}};
    }
    return j;
}

inline MaxEntModel model_from_json(const json& j) {
    if (j.value("format", std::string{}) != "maxent-model/1")
        throw Error("not a maxent model file");
    DomainSchema schema = schema_from_json(j.at("schema"));
    ReweightedDistribution w;
    for (const auto& s : j.at("support")) {
        const auto bits = s.get<std::string>();
        if (static_cast<int>(bits.size()) != schema.dimension())
            throw Error("support point has wrong dimension");
        DataPoint p;
        p.bits.resize(bits.size());
        for (std::size_t i = 0; i < bits.size(); ++i) {
            if (bits[i] != '0' && bits[i] != '1') throw Error("support bits must be 0/1");
            p.bits[i] = bits[i] == '1';
        }
        w.support.push_back(std::move(p));
    }
    w.weights = detail::doubles_from_json(j.at("weights"));
    if (!j.at("tau").is_null()) w.tau = detail::parse_double(j.at("tau").get<std::string>());
    MixedPrior prior(std::move(schema), detail::parse_double(j.at("C").get<std::string>()),
                     std::move(w));
    const auto theta_v = detail::doubles_from_json(j.at("theta"));
    const auto lambda_v = detail::doubles_from_json(j.at("lambda"));
    const int d = prior.schema().dimension();
    if (static_cast<int>(theta_v.size()) != d || static_cast<int>(lambda_v.size()) != d)
        throw Error("theta/lambda length does not match the schema");
    Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(theta_v.data(), d);
    Eigen::VectorXd lambda = Eigen::Map<const Eigen::VectorXd>(lambda_v.data(), d);
    return MaxEntModel{std::move(prior), std::move(theta), std::move(lambda),
                       detail::parse_double(j.at("dual_value").get<std::string>())};
}

// ---------------------------------------------------------------------------
// files

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed JSON in " + path.string() + ": " + e.what());
    }
}

/// Write to a temporary sibling and rename, so failures never leave a partial
/// file behind.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp);
        out << content;
        if (!out) throw Error("short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace maxent
