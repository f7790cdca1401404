#ifndef CFREFINE_DATASET_HPP
#define CFREFINE_DATASET_HPP

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cfrefine/error.hpp"

namespace cfrefine {

/// Row-major N x d feature matrix with optional integer class labels.
/// Row ids are the row positions 0..N-1.
struct Dataset {
    std::vector<double> values;
    std::size_t dim = 0;
    std::vector<std::string> feature_names;
    std::vector<int> labels;               // empty when unlabeled
    std::vector<std::string> class_names;  // class id -> original label text

    std::size_t rows() const { return dim == 0 ? 0 : values.size() / dim; }
    bool labeled() const { return !labels.empty(); }

    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * dim, dim};
    }
};

struct CsvOptions {
    std::vector<std::string> feature_columns;  // by header name, or 0-based index when headerless
    std::optional<std::string> label_column;
    bool has_header = true;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

} // namespace detail

/// Reads a comma-separated file. Quoting is not supported. Labels are
/// mapped to class ids in order of first appearance.
inline Dataset read_csv(std::istream& in, const CsvOptions& opts,
                        const std::string& source = "<stream>") {
    if (opts.feature_columns.empty()) throw UsageError("no feature columns selected");

    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!detail::trim(line).empty()) return true;
        }
        return false;
    };

    if (!next_line()) throw DataError(source + ": file is empty");

    std::vector<std::string> header;
    std::size_t n_fields = 0;
    if (opts.has_header) {
        for (auto f : detail::split_fields(line)) header.emplace_back(detail::trim(f));
        n_fields = header.size();
    } else {
        n_fields = detail::split_fields(line).size();
    }

    auto resolve = [&](const std::string& name) -> std::size_t {
        if (opts.has_header) {
            for (std::size_t i = 0; i < header.size(); ++i) {
                if (header[i] == name) return i;
            }
            throw DataError(source + ": column '" + name + "' not found in header");
        }
        std::size_t idx = 0;
        const auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), idx);
        if (ec != std::errc() || ptr != name.data() + name.size() || idx >= n_fields) {
            throw DataError(source + ": column '" + name +
                            "' is not a valid 0-based index for a headerless file");
        }
        return idx;
    };

    Dataset ds;
    std::vector<std::size_t> feature_idx;
    for (const auto& name : opts.feature_columns) {
        feature_idx.push_back(resolve(name));
        ds.feature_names.push_back(name);
    }
    ds.dim = feature_idx.size();
    std::optional<std::size_t> label_idx;
    if (opts.label_column) label_idx = resolve(*opts.label_column);

    std::unordered_map<std::string, int> class_ids;
    bool have_row = !opts.has_header;
    if (opts.has_header) have_row = next_line();
    if (!have_row) throw DataError(source + ": no data rows");

    do {
        const auto fields = detail::split_fields(line);
        if (fields.size() != n_fields) {
            throw DataError(source + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(n_fields));
        }
        for (std::size_t k = 0; k < feature_idx.size(); ++k) {
            const auto v = detail::parse_double(fields[feature_idx[k]]);
            if (!v || !std::isfinite(*v)) {
                throw DataError(source + ": line " + std::to_string(line_no) + ", column '" +
                                opts.feature_columns[k] + "': cannot parse '" +
                                std::string(detail::trim(fields[feature_idx[k]])) +
                                "' as a finite number");
            }
            ds.values.push_back(*v);
        }
        if (label_idx) {
            std::string key(detail::trim(fields[*label_idx]));
            auto [it, fresh] = class_ids.try_emplace(key, static_cast<int>(class_ids.size()));
            if (fresh) ds.class_names.push_back(key);
            ds.labels.push_back(it->second);
        }
    } while (next_line());
    return ds;
}

inline Dataset load_csv(const std::string& path, const CsvOptions& opts) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_csv(in, opts, path);
}

/// Writes features (and the label text, if any) with 17 significant digits
/// so that reading the file back reproduces every value exactly.
inline void write_csv(std::ostream& out, const Dataset& ds,
                      const std::string& label_name = "label") {
    for (std::size_t j = 0; j < ds.dim; ++j) out << (j ? "," : "") << ds.feature_names[j];
    if (ds.labeled()) out << "," << label_name;
    out << "\n";
    std::ostringstream cell;
    cell.precision(17);
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        const auto r = ds.row(i);
        for (std::size_t j = 0; j < ds.dim; ++j) {
            cell.str("");
            cell << r[j];
            out << (j ? "," : "") << cell.str();
        }
        if (ds.labeled()) out << "," << ds.class_names[static_cast<std::size_t>(ds.labels[i])];
        out << "\n";
    }
}

/// The dataset appended to itself until it holds k copies.
inline Dataset replicate(const Dataset& ds, std::size_t k) {
    if (k < 1) throw UsageError("replicate: multiple must be >= 1");
    Dataset out;
    out.dim = ds.dim;
    out.feature_names = ds.feature_names;
    out.class_names = ds.class_names;
    out.values.reserve(ds.values.size() * k);
    out.labels.reserve(ds.labels.size() * k);
    for (std::size_t c = 0; c < k; ++c) {
        out.values.insert(out.values.end(), ds.values.begin(), ds.values.end());
        out.labels.insert(out.labels.end(), ds.labels.begin(), ds.labels.end());
    }
    return out;
}

/// Column names for the UCI Abalone file shipped in data/.
inline const std::vector<std::string>& abalone_features() {
    static const std::vector<std::string> names = {
        "Length",         "Diameter",       "Height",      "Whole_weight",
        "Shucked_weight", "Viscera_weight", "Shell_weight"};
    return names;
}

} // namespace cfrefine

#endif // CFREFINE_DATASET_HPP
