#ifndef TCRANK_IO_HPP
#define TCRANK_IO_HPP

#include "errors.hpp"
#include "summaries.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

/**
 * @file io.hpp
 * @brief Long-format CSV reading and writing, truth sidecars and checksummed manifests.
 *
 * The canonical layout has one row per measurement with the columns `gene,condition,replicate,time,value`.
 * Optional leading comment lines `# time_order: t1,t2,...` and `# condition_order: A,B` fix the order of
 * time points and conditions; otherwise both are sorted, numerically when every label parses as a number.
 */

namespace tcrank {

/**
 * @brief Result of reading a long-format file.
 */
struct IngestResult {
    ExpressionDataset dataset;

    /**
     * Genes that lacked a measurement for some replicate and time point.
     */
    std::vector<SkippedGene> skipped;
};

namespace io_internal {

inline std::string trim(const std::string& x) {
    std::size_t start = 0, end = x.size();
    while (start < end && std::isspace(static_cast<unsigned char>(x[start]))) {
        ++start;
    }
    while (end > start && std::isspace(static_cast<unsigned char>(x[end - 1]))) {
        --end;
    }
    return x.substr(start, end - start);
}

/**
 * Split one CSV record, honouring double quotes with `""` escapes.
 */
inline std::vector<std::string> split_csv(const std::string& line, std::size_t line_number) {
    std::vector<std::string> out;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(current));
            current.clear();
        } else if (c != '\r') {
            current += c;
        }
    }
    if (quoted) {
        throw ParseError("line " + std::to_string(line_number) + ": unterminated quote");
    }
    out.push_back(std::move(current));
    return out;
}

inline std::string quote_csv(const std::string& x) {
    if (x.find_first_of(",\"\n\r") == std::string::npos && trim(x) == x) {
        return x;
    }
    std::string out = "\"";
    for (char c : x) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

inline std::optional<double> parse_number(const std::string& x) {
    const auto s = trim(x);
    if (s.empty()) {
        return std::nullopt;
    }
    double value;
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

/**
 * Sort labels numerically if all of them are numbers, otherwise lexicographically.
 */
inline void sort_labels(std::vector<std::string>& labels) {
    std::vector<double> numbers;
    numbers.reserve(labels.size());
    for (const auto& l : labels) {
        auto v = parse_number(l);
        if (!v) {
            std::sort(labels.begin(), labels.end());
            return;
        }
        numbers.push_back(*v);
    }
    std::vector<std::size_t> order(labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (numbers[a] == numbers[b]) {
            return labels[a] < labels[b];
        }
        return numbers[a] < numbers[b];
    });
    std::vector<std::string> sorted;
    sorted.reserve(labels.size());
    for (auto o : order) {
        sorted.push_back(labels[o]);
    }
    labels.swap(sorted);
}

inline std::vector<std::string> parse_order(const std::string& value, std::size_t line_number) {
    std::vector<std::string> out;
    for (auto& x : split_csv(value, line_number)) {
        out.push_back(trim(x));
    }
    return out;
}

inline std::string format_value(double x) {
    if (std::isnan(x)) {
        return "NA";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.17g", x);
    return buffer;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open " + path);
    }
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ParseError("cannot open " + path + " for writing");
    }
    return out;
}

}

/**
 * Read a long-format CSV stream.
 *
 * Blank lines are ignored, as are comment lines other than the ordering directives.
 * A missing (`NA` or empty) value leaves its cell unfilled, so the gene ends up in the skip list.
 * Replicates are ordered by label using the same rule as time points; genes keep their order of first appearance.
 *
 * @throws ParseError With the offending line number for malformed rows, unknown labels and duplicated keys.
 */
inline IngestResult read_long_csv(std::istream& in) {
    using namespace io_internal;

    std::optional<std::vector<std::string> > time_order, condition_order;
    std::map<std::string, std::size_t> columns;
    std::size_t line_number = 0;
    std::string line;

    while (std::getline(in, line)) {
        ++line_number;
        const auto t = trim(line);
        if (t.empty()) {
            continue;
        }
        if (t[0] == '#') {
            auto body = trim(t.substr(1));
            auto colon = body.find(':');
            if (colon != std::string::npos) {
                auto key = trim(body.substr(0, colon));
                auto value = body.substr(colon + 1);
                if (key == "time_order") {
                    time_order = parse_order(value, line_number);
                } else if (key == "condition_order") {
                    condition_order = parse_order(value, line_number);
                }
            }
            continue;
        }
        auto fields = split_csv(line, line_number);
        for (std::size_t i = 0; i < fields.size(); ++i) {
            auto name = trim(fields[i]);
            if (columns.count(name)) {
                throw ParseError("line " + std::to_string(line_number) + ": duplicated column '" + name + "'");
            }
            columns[name] = i;
        }
        break;
    }

    static const char* required[] = { "gene", "condition", "replicate", "time", "value" };
    for (auto r : required) {
        if (!columns.count(r)) {
            throw ParseError("line " + std::to_string(line_number) + ": header lacks column '" + std::string(r) + "'");
        }
    }
    const std::size_t ci_gene = columns["gene"], ci_cond = columns["condition"], ci_rep = columns["replicate"], ci_time = columns["time"], ci_value = columns["value"];
    const std::size_t width = columns.size();

    struct Cell {
        std::size_t gene, condition, time;
        std::string replicate;
        std::optional<double> value;
    };
    std::vector<Cell> cells;
    std::vector<std::string> gene_ids;
    std::unordered_map<std::string, std::size_t> gene_index;
    std::vector<std::string> times_seen, conditions_seen;
    std::unordered_map<std::string, std::size_t> time_index, condition_index;
    std::unordered_map<std::string, std::size_t> seen_keys;

    auto intern = [](const std::string& x, std::vector<std::string>& labels, std::unordered_map<std::string, std::size_t>& index) {
        auto it = index.find(x);
        if (it != index.end()) {
            return it->second;
        }
        index[x] = labels.size();
        labels.push_back(x);
        return labels.size() - 1;
    };

    while (std::getline(in, line)) {
        ++line_number;
        const auto t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        auto fields = split_csv(line, line_number);
        if (fields.size() != width) {
            throw ParseError("line " + std::to_string(line_number) + ": expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
        }

        Cell cell;
        const auto gene = trim(fields[ci_gene]);
        if (gene.empty()) {
            throw ParseError("line " + std::to_string(line_number) + ": empty gene identifier");
        }
        const auto cond = trim(fields[ci_cond]);
        const auto time = trim(fields[ci_time]);
        cell.replicate = trim(fields[ci_rep]);

        const std::string key = gene + "," + cond + "," + cell.replicate + "," + time;
        auto dup = seen_keys.find(key);
        if (dup != seen_keys.end()) {
            throw ParseError("line " + std::to_string(line_number) + ": duplicate row for (gene,condition,replicate,time) = (" + key + "), first seen on line " + std::to_string(dup->second));
        }
        seen_keys.emplace(key, line_number);

        const auto raw = trim(fields[ci_value]);
        if (!raw.empty() && raw != "NA" && raw != "NaN" && raw != "nan") {
            auto v = parse_number(raw);
            if (!v || !std::isfinite(*v)) {
                throw ParseError("line " + std::to_string(line_number) + ": invalid value '" + raw + "'");
            }
            cell.value = *v;
        }

        cell.gene = intern(gene, gene_ids, gene_index);
        cell.condition = intern(cond, conditions_seen, condition_index);
        cell.time = intern(time, times_seen, time_index);
        cells.push_back(std::move(cell));
    }

    if (cells.empty()) {
        throw ParseError("no data rows");
    }

    // Resolve the order of time points and conditions.
    auto resolve = [&](const std::optional<std::vector<std::string> >& explicit_order, const std::vector<std::string>& seen, const char* what) {
        std::vector<std::string> order;
        if (explicit_order) {
            order = *explicit_order;
            std::unordered_map<std::string, int> listed;
            for (const auto& o : order) {
                if (listed[o]++) {
                    throw ParseError(std::string(what) + " order lists '" + o + "' twice");
                }
            }
            for (const auto& s : seen) {
                if (!listed.count(s)) {
                    throw ParseError(std::string(what) + " '" + s + "' is missing from the declared " + what + " order");
                }
            }
            // Declared but unobserved labels are kept; every gene then lacks them and is skipped.
        } else {
            order = seen;
            sort_labels(order);
        }
        return order;
    };

    IngestResult out;
    auto& data = out.dataset;
    data.time_labels = resolve(time_order, times_seen, "time");
    data.conditions = resolve(condition_order, conditions_seen, "condition");
    if (data.conditions.size() > 2) {
        throw ParseError("at most two conditions are supported, found " + std::to_string(data.conditions.size()));
    }

    std::vector<std::size_t> time_position(times_seen.size()), condition_position(conditions_seen.size());
    for (std::size_t i = 0; i < data.time_labels.size(); ++i) {
        auto it = time_index.find(data.time_labels[i]);
        if (it != time_index.end()) {
            time_position[it->second] = i;
        }
    }
    for (std::size_t i = 0; i < data.conditions.size(); ++i) {
        auto it = condition_index.find(data.conditions[i]);
        if (it != condition_index.end()) {
            condition_position[it->second] = i;
        }
    }

    // Group the cells by gene, condition and replicate.
    const std::size_t k = data.time_labels.size();
    struct Partial {
        std::vector<std::map<std::string, std::vector<std::optional<double> > > > conditions;
    };
    std::vector<Partial> partials(gene_ids.size());
    for (auto& p : partials) {
        p.conditions.resize(data.conditions.size());
    }
    for (const auto& c : cells) {
        auto& rep = partials[c.gene].conditions[condition_position[c.condition]][c.replicate];
        if (rep.empty()) {
            rep.resize(k);
        }
        rep[time_position[c.time]] = c.value;
    }

    for (std::size_t g = 0; g < gene_ids.size(); ++g) {
        GeneData gene;
        gene.id = gene_ids[g];
        gene.conditions.resize(data.conditions.size());
        std::string problem;

        for (std::size_t c = 0; c < data.conditions.size() && problem.empty(); ++c) {
            const auto& reps = partials[g].conditions[c];
            if (reps.empty()) {
                problem = "no replicates under condition '" + data.conditions[c] + "'";
                break;
            }
            std::vector<std::string> labels;
            for (const auto& r : reps) {
                labels.push_back(r.first);
            }
            sort_labels(labels);
            for (const auto& l : labels) {
                const auto& values = reps.at(l);
                Replicate rep;
                rep.label = l;
                rep.values.resize(static_cast<Eigen::Index>(k));
                for (std::size_t t = 0; t < k; ++t) {
                    if (!values[t]) {
                        problem = "replicate '" + l + "' under condition '" + data.conditions[c] + "' lacks time '" + data.time_labels[t] + "'";
                        break;
                    }
                    rep.values[static_cast<Eigen::Index>(t)] = *values[t];
                }
                if (!problem.empty()) {
                    break;
                }
                gene.conditions[c].push_back(std::move(rep));
            }
        }

        if (problem.empty()) {
            data.genes.push_back(std::move(gene));
        } else {
            out.skipped.push_back(SkippedGene{ gene_ids[g], "IncompleteGene: " + problem });
        }
    }

    return out;
}

/**
 * Read a long-format CSV file.
 */
inline IngestResult read_long_csv(const std::string& path) {
    auto in = io_internal::open_input(path);
    return read_long_csv(in);
}

/**
 * Write a dataset in long format, with ordering directives so that reading it back restores the same layout.
 * Values are printed with 17 significant digits.
 */
inline void write_long_csv(std::ostream& out, const ExpressionDataset& data) {
    using namespace io_internal;
    auto join = [](const std::vector<std::string>& x) {
        std::string s;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) {
                s += ',';
            }
            s += quote_csv(x[i]);
        }
        return s;
    };
    out << "# time_order: " << join(data.time_labels) << '\n';
    out << "# condition_order: " << join(data.conditions) << '\n';
    out << "gene,condition,replicate,time,value\n";

    std::vector<std::string> times;
    for (const auto& t : data.time_labels) {
        times.push_back(quote_csv(t));
    }
    for (const auto& gene : data.genes) {
        const auto id = quote_csv(gene.id);
        for (std::size_t c = 0; c < gene.conditions.size(); ++c) {
            const auto cond = quote_csv(data.conditions.at(c));
            for (const auto& rep : gene.conditions[c]) {
                if (rep.values.size() != data.k()) {
                    throw DimensionMismatch("replicate '" + rep.label + "' of gene '" + gene.id + "' has the wrong length");
                }
                const auto label = quote_csv(rep.label);
                for (Eigen::Index t = 0; t < rep.values.size(); ++t) {
                    out << id << ',' << cond << ',' << label << ',' << times[t] << ',' << format_value(rep.values[t]) << '\n';
                }
            }
        }
    }
}

inline void write_long_csv(const std::string& path, const ExpressionDataset& data) {
    auto out = io_internal::open_output(path);
    write_long_csv(out, data);
    if (!out) {
        throw ParseError("failed while writing " + path);
    }
}

/**
 * @brief Simulation truth for each gene.
 */
struct TruthTable {
    std::vector<std::string> genes;
    std::vector<int> truth;
    std::vector<double> deviation;
};

/**
 * Write the truth sidecar with columns `gene,I,mahalanobis_deviation`.
 */
inline void write_truth_csv(const std::string& path, const TruthTable& table) {
    if (table.genes.size() != table.truth.size() || table.genes.size() != table.deviation.size()) {
        throw LengthMismatch("truth table columns differ in length");
    }
    auto out = io_internal::open_output(path);
    out << "gene,I,mahalanobis_deviation\n";
    for (std::size_t g = 0; g < table.genes.size(); ++g) {
        out << io_internal::quote_csv(table.genes[g]) << ',' << table.truth[g] << ',' << io_internal::format_value(table.deviation[g]) << '\n';
    }
}

inline TruthTable read_truth_csv(const std::string& path) {
    using namespace io_internal;
    auto in = open_input(path);
    TruthTable out;
    std::string line;
    std::size_t line_number = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++line_number;
        const auto t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        auto fields = split_csv(line, line_number);
        if (header) {
            if (fields.size() < 2 || trim(fields[0]) != "gene" || trim(fields[1]) != "I") {
                throw ParseError(path + " line " + std::to_string(line_number) + ": expected header 'gene,I,mahalanobis_deviation'");
            }
            header = false;
            continue;
        }
        if (fields.size() < 2) {
            throw ParseError(path + " line " + std::to_string(line_number) + ": too few fields");
        }
        auto label = parse_number(fields[1]);
        if (!label || (*label != 0 && *label != 1)) {
            throw ParseError(path + " line " + std::to_string(line_number) + ": truth label must be 0 or 1");
        }
        out.genes.push_back(trim(fields[0]));
        out.truth.push_back(static_cast<int>(*label));
        double d = std::numeric_limits<double>::quiet_NaN();
        if (fields.size() > 2) {
            if (auto v = parse_number(fields[2])) {
                d = *v;
            }
        }
        out.deviation.push_back(d);
    }
    return out;
}

/**
 * CRC-32 of a file's contents, as computed by zlib.
 */
inline unsigned long file_crc32(const std::string& path) {
    auto in = io_internal::open_input(path);
    uLong crc = crc32(0L, Z_NULL, 0);
    std::vector<char> buffer(1 << 16);
    while (in) {
        in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        const auto got = in.gcount();
        if (got > 0) {
            crc = crc32(crc, reinterpret_cast<const Bytef*>(buffer.data()), static_cast<uInt>(got));
        }
    }
    return crc;
}

/**
 * Write `manifest.tsv` listing each file (relative to `directory`) with its size and CRC-32.
 */
inline void write_manifest(const std::string& directory, const std::vector<std::string>& files) {
    namespace fs = std::filesystem;
    auto out = io_internal::open_output((fs::path(directory) / "manifest.tsv").string());
    out << "file\tbytes\tcrc32\n";
    for (const auto& f : files) {
        const auto full = (fs::path(directory) / f).string();
        char crc[16];
        std::snprintf(crc, sizeof(crc), "%08lx", file_crc32(full));
        out << f << '\t' << fs::file_size(full) << '\t' << crc << '\n';
    }
}

}

#endif
