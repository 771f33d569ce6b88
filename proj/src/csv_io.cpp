#include "mvsel/io.hpp"

#include "mvsel/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

namespace mvsel {

namespace {

std::vector<std::string> splitCsvLine(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (quoted) throw InputError("unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

bool getDataLine(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) return true;
    }
    return false;
}

std::string quoteIfNeeded(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

bool isMissingToken(const std::string& s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "NAN" || s == "null";
}

double parseNumber(const std::string& cell, std::size_t row, std::size_t col) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    if (begin != end && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw InputError("non-numeric value '" + cell + "' at row " + std::to_string(row) +
                         ", column " + std::to_string(col));
    if (!std::isfinite(value))
        throw InputError("non-finite value at row " + std::to_string(row) + ", column " +
                         std::to_string(col));
    return value;
}

}  // namespace

CsvDataset ingestCsv(std::istream& in) {
    std::string line;
    if (!getDataLine(in, line)) throw InputError("input is empty");
    auto header = splitCsvLine(line);
    for (auto& h : header) h = trim(std::move(h));
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
    if (header.size() < 2) throw InputError("header needs a condition column and at least one response");
    if (header[0] != "condition")
        throw InputError("first header cell must be 'condition', got '" + header[0] + "'");

    CsvDataset out;
    out.response_names.assign(header.begin() + 1, header.end());
    std::unordered_set<std::string> seen;
    for (const auto& name : out.response_names) {
        if (name.empty()) throw InputError("empty response name in header");
        if (!seen.insert(name).second) throw InputError("duplicate response name '" + name + "'");
    }
    const std::size_t q = out.response_names.size();

    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;
    std::size_t row = 0;
    while (getDataLine(in, line)) {
        ++row;
        auto fields = splitCsvLine(line);
        if (fields.size() != q + 1)
            throw InputError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                             " fields, expected " + std::to_string(q + 1));
        std::string label = trim(fields[0]);
        if (label.empty()) throw InputError("missing condition label at row " + std::to_string(row));
        std::vector<double> values(q);
        for (std::size_t j = 0; j < q; ++j) {
            const std::string cell = trim(fields[j + 1]);
            if (isMissingToken(cell))
                throw InputError("missing value at row " + std::to_string(row) + ", column " +
                                 std::to_string(j + 1));
            values[j] = parseNumber(cell, row, j + 1);
        }
        labels.push_back(std::move(label));
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw InputError("input has a header but no data rows");

    out.labels = FactorLabels::fromLabels(std::move(labels));
    out.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(q));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < q; ++j)
            out.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];

    const auto counts = out.labels.replicateCounts();
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] < 2)
            out.warnings.push_back("level '" + out.labels.levels[c] + "' has fewer than 2 replicates");
    return out;
}

CsvDataset ingestCsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    return ingestCsv(in);
}

std::string formatExact(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void writeWhiteningCsv(std::ostream& out, const std::vector<WhiteningCandidate>& table,
                       WhiteningKind chosen) {
    out << "strategy,statistic,dof,pvalue,phi1,ridge,selected,error\n";
    for (const auto& c : table) {
        out << toString(c.kind) << ',';
        if (c.test)
            out << formatExact(c.test->statistic) << ',' << c.test->dof << ','
                << formatExact(c.test->pvalue);
        else
            out << ",,";
        out << ',' << formatExact(c.phi1) << ',' << formatExact(c.ridge) << ','
            << (c.kind == chosen ? 1 : 0) << ',' << quoteIfNeeded(c.error) << '\n';
    }
}

void writeFrequenciesCsv(std::ostream& out, const Matrix& frequencies,
                         const std::vector<std::string>& levels,
                         const std::vector<std::string>& responses) {
    if (static_cast<Index>(levels.size()) != frequencies.rows() ||
        static_cast<Index>(responses.size()) != frequencies.cols())
        throw InputError("frequency matrix does not match level/response names");
    out << "level";
    for (const auto& r : responses) out << ',' << quoteIfNeeded(r);
    out << '\n';
    for (Index c = 0; c < frequencies.rows(); ++c) {
        out << quoteIfNeeded(levels[static_cast<std::size_t>(c)]);
        for (Index k = 0; k < frequencies.cols(); ++k) out << ',' << formatExact(frequencies(c, k));
        out << '\n';
    }
}

void writeSupportCsv(std::ostream& out, const std::vector<SelectedCoefficient>& support,
                     const std::vector<std::string>& levels,
                     const std::vector<std::string>& responses) {
    out << "level,response,frequency\n";
    for (const auto& s : support)
        out << quoteIfNeeded(levels.at(static_cast<std::size_t>(s.level))) << ','
            << quoteIfNeeded(responses.at(static_cast<std::size_t>(s.response))) << ','
            << formatExact(s.frequency) << '\n';
}

FrequencyTable readFrequenciesCsv(std::istream& in) {
    std::string line;
    if (!getDataLine(in, line)) throw InputError("frequency file is empty");
    auto header = splitCsvLine(line);
    if (header.size() < 2 || header[0] != "level") throw InputError("bad frequency header");
    FrequencyTable table;
    table.responses.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> rows;
    std::size_t row = 0;
    while (getDataLine(in, line)) {
        ++row;
        auto fields = splitCsvLine(line);
        if (fields.size() != header.size())
            throw InputError("frequency row " + std::to_string(row) + " is ragged");
        table.levels.push_back(fields[0]);
        std::vector<double> v;
        for (std::size_t j = 1; j < fields.size(); ++j) v.push_back(parseNumber(fields[j], row, j));
        rows.push_back(std::move(v));
    }
    table.frequencies.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.responses.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            table.frequencies(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return table;
}

}  // namespace mvsel
