#pragma once

#include "mvsel/linmodel.hpp"
#include "mvsel/pipeline.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mvsel {

struct CsvDataset {
    FactorLabels labels;
    Matrix values;
    std::vector<std::string> response_names;
    std::vector<std::string> warnings;
};

/// Header "condition,<name_1>,...,<name_q>", then one labelled row per sample.
/// Missing, non-numeric or non-finite cells and ragged rows raise InputError.
CsvDataset ingestCsv(std::istream& in);
CsvDataset ingestCsv(const std::filesystem::path& path);

/// Shortest text that parses back to the same double (17 significant digits).
std::string formatExact(double value);

void writeWhiteningCsv(std::ostream& out, const std::vector<WhiteningCandidate>& table,
                       WhiteningKind chosen);
void writeFrequenciesCsv(std::ostream& out, const Matrix& frequencies,
                         const std::vector<std::string>& levels,
                         const std::vector<std::string>& responses);
void writeSupportCsv(std::ostream& out, const std::vector<SelectedCoefficient>& support,
                     const std::vector<std::string>& levels,
                     const std::vector<std::string>& responses);

struct FrequencyTable {
    std::vector<std::string> levels;
    std::vector<std::string> responses;
    Matrix frequencies;
};

FrequencyTable readFrequenciesCsv(std::istream& in);

}  // namespace mvsel
