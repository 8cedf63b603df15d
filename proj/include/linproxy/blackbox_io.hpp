#pragma once

// Ingest/emit the black-box model's per-code probabilities and optional
// per-token importance dumps. The black box itself is never executed; it
// enters the pipeline only through these files.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "linproxy/corpus.hpp"

namespace linproxy::blackbox {

// Dense per-document, per-code probabilities, row-major.
struct PredictionMatrix {
    std::vector<std::string> doc_ids;
    std::vector<std::string> codes;
    std::vector<double> probs;  // doc_ids.size() x codes.size()

    std::size_t n_docs() const { return doc_ids.size(); }
    std::size_t n_codes() const { return codes.size(); }
    double at(std::size_t doc, std::size_t code) const { return probs[doc * codes.size() + code]; }
    double& at(std::size_t doc, std::size_t code) { return probs[doc * codes.size() + code]; }

    std::optional<std::size_t> row_of(const std::string& doc_id) const;

    // Rows for the given doc ids, in the given order. Throws on a missing row.
    PredictionMatrix select_rows(const std::vector<std::string>& ids) const;
};

struct BinaryPredictionMatrix {
    std::vector<std::string> doc_ids;
    std::vector<std::string> codes;
    std::vector<std::uint8_t> values;  // 1 iff source prob >= threshold
    double threshold = 0.5;

    std::uint8_t at(std::size_t doc, std::size_t code) const {
        return values[doc * codes.size() + code];
    }
};

// Header code list must match the code space exactly (same order).
PredictionMatrix load_predictions(const std::string& path, const corpus::CodeSpace& code_space);
void save_predictions(const PredictionMatrix& matrix, const std::string& path);

BinaryPredictionMatrix binarize(const PredictionMatrix& matrix, double threshold = 0.5);

// (doc_id, code) -> one importance score per document token.
struct ImportanceDump {
    std::map<std::pair<std::string, std::string>, std::vector<double>> scores;

    const std::vector<double>* find(const std::string& doc_id, const std::string& code) const;
};

ImportanceDump load_importance_dump(const std::string& path,
                                    const std::vector<corpus::Document>& docs);

}  // namespace linproxy::blackbox
