#include "linproxy/blackbox_io.hpp"

#include <fstream>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace linproxy::blackbox {

namespace {

[[noreturn]] void fail_line(const std::string& path, std::size_t line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::optional<std::size_t> PredictionMatrix::row_of(const std::string& doc_id) const {
    for (std::size_t i = 0; i < doc_ids.size(); ++i) {
        if (doc_ids[i] == doc_id) return i;
    }
    return std::nullopt;
}

PredictionMatrix PredictionMatrix::select_rows(const std::vector<std::string>& ids) const {
    std::unordered_map<std::string, std::size_t> rows;
    rows.reserve(doc_ids.size());
    for (std::size_t i = 0; i < doc_ids.size(); ++i) rows.emplace(doc_ids[i], i);

    PredictionMatrix out;
    out.codes = codes;
    out.doc_ids = ids;
    out.probs.reserve(ids.size() * codes.size());
    for (const auto& id : ids) {
        auto it = rows.find(id);
        if (it == rows.end()) throw std::runtime_error("missing prediction row for doc " + id);
        const double* row = probs.data() + it->second * codes.size();
        out.probs.insert(out.probs.end(), row, row + codes.size());
    }
    return out;
}

PredictionMatrix load_predictions(const std::string& path, const corpus::CodeSpace& code_space) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    PredictionMatrix out;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty predictions file");
    ++line_no;
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        fail_line(path, line_no, std::string("malformed header: ") + e.what());
    }
    if (!header.is_object() || !header.contains("codes") || !header["codes"].is_array()) {
        fail_line(path, line_no, "expected header {\"codes\": [...]}");
    }
    out.codes = header["codes"].get<std::vector<std::string>>();
    if (out.codes != code_space.codes) {
        fail_line(path, line_no, "header code list does not match the code space");
    }

    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail_line(path, line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object() || !obj.contains("doc_id") || !obj.contains("probs") ||
            !obj["doc_id"].is_string() || !obj["probs"].is_array()) {
            fail_line(path, line_no, "expected {\"doc_id\", \"probs\"}");
        }
        if (obj["probs"].size() != out.codes.size()) {
            fail_line(path, line_no, "probs length does not match header code count");
        }
        std::string doc_id = obj["doc_id"].get<std::string>();
        if (!seen.insert(doc_id).second) fail_line(path, line_no, "duplicate doc_id: " + doc_id);
        for (const auto& v : obj["probs"]) {
            if (!v.is_number()) fail_line(path, line_no, "probs must be numbers");
            double p = v.get<double>();
            if (!(p >= 0.0 && p <= 1.0)) {
                fail_line(path, line_no, "probability outside [0,1]: " + std::to_string(p));
            }
            out.probs.push_back(p);
        }
        out.doc_ids.push_back(std::move(doc_id));
    }
    if (out.doc_ids.empty()) throw std::runtime_error(path + ": no prediction rows");
    return out;
}

void save_predictions(const PredictionMatrix& matrix, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    nlohmann::json header;
    header["codes"] = matrix.codes;
    out << header.dump() << "\n";
    for (std::size_t d = 0; d < matrix.n_docs(); ++d) {
        nlohmann::json obj;
        obj["doc_id"] = matrix.doc_ids[d];
        const double* row = matrix.probs.data() + d * matrix.n_codes();
        obj["probs"] = std::vector<double>(row, row + matrix.n_codes());
        out << obj.dump() << "\n";
    }
}

BinaryPredictionMatrix binarize(const PredictionMatrix& matrix, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("binarize threshold must be in (0,1)");
    }
    BinaryPredictionMatrix out;
    out.doc_ids = matrix.doc_ids;
    out.codes = matrix.codes;
    out.threshold = threshold;
    out.values.reserve(matrix.probs.size());
    for (double p : matrix.probs) out.values.push_back(p >= threshold ? 1 : 0);
    return out;
}

const std::vector<double>* ImportanceDump::find(const std::string& doc_id,
                                                const std::string& code) const {
    auto it = scores.find({doc_id, code});
    if (it == scores.end()) return nullptr;
    return &it->second;
}

ImportanceDump load_importance_dump(const std::string& path,
                                    const std::vector<corpus::Document>& docs) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::unordered_map<std::string, std::size_t> token_counts;
    for (const auto& doc : docs) token_counts.emplace(doc.doc_id, doc.tokens.size());

    ImportanceDump out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail_line(path, line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object() || !obj.contains("doc_id") || !obj.contains("code") ||
            !obj.contains("importances") || !obj["importances"].is_array()) {
            fail_line(path, line_no, "expected {\"doc_id\", \"code\", \"importances\"}");
        }
        std::string doc_id = obj["doc_id"].get<std::string>();
        std::string code = obj["code"].get<std::string>();
        auto it = token_counts.find(doc_id);
        if (it == token_counts.end()) fail_line(path, line_no, "unknown doc_id: " + doc_id);
        auto scores = obj["importances"].get<std::vector<double>>();
        if (scores.size() != it->second) {
            fail_line(path, line_no,
                      "importance length " + std::to_string(scores.size()) + " != token count " +
                          std::to_string(it->second) + " for (" + doc_id + ", " + code + ")");
        }
        if (!out.scores.emplace(std::make_pair(std::move(doc_id), std::move(code)),
                                std::move(scores))
                 .second) {
            fail_line(path, line_no, "duplicate (doc_id, code) entry");
        }
    }
    return out;
}

}  // namespace linproxy::blackbox
