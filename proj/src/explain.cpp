#include "linproxy/explain.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace linproxy::explain {

const std::vector<double>* EmbeddingTable::find(const std::string& token) const {
    auto it = vectors.find(token);
    if (it == vectors.end()) return nullptr;
    return &it->second;
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty embeddings file");
    std::istringstream header(line);
    long long count = -1, dim = -1;
    if (!(header >> count >> dim) || count < 1 || dim < 1) {
        throw std::runtime_error(path + ":1: expected header `V D`");
    }

    EmbeddingTable table;
    table.dim = static_cast<std::size_t>(dim);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string token;
        if (!(row >> token)) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": missing token");
        }
        std::vector<double> vec;
        vec.reserve(table.dim);
        double value;
        while (row >> value) vec.push_back(value);
        if (vec.size() != table.dim) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(table.dim) + " values, got " +
                                     std::to_string(vec.size()));
        }
        if (!table.vectors.emplace(std::move(token), std::move(vec)).second) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": duplicate token");
        }
    }
    if (table.vectors.size() != static_cast<std::size_t>(count)) {
        throw std::runtime_error(path + ": header declares " + std::to_string(count) +
                                 " tokens, file has " + std::to_string(table.vectors.size()));
    }
    return table;
}

std::vector<double> linear_importances(const model::CodeWeights& weights,
                                       std::span<const std::string> tokens,
                                       const corpus::Vocabulary& vocab, bool count_weighted) {
    std::unordered_map<std::uint32_t, double> coef;
    coef.reserve(weights.coef.size());
    for (const auto& [idx, value] : weights.coef) coef.emplace(idx, value);

    std::unordered_map<std::string, std::size_t> counts;
    if (count_weighted) {
        for (const auto& tok : tokens) ++counts[tok];
    }

    std::vector<double> out(tokens.size(), 0.0);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto idx = vocab.index_of(tokens[i]);
        if (!idx) continue;
        auto it = coef.find(*idx);
        if (it == coef.end()) continue;
        out[i] = count_weighted ? it->second * static_cast<double>(counts[tokens[i]])
                                : it->second;
    }
    return out;
}

namespace {

// Shared windowing: given per-window scores, pick the leftmost argmax and
// build the clipped span around it.
Explanation span_from_window_scores(std::span<const double> window_scores,
                                    std::span<const std::string> tokens, std::size_t ngram,
                                    std::size_t context) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < window_scores.size(); ++i) {
        if (window_scores[i] > window_scores[best]) best = i;
    }
    const std::size_t anchor_len = std::min(ngram, tokens.size());
    const std::size_t span_start = best > context ? best - context : 0;
    const std::size_t span_end = std::min(tokens.size(), best + anchor_len + context);

    Explanation out;
    out.anchor_start = best;
    out.anchor_score = window_scores[best];
    out.span_start = span_start;
    out.span_tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(span_start),
                           tokens.begin() + static_cast<std::ptrdiff_t>(span_end));
    return out;
}

}  // namespace

Explanation extract_span(std::span<const double> importances,
                         std::span<const std::string> tokens, std::size_t ngram,
                         std::size_t context) {
    if (tokens.empty()) throw std::invalid_argument("cannot extract a span from an empty document");
    if (importances.size() != tokens.size()) {
        throw std::invalid_argument("importances/tokens length mismatch");
    }
    if (ngram < 1) throw std::invalid_argument("ngram must be >= 1");

    const std::size_t window = std::min(ngram, tokens.size());
    const std::size_t n_windows = tokens.size() - window + 1;

    std::vector<double> scores(n_windows);
    double rolling = 0.0;
    for (std::size_t i = 0; i < window; ++i) rolling += importances[i];
    scores[0] = rolling / static_cast<double>(window);
    for (std::size_t i = 1; i < n_windows; ++i) {
        rolling += importances[i + window - 1] - importances[i - 1];
        scores[i] = rolling / static_cast<double>(window);
    }
    return span_from_window_scores(scores, tokens, ngram, context);
}

std::vector<double> average_embedding(std::span<const std::string> tokens,
                                      const EmbeddingTable& table) {
    std::vector<double> sum(table.dim, 0.0);
    std::size_t hits = 0;
    for (const auto& tok : tokens) {
        if (const auto* vec = table.find(tok)) {
            for (std::size_t d = 0; d < table.dim; ++d) sum[d] += (*vec)[d];
            ++hits;
        }
    }
    if (hits > 0) {
        for (double& v : sum) v /= static_cast<double>(hits);
    }
    return sum;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

Explanation cosine_importance_extract(std::span<const std::string> doc_tokens,
                                      std::span<const std::string> description_tokens,
                                      const EmbeddingTable& table, std::size_t ngram,
                                      std::size_t context) {
    if (doc_tokens.empty()) {
        throw std::invalid_argument("cannot extract a span from an empty document");
    }
    if (description_tokens.empty()) throw std::invalid_argument("empty code description");

    auto desc = average_embedding(description_tokens, table);

    const std::size_t window = std::min(ngram, doc_tokens.size());
    const std::size_t n_windows = doc_tokens.size() - window + 1;

    // Rolling sum of in-table token vectors plus hit count per window.
    std::vector<double> sum(table.dim, 0.0);
    std::size_t hits = 0;
    auto add = [&](std::size_t i) {
        if (const auto* vec = table.find(doc_tokens[i])) {
            for (std::size_t d = 0; d < table.dim; ++d) sum[d] += (*vec)[d];
            ++hits;
        }
    };
    auto remove = [&](std::size_t i) {
        if (const auto* vec = table.find(doc_tokens[i])) {
            for (std::size_t d = 0; d < table.dim; ++d) sum[d] -= (*vec)[d];
            --hits;
        }
    };
    for (std::size_t i = 0; i < window; ++i) add(i);

    std::vector<double> mean(table.dim);
    std::vector<double> scores(n_windows);
    for (std::size_t i = 0;; ++i) {
        if (hits == 0) {
            scores[i] = 0.0;
        } else {
            for (std::size_t d = 0; d < table.dim; ++d) {
                mean[d] = sum[d] / static_cast<double>(hits);
            }
            scores[i] = cosine(mean, desc);
        }
        if (i + 1 >= n_windows) break;
        remove(i);
        add(i + window);
    }
    return span_from_window_scores(scores, doc_tokens, ngram, context);
}

Explanation dump_importance_extract(const blackbox::ImportanceDump& dump,
                                    const corpus::Document& doc, const std::string& code,
                                    std::size_t ngram, std::size_t context) {
    const auto* scores = dump.find(doc.doc_id, code);
    if (!scores) {
        throw std::runtime_error("importance dump has no entry for (" + doc.doc_id + ", " + code +
                                 ")");
    }
    return extract_span(*scores, doc.tokens, ngram, context);
}

void save_explanations(const std::vector<Explanation>& explanations, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& e : explanations) {
        nlohmann::json obj;
        obj["doc_id"] = e.doc_id;
        obj["code"] = e.code;
        obj["model"] = e.model;
        obj["span_start"] = e.span_start;
        obj["anchor_start"] = e.anchor_start;
        obj["anchor_score"] = e.anchor_score;
        obj["tokens"] = e.span_tokens;
        out << obj.dump() << "\n";
    }
}

std::vector<Explanation> load_explanations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<Explanation> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed JSON: " +
                                     e.what());
        }
        try {
            Explanation e;
            e.doc_id = obj.at("doc_id").get<std::string>();
            e.code = obj.at("code").get<std::string>();
            e.model = obj.at("model").get<std::string>();
            e.span_start = obj.at("span_start").get<std::size_t>();
            e.anchor_start = obj.at("anchor_start").get<std::size_t>();
            e.anchor_score = obj.at("anchor_score").get<double>();
            e.span_tokens = obj.at("tokens").get<std::vector<std::string>>();
            out.push_back(std::move(e));
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": bad explanation record: " + e.what());
        }
    }
    return out;
}

}  // namespace linproxy::explain
