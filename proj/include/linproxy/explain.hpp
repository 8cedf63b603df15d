#pragma once

// Token-span explanations: find the n-gram window with the highest score,
// extend it by a few context tokens on each side, clip at the document
// boundaries. Scores come from linear-model coefficients, an external
// importance dump, or cosine similarity to the code description.

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "linproxy/blackbox_io.hpp"
#include "linproxy/corpus.hpp"
#include "linproxy/linear_model.hpp"

namespace linproxy::explain {

struct EmbeddingTable {
    std::size_t dim = 0;
    std::unordered_map<std::string, std::vector<double>> vectors;

    const std::vector<double>* find(const std::string& token) const;
};

// Format: first line "V D", then V lines "token f1 ... fD".
EmbeddingTable load_embeddings(const std::string& path);

struct Explanation {
    std::string doc_id;
    std::string code;
    std::string model;  // importance source label
    std::size_t span_start = 0;
    std::size_t anchor_start = 0;
    double anchor_score = 0.0;
    std::vector<std::string> span_tokens;
};

// Per-token importance = the token's coefficient for this code (zero when
// out of vocabulary or pruned). With count_weighted, multiplied by the
// token's count in the document.
std::vector<double> linear_importances(const model::CodeWeights& weights,
                                       std::span<const std::string> tokens,
                                       const corpus::Vocabulary& vocab,
                                       bool count_weighted = false);

// Anchor = ngram window with maximal mean importance (ties leftmost); span =
// anchor plus `context` tokens per side, clipped at the boundaries without
// sliding. Documents shorter than ngram use the whole document as anchor.
// Throws on an empty document. doc_id/code/model are left for the caller.
Explanation extract_span(std::span<const double> importances,
                         std::span<const std::string> tokens, std::size_t ngram = 4,
                         std::size_t context = 5);

// Mean of the in-table token vectors; empty or all-OOV input gives the zero
// vector of the table's dimension.
std::vector<double> average_embedding(std::span<const std::string> tokens,
                                      const EmbeddingTable& table);

// Defined as 0 whenever either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);

// Window score = cosine between the window's average embedding and the code
// description's average embedding; windowing as in extract_span.
Explanation cosine_importance_extract(std::span<const std::string> doc_tokens,
                                      std::span<const std::string> description_tokens,
                                      const EmbeddingTable& table, std::size_t ngram = 4,
                                      std::size_t context = 5);

Explanation dump_importance_extract(const blackbox::ImportanceDump& dump,
                                    const corpus::Document& doc, const std::string& code,
                                    std::size_t ngram = 4, std::size_t context = 5);

// JSON-lines explanation files.
void save_explanations(const std::vector<Explanation>& explanations, const std::string& path);
std::vector<Explanation> load_explanations(const std::string& path);

}  // namespace linproxy::explain
