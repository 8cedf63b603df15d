#pragma once

// Document loading, tokenization, frozen vocabularies and bag-of-words
// feature vectors. All types are immutable after construction and safe to
// share read-only across threads.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace linproxy::corpus {

struct Document {
    std::string doc_id;
    std::string raw_text;
    std::vector<std::string> tokens;  // always tokenize(raw_text)
    std::set<std::string> true_codes;
};

// Lowercase, split on maximal runs of non-alphanumeric bytes, drop tokens
// that contain no alphabetic character (so "450mg" stays, "450" goes).
std::vector<std::string> tokenize(std::string_view text);

Document make_document(std::string doc_id, std::string raw_text,
                       std::set<std::string> true_codes);

class Vocabulary {
public:
    // Tokens appearing in at least min_doc_freq distinct documents, indexed
    // in lexicographic order so indices are reproducible across runs.
    // Throws if the result would be empty.
    static Vocabulary build(const std::vector<Document>& docs, std::size_t min_doc_freq);

    // Directly from an ordered token list (synthetic vocabularies). Tokens
    // must be unique; indices follow the given order.
    static Vocabulary from_tokens(std::vector<std::string> tokens, std::size_t min_doc_freq = 1);

    std::optional<std::uint32_t> index_of(std::string_view token) const;
    std::size_t size() const { return tokens_.size(); }
    std::size_t min_doc_freq() const { return min_doc_freq_; }
    const std::vector<std::string>& tokens() const { return tokens_; }

    // FNV-1a over the newline-joined token list, hex-encoded. Used to detect
    // model/vocabulary mismatches at load time.
    std::string fingerprint() const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::size_t min_doc_freq_ = 1;
};

// Sparse token counts over a vocabulary; entries sorted by index, counts >= 1.
struct FeatureVector {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;

    std::size_t total_count() const;
};

FeatureVector featurize(const Document& doc, const Vocabulary& vocab);

// Clamp all counts to 1 (the --binary feature mode).
FeatureVector binarize_features(const FeatureVector& features);

struct CodeSpace {
    std::vector<std::string> codes;         // index -> code id
    std::vector<std::string> descriptions;  // aligned with codes
    std::unordered_map<std::string, std::uint32_t> index;

    // Validates: unique codes, non-empty descriptions.
    static CodeSpace from_pairs(std::vector<std::pair<std::string, std::string>> pairs);

    std::optional<std::uint32_t> index_of(std::string_view code) const;
    std::size_t size() const { return codes.size(); }
};

enum class Split { train, validation, test };

std::string_view split_name(Split s);
std::optional<Split> parse_split(std::string_view name);

struct SplitAssignment {
    std::unordered_map<std::string, Split> by_doc;

    // Every corpus doc assigned exactly once, nothing extra, all three
    // splits non-empty. Throws on violation.
    void validate_against(const std::vector<Document>& docs) const;

    std::vector<std::size_t> select(const std::vector<Document>& docs, Split split) const;
};

struct LoadedCorpus {
    std::vector<Document> documents;
    std::vector<std::string> referenced_codes;  // sorted unique union of true_codes
};

// File formats (see README): corpus is JSON lines, splits and code
// descriptions are 2-column TSV. All loaders report 1-based line numbers.
LoadedCorpus load_corpus(const std::string& path);
void save_corpus(const std::vector<Document>& docs, const std::string& path);

SplitAssignment load_splits(const std::string& path);
void save_splits(const std::vector<Document>& docs, const SplitAssignment& splits,
                 const std::string& path);

CodeSpace load_code_descriptions(const std::string& path);
void save_code_descriptions(const CodeSpace& codes, const std::string& path);

}  // namespace linproxy::corpus
