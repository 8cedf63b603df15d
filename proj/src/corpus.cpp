#include "linproxy/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "linproxy/rng.hpp"
#include <json.hpp>

namespace linproxy::corpus {

namespace {

bool is_ascii_alnum(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_ascii_alpha(unsigned char c) { return c >= 'a' && c <= 'z'; }

[[noreturn]] void fail_line(const std::string& path, std::size_t line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    bool has_alpha = false;
    auto flush = [&] {
        if (!current.empty() && has_alpha) tokens.push_back(current);
        current.clear();
        has_alpha = false;
    };
    for (unsigned char c : text) {
        if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
        if (is_ascii_alnum(c)) {
            current.push_back(static_cast<char>(c));
            has_alpha = has_alpha || is_ascii_alpha(c);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

Document make_document(std::string doc_id, std::string raw_text,
                       std::set<std::string> true_codes) {
    Document doc;
    doc.doc_id = std::move(doc_id);
    doc.raw_text = std::move(raw_text);
    doc.tokens = tokenize(doc.raw_text);
    doc.true_codes = std::move(true_codes);
    return doc;
}

Vocabulary Vocabulary::build(const std::vector<Document>& docs, std::size_t min_doc_freq) {
    if (docs.empty()) throw std::runtime_error("cannot build vocabulary from an empty corpus");
    std::map<std::string, std::size_t> doc_freq;  // ordered map gives lexicographic order
    for (const auto& doc : docs) {
        std::set<std::string_view> seen;
        for (const auto& tok : doc.tokens) {
            if (seen.insert(tok).second) ++doc_freq[tok];
        }
    }
    Vocabulary vocab;
    vocab.min_doc_freq_ = min_doc_freq;
    for (const auto& [token, freq] : doc_freq) {
        if (freq >= min_doc_freq) {
            vocab.index_.emplace(token, static_cast<std::uint32_t>(vocab.tokens_.size()));
            vocab.tokens_.push_back(token);
        }
    }
    if (vocab.tokens_.empty()) {
        throw std::runtime_error("vocabulary is empty (min_doc_freq=" +
                                 std::to_string(min_doc_freq) + " kept no tokens)");
    }
    return vocab;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, std::size_t min_doc_freq) {
    if (tokens.empty()) throw std::runtime_error("vocabulary is empty");
    Vocabulary vocab;
    vocab.min_doc_freq_ = min_doc_freq;
    vocab.tokens_ = std::move(tokens);
    for (std::size_t i = 0; i < vocab.tokens_.size(); ++i) {
        auto [it, inserted] =
            vocab.index_.emplace(vocab.tokens_[i], static_cast<std::uint32_t>(i));
        if (!inserted) throw std::runtime_error("duplicate vocabulary token: " + vocab.tokens_[i]);
    }
    return vocab;
}

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::string Vocabulary::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& tok : tokens_) {
        h = rng::fnv1a(tok, h);
        h = rng::fnv1a("\n", h);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::size_t FeatureVector::total_count() const {
    std::size_t total = 0;
    for (const auto& [idx, count] : entries) total += count;
    return total;
}

FeatureVector featurize(const Document& doc, const Vocabulary& vocab) {
    std::map<std::uint32_t, std::uint32_t> counts;
    for (const auto& tok : doc.tokens) {
        if (auto idx = vocab.index_of(tok)) ++counts[*idx];
    }
    FeatureVector fv;
    fv.entries.assign(counts.begin(), counts.end());
    return fv;
}

FeatureVector binarize_features(const FeatureVector& features) {
    FeatureVector out;
    out.entries.reserve(features.entries.size());
    for (const auto& [idx, count] : features.entries) out.entries.emplace_back(idx, 1u);
    return out;
}

CodeSpace CodeSpace::from_pairs(std::vector<std::pair<std::string, std::string>> pairs) {
    CodeSpace cs;
    for (auto& [code, desc] : pairs) {
        if (desc.empty()) throw std::runtime_error("empty description for code " + code);
        auto [it, inserted] = cs.index.emplace(code, static_cast<std::uint32_t>(cs.codes.size()));
        if (!inserted) throw std::runtime_error("duplicate code: " + code);
        cs.codes.push_back(std::move(code));
        cs.descriptions.push_back(std::move(desc));
    }
    return cs;
}

std::optional<std::uint32_t> CodeSpace::index_of(std::string_view code) const {
    auto it = index.find(std::string(code));
    if (it == index.end()) return std::nullopt;
    return it->second;
}

std::string_view split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "?";
}

std::optional<Split> parse_split(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "validation") return Split::validation;
    if (name == "test") return Split::test;
    return std::nullopt;
}

void SplitAssignment::validate_against(const std::vector<Document>& docs) const {
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& doc : docs) {
        auto it = by_doc.find(doc.doc_id);
        if (it == by_doc.end()) {
            throw std::runtime_error("doc_id missing from splits: " + doc.doc_id);
        }
        ++counts[static_cast<int>(it->second)];
    }
    if (by_doc.size() != docs.size()) {
        std::set<std::string> known;
        for (const auto& doc : docs) known.insert(doc.doc_id);
        for (const auto& [id, split] : by_doc) {
            if (!known.count(id)) {
                throw std::runtime_error("doc_id in splits but not in corpus: " + id);
            }
        }
    }
    for (Split s : {Split::train, Split::validation, Split::test}) {
        if (counts[static_cast<int>(s)] == 0) {
            throw std::runtime_error(std::string("empty split: ") + std::string(split_name(s)));
        }
    }
}

std::vector<std::size_t> SplitAssignment::select(const std::vector<Document>& docs,
                                                 Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        auto it = by_doc.find(docs[i].doc_id);
        if (it != by_doc.end() && it->second == split) out.push_back(i);
    }
    return out;
}

LoadedCorpus load_corpus(const std::string& path) {
    auto in = open_in(path);
    LoadedCorpus out;
    std::set<std::string> seen_ids;
    std::set<std::string> codes;
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
        if (!obj.is_object() || !obj.contains("doc_id") || !obj.contains("text") ||
            !obj.contains("labels") || !obj["doc_id"].is_string() || !obj["text"].is_string() ||
            !obj["labels"].is_array()) {
            fail_line(path, line_no, "expected {\"doc_id\", \"text\", \"labels\"}");
        }
        std::set<std::string> labels;
        for (const auto& label : obj["labels"]) {
            if (!label.is_string()) fail_line(path, line_no, "labels must be strings");
            labels.insert(label.get<std::string>());
        }
        std::string doc_id = obj["doc_id"].get<std::string>();
        if (!seen_ids.insert(doc_id).second) {
            fail_line(path, line_no, "duplicate doc_id: " + doc_id);
        }
        codes.insert(labels.begin(), labels.end());
        out.documents.push_back(
            make_document(std::move(doc_id), obj["text"].get<std::string>(), std::move(labels)));
    }
    out.referenced_codes.assign(codes.begin(), codes.end());
    return out;
}

void save_corpus(const std::vector<Document>& docs, const std::string& path) {
    auto out = open_out(path);
    for (const auto& doc : docs) {
        nlohmann::json obj;
        obj["doc_id"] = doc.doc_id;
        obj["text"] = doc.raw_text;
        obj["labels"] = std::vector<std::string>(doc.true_codes.begin(), doc.true_codes.end());
        out << obj.dump() << "\n";
    }
}

SplitAssignment load_splits(const std::string& path) {
    auto in = open_in(path);
    SplitAssignment out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) fail_line(path, line_no, "expected doc_id<TAB>split");
        std::string doc_id = line.substr(0, tab);
        std::string name = line.substr(tab + 1);
        auto split = parse_split(name);
        if (!split) fail_line(path, line_no, "unknown split name: " + name);
        if (!out.by_doc.emplace(std::move(doc_id), *split).second) {
            fail_line(path, line_no, "duplicate doc_id in splits");
        }
    }
    return out;
}

void save_splits(const std::vector<Document>& docs, const SplitAssignment& splits,
                 const std::string& path) {
    auto out = open_out(path);
    for (const auto& doc : docs) {
        auto it = splits.by_doc.find(doc.doc_id);
        if (it == splits.by_doc.end()) {
            throw std::runtime_error("doc_id missing from splits: " + doc.doc_id);
        }
        out << doc.doc_id << "\t" << split_name(it->second) << "\n";
    }
}

CodeSpace load_code_descriptions(const std::string& path) {
    auto in = open_in(path);
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) fail_line(path, line_no, "expected code<TAB>description");
        pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    try {
        return CodeSpace::from_pairs(std::move(pairs));
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void save_code_descriptions(const CodeSpace& codes, const std::string& path) {
    auto out = open_out(path);
    for (std::size_t i = 0; i < codes.codes.size(); ++i) {
        out << codes.codes[i] << "\t" << codes.descriptions[i] << "\n";
    }
}

}  // namespace linproxy::corpus
