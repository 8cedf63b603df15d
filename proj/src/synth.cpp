#include "linproxy/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "linproxy/rng.hpp"
#include <json.hpp>

namespace linproxy::synth {

namespace {

std::string padded_name(const char* prefix, std::size_t index, std::size_t max_index) {
    std::size_t width = 1;
    for (std::size_t v = max_index; v >= 10; v /= 10) ++width;
    std::string digits = std::to_string(index);
    return std::string(prefix) + std::string(width - digits.size(), '0') + digits;
}

// Sparse-sparse dot product; both sides sorted by index.
double sparse_dot(const std::vector<std::pair<std::uint32_t, double>>& weights,
                  const corpus::FeatureVector& features) {
    double sum = 0.0;
    auto wi = weights.begin();
    auto fi = features.entries.begin();
    while (wi != weights.end() && fi != features.entries.end()) {
        if (wi->first < fi->first) {
            ++wi;
        } else if (fi->first < wi->first) {
            ++fi;
        } else {
            sum += wi->second * static_cast<double>(fi->second);
            ++wi;
            ++fi;
        }
    }
    return sum;
}

}  // namespace

void SynthConfig::validate() const {
    if (vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
    if (n_codes < 1) throw std::invalid_argument("n_codes must be >= 1");
    if (n_docs < 10) {
        throw std::invalid_argument("n_docs must be >= 10 so all three splits are non-empty");
    }
    if (doc_len_min < 1 || doc_len_max < doc_len_min) {
        throw std::invalid_argument("invalid doc_len range");
    }
    if (noise_sd < 0.0) throw std::invalid_argument("noise_sd must be >= 0");
}

SynthResult generate_corpus(const SynthConfig& config) {
    config.validate();
    SynthResult result;

    const std::size_t v = config.vocab_size;
    std::vector<std::string> vocab_tokens(v);
    for (std::size_t i = 0; i < v; ++i) vocab_tokens[i] = padded_name("w", i, v - 1);

    // Zipf-like (exponent 0.5) over the index-ordered vocabulary, flat enough
    // that per-document token counts stay small; cumulative for inverse-CDF.
    std::vector<double> cumulative(v);
    double total = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
        total += 1.0 / std::sqrt(static_cast<double>(i + 1));
        cumulative[i] = total;
    }

    auto vocab = corpus::Vocabulary::from_tokens(vocab_tokens);

    result.documents.reserve(config.n_docs);
    for (std::size_t d = 0; d < config.n_docs; ++d) {
        rng::Rng gen(rng::derive_seed(config.seed, "doc", d));
        std::size_t len = config.doc_len_min +
                          static_cast<std::size_t>(gen.next_below(
                              config.doc_len_max - config.doc_len_min + 1));
        std::string text;
        for (std::size_t t = 0; t < len; ++t) {
            double u = gen.next_double() * total;
            auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
            std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
            if (idx >= v) idx = v - 1;
            if (!text.empty()) text.push_back(' ');
            text += vocab_tokens[idx];
        }
        result.documents.push_back(
            corpus::make_document(padded_name("doc", d, config.n_docs - 1), std::move(text), {}));
    }

    std::vector<corpus::FeatureVector> features(config.n_docs);
    for (std::size_t d = 0; d < config.n_docs; ++d) {
        features[d] = corpus::featurize(result.documents[d], vocab);
    }

    // Planted model: a handful of positive trigger weights per code over
    // mid-frequency tokens, intercept in [-6, -2], weights rescaled so the
    // highest-scoring document stays strictly below log-probability 0.
    PlantedModel& model = result.model;
    model.vocab_tokens = vocab_tokens;
    model.noise_sd = config.noise_sd;
    model.seed = config.seed;

    // Triggers come from a mid-frequency band: common enough to be learnable
    // from the train split, rare enough to vary across documents.
    const std::size_t pool_lo = v / 50;
    const std::size_t pool_hi = std::max<std::size_t>(pool_lo + 1, std::min(v, v / 8 + 8));
    const std::size_t n_triggers = std::min<std::size_t>(6, pool_hi - pool_lo);

    for (std::size_t c = 0; c < config.n_codes; ++c) {
        model.codes.push_back(padded_name("C", c, config.n_codes - 1));
        rng::Rng gen(rng::derive_seed(config.seed, "code-weights", c));

        std::vector<std::uint32_t> pool(pool_hi - pool_lo);
        for (std::size_t i = 0; i < pool.size(); ++i) {
            pool[i] = static_cast<std::uint32_t>(pool_lo + i);
        }
        gen.shuffle(pool);
        std::vector<std::pair<std::uint32_t, double>> weights;
        for (std::size_t i = 0; i < n_triggers; ++i) {
            weights.emplace_back(pool[i], gen.next_in(0.2, 0.6));
        }
        std::sort(weights.begin(), weights.end());

        double intercept = gen.next_in(-6.0, -2.0);

        double max_score = 0.0;
        for (std::size_t d = 0; d < config.n_docs; ++d) {
            max_score = std::max(max_score, sparse_dot(weights, features[d]));
        }
        if (max_score > 0.0 && max_score + intercept > -0.05) {
            double scale = (-0.05 - intercept) / max_score;
            for (auto& [idx, w] : weights) w *= scale;
        }

        model.weights.push_back(std::move(weights));
        model.intercepts.push_back(intercept);
    }

    // Descriptions: the code's strongest triggers plus two random tokens.
    std::vector<std::pair<std::string, std::string>> desc_pairs;
    for (std::size_t c = 0; c < config.n_codes; ++c) {
        rng::Rng gen(rng::derive_seed(config.seed, "code-desc", c));
        auto by_weight = model.weights[c];
        std::sort(by_weight.begin(), by_weight.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        std::string desc;
        for (std::size_t i = 0; i < std::min<std::size_t>(3, by_weight.size()); ++i) {
            if (!desc.empty()) desc.push_back(' ');
            desc += vocab_tokens[by_weight[i].first];
        }
        for (int i = 0; i < 2; ++i) {
            if (!desc.empty()) desc.push_back(' ');
            desc += vocab_tokens[gen.next_below(v)];
        }
        desc_pairs.emplace_back(model.codes[c], std::move(desc));
    }
    result.code_space = corpus::CodeSpace::from_pairs(std::move(desc_pairs));

    // True codes: planted probability thresholded at 0.5.
    for (std::size_t d = 0; d < config.n_docs; ++d) {
        auto& doc = result.documents[d];
        for (std::size_t c = 0; c < config.n_codes; ++c) {
            double eps = noise_for(model, doc.doc_id, model.codes[c]);
            if (planted_predict(model, c, features[d], eps) >= 0.5) {
                doc.true_codes.insert(model.codes[c]);
            }
        }
    }

    // 70/10/20 by floor-and-remainder, assigned in document order.
    const std::size_t n_train = config.n_docs * 7 / 10;
    const std::size_t n_val = config.n_docs / 10;
    for (std::size_t d = 0; d < config.n_docs; ++d) {
        corpus::Split split = d < n_train                ? corpus::Split::train
                              : d < n_train + n_val      ? corpus::Split::validation
                                                         : corpus::Split::test;
        result.splits.by_doc.emplace(result.documents[d].doc_id, split);
    }
    result.splits.validate_against(result.documents);
    return result;
}

double planted_log_score(const PlantedModel& model, std::size_t code_idx,
                         const corpus::FeatureVector& features) {
    return sparse_dot(model.weights[code_idx], features) + model.intercepts[code_idx];
}

double planted_predict(const PlantedModel& model, std::size_t code_idx,
                       const corpus::FeatureVector& features, double eps) {
    double log_p = planted_log_score(model, code_idx, features) + eps;
    return std::exp(std::min(log_p, 0.0));
}

double noise_for(const PlantedModel& model, const std::string& doc_id, const std::string& code) {
    if (model.noise_sd == 0.0) return 0.0;
    rng::Rng gen(rng::derive_seed(model.seed, "noise:" + doc_id + ":" + code));
    return gen.next_normal(0.0, model.noise_sd);
}

blackbox::PredictionMatrix emit_predictions(const PlantedModel& model,
                                            const std::vector<corpus::Document>& docs) {
    auto vocab = corpus::Vocabulary::from_tokens(model.vocab_tokens);
    blackbox::PredictionMatrix out;
    out.codes = model.codes;
    out.doc_ids.reserve(docs.size());
    out.probs.reserve(docs.size() * model.codes.size());
    for (const auto& doc : docs) {
        out.doc_ids.push_back(doc.doc_id);
        auto features = corpus::featurize(doc, vocab);
        for (std::size_t c = 0; c < model.codes.size(); ++c) {
            double eps = noise_for(model, doc.doc_id, model.codes[c]);
            out.probs.push_back(planted_predict(model, c, features, eps));
        }
    }
    return out;
}

void save_planted(const PlantedModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    nlohmann::json obj;
    obj["seed"] = model.seed;
    obj["noise_sd"] = model.noise_sd;
    obj["vocab"] = model.vocab_tokens;
    obj["codes"] = model.codes;
    obj["intercepts"] = model.intercepts;
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& code_weights : model.weights) {
        nlohmann::json w = nlohmann::json::array();
        for (const auto& [idx, value] : code_weights) {
            w.push_back(nlohmann::json::array({idx, value}));
        }
        weights.push_back(std::move(w));
    }
    obj["weights"] = std::move(weights);
    out << obj.dump(2) << "\n";
}

PlantedModel load_planted(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json obj;
    try {
        in >> obj;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": malformed JSON: " + e.what());
    }
    PlantedModel model;
    model.seed = obj.at("seed").get<std::uint64_t>();
    model.noise_sd = obj.at("noise_sd").get<double>();
    model.vocab_tokens = obj.at("vocab").get<std::vector<std::string>>();
    model.codes = obj.at("codes").get<std::vector<std::string>>();
    model.intercepts = obj.at("intercepts").get<std::vector<double>>();
    for (const auto& w : obj.at("weights")) {
        std::vector<std::pair<std::uint32_t, double>> code_weights;
        for (const auto& pair : w) {
            code_weights.emplace_back(pair.at(0).get<std::uint32_t>(), pair.at(1).get<double>());
        }
        model.weights.push_back(std::move(code_weights));
    }
    if (model.weights.size() != model.codes.size() ||
        model.intercepts.size() != model.codes.size()) {
        throw std::runtime_error(path + ": inconsistent planted model");
    }
    return model;
}

}  // namespace linproxy::synth
