#include "linproxy/plausibility.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "linproxy/metrics.hpp"
#include "linproxy/rng.hpp"
#include <json.hpp>

namespace linproxy::plausibility {

std::vector<AnnotationRecord> load_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<AnnotationRecord> out;
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
            AnnotationRecord record;
            record.example_id = obj.at("example_id").get<std::string>();
            record.code = obj.at("code").get<std::string>();
            record.explanation_text = obj.at("explanation").get<std::string>();
            record.rating = obj.at("rating").get<int>();
            if (record.rating < 0 || record.rating > 2) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": rating must be 0, 1 or 2");
            }
            if (record.explanation_text.empty()) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": empty explanation");
            }
            out.push_back(std::move(record));
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": bad annotation record: " + e.what());
        }
    }
    return out;
}

std::vector<double> featurize_annotation(const AnnotationRecord& record,
                                         const corpus::CodeSpace& code_space,
                                         const explain::EmbeddingTable& table) {
    auto code_idx = code_space.index_of(record.code);
    if (!code_idx) {
        throw std::runtime_error("no description for code " + record.code);
    }
    auto expl_tokens = corpus::tokenize(record.explanation_text);
    auto desc_tokens = corpus::tokenize(code_space.descriptions[*code_idx]);
    auto features = explain::average_embedding(expl_tokens, table);
    auto desc = explain::average_embedding(desc_tokens, table);
    features.insert(features.end(), desc.begin(), desc.end());
    return features;
}

namespace {

struct Dataset {
    std::vector<std::vector<double>> x;
    std::vector<double> y;  // +1 / -1
    std::size_t dim = 0;
};

Dataset build_dataset(std::span<const AnnotationRecord> records,
                      const corpus::CodeSpace& code_space, const explain::EmbeddingTable& table) {
    Dataset data;
    data.dim = 2 * table.dim;
    bool has_pos = false, has_neg = false;
    for (const auto& record : records) {
        data.x.push_back(featurize_annotation(record, code_space, table));
        bool pos = positive_label(record);
        data.y.push_back(pos ? 1.0 : -1.0);
        has_pos = has_pos || pos;
        has_neg = has_neg || !pos;
    }
    if (!has_pos || !has_neg) {
        throw std::runtime_error("annotation classifier needs both classes in training data");
    }
    return data;
}

double objective(const Dataset& data, const std::vector<double>& w, double b, double l2) {
    const double n = static_cast<double>(data.x.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < data.x.size(); ++i) {
        double z = b;
        for (std::size_t d = 0; d < data.dim; ++d) z += w[d] * data.x[i][d];
        double margin = data.y[i] * z;
        // log(1 + exp(-m)), stable for both signs.
        loss += margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
    }
    double penalty = 0.0;
    for (double v : w) penalty += v * v;
    return loss / n + 0.5 * l2 * penalty;
}

void gradient(const Dataset& data, const std::vector<double>& w, double b, double l2,
              std::vector<double>& gw, double& gb) {
    const double n = static_cast<double>(data.x.size());
    std::fill(gw.begin(), gw.end(), 0.0);
    gb = 0.0;
    for (std::size_t i = 0; i < data.x.size(); ++i) {
        double z = b;
        for (std::size_t d = 0; d < data.dim; ++d) z += w[d] * data.x[i][d];
        // d/dz log(1 + exp(-y z)) = -y * sigmoid(-y z)
        double coeff = -data.y[i] * model::sigmoid(-data.y[i] * z);
        for (std::size_t d = 0; d < data.dim; ++d) gw[d] += coeff * data.x[i][d];
        gb += coeff;
    }
    for (std::size_t d = 0; d < data.dim; ++d) gw[d] = gw[d] / n + l2 * w[d];
    gb /= n;
}

}  // namespace

PlausibilityClassifier train_classifier(std::span<const AnnotationRecord> records,
                                        const corpus::CodeSpace& code_space,
                                        const explain::EmbeddingTable& table, double l2_strength,
                                        std::uint64_t seed) {
    if (records.empty()) throw std::invalid_argument("no annotation records");
    if (l2_strength < 0.0) throw std::invalid_argument("l2_strength must be >= 0");
    auto data = build_dataset(records, code_space, table);

    std::vector<double> w(data.dim, 0.0);
    double b = 0.0;
    std::vector<double> gw(data.dim, 0.0);
    double gb = 0.0;

    constexpr int kMaxIters = 10000;
    constexpr double kGradTol = 1e-6;
    for (int iter = 0; iter < kMaxIters; ++iter) {
        gradient(data, w, b, l2_strength, gw, gb);
        double norm_sq = gb * gb;
        for (double g : gw) norm_sq += g * g;
        if (std::sqrt(norm_sq) < kGradTol) break;

        // Backtracking line search (Armijo, halving).
        double current = objective(data, w, b, l2_strength);
        double step = 1.0;
        std::vector<double> w_next(data.dim);
        double b_next = 0.0;
        for (int halvings = 0; halvings < 60; ++halvings) {
            for (std::size_t d = 0; d < data.dim; ++d) w_next[d] = w[d] - step * gw[d];
            b_next = b - step * gb;
            if (objective(data, w_next, b_next, l2_strength) <=
                current - 1e-4 * step * norm_sq) {
                break;
            }
            step *= 0.5;
        }
        w.swap(w_next);
        b = b_next;
    }

    PlausibilityClassifier out;
    out.weights = std::move(w);
    out.bias = b;
    out.dim = table.dim;

    std::uint64_t h = rng::fnv1a("plausibility-classifier");
    for (const auto& record : records) {
        h = rng::fnv1a(record.example_id, h);
        h = rng::fnv1a(record.code, h);
        h = rng::fnv1a(record.explanation_text, h);
        h = rng::fnv1a(std::to_string(record.rating), h);
    }
    h = rng::fnv1a(std::to_string(l2_strength), h);
    h = rng::fnv1a(std::to_string(seed), h);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    out.fingerprint = buf;
    return out;
}

double classify_prob(const PlausibilityClassifier& classifier, std::span<const double> features) {
    if (features.size() != classifier.weights.size()) {
        throw std::invalid_argument("feature length does not match classifier");
    }
    double z = classifier.bias;
    for (std::size_t d = 0; d < features.size(); ++d) z += classifier.weights[d] * features[d];
    return model::sigmoid(z);
}

std::vector<LooFold> build_loo_folds(std::span<const AnnotationRecord> records,
                                     LooProtocol protocol) {
    std::vector<LooFold> folds;
    if (protocol == LooProtocol::E1) {
        std::vector<std::string> example_order;
        std::map<std::string, std::vector<std::size_t>> by_example;
        for (std::size_t i = 0; i < records.size(); ++i) {
            auto [it, inserted] = by_example.try_emplace(records[i].example_id);
            if (inserted) example_order.push_back(records[i].example_id);
            it->second.push_back(i);
        }
        if (example_order.size() < 2) {
            throw std::invalid_argument("E1 needs at least two examples");
        }
        for (const auto& example : example_order) {
            LooFold fold;
            fold.held_out = by_example[example];
            for (std::size_t i = 0; i < records.size(); ++i) {
                if (records[i].example_id != example) fold.train.push_back(i);
            }
            folds.push_back(std::move(fold));
        }
    } else {
        std::set<std::string> distinct_texts;
        for (const auto& record : records) distinct_texts.insert(record.explanation_text);
        if (distinct_texts.size() < 2) {
            throw std::invalid_argument("E2 needs at least two distinct explanations");
        }
        for (std::size_t i = 0; i < records.size(); ++i) {
            LooFold fold;
            fold.held_out.push_back(i);
            for (std::size_t j = 0; j < records.size(); ++j) {
                if (j == i) continue;
                // Same-text duplicates within the held-out example are
                // dropped from this fold's training data.
                if (records[j].example_id == records[i].example_id &&
                    records[j].explanation_text == records[i].explanation_text) {
                    continue;
                }
                fold.train.push_back(j);
            }
            folds.push_back(std::move(fold));
        }
    }
    return folds;
}

LooResult loo_evaluate(std::span<const AnnotationRecord> records, LooProtocol protocol,
                       const corpus::CodeSpace& code_space, const explain::EmbeddingTable& table,
                       double l2_strength, std::uint64_t seed) {
    auto folds = build_loo_folds(records, protocol);

    LooResult result;
    result.n_folds = folds.size();
    result.probabilities.assign(records.size(), 0.0);

    std::vector<std::uint8_t> labels(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        labels[i] = positive_label(records[i]) ? 1 : 0;
    }

    std::size_t correct = 0;
    for (const auto& fold : folds) {
        std::vector<AnnotationRecord> train;
        train.reserve(fold.train.size());
        for (std::size_t j : fold.train) train.push_back(records[j]);
        auto classifier = train_classifier(train, code_space, table, l2_strength, seed);
        for (std::size_t i : fold.held_out) {
            auto features = featurize_annotation(records[i], code_space, table);
            double prob = classify_prob(classifier, features);
            result.probabilities[i] = prob;
            correct += (prob >= 0.5 ? 1 : 0) == labels[i] ? 1 : 0;
        }
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(records.size());
    auto auc = metrics::roc_auc(result.probabilities, labels);
    if (!auc) throw std::runtime_error("LOO AUC undefined: annotations are single-class");
    result.auc = *auc;
    return result;
}

double calibrate_threshold(std::span<const double> probabilities, double target_rate) {
    if (probabilities.empty()) throw std::invalid_argument("no probabilities to calibrate on");
    if (!(target_rate > 0.0 && target_rate < 1.0)) {
        throw std::invalid_argument("target_rate must be in (0,1)");
    }
    std::vector<double> sorted(probabilities.begin(), probabilities.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i > 0 && sorted[i] == sorted[i - 1]) continue;  // first index of each distinct value
        double fraction_at_or_above = (n - static_cast<double>(i)) / n;
        if (fraction_at_or_above <= target_rate) return sorted[i];
    }
    // Even the maximum is selected by too many; push the threshold past it.
    return std::nextafter(sorted.back(), std::numeric_limits<double>::infinity());
}

std::vector<ModelScore> score_models(
    const std::vector<std::pair<std::string, std::vector<ScoredExample>>>& per_model,
    double threshold) {
    if (per_model.empty()) throw std::invalid_argument("no models to score");

    std::vector<std::string> reference;
    for (const auto& [name, examples] : per_model) {
        std::vector<std::string> ids;
        ids.reserve(examples.size());
        for (const auto& ex : examples) ids.push_back(ex.example_id);
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
            throw std::runtime_error("model " + name + " scores an example twice");
        }
        if (reference.empty()) {
            reference = std::move(ids);
        } else if (ids != reference) {
            throw std::runtime_error("model " + name +
                                     " does not cover the same example set as the others");
        }
    }

    std::vector<ModelScore> out;
    for (const auto& [name, examples] : per_model) {
        ModelScore score;
        score.model = name;
        for (const auto& ex : examples) score.score += ex.prob >= threshold ? 1 : 0;
        out.push_back(std::move(score));
    }
    return out;
}

std::pair<int, int> bootstrap_interval(std::span<const double> probabilities, int n_samples,
                                       double level, std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must be in (0,1)");
    for (double p : probabilities) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("bootstrap probabilities must be in [0,1]");
        }
    }

    std::vector<int> sums(static_cast<std::size_t>(n_samples));
    for (int r = 0; r < n_samples; ++r) {
        rng::Rng gen(rng::derive_seed(seed, "bootstrap", static_cast<std::uint64_t>(r)));
        int sum = 0;
        for (double p : probabilities) sum += gen.next_double() < p ? 1 : 0;
        sums[static_cast<std::size_t>(r)] = sum;
    }
    std::sort(sums.begin(), sums.end());

    auto nearest_rank = [&](double q) {
        double rank = std::ceil(q * static_cast<double>(n_samples));
        auto idx = static_cast<std::size_t>(std::max(1.0, rank)) - 1;
        return sums[std::min(idx, sums.size() - 1)];
    };
    const double q_lo = (1.0 - level) / 2.0;
    return {nearest_rank(q_lo), nearest_rank(1.0 - q_lo)};
}

double mcnemar_exact(std::span<const std::uint8_t> labels_a,
                     std::span<const std::uint8_t> labels_b) {
    if (labels_a.size() != labels_b.size()) {
        throw std::invalid_argument("mcnemar inputs differ in length");
    }
    std::size_t b = 0, c = 0;
    for (std::size_t i = 0; i < labels_a.size(); ++i) {
        bool a1 = labels_a[i] != 0;
        bool b1 = labels_b[i] != 0;
        b += a1 && !b1;
        c += !a1 && b1;
    }
    const std::size_t n = b + c;
    if (n == 0) return 1.0;
    const std::size_t m = std::min(b, c);

    // Sum of binomial(n, k) for k <= m, scaled by 2^-n at the end.
    double term = 1.0;
    double sum = 1.0;
    for (std::size_t k = 1; k <= m; ++k) {
        term *= static_cast<double>(n - k + 1) / static_cast<double>(k);
        sum += term;
    }
    double p = std::ldexp(sum, 1 - static_cast<int>(n));  // 2 * sum * 2^-n
    return std::min(1.0, p);
}

ReassignResult reassign_annotations(
    const std::vector<ExampleCandidates>& examples,
    const std::vector<std::pair<std::string, CandidateScorer>>& models) {
    if (models.empty()) throw std::invalid_argument("no models to assign");
    for (const auto& example : examples) {
        if (example.candidate_texts.empty()) {
            throw std::invalid_argument("example " + example.example_id + " has no candidates");
        }
    }

    ReassignResult result;
    for (const auto& [name, scorer] : models) {
        result.chosen.emplace_back(name, std::vector<std::size_t>(examples.size()));
    }

    for (std::size_t e = 0; e < examples.size(); ++e) {
        const auto& example = examples[e];
        std::unordered_map<std::string, std::size_t> multiplicity;
        for (const auto& text : example.candidate_texts) ++multiplicity[text];

        std::unordered_map<std::string, std::size_t> chosen_counts;
        for (std::size_t m = 0; m < models.size(); ++m) {
            const auto& scorer = models[m].second;
            std::size_t best = 0;
            double best_score = scorer(example.candidate_texts[0], example.code);
            for (std::size_t i = 1; i < example.candidate_texts.size(); ++i) {
                double score = scorer(example.candidate_texts[i], example.code);
                if (score > best_score) {
                    best_score = score;
                    best = i;
                }
            }
            result.chosen[m].second[e] = best;
            ++chosen_counts[example.candidate_texts[best]];
        }
        for (const auto& [text, count] : chosen_counts) {
            if (count > multiplicity[text]) ++result.overselection_cases;
        }
    }
    return result;
}

CandidateScorer make_linear_scorer(const model::LinearPerCodeModel& linear,
                                   const corpus::Vocabulary& vocab) {
    // Copy what we need so the scorer owns its state.
    auto by_code =
        std::make_shared<std::unordered_map<std::string, std::unordered_map<std::uint32_t, double>>>();
    for (std::size_t c = 0; c < linear.codes.size(); ++c) {
        (*by_code)[linear.codes[c]] = {linear.per_code[c].coef.begin(),
                                       linear.per_code[c].coef.end()};
    }
    auto vocab_copy = std::make_shared<corpus::Vocabulary>(vocab);
    return [by_code, vocab_copy](const std::string& text, const std::string& code) {
        auto it = by_code->find(code);
        if (it == by_code->end()) throw std::runtime_error("model has no code " + code);
        auto tokens = corpus::tokenize(text);
        if (tokens.empty()) return 0.0;
        double sum = 0.0;
        for (const auto& tok : tokens) {
            if (auto idx = vocab_copy->index_of(tok)) {
                auto ci = it->second.find(*idx);
                if (ci != it->second.end()) sum += ci->second;
            }
        }
        return sum / static_cast<double>(tokens.size());
    };
}

}  // namespace linproxy::plausibility
