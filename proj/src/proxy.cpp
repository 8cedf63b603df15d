#include "linproxy/proxy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace linproxy::proxy {

double log_transform(double p, double clamp_eps) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("probability outside [0,1]: " + std::to_string(p));
    }
    return std::log(std::max(p, clamp_eps));
}

model::CodeWeights train_code_regressor(std::span<const corpus::FeatureVector> features,
                                        std::span<const double> targets, std::size_t n_features,
                                        const TrainConfig& config, std::uint64_t code_index) {
    return model::sgd_train(features, targets, n_features, model::Loss::squared, config,
                            code_index);
}

namespace {

struct TrainArrays {
    std::vector<corpus::FeatureVector> features;
    std::vector<std::size_t> prediction_rows;  // aligned with features
};

TrainArrays collect_split(const std::vector<corpus::Document>& docs,
                          const corpus::SplitAssignment& splits, corpus::Split which,
                          const corpus::Vocabulary& vocab,
                          const blackbox::PredictionMatrix& predictions,
                          const TrainConfig& config) {
    std::unordered_map<std::string, std::size_t> rows;
    rows.reserve(predictions.doc_ids.size());
    for (std::size_t i = 0; i < predictions.doc_ids.size(); ++i) {
        rows.emplace(predictions.doc_ids[i], i);
    }
    TrainArrays out;
    for (std::size_t idx : splits.select(docs, which)) {
        const auto& doc = docs[idx];
        auto it = rows.find(doc.doc_id);
        if (it == rows.end()) {
            throw std::runtime_error("no black-box prediction row for doc " + doc.doc_id);
        }
        out.features.push_back(model::prepare_features(doc, vocab, config));
        out.prediction_rows.push_back(it->second);
    }
    if (out.features.empty()) throw std::runtime_error("train split is empty");
    return out;
}

}  // namespace

ProxyModel train_proxy(const std::vector<corpus::Document>& docs,
                       const corpus::SplitAssignment& splits, const corpus::Vocabulary& vocab,
                       const blackbox::PredictionMatrix& predictions, const TrainConfig& config) {
    config.validate();
    auto train = collect_split(docs, splits, corpus::Split::train, vocab, predictions, config);

    ProxyModel out;
    out.kind = "proxy";
    out.vocab_hash = vocab.fingerprint();
    out.codes = predictions.codes;
    out.config = config;
    out.per_code.reserve(predictions.n_codes());

    std::vector<double> targets(train.features.size());
    for (std::size_t c = 0; c < predictions.n_codes(); ++c) {
        for (std::size_t i = 0; i < train.features.size(); ++i) {
            targets[i] = log_transform(predictions.at(train.prediction_rows[i], c),
                                       config.clamp_eps);
        }
        out.per_code.push_back(
            train_code_regressor(train.features, targets, vocab.size(), config, c));
    }
    return out;
}

std::vector<double> predict_log(const ProxyModel& model, const corpus::FeatureVector& features) {
    std::vector<double> out;
    out.reserve(model.per_code.size());
    for (const auto& weights : model.per_code) {
        out.push_back(model::linear_score(weights, features));
    }
    return out;
}

std::vector<double> predict_prob(const ProxyModel& model, const corpus::FeatureVector& features) {
    auto out = predict_log(model, features);
    for (double& v : out) v = std::min(std::exp(v), 1.0);
    return out;
}

double grid_search_alpha(const std::vector<corpus::Document>& docs,
                         const corpus::SplitAssignment& splits, const corpus::Vocabulary& vocab,
                         const blackbox::PredictionMatrix& predictions,
                         std::span<const double> candidate_alphas,
                         const TrainConfig& base_config) {
    if (candidate_alphas.empty()) throw std::invalid_argument("empty alpha candidate list");

    std::vector<double> alphas(candidate_alphas.begin(), candidate_alphas.end());
    std::sort(alphas.begin(), alphas.end());

    auto val =
        collect_split(docs, splits, corpus::Split::validation, vocab, predictions, base_config);

    double best_alpha = alphas.front();
    double best_mse = std::numeric_limits<double>::infinity();
    for (double alpha : alphas) {
        TrainConfig config = base_config;
        config.alpha = alpha;
        auto model = train_proxy(docs, splits, vocab, predictions, config);

        double mse_sum = 0.0;
        for (std::size_t c = 0; c < model.codes.size(); ++c) {
            double sum = 0.0;
            for (std::size_t i = 0; i < val.features.size(); ++i) {
                double target = log_transform(predictions.at(val.prediction_rows[i], c),
                                              config.clamp_eps);
                double diff = model::linear_score(model.per_code[c], val.features[i]) - target;
                sum += diff * diff;
            }
            mse_sum += sum / static_cast<double>(val.features.size());
        }
        double mse = mse_sum / static_cast<double>(model.codes.size());
        // Ascending order plus <= gives ties to the larger (sparser) alpha.
        if (mse <= best_mse) {
            best_mse = mse;
            best_alpha = alpha;
        }
    }
    return best_alpha;
}

}  // namespace linproxy::proxy
