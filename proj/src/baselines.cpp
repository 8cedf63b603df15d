#include "linproxy/baselines.hpp"

#include <stdexcept>

namespace linproxy::baselines {

LogisticBaseline train_logistic(const std::vector<corpus::Document>& docs,
                                const corpus::SplitAssignment& splits,
                                const corpus::Vocabulary& vocab,
                                const corpus::CodeSpace& code_space, const TrainConfig& config) {
    config.validate();
    auto train_idx = splits.select(docs, corpus::Split::train);
    if (train_idx.empty()) throw std::runtime_error("train split is empty");

    std::vector<corpus::FeatureVector> features;
    features.reserve(train_idx.size());
    for (std::size_t idx : train_idx) {
        features.push_back(model::prepare_features(docs[idx], vocab, config));
    }

    LogisticBaseline out;
    out.kind = "logistic";
    out.vocab_hash = vocab.fingerprint();
    out.codes = code_space.codes;
    out.config = config;
    out.per_code.reserve(code_space.size());

    std::vector<double> targets(features.size());
    for (std::size_t c = 0; c < code_space.size(); ++c) {
        for (std::size_t i = 0; i < train_idx.size(); ++i) {
            targets[i] = docs[train_idx[i]].true_codes.count(code_space.codes[c]) ? 1.0 : 0.0;
        }
        out.per_code.push_back(model::sgd_train(features, targets, vocab.size(),
                                                model::Loss::logistic, config, c));
    }
    return out;
}

std::vector<double> predict_prob(const LogisticBaseline& model,
                                 const corpus::FeatureVector& features) {
    std::vector<double> out;
    out.reserve(model.per_code.size());
    for (const auto& weights : model.per_code) {
        out.push_back(model::sigmoid(model::linear_score(weights, features)));
    }
    return out;
}

}  // namespace linproxy::baselines
