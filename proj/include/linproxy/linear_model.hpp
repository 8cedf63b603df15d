#pragma once

// Shared machinery for the per-code sparse linear models: the proxy regressor
// (squared loss on log-probabilities) and the logistic baseline (log loss on
// true labels) differ only in their loss, so training, prediction plumbing
// and the model-file schema live here.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "linproxy/corpus.hpp"

namespace linproxy::model {

struct TrainConfig {
    double alpha = 1e-4;       // L1 strength
    int epochs = 10;
    double eta0 = 0.01;        // learning rate at update t is eta0 / t^power_t
    double power_t = 0.25;
    double clamp_eps = 1e-6;   // probability floor before the log transform
    std::uint64_t seed = 13;
    bool binary_features = false;
    std::size_t min_doc_freq = 3;  // vocabulary build parameter, kept so a
                                   // model's vocabulary can be rebuilt at eval

    void validate() const;
};

struct CodeWeights {
    std::vector<std::pair<std::uint32_t, double>> coef;  // sorted by index
    double intercept = 0.0;
};

struct LinearPerCodeModel {
    std::string kind;  // "proxy" or "logistic"
    std::string vocab_hash;
    std::vector<std::string> codes;
    std::vector<CodeWeights> per_code;
    TrainConfig config;
};

enum class Loss { squared, logistic };

// Per-sample SGD with inverse-scaling learning rate. L1 is applied as a
// per-update proximal soft-threshold (plain subgradient steps never reach
// exact zeros); coefficients below 1e-12 in magnitude are dropped at the
// end. The shuffle generator is seeded from (config.seed, code_index), so
// training codes in any order gives identical results.
CodeWeights sgd_train(std::span<const corpus::FeatureVector> features,
                      std::span<const double> targets, std::size_t n_features, Loss loss,
                      const TrainConfig& config, std::uint64_t code_index);

// w.x + b.
double linear_score(const CodeWeights& weights, const corpus::FeatureVector& features);

double sigmoid(double z);

// featurize + optional binary clamp, per config.
corpus::FeatureVector prepare_features(const corpus::Document& doc,
                                       const corpus::Vocabulary& vocab,
                                       const TrainConfig& config);

void save_model(const LinearPerCodeModel& model, const std::string& path);
LinearPerCodeModel load_model(const std::string& path);
// Also verifies the stored vocabulary fingerprint.
LinearPerCodeModel load_model(const std::string& path, const corpus::Vocabulary& vocab);

}  // namespace linproxy::model
