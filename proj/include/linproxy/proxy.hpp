#pragma once

// The proxy model: one sparse linear regressor per code, trained on the
// log-transformed probabilities of the black box. The proxy never sees the
// true labels; it is optimized purely to mimic the black box.

#include <span>
#include <vector>

#include "linproxy/blackbox_io.hpp"
#include "linproxy/corpus.hpp"
#include "linproxy/linear_model.hpp"

namespace linproxy::proxy {

using model::TrainConfig;
using ProxyModel = model::LinearPerCodeModel;  // kind == "proxy"

// ln(max(p, clamp_eps)). Throws if p is outside [0, 1].
double log_transform(double p, double clamp_eps);

model::CodeWeights train_code_regressor(std::span<const corpus::FeatureVector> features,
                                        std::span<const double> targets, std::size_t n_features,
                                        const TrainConfig& config, std::uint64_t code_index = 0);

// One regressor per prediction-matrix code, trained on the train split only.
// Throws if any training document lacks a prediction row.
ProxyModel train_proxy(const std::vector<corpus::Document>& docs,
                       const corpus::SplitAssignment& splits, const corpus::Vocabulary& vocab,
                       const blackbox::PredictionMatrix& predictions, const TrainConfig& config);

std::vector<double> predict_log(const ProxyModel& model, const corpus::FeatureVector& features);
// min(exp(w.x + b), 1): outputs stay unnormalized but inside [0, 1].
std::vector<double> predict_prob(const ProxyModel& model, const corpus::FeatureVector& features);

// Candidate minimizing validation MSE between predicted and log-transformed
// black-box probabilities, averaged over codes; ties go to the larger alpha.
double grid_search_alpha(const std::vector<corpus::Document>& docs,
                         const corpus::SplitAssignment& splits, const corpus::Vocabulary& vocab,
                         const blackbox::PredictionMatrix& predictions,
                         std::span<const double> candidate_alphas, const TrainConfig& base_config);

}  // namespace linproxy::proxy
