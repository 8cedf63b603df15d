#pragma once

// Direct per-code logistic classifier trained on the true labels. Shares the
// proxy's optimizer configuration so comparisons isolate the training signal
// (true labels vs. black-box outputs), not the optimizer.

#include <vector>

#include "linproxy/corpus.hpp"
#include "linproxy/linear_model.hpp"

namespace linproxy::baselines {

using model::TrainConfig;
using LogisticBaseline = model::LinearPerCodeModel;  // kind == "logistic"

// Per-code binary logistic regression on bag-of-words features via the
// shared seeded SGD. A code with no positive (or no negative) training
// document simply degenerates to a near-intercept-only model.
LogisticBaseline train_logistic(const std::vector<corpus::Document>& docs,
                                const corpus::SplitAssignment& splits,
                                const corpus::Vocabulary& vocab,
                                const corpus::CodeSpace& code_space, const TrainConfig& config);

// sigmoid(w.x + b) per code, strictly inside (0, 1).
std::vector<double> predict_prob(const LogisticBaseline& model,
                                 const corpus::FeatureVector& features);

}  // namespace linproxy::baselines
