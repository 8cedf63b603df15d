#pragma once

// Plausibility machinery: an annotation classifier trained on clinician
// ratings (rating >= 1 is the positive "plausible" class), leave-one-out
// protocols, threshold calibration, bootstrap intervals over sampled labels,
// exact McNemar tests, and the annotation-to-model reassignment rule.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "linproxy/corpus.hpp"
#include "linproxy/explain.hpp"
#include "linproxy/linear_model.hpp"

namespace linproxy::plausibility {

struct AnnotationRecord {
    std::string example_id;
    std::string code;
    std::string explanation_text;
    int rating = 0;  // 0 not informative, 1 informative, 2 highly informative
};

// JSON lines: {"example_id", "code", "explanation", "rating"}.
std::vector<AnnotationRecord> load_annotations(const std::string& path);

inline bool positive_label(const AnnotationRecord& record) { return record.rating >= 1; }

// Concatenation of the explanation's and the code description's average
// embeddings; length 2 * table.dim. Throws when the code has no description.
std::vector<double> featurize_annotation(const AnnotationRecord& record,
                                         const corpus::CodeSpace& code_space,
                                         const explain::EmbeddingTable& table);

struct PlausibilityClassifier {
    std::vector<double> weights;  // length 2 * dim
    double bias = 0.0;
    std::size_t dim = 0;  // embedding dimension
    std::string fingerprint;
};

// Full-batch gradient descent (backtracking line search) on mean log-loss
// plus (l2/2) * ||w||^2, run until the gradient norm drops below 1e-6 or
// 10000 iterations. Deterministic; the mean-loss scaling makes the optimum
// invariant under duplicating every record.
PlausibilityClassifier train_classifier(std::span<const AnnotationRecord> records,
                                        const corpus::CodeSpace& code_space,
                                        const explain::EmbeddingTable& table,
                                        double l2_strength = 1.0, std::uint64_t seed = 13);

double classify_prob(const PlausibilityClassifier& classifier, std::span<const double> features);

enum class LooProtocol { E1, E2 };

struct LooFold {
    std::vector<std::size_t> held_out;
    std::vector<std::size_t> train;
};

// E1 holds out all records of one example per fold. E2 holds out one record
// per fold and also drops same-text duplicates within the held-out record's
// example from that fold's training set. Exposed so tests can audit folds.
std::vector<LooFold> build_loo_folds(std::span<const AnnotationRecord> records,
                                     LooProtocol protocol);

struct LooResult {
    double accuracy = 0.0;
    double auc = 0.0;
    std::vector<double> probabilities;  // aligned with the input records
    std::size_t n_folds = 0;
};

LooResult loo_evaluate(std::span<const AnnotationRecord> records, LooProtocol protocol,
                       const corpus::CodeSpace& code_space, const explain::EmbeddingTable& table,
                       double l2_strength = 1.0, std::uint64_t seed = 13);

// Smallest threshold t with fraction(prob >= t) <= target_rate; exact ties
// round toward fewer positives. The achieved rate never exceeds the target.
double calibrate_threshold(std::span<const double> probabilities, double target_rate);

struct ScoredExample {
    std::string example_id;
    double prob = 0.0;
};

struct ModelScore {
    std::string model;
    int score = 0;  // explanations with prob >= threshold
    std::pair<int, int> interval{0, 0};
    std::vector<std::pair<std::string, double>> p_vs;  // McNemar vs other models
};

// Counts per model; all models must cover the same example ids exactly once.
std::vector<ModelScore> score_models(
    const std::vector<std::pair<std::string, std::vector<ScoredExample>>>& per_model,
    double threshold);

// Each replicate draws an independent Bernoulli(p_i) label per explanation
// and sums; returns nearest-rank percentiles of the replicate sums.
std::pair<int, int> bootstrap_interval(std::span<const double> probabilities,
                                       int n_samples = 1000, double level = 0.95,
                                       std::uint64_t seed = 13);

// Exact two-sided binomial test on the discordant pairs.
double mcnemar_exact(std::span<const std::uint8_t> labels_a,
                     std::span<const std::uint8_t> labels_b);

struct ExampleCandidates {
    std::string example_id;
    std::string code;
    std::vector<std::string> candidate_texts;
};

using CandidateScorer =
    std::function<double(const std::string& candidate_text, const std::string& code)>;

struct ReassignResult {
    // Per model, the chosen candidate index for each example (input order).
    std::vector<std::pair<std::string, std::vector<std::size_t>>> chosen;
    // (example, text) cases where a text was chosen by more models than it
    // appeared as an option.
    std::size_t overselection_cases = 0;
};

// Every model independently picks its highest-scoring candidate per example,
// ties leftmost in candidate order.
ReassignResult reassign_annotations(
    const std::vector<ExampleCandidates>& examples,
    const std::vector<std::pair<std::string, CandidateScorer>>& models);

// Scores a candidate text by the mean coefficient of its tokens under the
// given per-code linear model (0 for out-of-vocabulary tokens).
CandidateScorer make_linear_scorer(const model::LinearPerCodeModel& linear,
                                   const corpus::Vocabulary& vocab);

}  // namespace linproxy::plausibility
