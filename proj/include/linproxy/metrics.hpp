#pragma once

// Faithfulness and label-quality metrics. All functions are pure; inputs are
// never mutated. Correlations throw on undefined cases instead of returning
// NaN, and ROC AUC signals single-class inputs via nullopt so callers can
// decide whether skipping is acceptable.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "linproxy/blackbox_io.hpp"

namespace linproxy::metrics {

double pearson(std::span<const double> x, std::span<const double> y);

// Pearson of average ranks; ties get the mean rank.
double spearman(std::span<const double> x, std::span<const double> y);
std::vector<double> average_ranks(std::span<const double> values);

// Tie-corrected tau-b via O(n log n) merge counting.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

// Probability a random positive outranks a random negative; ties count 0.5.
// nullopt when labels are single-class (AUC undefined).
std::optional<double> roc_auc(std::span<const double> scores,
                              std::span<const std::uint8_t> labels);

struct MacroAucResult {
    double value = 0.0;
    std::size_t used = 0;     // codes with both classes present
    std::size_t skipped = 0;  // degenerate codes left out of the mean
};

// scores/labels are n_docs x n_codes row-major. Macro skips degenerate codes
// (throws if every code is degenerate); micro pools all entries.
MacroAucResult macro_auc(std::span<const double> scores, std::span<const std::uint8_t> labels,
                         std::size_t n_docs, std::size_t n_codes);
double micro_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

double f1(std::size_t tp, std::size_t fp, std::size_t fn);
double macro_f1(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels,
                std::size_t n_docs, std::size_t n_codes);
double micro_f1(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels);

// Mean over documents of the fraction of the k top-scored codes (ties broken
// by ascending code index) that are true. Throws if k exceeds the code count.
double precision_at_k(std::span<const double> scores, std::span<const std::uint8_t> labels,
                      std::size_t n_docs, std::size_t n_codes, std::size_t k);

struct FaithfulnessReport {
    double spearman = 0.0;
    double pearson = 0.0;
    double kendall = 0.0;
    double macro_auc = 0.0;
    double micro_auc = 0.0;
    double macro_f1 = 0.0;
    double micro_f1 = 0.0;
    std::size_t macro_auc_skipped = 0;
};

struct LabelReport {
    double macro_auc = 0.0;
    double micro_auc = 0.0;
    double macro_f1 = 0.0;
    double micro_f1 = 0.0;
    std::vector<std::pair<std::size_t, double>> precision_at;  // (k, value)
    std::size_t macro_auc_skipped = 0;
};

// Correlations are pooled over all flattened (doc, code) pairs of the
// candidate's raw outputs vs. the black box's probabilities; classification
// metrics treat the binarized black-box predictions as pseudo-labels, with
// candidate predictions thresholded at 0.5.
FaithfulnessReport faithfulness_report(const blackbox::PredictionMatrix& candidate,
                                       const blackbox::PredictionMatrix& black_box,
                                       double binarize_threshold = 0.5);

// Same classification metrics against ground-truth labels, plus precision@k.
LabelReport label_report(const blackbox::PredictionMatrix& candidate,
                         std::span<const std::uint8_t> true_labels,
                         std::vector<std::size_t> ks = {8, 15});

}  // namespace linproxy::metrics
