#include "linproxy/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace linproxy::metrics {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("correlation inputs differ in length");
    if (x.size() < 2) throw std::invalid_argument("correlation needs at least 2 points");
}

// Counts inversions of v via merge sort; equal elements are not inversions.
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& buf,
                               std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t count = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            count += mid - i;
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
    return count;
}

std::uint64_t tie_pairs(std::span<const double> sorted_values) {
    std::uint64_t pairs = 0;
    std::size_t i = 0;
    while (i < sorted_values.size()) {
        std::size_t j = i + 1;
        while (j < sorted_values.size() && sorted_values[j] == sorted_values[i]) ++j;
        std::uint64_t run = j - i;
        pairs += run * (run - 1) / 2;
        i = j;
    }
    return pairs;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const std::size_t n = x.size();
    double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mean_x;
        double dy = y[i] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw std::invalid_argument("undefined correlation: constant input");
    }
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        double mean_rank = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mean_rank;
        i = j;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    auto rx = average_ranks(x);
    auto ry = average_ranks(y);
    return pearson(rx, ry);
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const std::size_t n = x.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = x[order[i]];
        ys[i] = y[order[i]];
    }

    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const std::uint64_t n1 = tie_pairs(xs);
    std::vector<double> y_sorted = ys;
    std::sort(y_sorted.begin(), y_sorted.end());
    const std::uint64_t n2 = tie_pairs(y_sorted);
    if (n1 == n0 || n2 == n0) {
        throw std::invalid_argument("undefined tau: all pairs tied in one vector");
    }

    // Joint ties: runs of equal (x, y) in the sorted order.
    std::uint64_t n3 = 0;
    {
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i + 1;
            while (j < n && xs[j] == xs[i] && ys[j] == ys[i]) ++j;
            std::uint64_t run = j - i;
            n3 += run * (run - 1) / 2;
            i = j;
        }
    }

    std::vector<double> buf(n);
    const std::uint64_t discordant = count_inversions(ys, buf, 0, n);
    // Pairs tied in x contribute no inversions (y ascending within a group),
    // so `discordant` counts exactly the strictly-discordant pairs.
    const std::uint64_t concordant = n0 - n1 - n2 + n3 - discordant;

    double num = static_cast<double>(concordant) - static_cast<double>(discordant);
    double den = std::sqrt(static_cast<double>(n0 - n1)) * std::sqrt(static_cast<double>(n0 - n2));
    return num / den;
}

std::optional<double> roc_auc(std::span<const double> scores,
                              std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("roc_auc inputs differ in length");
    }
    std::size_t n_pos = 0;
    for (auto l : labels) n_pos += l ? 1 : 0;
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    auto ranks = average_ranks(scores);
    double rank_sum_pos = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) rank_sum_pos += ranks[i];
    }
    double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

MacroAucResult macro_auc(std::span<const double> scores, std::span<const std::uint8_t> labels,
                         std::size_t n_docs, std::size_t n_codes) {
    if (scores.size() != n_docs * n_codes || labels.size() != scores.size()) {
        throw std::invalid_argument("macro_auc shape mismatch");
    }
    MacroAucResult result;
    double sum = 0.0;
    std::vector<double> col_scores(n_docs);
    std::vector<std::uint8_t> col_labels(n_docs);
    for (std::size_t c = 0; c < n_codes; ++c) {
        for (std::size_t d = 0; d < n_docs; ++d) {
            col_scores[d] = scores[d * n_codes + c];
            col_labels[d] = labels[d * n_codes + c];
        }
        if (auto auc = roc_auc(col_scores, col_labels)) {
            sum += *auc;
            ++result.used;
        } else {
            ++result.skipped;
        }
    }
    if (result.used == 0) throw std::runtime_error("macro AUC undefined: every code is degenerate");
    result.value = sum / static_cast<double>(result.used);
    return result;
}

double micro_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    auto auc = roc_auc(scores, labels);
    if (!auc) throw std::runtime_error("micro AUC undefined: pooled labels are single-class");
    return *auc;
}

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
    const std::size_t denom = 2 * tp + fp + fn;
    if (denom == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double macro_f1(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels,
                std::size_t n_docs, std::size_t n_codes) {
    if (predictions.size() != n_docs * n_codes || labels.size() != predictions.size()) {
        throw std::invalid_argument("macro_f1 shape mismatch");
    }
    if (n_codes == 0) throw std::invalid_argument("macro_f1 needs at least one code");
    double sum = 0.0;
    for (std::size_t c = 0; c < n_codes; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t d = 0; d < n_docs; ++d) {
            bool p = predictions[d * n_codes + c] != 0;
            bool l = labels[d * n_codes + c] != 0;
            tp += p && l;
            fp += p && !l;
            fn += !p && l;
        }
        sum += f1(tp, fp, fn);
    }
    return sum / static_cast<double>(n_codes);
}

double micro_f1(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels) {
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("micro_f1 shape mismatch");
    }
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        bool p = predictions[i] != 0;
        bool l = labels[i] != 0;
        tp += p && l;
        fp += p && !l;
        fn += !p && l;
    }
    return f1(tp, fp, fn);
}

double precision_at_k(std::span<const double> scores, std::span<const std::uint8_t> labels,
                      std::size_t n_docs, std::size_t n_codes, std::size_t k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (k > n_codes) {
        throw std::invalid_argument("precision@k: k=" + std::to_string(k) + " exceeds code count " +
                                    std::to_string(n_codes));
    }
    if (scores.size() != n_docs * n_codes || labels.size() != scores.size()) {
        throw std::invalid_argument("precision_at_k shape mismatch");
    }
    if (n_docs == 0) throw std::invalid_argument("precision_at_k needs at least one document");

    std::vector<std::size_t> idx(n_codes);
    double total = 0.0;
    for (std::size_t d = 0; d < n_docs; ++d) {
        const double* row = scores.data() + d * n_codes;
        std::iota(idx.begin(), idx.end(), 0);
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                          [&](std::size_t a, std::size_t b) {
                              if (row[a] != row[b]) return row[a] > row[b];
                              return a < b;
                          });
        std::size_t hits = 0;
        for (std::size_t i = 0; i < k; ++i) hits += labels[d * n_codes + idx[i]] ? 1 : 0;
        total += static_cast<double>(hits) / static_cast<double>(k);
    }
    return total / static_cast<double>(n_docs);
}

namespace {

void check_aligned(const blackbox::PredictionMatrix& a, const blackbox::PredictionMatrix& b) {
    if (a.doc_ids != b.doc_ids) throw std::invalid_argument("matrices disagree on document rows");
    if (a.codes != b.codes) throw std::invalid_argument("matrices disagree on code columns");
}

std::vector<std::uint8_t> threshold_at(std::span<const double> probs, double threshold) {
    std::vector<std::uint8_t> out;
    out.reserve(probs.size());
    for (double p : probs) out.push_back(p >= threshold ? 1 : 0);
    return out;
}

}  // namespace

FaithfulnessReport faithfulness_report(const blackbox::PredictionMatrix& candidate,
                                       const blackbox::PredictionMatrix& black_box,
                                       double binarize_threshold) {
    check_aligned(candidate, black_box);
    FaithfulnessReport report;
    report.pearson = pearson(candidate.probs, black_box.probs);
    report.spearman = spearman(candidate.probs, black_box.probs);
    report.kendall = kendall_tau_b(candidate.probs, black_box.probs);

    auto pseudo = blackbox::binarize(black_box, binarize_threshold);
    auto macro = macro_auc(candidate.probs, pseudo.values, candidate.n_docs(), candidate.n_codes());
    report.macro_auc = macro.value;
    report.macro_auc_skipped = macro.skipped;
    report.micro_auc = micro_auc(candidate.probs, pseudo.values);

    auto predicted = threshold_at(candidate.probs, 0.5);
    report.macro_f1 = macro_f1(predicted, pseudo.values, candidate.n_docs(), candidate.n_codes());
    report.micro_f1 = micro_f1(predicted, pseudo.values);
    return report;
}

LabelReport label_report(const blackbox::PredictionMatrix& candidate,
                         std::span<const std::uint8_t> true_labels,
                         std::vector<std::size_t> ks) {
    if (true_labels.size() != candidate.probs.size()) {
        throw std::invalid_argument("label matrix shape mismatch");
    }
    LabelReport report;
    auto macro = macro_auc(candidate.probs, true_labels, candidate.n_docs(), candidate.n_codes());
    report.macro_auc = macro.value;
    report.macro_auc_skipped = macro.skipped;
    report.micro_auc = micro_auc(candidate.probs, true_labels);

    auto predicted = threshold_at(candidate.probs, 0.5);
    report.macro_f1 = macro_f1(predicted, true_labels, candidate.n_docs(), candidate.n_codes());
    report.micro_f1 = micro_f1(predicted, true_labels);

    for (std::size_t k : ks) {
        report.precision_at.emplace_back(
            k, precision_at_k(candidate.probs, true_labels, candidate.n_docs(),
                              candidate.n_codes(), k));
    }
    return report;
}

}  // namespace linproxy::metrics
