#pragma once

// Synthetic corpora with a planted, exactly log-linear black box. Because the
// planted model's log-probability is linear in the bag-of-words features, the
// proxy's hypothesis class contains the truth and faithfulness can be checked
// against a known ground truth.

#include <cstdint>
#include <string>
#include <vector>

#include "linproxy/blackbox_io.hpp"
#include "linproxy/corpus.hpp"

namespace linproxy::synth {

struct SynthConfig {
    std::uint64_t seed = 13;
    std::size_t vocab_size = 500;
    std::size_t n_docs = 2000;
    std::size_t doc_len_min = 20;
    std::size_t doc_len_max = 50;
    std::size_t n_codes = 20;
    double noise_sd = 0.0;

    void validate() const;
};

struct PlantedModel {
    std::vector<std::string> vocab_tokens;  // index space for the weights
    std::vector<std::string> codes;
    std::vector<std::vector<std::pair<std::uint32_t, double>>> weights;  // sorted by index
    std::vector<double> intercepts;
    double noise_sd = 0.0;
    std::uint64_t seed = 13;
};

struct SynthResult {
    std::vector<corpus::Document> documents;
    corpus::CodeSpace code_space;
    corpus::SplitAssignment splits;
    PlantedModel model;
};

// Deterministic given the config. Tokens are drawn from a Zipf distribution
// over a synthetic vocabulary; splits are 70/10/20 by floor-and-remainder in
// document order; true codes come from thresholding the planted probability
// at 0.5. Intercepts are sampled in [-6, -2] and weights rescaled per code so
// every generated document keeps its planted log-probability below zero.
SynthResult generate_corpus(const SynthConfig& config);

// w.x + b for one code, before noise and clamping.
double planted_log_score(const PlantedModel& model, std::size_t code_idx,
                         const corpus::FeatureVector& features);

// exp(min(w.x + b + eps, 0)).
double planted_predict(const PlantedModel& model, std::size_t code_idx,
                       const corpus::FeatureVector& features, double eps = 0.0);

// Noise draw for a (doc, code) pair, derived from (model seed, doc_id, code)
// so evaluation order never matters. Zero when noise_sd is zero.
double noise_for(const PlantedModel& model, const std::string& doc_id, const std::string& code);

blackbox::PredictionMatrix emit_predictions(const PlantedModel& model,
                                            const std::vector<corpus::Document>& docs);

void save_planted(const PlantedModel& model, const std::string& path);
PlantedModel load_planted(const std::string& path);

}  // namespace linproxy::synth
