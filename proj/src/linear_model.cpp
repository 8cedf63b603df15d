#include "linproxy/linear_model.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "linproxy/rng.hpp"
#include <json.hpp>

namespace linproxy::model {

namespace {
constexpr int kModelFileVersion = 1;
constexpr double kPruneThreshold = 1e-12;
}  // namespace

void TrainConfig::validate() const {
    if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (eta0 <= 0.0) throw std::invalid_argument("eta0 must be > 0");
    if (power_t < 0.0) throw std::invalid_argument("power_t must be >= 0");
    if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) {
        throw std::invalid_argument("clamp_eps must be in (0, 0.5)");
    }
    if (min_doc_freq < 1) throw std::invalid_argument("min_doc_freq must be >= 1");
}

double sigmoid(double z) {
    if (z >= 0.0) {
        double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

double linear_score(const CodeWeights& weights, const corpus::FeatureVector& features) {
    double sum = weights.intercept;
    auto wi = weights.coef.begin();
    auto fi = features.entries.begin();
    while (wi != weights.coef.end() && fi != features.entries.end()) {
        if (wi->first < fi->first) {
            ++wi;
        } else if (fi->first < wi->first) {
            ++fi;
        } else {
            sum += wi->second * static_cast<double>(fi->second);
            ++wi;
            ++fi;
        }
    }
    return sum;
}

corpus::FeatureVector prepare_features(const corpus::Document& doc,
                                       const corpus::Vocabulary& vocab,
                                       const TrainConfig& config) {
    auto features = corpus::featurize(doc, vocab);
    if (config.binary_features) return corpus::binarize_features(features);
    return features;
}

CodeWeights sgd_train(std::span<const corpus::FeatureVector> features,
                      std::span<const double> targets, std::size_t n_features, Loss loss,
                      const TrainConfig& config, std::uint64_t code_index) {
    config.validate();
    if (features.empty()) throw std::invalid_argument("empty training set");
    if (features.size() != targets.size()) {
        throw std::invalid_argument("features/targets length mismatch");
    }

    std::vector<double> w(n_features, 0.0);
    // Start the intercept at the target mean (the no-feature optimum): counts
    // are non-negative, so from b = 0 the bias direction is poorly
    // conditioned and dominates the epoch budget.
    double b = 0.0;
    if (loss == Loss::squared) {
        for (double y : targets) b += y;
        b /= static_cast<double>(targets.size());
    }

    rng::Rng gen(rng::derive_seed(config.seed, "sgd", code_index));
    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), 0);

    std::uint64_t t = 1;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        gen.shuffle(order);
        for (std::size_t i : order) {
            const double eta = config.eta0 / std::pow(static_cast<double>(t), config.power_t);
            const auto& x = features[i];

            double z = b;
            for (const auto& [idx, count] : x.entries) {
                z += w[idx] * static_cast<double>(count);
            }
            const double dloss = (loss == Loss::squared ? z : sigmoid(z)) - targets[i];

            for (const auto& [idx, count] : x.entries) {
                w[idx] -= eta * dloss * static_cast<double>(count);
            }
            b -= eta * dloss;  // intercept is not regularized

            if (config.alpha > 0.0) {
                const double shrink = eta * config.alpha;
                for (double& wj : w) {
                    if (wj > shrink) {
                        wj -= shrink;
                    } else if (wj < -shrink) {
                        wj += shrink;
                    } else {
                        wj = 0.0;
                    }
                }
            }
            ++t;
        }
    }

    CodeWeights out;
    out.intercept = b;
    for (std::uint32_t j = 0; j < n_features; ++j) {
        if (std::abs(w[j]) >= kPruneThreshold) out.coef.emplace_back(j, w[j]);
    }
    return out;
}

void save_model(const LinearPerCodeModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    nlohmann::json obj;
    obj["version"] = kModelFileVersion;
    obj["kind"] = model.kind;
    obj["vocab_hash"] = model.vocab_hash;
    obj["codes"] = model.codes;
    nlohmann::json cfg;
    cfg["alpha"] = model.config.alpha;
    cfg["epochs"] = model.config.epochs;
    cfg["eta0"] = model.config.eta0;
    cfg["power_t"] = model.config.power_t;
    cfg["clamp_eps"] = model.config.clamp_eps;
    cfg["seed"] = model.config.seed;
    cfg["binary_features"] = model.config.binary_features;
    cfg["min_doc_freq"] = model.config.min_doc_freq;
    obj["config"] = std::move(cfg);
    std::vector<double> intercepts;
    nlohmann::json coefficients = nlohmann::json::array();
    for (const auto& code : model.per_code) {
        intercepts.push_back(code.intercept);
        nlohmann::json coef = nlohmann::json::array();
        for (const auto& [idx, value] : code.coef) {
            coef.push_back(nlohmann::json::array({idx, value}));
        }
        coefficients.push_back(std::move(coef));
    }
    obj["intercepts"] = std::move(intercepts);
    obj["coefficients"] = std::move(coefficients);
    out << obj.dump() << "\n";
}

LinearPerCodeModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json obj;
    try {
        in >> obj;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": malformed model file: " + e.what());
    }
    try {
        int version = obj.at("version").get<int>();
        if (version != kModelFileVersion) {
            throw std::runtime_error("unsupported model file version " + std::to_string(version));
        }
        LinearPerCodeModel model;
        model.kind = obj.at("kind").get<std::string>();
        model.vocab_hash = obj.at("vocab_hash").get<std::string>();
        model.codes = obj.at("codes").get<std::vector<std::string>>();
        const auto& cfg = obj.at("config");
        model.config.alpha = cfg.at("alpha").get<double>();
        model.config.epochs = cfg.at("epochs").get<int>();
        model.config.eta0 = cfg.at("eta0").get<double>();
        model.config.power_t = cfg.at("power_t").get<double>();
        model.config.clamp_eps = cfg.at("clamp_eps").get<double>();
        model.config.seed = cfg.at("seed").get<std::uint64_t>();
        model.config.binary_features = cfg.at("binary_features").get<bool>();
        model.config.min_doc_freq = cfg.at("min_doc_freq").get<std::size_t>();
        auto intercepts = obj.at("intercepts").get<std::vector<double>>();
        const auto& coefficients = obj.at("coefficients");
        if (intercepts.size() != model.codes.size() ||
            coefficients.size() != model.codes.size()) {
            throw std::runtime_error("inconsistent model file");
        }
        for (std::size_t c = 0; c < model.codes.size(); ++c) {
            CodeWeights weights;
            weights.intercept = intercepts[c];
            for (const auto& pair : coefficients[c]) {
                weights.coef.emplace_back(pair.at(0).get<std::uint32_t>(),
                                          pair.at(1).get<double>());
            }
            model.per_code.push_back(std::move(weights));
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": malformed model file: " + e.what());
    }
}

LinearPerCodeModel load_model(const std::string& path, const corpus::Vocabulary& vocab) {
    auto model = load_model(path);
    if (model.vocab_hash != vocab.fingerprint()) {
        throw std::runtime_error(path + ": vocabulary hash mismatch (model " + model.vocab_hash +
                                 ", corpus " + vocab.fingerprint() + ")");
    }
    return model;
}

}  // namespace linproxy::model
