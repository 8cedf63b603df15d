#include <doctest.h>

#include <array>
#include <cmath>
#include <numeric>

#include "linproxy/metrics.hpp"
#include "linproxy/proxy.hpp"
#include "linproxy/rng.hpp"
#include "linproxy/synth.hpp"
#include "test_helpers.hpp"

using namespace linproxy;

namespace {

corpus::FeatureVector single_feature(std::uint32_t count) {
    corpus::FeatureVector fv;
    if (count > 0) fv.entries = {{0u, count}};
    return fv;
}

// Closed-form simple linear regression for one feature.
std::pair<double, double> least_squares_1d(const std::vector<double>& x,
                                           const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

// Cyclic coordinate descent for min (1/2n) ||y - Xw - b||^2 + alpha ||w||_1.
// Independent oracle for the lasso behavior of the SGD trainer.
struct LassoFit {
    std::vector<double> w;
    double b = 0.0;
};

LassoFit coordinate_descent_lasso(const std::vector<std::array<double, 3>>& x,
                                  const std::vector<double>& y, double alpha) {
    const std::size_t n = x.size();
    LassoFit fit;
    fit.w.assign(3, 0.0);
    for (int iter = 0; iter < 4000; ++iter) {
        double mean_resid = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double pred = 0.0;
            for (int j = 0; j < 3; ++j) pred += fit.w[j] * x[i][j];
            mean_resid += y[i] - pred;
        }
        fit.b = mean_resid / static_cast<double>(n);
        for (int j = 0; j < 3; ++j) {
            double rho = 0.0, z = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double partial = fit.b;
                for (int k = 0; k < 3; ++k) {
                    if (k != j) partial += fit.w[k] * x[i][k];
                }
                rho += x[i][j] * (y[i] - partial);
                z += x[i][j] * x[i][j];
            }
            rho /= static_cast<double>(n);
            z /= static_cast<double>(n);
            if (rho > alpha) {
                fit.w[j] = (rho - alpha) / z;
            } else if (rho < -alpha) {
                fit.w[j] = (rho + alpha) / z;
            } else {
                fit.w[j] = 0.0;
            }
        }
    }
    return fit;
}

}  // namespace

TEST_CASE("log_transform values and errors") {
    CHECK(proxy::log_transform(1.0, 1e-6) == 0.0);
    CHECK(proxy::log_transform(std::exp(-2.0), 1e-6) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(proxy::log_transform(0.0, 1e-6) == doctest::Approx(std::log(1e-6)).epsilon(1e-12));
    CHECK(proxy::log_transform(0.0, 1e-6) == doctest::Approx(-13.8155105579).epsilon(1e-9));
    CHECK_THROWS(proxy::log_transform(-0.1, 1e-6));
    CHECK_THROWS(proxy::log_transform(1.1, 1e-6));
}

TEST_CASE("log_transform is monotone, so ranks are preserved exactly") {
    rng::Rng gen(5);
    std::vector<double> probs, logs;
    for (int i = 0; i < 200; ++i) {
        probs.push_back(gen.next_double());
        logs.push_back(proxy::log_transform(probs.back(), 1e-6));
    }
    CHECK(metrics::spearman(probs, logs) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("constant targets give an intercept-only regressor") {
    proxy::TrainConfig config;
    config.alpha = 0.01;
    config.epochs = 60;
    rng::Rng gen(7);
    std::vector<corpus::FeatureVector> features;
    std::vector<double> targets;
    for (int i = 0; i < 200; ++i) {
        features.push_back(single_feature(static_cast<std::uint32_t>(gen.next_below(5))));
        targets.push_back(-3.25);
    }
    auto fit = proxy::train_code_regressor(features, targets, 1, config);
    CHECK(fit.coef.empty());
    CHECK(std::abs(fit.intercept - -3.25) < 1e-3);
}

TEST_CASE("noiseless linear target matches the closed-form least squares fit") {
    proxy::TrainConfig config;
    config.alpha = 0.0;
    config.epochs = 400;
    rng::Rng gen(11);
    std::vector<corpus::FeatureVector> features;
    std::vector<double> targets, xs;
    for (int i = 0; i < 50; ++i) {
        auto count = static_cast<std::uint32_t>(1 + gen.next_below(5));
        features.push_back(single_feature(count));
        xs.push_back(static_cast<double>(count));
        targets.push_back(2.0 * count + 1.0);
    }
    auto [slope, intercept] = least_squares_1d(xs, targets);
    CHECK(slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(intercept == doctest::Approx(1.0).epsilon(1e-12));

    auto fit = proxy::train_code_regressor(features, targets, 1, config);
    REQUIRE(fit.coef.size() == 1);
    CHECK(std::abs(fit.coef[0].second - slope) < 1e-2);
    CHECK(std::abs(fit.intercept - intercept) < 1e-2);
}

TEST_CASE("dominant L1 empties the coefficients, matching coordinate descent") {
    proxy::TrainConfig config;
    config.alpha = 10.0;
    config.epochs = 60;
    rng::Rng gen(23);
    std::vector<corpus::FeatureVector> features;
    std::vector<std::array<double, 3>> dense;
    std::vector<double> targets;
    for (int i = 0; i < 120; ++i) {
        corpus::FeatureVector fv;
        std::array<double, 3> row{};
        for (std::uint32_t j = 0; j < 3; ++j) {
            auto count = static_cast<std::uint32_t>(gen.next_below(4));
            if (count > 0) fv.entries.emplace_back(j, count);
            row[j] = count;
        }
        features.push_back(std::move(fv));
        dense.push_back(row);
        targets.push_back(0.8 * row[0] - 0.3 * row[2] + 1.5);
    }

    auto oracle = coordinate_descent_lasso(dense, targets, config.alpha);
    CHECK(oracle.w == std::vector<double>{0.0, 0.0, 0.0});
    double mean = std::accumulate(targets.begin(), targets.end(), 0.0) /
                  static_cast<double>(targets.size());
    CHECK(oracle.b == doctest::Approx(mean).epsilon(1e-9));

    auto fit = proxy::train_code_regressor(features, targets, 3, config);
    CHECK(fit.coef.empty());
    CHECK(std::abs(fit.intercept - oracle.b) < 1e-2);
}

TEST_CASE("moderate L1 tracks the coordinate descent solution") {
    proxy::TrainConfig config;
    config.alpha = 0.05;
    config.epochs = 300;
    rng::Rng gen(29);
    std::vector<corpus::FeatureVector> features;
    std::vector<std::array<double, 3>> dense;
    std::vector<double> targets;
    for (int i = 0; i < 150; ++i) {
        corpus::FeatureVector fv;
        std::array<double, 3> row{};
        for (std::uint32_t j = 0; j < 3; ++j) {
            auto count = static_cast<std::uint32_t>(gen.next_below(3));
            if (count > 0) fv.entries.emplace_back(j, count);
            row[j] = count;
        }
        features.push_back(std::move(fv));
        dense.push_back(row);
        targets.push_back(1.2 * row[0] - 0.7 * row[1] + 0.5 + 0.01 * gen.next_normal(0.0, 1.0));
    }
    auto oracle = coordinate_descent_lasso(dense, targets, config.alpha);
    auto fit = proxy::train_code_regressor(features, targets, 3, config);
    std::vector<double> w(3, 0.0);
    for (auto& [idx, value] : fit.coef) w[idx] = value;
    for (int j = 0; j < 3; ++j) CHECK(std::abs(w[j] - oracle.w[j]) < 0.05);
    CHECK(std::abs(fit.intercept - oracle.b) < 0.05);
}

TEST_CASE("empty training set is rejected") {
    proxy::TrainConfig config;
    CHECK_THROWS(proxy::train_code_regressor({}, {}, 1, config));
}

namespace {

struct PlantedSetup {
    synth::SynthResult data;
    corpus::Vocabulary vocab;
    blackbox::PredictionMatrix predictions;

    PlantedSetup()
        : data(synth::generate_corpus(make_config())),
          vocab(build_vocab(data)),
          predictions(synth::emit_predictions(data.model, data.documents)) {}

    static synth::SynthConfig make_config() {
        synth::SynthConfig config;
        config.seed = 13;
        config.vocab_size = 120;
        config.n_docs = 400;
        config.doc_len_min = 15;
        config.doc_len_max = 40;
        config.n_codes = 5;
        return config;
    }

    static corpus::Vocabulary build_vocab(const synth::SynthResult& data) {
        std::vector<corpus::Document> train_docs;
        for (std::size_t idx : data.splits.select(data.documents, corpus::Split::train)) {
            train_docs.push_back(data.documents[idx]);
        }
        return corpus::Vocabulary::build(train_docs, 1);
    }
};

}  // namespace

TEST_CASE("train_proxy recovers the planted model on noiseless data") {
    PlantedSetup setup;
    proxy::TrainConfig config;
    config.alpha = 1e-5;

    auto model = proxy::train_proxy(setup.data.documents, setup.data.splits, setup.vocab,
                                    setup.predictions, config);
    REQUIRE(model.codes.size() == 5);
    REQUIRE(model.per_code.size() == 5);

    auto planted_vocab = corpus::Vocabulary::from_tokens(setup.data.model.vocab_tokens);
    auto test_idx = setup.data.splits.select(setup.data.documents, corpus::Split::test);
    for (std::size_t c = 0; c < model.codes.size(); ++c) {
        std::vector<double> predicted, truth;
        for (std::size_t idx : test_idx) {
            const auto& doc = setup.data.documents[idx];
            auto features = model::prepare_features(doc, setup.vocab, config);
            predicted.push_back(model::linear_score(model.per_code[c], features));
            auto planted_features = corpus::featurize(doc, planted_vocab);
            truth.push_back(synth::planted_log_score(setup.data.model, c, planted_features));
        }
        CHECK(metrics::pearson(predicted, truth) >= 0.99);
    }
}

TEST_CASE("training is deterministic and schedule independent") {
    PlantedSetup setup;
    proxy::TrainConfig config;

    testutil::TempDir dir;
    auto a = proxy::train_proxy(setup.data.documents, setup.data.splits, setup.vocab,
                                setup.predictions, config);
    auto b = proxy::train_proxy(setup.data.documents, setup.data.splits, setup.vocab,
                                setup.predictions, config);
    model::save_model(a, dir.file("a.json"));
    model::save_model(b, dir.file("b.json"));
    CHECK(testutil::read_file(dir.file("a.json")) == testutil::read_file(dir.file("b.json")));

    // A single code trained directly, with the same code index, matches the
    // full run: per-code results do not depend on the training schedule.
    std::vector<corpus::FeatureVector> features;
    std::vector<double> targets;
    std::unordered_map<std::string, std::size_t> rows;
    for (std::size_t i = 0; i < setup.predictions.doc_ids.size(); ++i) {
        rows[setup.predictions.doc_ids[i]] = i;
    }
    for (std::size_t idx : setup.data.splits.select(setup.data.documents, corpus::Split::train)) {
        const auto& doc = setup.data.documents[idx];
        features.push_back(model::prepare_features(doc, setup.vocab, config));
        targets.push_back(
            proxy::log_transform(setup.predictions.at(rows.at(doc.doc_id), 3), config.clamp_eps));
    }
    auto solo = proxy::train_code_regressor(features, targets, setup.vocab.size(), config, 3);
    CHECK(solo.coef == a.per_code[3].coef);
    CHECK(solo.intercept == a.per_code[3].intercept);
}

TEST_CASE("predict_log and predict_prob") {
    proxy::ProxyModel model;
    model.kind = "proxy";
    model.codes = {"C0", "C1"};
    model.per_code.resize(2);
    model.per_code[0].intercept = 0.0;
    model.per_code[1].intercept = -13.8;
    corpus::FeatureVector empty;

    auto probs = proxy::predict_prob(model, empty);
    CHECK(probs[0] == 1.0);
    CHECK(probs[1] == doctest::Approx(1.0e-6).epsilon(1e-2));

    model.per_code[1].intercept = 2.0;
    CHECK(proxy::predict_prob(model, empty)[1] == 1.0);  // clamped

    // predict_prob always lands in [0, 1].
    rng::Rng gen(3);
    model.per_code[0].coef = {{0u, 5.0}, {1u, -2.0}};
    for (int trial = 0; trial < 100; ++trial) {
        corpus::FeatureVector fv;
        for (std::uint32_t j = 0; j < 2; ++j) {
            auto count = static_cast<std::uint32_t>(gen.next_below(4));
            if (count) fv.entries.emplace_back(j, count);
        }
        for (double p : proxy::predict_prob(model, fv)) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
}

TEST_CASE("model save/load round trip and validation") {
    PlantedSetup setup;
    proxy::TrainConfig config;
    auto model = proxy::train_proxy(setup.data.documents, setup.data.splits, setup.vocab,
                                    setup.predictions, config);
    testutil::TempDir dir;
    auto path = dir.file("model.json");
    model::save_model(model, path);

    auto loaded = model::load_model(path, setup.vocab);
    CHECK(loaded.kind == "proxy");
    CHECK(loaded.codes == model.codes);
    CHECK(loaded.vocab_hash == model.vocab_hash);
    CHECK(loaded.config.alpha == model.config.alpha);
    REQUIRE(loaded.per_code.size() == model.per_code.size());
    for (std::size_t c = 0; c < model.per_code.size(); ++c) {
        CHECK(loaded.per_code[c].coef == model.per_code[c].coef);
        CHECK(loaded.per_code[c].intercept == model.per_code[c].intercept);
    }

    // Vocabulary hash mismatch.
    auto other_vocab = corpus::Vocabulary::from_tokens({"zzz"});
    CHECK_THROWS(model::load_model(path, other_vocab));

    // Corrupted file.
    testutil::write_file(path, "{not json");
    CHECK_THROWS(model::load_model(path));

    // Version mismatch.
    testutil::write_file(dir.file("v9.json"), "{\"version\": 9}");
    CHECK_THROWS(model::load_model(dir.file("v9.json")));
}

TEST_CASE("grid search selects by validation mse") {
    PlantedSetup setup;
    proxy::TrainConfig config;

    std::vector<double> single{3e-4};
    CHECK(proxy::grid_search_alpha(setup.data.documents, setup.data.splits, setup.vocab,
                                   setup.predictions, single, config) == 3e-4);

    CHECK_THROWS(proxy::grid_search_alpha(setup.data.documents, setup.data.splits, setup.vocab,
                                          setup.predictions, {}, config));

    // Noiseless planted data is exactly linear, so less shrinkage fits better.
    std::vector<double> grid{1e-5, 1e-4, 1e-3};
    CHECK(proxy::grid_search_alpha(setup.data.documents, setup.data.splits, setup.vocab,
                                   setup.predictions, grid, config) == 1e-5);
}
