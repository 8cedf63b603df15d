#include <doctest.h>

#include <cmath>

#include "linproxy/synth.hpp"
#include "test_helpers.hpp"

using namespace linproxy;

namespace {

synth::SynthConfig small_config() {
    synth::SynthConfig config;
    config.seed = 13;
    config.vocab_size = 60;
    config.n_docs = 100;
    config.doc_len_min = 10;
    config.doc_len_max = 25;
    config.n_codes = 4;
    return config;
}

}  // namespace

TEST_CASE("generation is deterministic given the seed") {
    auto a = synth::generate_corpus(small_config());
    auto b = synth::generate_corpus(small_config());
    REQUIRE(a.documents.size() == b.documents.size());
    for (std::size_t i = 0; i < a.documents.size(); ++i) {
        CHECK(a.documents[i].doc_id == b.documents[i].doc_id);
        CHECK(a.documents[i].raw_text == b.documents[i].raw_text);
        CHECK(a.documents[i].true_codes == b.documents[i].true_codes);
    }
    CHECK(a.code_space.codes == b.code_space.codes);
    CHECK(a.code_space.descriptions == b.code_space.descriptions);
    CHECK(a.model.intercepts == b.model.intercepts);
    CHECK(a.model.weights == b.model.weights);

    auto config2 = small_config();
    config2.seed = 14;
    auto c = synth::generate_corpus(config2);
    CHECK(a.documents[0].raw_text != c.documents[0].raw_text);
}

TEST_CASE("splits follow the 70/10/20 floor rule") {
    auto result = synth::generate_corpus(small_config());
    std::size_t train = result.splits.select(result.documents, corpus::Split::train).size();
    std::size_t val = result.splits.select(result.documents, corpus::Split::validation).size();
    std::size_t test = result.splits.select(result.documents, corpus::Split::test).size();
    CHECK(train == 70);
    CHECK(val == 10);
    CHECK(test == 20);
}

TEST_CASE("generation validates sizes") {
    auto config = small_config();
    config.vocab_size = 0;
    CHECK_THROWS(synth::generate_corpus(config));

    config = small_config();
    config.n_docs = 5;
    CHECK_THROWS(synth::generate_corpus(config));

    config = small_config();
    config.doc_len_min = 10;
    config.doc_len_max = 5;
    CHECK_THROWS(synth::generate_corpus(config));
}

TEST_CASE("planted_predict definition") {
    synth::PlantedModel model;
    model.vocab_tokens = {"w0", "w1"};
    model.codes = {"C0"};
    model.weights = {{}};
    model.intercepts = {0.0};
    model.noise_sd = 0.0;

    corpus::FeatureVector empty;
    CHECK(synth::planted_predict(model, 0, empty) == 1.0);

    model.intercepts[0] = -2.0;
    CHECK(synth::planted_predict(model, 0, empty) ==
          doctest::Approx(std::exp(-2.0)).epsilon(1e-15));

    model.intercepts[0] = 3.0;
    CHECK(synth::planted_predict(model, 0, empty) == 1.0);  // clamped at probability 1

    model.weights[0] = {{0u, 0.5}, {1u, -1.0}};
    model.intercepts[0] = -1.0;
    corpus::FeatureVector fv;
    fv.entries = {{0u, 2u}, {1u, 1u}};  // 0.5*2 - 1.0*1 - 1.0 = -1.0
    CHECK(synth::planted_log_score(model, 0, fv) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("planted log scores stay below zero on the generated corpus") {
    auto result = synth::generate_corpus(small_config());
    auto vocab = corpus::Vocabulary::from_tokens(result.model.vocab_tokens);
    for (const auto& doc : result.documents) {
        auto features = corpus::featurize(doc, vocab);
        for (std::size_t c = 0; c < result.model.codes.size(); ++c) {
            CHECK(synth::planted_log_score(result.model, c, features) <= 0.0);
        }
    }
}

TEST_CASE("emitted predictions are a pure function of the seed") {
    auto config = small_config();
    config.noise_sd = 0.3;
    auto result = synth::generate_corpus(config);
    auto first = synth::emit_predictions(result.model, result.documents);
    auto second = synth::emit_predictions(result.model, result.documents);
    CHECK(first.probs == second.probs);
    CHECK(first.n_docs() == config.n_docs);
    CHECK(first.n_codes() == config.n_codes);
    for (double p : first.probs) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("noiseless predictions are exactly log-linear") {
    auto result = synth::generate_corpus(small_config());
    auto vocab = corpus::Vocabulary::from_tokens(result.model.vocab_tokens);
    auto matrix = synth::emit_predictions(result.model, result.documents);
    for (std::size_t d = 0; d < result.documents.size(); ++d) {
        auto features = corpus::featurize(result.documents[d], vocab);
        for (std::size_t c = 0; c < result.model.codes.size(); ++c) {
            double log_p = synth::planted_log_score(result.model, c, features);
            CHECK(std::log(matrix.at(d, c)) == doctest::Approx(log_p).epsilon(1e-12));
        }
    }
}

TEST_CASE("planted model file round trip") {
    testutil::TempDir dir;
    auto result = synth::generate_corpus(small_config());
    auto path = dir.file("planted.json");
    synth::save_planted(result.model, path);
    auto loaded = synth::load_planted(path);
    CHECK(loaded.codes == result.model.codes);
    CHECK(loaded.vocab_tokens == result.model.vocab_tokens);
    CHECK(loaded.intercepts == result.model.intercepts);
    CHECK(loaded.weights == result.model.weights);
    CHECK(loaded.seed == result.model.seed);
}

TEST_CASE("true codes come from thresholding the planted probability") {
    auto result = synth::generate_corpus(small_config());
    auto vocab = corpus::Vocabulary::from_tokens(result.model.vocab_tokens);
    for (const auto& doc : result.documents) {
        auto features = corpus::featurize(doc, vocab);
        for (std::size_t c = 0; c < result.model.codes.size(); ++c) {
            bool expected = synth::planted_predict(result.model, c, features) >= 0.5;
            CHECK(doc.true_codes.count(result.model.codes[c]) == (expected ? 1u : 0u));
        }
    }
}
