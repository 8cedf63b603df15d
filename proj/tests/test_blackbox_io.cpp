#include <doctest.h>

#include "linproxy/blackbox_io.hpp"
#include "linproxy/rng.hpp"
#include "test_helpers.hpp"

using namespace linproxy;
using testutil::TempDir;

namespace {

corpus::CodeSpace two_codes() {
    return corpus::CodeSpace::from_pairs({{"a", "code a"}, {"b", "code b"}});
}

}  // namespace

TEST_CASE("predictions round trip is bitwise") {
    TempDir dir;
    auto codes = two_codes();
    blackbox::PredictionMatrix matrix;
    matrix.codes = codes.codes;
    matrix.doc_ids = {"d1", "d2"};
    matrix.probs = {0.123456789123456789, 1.0, 0.0, 1e-300};

    auto path = dir.file("preds.jsonl");
    blackbox::save_predictions(matrix, path);
    auto loaded = blackbox::load_predictions(path, codes);
    CHECK(loaded.doc_ids == matrix.doc_ids);
    CHECK(loaded.codes == matrix.codes);
    REQUIRE(loaded.probs.size() == matrix.probs.size());
    for (std::size_t i = 0; i < matrix.probs.size(); ++i) {
        CHECK(loaded.probs[i] == matrix.probs[i]);  // exact
    }

    // Saving the loaded matrix reproduces the file byte for byte.
    auto path2 = dir.file("preds2.jsonl");
    blackbox::save_predictions(loaded, path2);
    CHECK(testutil::read_file(path) == testutil::read_file(path2));
}

TEST_CASE("predictions loader validates") {
    TempDir dir;
    auto codes = two_codes();
    auto path = dir.file("preds.jsonl");

    // Header order mismatch.
    testutil::write_file(path, "{\"codes\":[\"b\",\"a\"]}\n{\"doc_id\":\"d\",\"probs\":[0.1,0.2]}\n");
    CHECK_THROWS(blackbox::load_predictions(path, codes));

    // Probability outside [0,1].
    testutil::write_file(path, "{\"codes\":[\"a\",\"b\"]}\n{\"doc_id\":\"d\",\"probs\":[0.1,1.5]}\n");
    CHECK_THROWS(blackbox::load_predictions(path, codes));

    // Wrong row length.
    testutil::write_file(path, "{\"codes\":[\"a\",\"b\"]}\n{\"doc_id\":\"d\",\"probs\":[0.1]}\n");
    CHECK_THROWS(blackbox::load_predictions(path, codes));

    // Missing rows surface when selecting.
    testutil::write_file(path, "{\"codes\":[\"a\",\"b\"]}\n{\"doc_id\":\"d\",\"probs\":[0.1,0.2]}\n");
    auto matrix = blackbox::load_predictions(path, codes);
    CHECK_THROWS(matrix.select_rows({"d", "ghost"}));
}

TEST_CASE("binarize thresholds with >= and validates the threshold") {
    blackbox::PredictionMatrix matrix;
    matrix.codes = {"a", "b", "c"};
    matrix.doc_ids = {"d"};
    matrix.probs = {0.4, 0.5, 0.6};
    auto binary = blackbox::binarize(matrix, 0.5);
    CHECK(binary.values == std::vector<std::uint8_t>{0, 1, 1});

    matrix.probs = {0.0, 0.0, 0.0};
    CHECK(blackbox::binarize(matrix, 0.5).values == std::vector<std::uint8_t>{0, 0, 0});

    matrix.probs = {0.41, 0.43, 0.42};
    CHECK(blackbox::binarize(matrix, 0.42).values == std::vector<std::uint8_t>{0, 1, 1});

    CHECK_THROWS(blackbox::binarize(matrix, 0.0));
    CHECK_THROWS(blackbox::binarize(matrix, 1.0));
}

TEST_CASE("binarize is monotone in the threshold") {
    rng::Rng gen(21);
    blackbox::PredictionMatrix matrix;
    matrix.codes = {"a"};
    for (int d = 0; d < 50; ++d) {
        matrix.doc_ids.push_back("d" + std::to_string(d));
        matrix.probs.push_back(gen.next_double());
    }
    double lo = 0.2, hi = 0.7;
    auto at_lo = blackbox::binarize(matrix, lo);
    auto at_hi = blackbox::binarize(matrix, hi);
    for (std::size_t i = 0; i < matrix.probs.size(); ++i) {
        // Raising the threshold never turns a 0 into a 1.
        CHECK(at_hi.values[i] <= at_lo.values[i]);
    }
}

TEST_CASE("importance dump loading and validation") {
    TempDir dir;
    std::vector<corpus::Document> docs{testutil::doc_from_tokens("d1", {"a", "b", "c", "d", "e"})};
    auto path = dir.file("dump.jsonl");

    testutil::write_file(path, "{\"doc_id\":\"d1\",\"code\":\"x\",\"importances\":[1,2,3,4,5]}\n");
    auto dump = blackbox::load_importance_dump(path, docs);
    REQUIRE(dump.find("d1", "x") != nullptr);
    CHECK(dump.find("d1", "x")->size() == 5);
    CHECK(dump.find("d1", "y") == nullptr);

    testutil::write_file(path, "{\"doc_id\":\"d1\",\"code\":\"x\",\"importances\":[1,2,3,4]}\n");
    try {
        blackbox::load_importance_dump(path, docs);
        FAIL("expected error");
    } catch (const std::runtime_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("d1") != std::string::npos);
        CHECK(msg.find("x") != std::string::npos);
    }

    testutil::write_file(path, "{\"doc_id\":\"ghost\",\"code\":\"x\",\"importances\":[1]}\n");
    CHECK_THROWS(blackbox::load_importance_dump(path, docs));
}
