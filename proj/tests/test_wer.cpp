#include "doctest.h"

#include <random>

#include "fdh/error.hpp"
#include "fdh/wer.hpp"
#include "support.hpp"

using namespace fdh;

TEST_SUITE("wer") {

TEST_CASE("identical strings") {
    CHECK(word_error_rate("the cat sat", "the cat sat").wer_percent == 0.0);
}

TEST_CASE("one substitution in two words") {
    const auto r = word_error_rate("hello world", "hello word");
    CHECK(r.wer_percent == 50.0);
    CHECK(r.substitutions == 1);
    CHECK(r.deletions == 0);
    CHECK(r.insertions == 0);
}

TEST_CASE("empty hypothesis deletes everything") {
    const auto r = word_error_rate("a b c", "");
    CHECK(r.wer_percent == 100.0);
    CHECK(r.deletions == 3);
}

TEST_CASE("insertions can push wer above 100") {
    const auto r = word_error_rate("a", "b c d");
    CHECK(r.edits() == 3);
    CHECK(r.wer_percent == 300.0);
}

TEST_CASE("normalization ignores case and punctuation") {
    CHECK(word_error_rate("Hello, World!", "hello world").wer_percent == 0.0);
    CHECK(normalize_text("  Hi,   THERE.  ") == "hi there");
}

TEST_CASE("empty reference is undefined") {
    CHECK_THROWS_AS(word_error_rate("  ...  ", "x"), UndefinedMetricError);
    CHECK_THROWS_AS(WerAccumulator{}.result(), UndefinedMetricError);
}

TEST_CASE("normalizer is idempotent") {
    std::mt19937 rng(5);
    const std::string alphabet = "aB c,D.e!F  g?'-\tH";
    for (int i = 0; i < 500; ++i) {
        std::string s;
        for (int k = static_cast<int>(rng() % 40); k > 0; --k) s += alphabet[rng() % alphabet.size()];
        const auto once = normalize_text(s);
        CHECK(normalize_text(once) == once);
    }
}

TEST_CASE("matches the recursive oracle on random pairs") {
    std::mt19937 rng(99);
    const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
    for (int i = 0; i < 300; ++i) {
        std::vector<std::string> ref(1 + rng() % 8), hyp(rng() % 9);
        for (auto& w : ref) w = vocab[rng() % vocab.size()];
        for (auto& w : hyp) w = vocab[rng() % vocab.size()];
        const auto r = word_error_rate(ref, hyp);
        const auto d = test::edit_distance_oracle(ref, hyp);
        REQUIRE(r.edits() == d);
        CHECK(r.wer_percent == doctest::Approx(100.0 * static_cast<double>(d) / static_cast<double>(ref.size())));
        CHECK(static_cast<long>(r.insertions) - static_cast<long>(r.deletions) ==
              static_cast<long>(hyp.size()) - static_cast<long>(ref.size()));
    }
}

TEST_CASE("corpus wer pools edits") {
    WerAccumulator acc;
    acc.add(word_error_rate("a b c d", "a b c d"));
    acc.add(word_error_rate("a b", "a x"));
    CHECK(acc.result().wer_percent == doctest::Approx(100.0 / 6.0));
}

}
