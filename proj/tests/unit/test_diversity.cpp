#include "synthline/diversity.hpp"

#include "../support/oracles.hpp"
#include "../support/stubs.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace synthline;

namespace {

std::vector<std::string> random_texts(std::mt19937_64& rng, std::size_t n) {
    static const std::vector<std::string> words{"the", "system", "shall", "log", "user", "access", "data", "encrypt",
                                                "report", "must", "every", "session", "audit", "store", "backup"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::string s;
        const auto len = 1 + rng() % 9;
        for (std::size_t k = 0; k < len; ++k) s += (k ? " " : "") + words[rng() % words.size()];
        out.push_back(s);
    }
    return out;
}

EmbeddingVector unit(std::size_t dim, std::size_t axis) {
    EmbeddingVector v;
    v.values.assign(dim, 0.0);
    v.values[axis] = 1.0;
    return v;
}

}  // namespace

TEST_SUITE("diversity") {

TEST_CASE("INGF anchors") {
    std::vector<std::string> twice{"the system shall log access", "the system shall log access"};
    CHECK(ingf(twice) == 2.0);
    std::vector<std::string> disjoint{"alpha beta gamma delta", "one two three four"};
    CHECK(ingf(disjoint) == 1.0);
    CHECK(ingf(disjoint, 1) == 1.0);
}

TEST_CASE("INGF hand-computed example") {
    // trigrams: {a b c, b c d} and {a b c, b c e}; counts 2, 1, 1 over 3 distinct.
    std::vector<std::string> t{"a b c d", "A, b c e"};
    CHECK(ingf(t) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    auto stats = ngram_stats(t, 3);
    CHECK(stats.unique_ngrams == 3);
    CHECK(stats.short_samples == 0);
}

TEST_CASE("INGF counts each n-gram once per sample") {
    std::vector<std::string> t{"a b c a b c", "x y z"};
    // {a b c, b c a, c a b} and {x y z}: every n-gram is in exactly one sample.
    CHECK(ingf(t) == 1.0);
}

TEST_CASE("INGF undefined and short samples") {
    std::vector<std::string> short_only{"a b", "c"};
    CHECK_THROWS_AS(ingf(short_only), MetricUndefined);
    std::vector<std::string> mixed{"a b", "a b c"};
    auto stats = ngram_stats(mixed, 3);
    CHECK(stats.short_samples == 1);
    CHECK(stats.ingf == 1.0);
    CHECK_THROWS_AS(ingf(mixed, 0), std::invalid_argument);
}

TEST_CASE("INGF matches the brute-force oracle and doubles when the dataset is duplicated") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        auto t = random_texts(rng, 1 + rng() % 20);
        for (int n : {1, 2, 3}) {
            const double expected = oracle::ingf(t, n);
            if (std::isnan(expected)) {
                CHECK_THROWS_AS(ingf(t, n), MetricUndefined);
                continue;
            }
            CHECK(std::abs(ingf(t, n) - expected) <= 1e-9);
            auto doubled = t;
            doubled.insert(doubled.end(), t.begin(), t.end());
            CHECK(std::abs(ingf(doubled, n) - 2 * expected) <= 1e-9);
            auto shuffled = t;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            CHECK(ingf(shuffled, n) == doctest::Approx(ingf(t, n)).epsilon(1e-12));
        }
    }
}

TEST_CASE("APS anchors") {
    std::vector<EmbeddingVector> same(5, unit(4, 2));
    CHECK(mean_pairwise_cosine(same) == 1.0);
    std::vector<EmbeddingVector> orth{unit(4, 0), unit(4, 1), unit(4, 2), unit(4, 3)};
    CHECK(mean_pairwise_cosine(orth) == 0.0);
    std::vector<EmbeddingVector> one{unit(4, 0)};
    CHECK_THROWS_AS(mean_pairwise_cosine(one), MetricUndefined);
}

TEST_CASE("APS through the gateway matches the ordered-pair oracle") {
    auto gw = stubs::mock_gateway();
    MockProvider mock;
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        auto t = random_texts(rng, 2 + rng() % 29);
        const double expected = oracle::aps(mock.embed(t));
        const double got = aps(t, *gw);
        CHECK(std::abs(got - expected) <= 1e-9);
        std::shuffle(t.begin(), t.end(), rng);
        CHECK(std::abs(aps(t, *gw) - expected) <= 1e-9);
    }
}

TEST_CASE("identical texts have APS exactly 1 and INGF equal to the sample count") {
    auto gw = stubs::mock_gateway();
    std::vector<std::string> t(7, "the system shall encrypt stored backups");
    CHECK(aps(t, *gw) == 1.0);
    CHECK(ingf(t) == 7.0);
}

TEST_CASE("report marks undefined metrics instead of failing") {
    auto gw = stubs::mock_gateway();
    std::vector<std::string> t{"hi"};
    auto r = diversity_report(t, *gw);
    CHECK(r.ingf_undefined());
    CHECK(r.aps_undefined());
    auto j = r.to_json();
    CHECK(j["ingf"].is_null());
    CHECK(j["aps"].is_null());
    CHECK(j["embedding_provider_id"] == "mock");

    std::vector<std::string> ok{"a b c", "d e f"};
    auto r2 = diversity_report(ok, *gw);
    CHECK(r2.ingf == 1.0);
    CHECK(r2.aps.has_value());
    CHECK(r2.n_unique_ngrams == 2);
}

}  // TEST_SUITE
