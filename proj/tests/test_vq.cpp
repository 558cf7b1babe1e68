#include "voxid/vq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <doctest.h>

#include "test_util.hpp"
#include "voxid/rng.hpp"

using namespace voxid;
using test_util::random_features;

namespace {

FeatureMatrix rows_of(std::initializer_list<std::vector<double>> rows) {
    FeatureMatrix m;
    for (const auto& r : rows) m.append_row(r);
    return m;
}

// Independent evaluation of the average-distortion formula.
double brute_force_distortion(const FeatureMatrix& x, const Codebook& r) {
    double total = 0.0;
    for (std::size_t t = 0; t < x.rows(); ++t) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < r.k(); ++k) {
            double sq = 0.0;
            for (std::size_t d = 0; d < x.dim(); ++d) {
                const double diff = x.at(t, d) - r.centroids.at(k, d);
                sq += diff * diff;
            }
            best = std::min(best, std::sqrt(sq));
        }
        total += best;
    }
    return total / static_cast<double>(x.rows());
}

}  // namespace

TEST_CASE("kmeans_fit separates two tight clusters") {
    FeatureMatrix x;
    for (int i = 0; i < 10; ++i) x.append_row(std::vector<double>{0.0, 0.0});
    for (int i = 0; i < 10; ++i) x.append_row(std::vector<double>{10.0, 10.0});
    const Codebook book = kmeans_fit(x, 2, 42);
    REQUIRE(book.k() == 2);
    std::vector<double> first(book.centroids.row(0).begin(), book.centroids.row(0).end());
    std::vector<double> second(book.centroids.row(1).begin(), book.centroids.row(1).end());
    if (first[0] > second[0]) std::swap(first, second);
    CHECK(first == std::vector<double>{0.0, 0.0});
    CHECK(second == std::vector<double>{10.0, 10.0});
    CHECK(book.train_frames == 20);
}

TEST_CASE("kmeans_fit with k=1 returns the column mean") {
    const FeatureMatrix x = random_features(50, 4, 7);
    const Codebook book = kmeans_fit(x, 1, 9);
    std::vector<double> mean(4, 0.0);
    for (std::size_t t = 0; t < x.rows(); ++t)
        for (std::size_t d = 0; d < 4; ++d) mean[d] += x.at(t, d);
    for (double& v : mean) v /= static_cast<double>(x.rows());
    for (std::size_t d = 0; d < 4; ++d)
        CHECK(book.centroids.at(0, d) == doctest::Approx(mean[d]).epsilon(1e-12));
}

TEST_CASE("kmeans_fit with k=T lands one centroid per point") {
    const FeatureMatrix x = random_features(12, 3, 21);
    const Codebook book = kmeans_fit(x, 12, 5);
    CHECK(quantization_distortion(x, book) == 0.0);
    // every row appears among the centroids
    for (std::size_t t = 0; t < x.rows(); ++t) {
        bool found = false;
        for (std::size_t j = 0; j < book.k(); ++j) {
            bool equal = true;
            for (std::size_t d = 0; d < x.dim(); ++d)
                if (x.at(t, d) != book.centroids.at(j, d)) equal = false;
            if (equal) found = true;
        }
        CHECK(found);
    }
}

TEST_CASE("kmeans mean squared distortion is non-increasing") {
    Rng rng(1001);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t t = 20 + rng.index(200);
        const std::size_t dim = 1 + rng.index(8);
        const std::size_t k = 1 + rng.index(std::min<std::size_t>(t, 16));
        const FeatureMatrix x = random_features(t, dim, 5000 + trial);
        KmeansTrace trace;
        kmeans_fit(x, k, trial, 100, &trace);
        REQUIRE(!trace.mean_sq_distortion.empty());
        for (std::size_t i = 1; i < trace.mean_sq_distortion.size(); ++i)
            CHECK(trace.mean_sq_distortion[i] <=
                  trace.mean_sq_distortion[i - 1] + 1e-9);
    }
}

TEST_CASE("kmeans_fit survives all-identical points") {
    FeatureMatrix x;
    for (int i = 0; i < 5; ++i) x.append_row(std::vector<double>{1.0, 1.0});
    const Codebook book = kmeans_fit(x, 2, 3);
    REQUIRE(book.k() == 2);
    CHECK(book.centroids.all_finite());
    CHECK(quantization_distortion(x, book) == 0.0);
}

TEST_CASE("kmeans_fit is deterministic in the seed") {
    const FeatureMatrix x = random_features(80, 6, 33);
    const Codebook a = kmeans_fit(x, 8, 42);
    const Codebook b = kmeans_fit(x, 8, 42);
    CHECK(a.centroids == b.centroids);
}

TEST_CASE("kmeans_fit rejects bad input") {
    const FeatureMatrix x = random_features(5, 2, 1);
    CHECK_THROWS_AS(kmeans_fit(x, 6, 0), std::invalid_argument);
    CHECK_THROWS_AS(kmeans_fit(x, 0, 0), std::invalid_argument);
    FeatureMatrix bad = x;
    bad.at(2, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(kmeans_fit(bad, 2, 0), std::invalid_argument);
}

TEST_CASE("quantization_distortion hand cases") {
    const Codebook origin{rows_of({{0.0, 0.0}}), 1};
    CHECK(quantization_distortion(rows_of({{0.0, 0.0}}), origin) == 0.0);
    CHECK(quantization_distortion(rows_of({{0.0, 0.0}, {2.0, 0.0}}), origin) == 1.0);
}

TEST_CASE("quantization_distortion matches the brute-force oracle") {
    Rng rng(2002);
    for (int trial = 0; trial < 20; ++trial) {
        const FeatureMatrix x = random_features(50, 4, 900 + trial, -5.0, 5.0);
        Codebook r;
        r.centroids = random_features(8, 4, 950 + trial, -5.0, 5.0);
        const double got = quantization_distortion(x, r);
        const double want = brute_force_distortion(x, r);
        CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("distortion scales linearly with a common positive factor") {
    const FeatureMatrix x = random_features(40, 5, 4);
    Codebook r;
    r.centroids = random_features(6, 5, 8);
    const double base = quantization_distortion(x, r);

    const double c = 2.5;
    FeatureMatrix xs = x;
    for (double& v : xs.data()) v *= c;
    Codebook rs = r;
    for (double& v : rs.centroids.data()) v *= c;
    CHECK(quantization_distortion(xs, rs) == doctest::Approx(c * base).epsilon(1e-9));
}

TEST_CASE("vq_identify ranks by distortion with lexicographic ties") {
    std::map<std::string, Codebook> books;
    books["near"] = Codebook{rows_of({{0.0, 0.0}}), 1};
    books["far"] = Codebook{rows_of({{10.0, 10.0}}), 1};
    const auto scores = vq_identify(rows_of({{1.0, 1.0}}), books);
    REQUIRE(scores.size() == 2);
    CHECK(scores[0].speaker_id == "near");
    CHECK(scores[0].distortion == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(scores[1].speaker_id == "far");

    std::map<std::string, Codebook> tied;
    tied["b"] = Codebook{rows_of({{0.0, 0.0}}), 1};
    tied["a"] = Codebook{rows_of({{0.0, 0.0}}), 1};
    const auto tie_scores = vq_identify(rows_of({{3.0, 4.0}}), tied);
    CHECK(tie_scores[0].speaker_id == "a");
    CHECK(tie_scores[0].distortion == tie_scores[1].distortion);
}

TEST_CASE("self-trained frames give zero distortion and win") {
    const FeatureMatrix x = random_features(10, 3, 77);
    std::map<std::string, Codebook> books;
    books["self"] = kmeans_fit(x, 10, 1);  // k = T
    books["other"] = Codebook{random_features(4, 3, 78, 20.0, 30.0), 4};
    const auto scores = vq_identify(x, books);
    CHECK(scores[0].speaker_id == "self");
    CHECK(scores[0].distortion == 0.0);
}

TEST_CASE("winner is invariant under common positive scaling") {
    Rng rng(3003);
    const FeatureMatrix x = random_features(30, 4, 555);
    std::map<std::string, Codebook> books;
    books["a"] = Codebook{random_features(5, 4, 556), 5};
    books["b"] = Codebook{random_features(5, 4, 557), 5};
    books["c"] = Codebook{random_features(5, 4, 558), 5};
    const auto base = vq_identify(x, books);

    const double c = 7.25;
    FeatureMatrix xs = x;
    for (double& v : xs.data()) v *= c;
    std::map<std::string, Codebook> scaled;
    for (auto& [id, book] : books) {
        Codebook s = book;
        for (double& v : s.centroids.data()) v *= c;
        scaled[id] = std::move(s);
    }
    const auto after = vq_identify(xs, scaled);
    CHECK(after[0].speaker_id == base[0].speaker_id);
}

TEST_CASE("vq error paths") {
    const FeatureMatrix x = random_features(5, 3, 1);
    CHECK_THROWS_AS(vq_identify(x, {}), std::invalid_argument);
    Codebook wrong_dim;
    wrong_dim.centroids = random_features(2, 4, 2);
    CHECK_THROWS_AS(quantization_distortion(x, wrong_dim), std::invalid_argument);
    CHECK_THROWS_AS(quantization_distortion(FeatureMatrix{}, wrong_dim),
                    std::invalid_argument);
}
