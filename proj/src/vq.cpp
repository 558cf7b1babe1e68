// Codebook training (k-means++ / Lloyd) and average-distortion matching.

#include "voxid/vq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "voxid/rng.hpp"

namespace voxid {
namespace {

double sq_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        acc += diff * diff;
    }
    return acc;
}

// k-means++: first centroid uniform; each later centroid picked with
// probability proportional to the squared distance to the nearest one chosen
// so far. The scan picks the first index whose cumulative weight reaches
// r = uniform() * total, so the selection is reproducible from the seed.
std::vector<std::size_t> kmeanspp_seed_indices(const FeatureMatrix& x,
                                               std::size_t k, Rng& rng) {
    const std::size_t t = x.rows();
    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    chosen.push_back(rng.index(t));

    std::vector<double> best_sq(t, std::numeric_limits<double>::infinity());
    while (chosen.size() < k) {
        const auto last = x.row(chosen.back());
        double total = 0.0;
        for (std::size_t i = 0; i < t; ++i) {
            best_sq[i] = std::min(best_sq[i], sq_distance(x.row(i), last));
            total += best_sq[i];
        }
        std::size_t pick = 0;
        if (total <= 0.0) {
            pick = rng.index(t);  // all remaining points coincide with centroids
        } else {
            const double r = rng.uniform() * total;
            double cum = 0.0;
            std::size_t last_positive = 0;
            bool found = false;
            for (std::size_t i = 0; i < t; ++i) {
                if (best_sq[i] > 0.0) last_positive = i;
                cum += best_sq[i];
                if (cum >= r && best_sq[i] > 0.0) {
                    pick = i;
                    found = true;
                    break;
                }
            }
            if (!found) pick = last_positive;
        }
        chosen.push_back(pick);
    }
    return chosen;
}

std::size_t nearest_centroid(std::span<const double> p, const FeatureMatrix& c) {
    std::size_t best = 0;
    double best_sq = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c.rows(); ++j) {
        const double d = sq_distance(p, c.row(j));
        if (d < best_sq) {
            best_sq = d;
            best = j;
        }
    }
    return best;
}

}  // namespace

Codebook kmeans_fit(const FeatureMatrix& x, std::size_t k, std::uint64_t seed,
                    int max_iter, KmeansTrace* trace) {
    const std::size_t t = x.rows();
    const std::size_t dim = x.dim();
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (t < k)
        throw std::invalid_argument("not enough frames (" + std::to_string(t) +
                                    ") for " + std::to_string(k) + " clusters");
    if (!x.all_finite())
        throw std::invalid_argument("non-finite value in training features");

    Rng rng(seed);
    FeatureMatrix centroids(k, dim);
    {
        const auto seeds = kmeanspp_seed_indices(x, k, rng);
        for (std::size_t j = 0; j < k; ++j) {
            const auto src = x.row(seeds[j]);
            std::copy(src.begin(), src.end(), centroids.row(j).begin());
        }
    }

    KmeansTrace local_trace;
    KmeansTrace& tr = trace ? *trace : local_trace;
    tr = KmeansTrace{};

    std::vector<std::size_t> assign(t), prev_assign;
    std::vector<double> sums(k * dim);
    std::vector<std::size_t> counts(k);

    for (int iter = 0; iter < max_iter; ++iter) {
        double sq_total = 0.0;
        for (std::size_t i = 0; i < t; ++i) {
            assign[i] = nearest_centroid(x.row(i), centroids);
            sq_total += sq_distance(x.row(i), centroids.row(assign[i]));
        }
        tr.mean_sq_distortion.push_back(sq_total / static_cast<double>(t));
        tr.iterations_run = iter + 1;
        if (!prev_assign.empty() && assign == prev_assign) {
            tr.converged = true;
            break;
        }
        prev_assign = assign;

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < t; ++i) {
            const auto p = x.row(i);
            double* s = sums.data() + assign[i] * dim;
            for (std::size_t d = 0; d < dim; ++d) s[d] += p[d];
            ++counts[assign[i]];
        }
        std::vector<std::size_t> repaired;
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] > 0) {
                auto c = centroids.row(j);
                for (std::size_t d = 0; d < dim; ++d)
                    c[d] = sums[j * dim + d] / static_cast<double>(counts[j]);
            } else {
                // Move the empty cluster onto the point farthest from it,
                // skipping points already used to repair another cluster.
                std::size_t far = 0;
                double far_sq = -1.0;
                for (std::size_t i = 0; i < t; ++i) {
                    if (std::find(repaired.begin(), repaired.end(), i) != repaired.end())
                        continue;
                    const double d = sq_distance(x.row(i), centroids.row(j));
                    if (d > far_sq) {
                        far_sq = d;
                        far = i;
                    }
                }
                repaired.push_back(far);
                const auto src = x.row(far);
                std::copy(src.begin(), src.end(), centroids.row(j).begin());
            }
        }
    }

    Codebook book;
    book.centroids = std::move(centroids);
    book.train_frames = t;
    return book;
}

double quantization_distortion(const FeatureMatrix& x, const Codebook& r) {
    if (x.empty()) throw std::invalid_argument("empty feature matrix");
    if (x.dim() != r.dim())
        throw std::invalid_argument("feature/codebook dimension mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double best_sq = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < r.k(); ++j)
            best_sq = std::min(best_sq, sq_distance(x.row(i), r.centroids.row(j)));
        total += std::sqrt(best_sq);
    }
    return total / static_cast<double>(x.rows());
}

std::vector<VqScore> vq_identify(const FeatureMatrix& x,
                                 const std::map<std::string, Codebook>& codebooks) {
    if (codebooks.empty()) throw std::invalid_argument("no codebooks registered");
    std::vector<VqScore> scores;
    scores.reserve(codebooks.size());
    for (const auto& [id, book] : codebooks)
        scores.push_back({id, quantization_distortion(x, book)});
    std::stable_sort(scores.begin(), scores.end(),
                     [](const VqScore& a, const VqScore& b) {
                         if (a.distortion != b.distortion)
                             return a.distortion < b.distortion;
                         return a.speaker_id < b.speaker_id;
                     });
    return scores;
}

}  // namespace voxid
