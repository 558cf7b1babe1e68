#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "voxid/feature_matrix.hpp"

namespace voxid {

// One speaker's VQ model: K centroids over the feature space.
struct Codebook {
    FeatureMatrix centroids;       // K x D
    std::size_t train_frames = 0;  // frames the codebook was fitted on

    std::size_t k() const { return centroids.rows(); }
    std::size_t dim() const { return centroids.dim(); }
};

struct VqScore {
    std::string speaker_id;
    double distortion = 0.0;
};

struct KmeansTrace {
    // Mean within-cluster squared distance, recorded after every assignment.
    std::vector<double> mean_sq_distortion;
    int iterations_run = 0;
    bool converged = false;
};

// Lloyd's algorithm with k-means++ seeding driven by the pinned PRNG (see
// rng.hpp). Assignment ties go to the lowest centroid index; an empty cluster
// is repaired by moving its centroid to the point farthest from it (at most
// once per cluster per iteration). Stops when assignments no longer change or
// after max_iter updates.
Codebook kmeans_fit(const FeatureMatrix& x, std::size_t k, std::uint64_t seed,
                    int max_iter = 100, KmeansTrace* trace = nullptr);

// Average over frames of the Euclidean distance to the nearest centroid.
double quantization_distortion(const FeatureMatrix& x, const Codebook& r);

// One score per speaker, ascending distortion; ties break on speaker id. The
// first entry is the identification decision.
std::vector<VqScore> vq_identify(const FeatureMatrix& x,
                                 const std::map<std::string, Codebook>& codebooks);

}  // namespace voxid
