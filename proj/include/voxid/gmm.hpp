#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "voxid/feature_matrix.hpp"

namespace voxid {

// Diagonal-covariance Gaussian mixture: M weights, M mean vectors and M
// per-dimension variance vectors.
struct GmmModel {
    std::vector<double> weights;  // M, positive, sums to 1
    FeatureMatrix means;          // M x D
    FeatureMatrix variances;      // M x D, every entry >= the variance floor

    std::size_t m() const { return weights.size(); }
    std::size_t dim() const { return means.dim(); }

    bool operator==(const GmmModel&) const = default;
};

struct EmTrace {
    // Average log-likelihood of the model entering each iteration, plus the
    // final model; non-decreasing up to float slack.
    std::vector<double> log_likelihood;
    int iterations_run = 0;
    bool converged = false;
};

// T x M matrix of posteriors; each row sums to 1.
struct Responsibilities {
    std::size_t frames = 0;
    std::size_t components = 0;
    std::vector<double> data;  // row-major

    double at(std::size_t t, std::size_t i) const { return data[t * components + i]; }
    double& at(std::size_t t, std::size_t i) { return data[t * components + i]; }
};

// log N(x; mu, diag(var)) =
//   -(D/2) log(2 pi) - (1/2) sum log var_d - (1/2) sum (x_d - mu_d)^2 / var_d
double log_gaussian(std::span<const double> x, std::span<const double> mu,
                    std::span<const double> var);

// Per-frame average of log sum_i w_i N(x_t; mu_i, var_i), with the mixture sum
// taken by log-sum-exp. Averaging makes scores comparable across lengths.
double gmm_log_likelihood(const FeatureMatrix& x, const GmmModel& model);

// Posteriors gamma_{t,i} computed in the log domain, plus the same average
// log-likelihood gmm_log_likelihood returns.
std::pair<Responsibilities, double> e_step(const FeatureMatrix& x,
                                           const GmmModel& model);

// Maximum-likelihood re-estimation: N_i = sum_t gamma, w_i = N_i / T,
// mu_i = weighted mean, var_i = weighted variance floored at
// max(1e-4 * global variance, 1e-8). A starved component (N_i < 1e-6 * T) is
// moved to the frame scoring lowest under `current` (the model that produced
// gamma), its variance reset to the global variance and its weight to 1/M.
GmmModel m_step(const FeatureMatrix& x, const Responsibilities& gamma,
                const GmmModel* current = nullptr);

// EM from a k-means start (means = centroids, variances = per-cluster
// variances, weights = occupancies). Runs until the relative change in
// average log-likelihood drops below tol or max_iter updates have been made.
std::pair<GmmModel, EmTrace> em_fit(const FeatureMatrix& x, std::size_t m,
                                    std::uint64_t seed, int max_iter = 12,
                                    double tol = 1e-5);

// One (speaker, average log-likelihood) per model, best first; ties break on
// speaker id.
std::vector<std::pair<std::string, double>> gmm_identify(
    const FeatureMatrix& x, const std::map<std::string, GmmModel>& models);

}  // namespace voxid
