// Diagonal-covariance GMM estimation (EM) and maximum-likelihood scoring.
// All density arithmetic stays in the log domain; mixture sums use
// log-sum-exp so high-dimensional components cannot underflow.

#include "voxid/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "voxid/vq.hpp"

namespace voxid {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kStarvationFraction = 1e-6;

void check_model(const GmmModel& model) {
    if (model.m() == 0) throw std::invalid_argument("model has no components");
    if (model.means.rows() != model.m() || model.variances.rows() != model.m() ||
        model.means.dim() != model.variances.dim())
        throw std::invalid_argument("inconsistent model shapes");
}

// Per-dimension floor: max(1e-4 * global variance of the data, 1e-8).
std::vector<double> variance_floor(const FeatureMatrix& x) {
    const std::size_t t = x.rows(), dim = x.dim();
    std::vector<double> mean(dim, 0.0), var(dim, 0.0);
    for (std::size_t i = 0; i < t; ++i) {
        const auto row = x.row(i);
        for (std::size_t d = 0; d < dim; ++d) mean[d] += row[d];
    }
    for (double& v : mean) v /= static_cast<double>(t);
    for (std::size_t i = 0; i < t; ++i) {
        const auto row = x.row(i);
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = row[d] - mean[d];
            var[d] += diff * diff;
        }
    }
    std::vector<double> floor(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        var[d] /= static_cast<double>(t);
        floor[d] = std::max(1e-4 * var[d], 1e-8);
    }
    return floor;
}

std::vector<double> global_variance(const FeatureMatrix& x) {
    const std::size_t t = x.rows(), dim = x.dim();
    std::vector<double> mean(dim, 0.0), var(dim, 0.0);
    for (std::size_t i = 0; i < t; ++i) {
        const auto row = x.row(i);
        for (std::size_t d = 0; d < dim; ++d) mean[d] += row[d];
    }
    for (double& v : mean) v /= static_cast<double>(t);
    for (std::size_t i = 0; i < t; ++i) {
        const auto row = x.row(i);
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = row[d] - mean[d];
            var[d] += diff * diff;
        }
    }
    for (double& v : var) v /= static_cast<double>(t);
    return var;
}

// log sum_i w_i g_i for one frame; scratch receives the per-component joint
// log densities log w_i + log g_i.
double frame_log_density(std::span<const double> frame, const GmmModel& model,
                         std::vector<double>& scratch) {
    const std::size_t m = model.m();
    scratch.resize(m);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        const double lw = model.weights[i] > 0.0
                              ? std::log(model.weights[i])
                              : -std::numeric_limits<double>::infinity();
        scratch[i] = lw + log_gaussian(frame, model.means.row(i), model.variances.row(i));
        top = std::max(top, scratch[i]);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += std::exp(scratch[i] - top);
    return top + std::log(acc);
}

}  // namespace

double log_gaussian(std::span<const double> x, std::span<const double> mu,
                    std::span<const double> var) {
    if (x.size() != mu.size() || x.size() != var.size())
        throw std::invalid_argument("dimension mismatch");
    double log_det = 0.0, maha = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        if (!(var[d] > 0.0)) throw std::invalid_argument("non-positive variance");
        log_det += std::log(var[d]);
        const double diff = x[d] - mu[d];
        maha += diff * diff / var[d];
    }
    return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + log_det + maha);
}

double gmm_log_likelihood(const FeatureMatrix& x, const GmmModel& model) {
    check_model(model);
    if (x.empty()) throw std::invalid_argument("empty feature matrix");
    if (x.dim() != model.dim())
        throw std::invalid_argument("feature/model dimension mismatch");
    std::vector<double> scratch;
    double total = 0.0;
    for (std::size_t t = 0; t < x.rows(); ++t)
        total += frame_log_density(x.row(t), model, scratch);
    return total / static_cast<double>(x.rows());
}

std::pair<Responsibilities, double> e_step(const FeatureMatrix& x,
                                           const GmmModel& model) {
    check_model(model);
    if (x.empty()) throw std::invalid_argument("empty feature matrix");
    if (x.dim() != model.dim())
        throw std::invalid_argument("feature/model dimension mismatch");

    Responsibilities gamma;
    gamma.frames = x.rows();
    gamma.components = model.m();
    gamma.data.resize(gamma.frames * gamma.components);

    std::vector<double> scratch;
    double total = 0.0;
    for (std::size_t t = 0; t < x.rows(); ++t) {
        const double denom = frame_log_density(x.row(t), model, scratch);
        total += denom;
        for (std::size_t i = 0; i < gamma.components; ++i)
            gamma.at(t, i) = std::exp(scratch[i] - denom);
    }
    return {std::move(gamma), total / static_cast<double>(x.rows())};
}

GmmModel m_step(const FeatureMatrix& x, const Responsibilities& gamma,
                const GmmModel* current) {
    const std::size_t t = x.rows(), dim = x.dim(), m = gamma.components;
    if (t == 0 || gamma.frames != t)
        throw std::invalid_argument("responsibilities do not match the data");

    const std::vector<double> floor = variance_floor(x);

    std::vector<double> occupancy(m, 0.0);
    for (std::size_t f = 0; f < t; ++f)
        for (std::size_t i = 0; i < m; ++i) occupancy[i] += gamma.at(f, i);

    GmmModel out;
    out.weights.assign(m, 0.0);
    out.means = FeatureMatrix(m, dim);
    out.variances = FeatureMatrix(m, dim);

    std::vector<std::size_t> starved;
    for (std::size_t i = 0; i < m; ++i) {
        if (occupancy[i] < kStarvationFraction * static_cast<double>(t)) {
            starved.push_back(i);
            continue;
        }
        out.weights[i] = occupancy[i] / static_cast<double>(t);
        auto mu = out.means.row(i);
        for (std::size_t f = 0; f < t; ++f) {
            const double g = gamma.at(f, i);
            const auto row = x.row(f);
            for (std::size_t d = 0; d < dim; ++d) mu[d] += g * row[d];
        }
        for (std::size_t d = 0; d < dim; ++d) mu[d] /= occupancy[i];
        auto var = out.variances.row(i);
        for (std::size_t f = 0; f < t; ++f) {
            const double g = gamma.at(f, i);
            const auto row = x.row(f);
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = row[d] - mu[d];
                var[d] += g * diff * diff;
            }
        }
        for (std::size_t d = 0; d < dim; ++d)
            var[d] = std::max(var[d] / occupancy[i], floor[d]);
    }

    if (!starved.empty()) {
        // Re-seed each starved component on the frame the reference model
        // explains worst; the reference is the model that produced gamma, or
        // the freshly updated healthy components when it is not available.
        GmmModel probe;
        if (current) {
            probe = *current;
        } else {
            for (std::size_t i = 0; i < m; ++i) {
                if (out.weights[i] <= 0.0) continue;
                probe.weights.push_back(out.weights[i]);
                probe.means.append_row(out.means.row(i));
                probe.variances.append_row(out.variances.row(i));
            }
            double sum = 0.0;
            for (double w : probe.weights) sum += w;
            for (double& w : probe.weights) w /= sum;
        }
        const std::vector<double> gvar = global_variance(x);
        std::vector<double> gvar_floored(dim);
        for (std::size_t d = 0; d < dim; ++d)
            gvar_floored[d] = std::max(gvar[d], floor[d]);

        std::vector<double> scratch;
        std::vector<bool> taken(t, false);
        for (const std::size_t i : starved) {
            std::size_t worst = 0;
            double worst_ll = std::numeric_limits<double>::infinity();
            for (std::size_t f = 0; f < t; ++f) {
                if (taken[f]) continue;
                const double ll = frame_log_density(x.row(f), probe, scratch);
                if (ll < worst_ll) {
                    worst_ll = ll;
                    worst = f;
                }
            }
            taken[worst] = true;
            const auto src = x.row(worst);
            std::copy(src.begin(), src.end(), out.means.row(i).begin());
            std::copy(gvar_floored.begin(), gvar_floored.end(),
                      out.variances.row(i).begin());
            out.weights[i] = 1.0 / static_cast<double>(m);
        }
    }

    double wsum = 0.0;
    for (double w : out.weights) wsum += w;
    for (double& w : out.weights) w /= wsum;
    return out;
}

std::pair<GmmModel, EmTrace> em_fit(const FeatureMatrix& x, std::size_t m,
                                    std::uint64_t seed, int max_iter, double tol) {
    const std::size_t t = x.rows(), dim = x.dim();
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (t < m)
        throw std::invalid_argument("not enough frames (" + std::to_string(t) +
                                    ") for " + std::to_string(m) + " components");
    if (!x.all_finite())
        throw std::invalid_argument("non-finite value in training features");

    const std::vector<double> floor = variance_floor(x);

    GmmModel model;
    model.weights.assign(m, 0.0);
    model.means = FeatureMatrix(m, dim);
    model.variances = FeatureMatrix(m, dim);
    {
        const Codebook book = kmeans_fit(x, m, seed);
        model.means = book.centroids;
        std::vector<std::size_t> counts(m, 0);
        std::vector<std::size_t> assign(t);
        for (std::size_t f = 0; f < t; ++f) {
            std::size_t best = 0;
            double best_sq = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < m; ++j) {
                double acc = 0.0;
                const auto c = model.means.row(j);
                const auto row = x.row(f);
                for (std::size_t d = 0; d < dim; ++d) {
                    const double diff = row[d] - c[d];
                    acc += diff * diff;
                }
                if (acc < best_sq) {
                    best_sq = acc;
                    best = j;
                }
            }
            assign[f] = best;
            ++counts[best];
        }
        for (std::size_t f = 0; f < t; ++f) {
            const auto row = x.row(f);
            const auto c = model.means.row(assign[f]);
            auto var = model.variances.row(assign[f]);
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = row[d] - c[d];
                var[d] += diff * diff;
            }
        }
        const std::vector<double> gvar = global_variance(x);
        for (std::size_t j = 0; j < m; ++j) {
            auto var = model.variances.row(j);
            if (counts[j] == 0) {
                for (std::size_t d = 0; d < dim; ++d)
                    var[d] = std::max(gvar[d], floor[d]);
                model.weights[j] = 1.0 / static_cast<double>(t);
            } else {
                for (std::size_t d = 0; d < dim; ++d)
                    var[d] = std::max(var[d] / static_cast<double>(counts[j]), floor[d]);
                model.weights[j] =
                    static_cast<double>(counts[j]) / static_cast<double>(t);
            }
        }
        double wsum = 0.0;
        for (double w : model.weights) wsum += w;
        for (double& w : model.weights) w /= wsum;
    }

    EmTrace trace;
    auto [gamma, ll] = e_step(x, model);
    trace.log_likelihood.push_back(ll);
    for (int iter = 0; iter < max_iter; ++iter) {
        model = m_step(x, gamma, &model);
        auto [next_gamma, next_ll] = e_step(x, model);
        trace.log_likelihood.push_back(next_ll);
        trace.iterations_run = iter + 1;
        const double denom = std::max(std::abs(next_ll), 1e-12);
        if (std::abs(next_ll - ll) / denom < tol) {
            trace.converged = true;
            break;
        }
        gamma = std::move(next_gamma);
        ll = next_ll;
    }
    return {std::move(model), std::move(trace)};
}

std::vector<std::pair<std::string, double>> gmm_identify(
    const FeatureMatrix& x, const std::map<std::string, GmmModel>& models) {
    if (models.empty()) throw std::invalid_argument("no models registered");
    std::vector<std::pair<std::string, double>> scores;
    scores.reserve(models.size());
    for (const auto& [id, model] : models)
        scores.emplace_back(id, gmm_log_likelihood(x, model));
    std::stable_sort(scores.begin(), scores.end(),
                     [](const auto& a, const auto& b) {
                         if (a.second != b.second) return a.second > b.second;
                         return a.first < b.first;
                     });
    return scores;
}

}  // namespace voxid
