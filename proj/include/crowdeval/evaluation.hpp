#pragma once

#include "crowdeval/metrics.hpp"
#include "crowdeval/scenario.hpp"
#include "crowdeval/simulation.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowdeval {

/// Metrics normalized by the reference run; density is carried through as is.
struct PrimeBundle {
    double t_g_prime = 0.0;
    double t_bar_prime = 0.0;
    double s_bar_prime = 0.0;
    double w_bar_prime = 0.0;
    double d_bar = 0.0;
};

struct EvaluationResult {
    PrimeBundle primes;
    double phi = 0.0;
    double xi = 0.0;
};

class DegenerateReferenceError : public std::invalid_argument {
public:
    DegenerateReferenceError() : std::invalid_argument("degenerate reference") {}
};

/// t_g / t_ar, t_bar / t_ar, exp(s_ar / s_bar), w_bar / hypotenuse.
PrimeBundle prime_values(const MetricsBundle& metrics, const ReferenceResult& ref, const Environment& env);

/// count / sum(1 / x). Throws std::invalid_argument unless every input is finite and positive.
template <typename Derived>
typename Derived::Scalar harmonic_mean(const Eigen::DenseBase<Derived>& values) {
    using Scalar = typename Derived::Scalar;
    const auto& v = values.derived().array();
    if (v.size() == 0 || !(v > Scalar(0)).all() || !v.isFinite().all()) {
        throw std::invalid_argument("harmonic mean needs positive finite inputs");
    }
    return Scalar(v.size()) / v.inverse().sum();
}

/// Five-term harmonic mean over time, density, speed and distance. Lower is better.
double phi(const PrimeBundle& primes);
/// Four-term harmonic mean without the distance term.
double xi(const PrimeBundle& primes);

EvaluationResult evaluate(const MetricsBundle& metrics, const ReferenceResult& ref, const Environment& env);

/// One simulated run of one configuration.
struct RunRecord {
    int run = 0;
    std::uint64_t seed = 0;
    MetricsBundle metrics;
    ReferenceResult reference;
    PrimeBundle primes;
    std::optional<double> phi;
    std::optional<double> xi;
};

struct Stat {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation, 0 for a single run
};

/// Mean and sample deviation of every per-run quantity. phi/xi appear only when every record
/// carries them.
struct RunAggregate {
    std::string config_id;
    int runs = 0;
    std::map<std::string, Stat> stats;

    bool has(const std::string& key) const { return stats.count(key) != 0; }
    const Stat& at(const std::string& key) const;
};

/// Ordered keys used for aggregates, manifests and reports.
const std::vector<std::string>& metric_keys();
const std::vector<std::string>& reference_keys();
const std::vector<std::string>& prime_keys();

/// Named view of a record: metrics, reference, primes, and phi/xi when present.
std::vector<std::pair<std::string, double>> record_values(const RunRecord& record);

Stat mean_and_std(std::span<const double> values);

/// Throws std::invalid_argument on an empty list.
RunAggregate aggregate_runs(const std::string& config_id, std::span<const RunRecord> records);

enum class RankMetric { Phi, Xi };
const char* to_string(RankMetric metric);

struct RankEntry {
    std::string config_id;
    double mean = 0.0;
};

class NotComparableError : public std::runtime_error {
public:
    NotComparableError() : std::runtime_error("configurations not comparable; phi/xi undefined") {}
};

/// Ascending by the metric's mean; means within 1e-9 fall back to id order.
std::vector<RankEntry> rank_configurations(std::span<const RunAggregate> aggregates, RankMetric metric, bool comparable);

}  // namespace crowdeval
