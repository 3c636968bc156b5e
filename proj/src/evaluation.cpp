#include "crowdeval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace crowdeval {

PrimeBundle prime_values(const MetricsBundle& metrics, const ReferenceResult& ref, const Environment& env) {
    auto positive = [](double v) { return std::isfinite(v) && v > 0; };
    if (!positive(ref.t_ar) || !positive(ref.s_ar) || !positive(ref.w_ar)) throw DegenerateReferenceError();
    if (!positive(metrics.t_g) || !positive(metrics.t_bar) || !positive(metrics.s_bar) || !positive(metrics.w_bar) ||
        !positive(metrics.d_bar)) {
        throw std::invalid_argument("metrics must be positive");
    }
    const double a_s = env.hypotenuse();
    if (!positive(a_s)) throw std::invalid_argument("environment hypotenuse must be positive");

    PrimeBundle p;
    p.t_g_prime = metrics.t_g / ref.t_ar;
    p.t_bar_prime = metrics.t_bar / ref.t_ar;
    p.s_bar_prime = std::exp(ref.s_ar / metrics.s_bar);
    p.w_bar_prime = metrics.w_bar / a_s;
    p.d_bar = metrics.d_bar;
    return p;
}

double phi(const PrimeBundle& p) {
    return harmonic_mean(Eigen::Matrix<double, 5, 1>(p.t_g_prime, p.t_bar_prime, p.d_bar, p.s_bar_prime, p.w_bar_prime));
}

double xi(const PrimeBundle& p) {
    return harmonic_mean(Eigen::Vector4d(p.t_g_prime, p.t_bar_prime, p.d_bar, p.s_bar_prime));
}

EvaluationResult evaluate(const MetricsBundle& metrics, const ReferenceResult& ref, const Environment& env) {
    EvaluationResult r;
    r.primes = prime_values(metrics, ref, env);
    r.phi = phi(r.primes);
    r.xi = xi(r.primes);
    return r;
}

const Stat& RunAggregate::at(const std::string& key) const {
    const auto it = stats.find(key);
    if (it == stats.end()) throw std::out_of_range("aggregate '" + config_id + "' has no '" + key + "'");
    return it->second;
}

const std::vector<std::string>& metric_keys() {
    static const std::vector<std::string> keys{"t_g", "t_bar", "d_bar", "s_bar", "w_bar"};
    return keys;
}

const std::vector<std::string>& reference_keys() {
    static const std::vector<std::string> keys{"t_ar", "s_ar", "w_ar"};
    return keys;
}

const std::vector<std::string>& prime_keys() {
    static const std::vector<std::string> keys{"t_g_prime", "t_bar_prime", "s_bar_prime", "w_bar_prime"};
    return keys;
}

std::vector<std::pair<std::string, double>> record_values(const RunRecord& r) {
    std::vector<std::pair<std::string, double>> v{
        {"t_g", r.metrics.t_g},
        {"t_bar", r.metrics.t_bar},
        {"d_bar", r.metrics.d_bar},
        {"s_bar", r.metrics.s_bar},
        {"w_bar", r.metrics.w_bar},
        {"t_ar", r.reference.t_ar},
        {"s_ar", r.reference.s_ar},
        {"w_ar", r.reference.w_ar},
        {"t_g_prime", r.primes.t_g_prime},
        {"t_bar_prime", r.primes.t_bar_prime},
        {"s_bar_prime", r.primes.s_bar_prime},
        {"w_bar_prime", r.primes.w_bar_prime},
    };
    if (r.phi) v.emplace_back("phi", *r.phi);
    if (r.xi) v.emplace_back("xi", *r.xi);
    return v;
}

Stat mean_and_std(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("no values");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

RunAggregate aggregate_runs(const std::string& config_id, std::span<const RunRecord> records) {
    if (records.empty()) throw std::invalid_argument("no runs to aggregate");
    std::map<std::string, std::vector<double>> columns;
    for (const RunRecord& r : records) {
        for (const auto& [key, value] : record_values(r)) columns[key].push_back(value);
    }
    RunAggregate agg;
    agg.config_id = config_id;
    agg.runs = static_cast<int>(records.size());
    for (const auto& [key, values] : columns) {
        // A metric missing from some runs is withheld rather than averaged over a subset.
        if (values.size() != records.size()) continue;
        agg.stats.emplace(key, mean_and_std(values));
    }
    return agg;
}

const char* to_string(RankMetric metric) { return metric == RankMetric::Phi ? "phi" : "xi"; }

std::vector<RankEntry> rank_configurations(std::span<const RunAggregate> aggregates, RankMetric metric, bool comparable) {
    if (!comparable) throw NotComparableError();
    std::vector<RankEntry> ranking;
    ranking.reserve(aggregates.size());
    for (const RunAggregate& a : aggregates) ranking.push_back({a.config_id, a.at(to_string(metric)).mean});
    std::sort(ranking.begin(), ranking.end(), [](const RankEntry& a, const RankEntry& b) {
        if (std::abs(a.mean - b.mean) < 1e-9) return a.config_id < b.config_id;
        return a.mean < b.mean;
    });
    return ranking;
}

}  // namespace crowdeval
