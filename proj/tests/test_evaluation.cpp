#include "published_tables.hpp"
#include "support.hpp"

#include "crowdeval/evaluation.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace testing;

namespace {

MetricsBundle metrics(double t_g, double t_bar, double d_bar, double s_bar, double w_bar) {
    return {t_g, t_bar, d_bar, s_bar, w_bar, 90};
}

PrimeBundle primes(double tg, double tb, double d, double s, double w) { return {tg, tb, s, w, d}; }

// Written out longhand so the library's Eigen reduction is checked against plain arithmetic.
double harmonic5(const PrimeBundle& p) {
    return 5.0 / (1 / p.t_g_prime + 1 / p.t_bar_prime + 1 / p.d_bar + 1 / p.s_bar_prime + 1 / p.w_bar_prime);
}
double harmonic4(const PrimeBundle& p) {
    return 4.0 / (1 / p.t_g_prime + 1 / p.t_bar_prime + 1 / p.d_bar + 1 / p.s_bar_prime);
}

RunAggregate aggregate_with(const std::string& id, double phi_value, double xi_value) {
    RunAggregate a;
    a.config_id = id;
    a.runs = 1;
    a.stats["phi"] = {phi_value, 0};
    a.stats["xi"] = {xi_value, 0};
    return a;
}

}  // namespace

TEST_CASE("prime values") {
    const Environment env{30, 30};
    const ReferenceResult ref{32.32, 1.15, 37.16};
    const PrimeBundle p = prime_values(metrics(52.90, 40.54, 1.10, 0.89, 35.31), ref, env);
    CHECK(p.t_g_prime == doctest::Approx(52.90 / 32.32));
    CHECK(p.t_g_prime == doctest::Approx(1.63).epsilon(0.02 / 1.63));
    CHECK(p.t_bar_prime == doctest::Approx(40.54 / 32.32));
    CHECK(p.s_bar_prime == doctest::Approx(std::exp(1.15 / 0.89)));
    CHECK(p.w_bar_prime == doctest::Approx(0.8323).epsilon(1e-4));
    CHECK(p.d_bar == 1.10);

    const PrimeBundle same = prime_values(metrics(10, 10, 1, 1.15, 5), ref, env);
    CHECK(same.s_bar_prime == doctest::Approx(std::numbers::e).epsilon(1e-12));
}

TEST_CASE("prime values reject degenerate input") {
    const Environment env{30, 30};
    const MetricsBundle m = metrics(50, 40, 1.1, 0.9, 35);
    CHECK_THROWS_WITH_AS(prime_values(m, {0, 1.15, 30}, env), "degenerate reference", DegenerateReferenceError);
    CHECK_THROWS_AS(prime_values(m, {30, -1, 30}, env), DegenerateReferenceError);
    CHECK_THROWS_AS(prime_values(m, {30, 1.15, 0}, env), DegenerateReferenceError);
    CHECK_THROWS_AS(prime_values(metrics(50, 40, 1.1, 0, 35), {30, 1.15, 30}, env), std::invalid_argument);
}

TEST_CASE("phi and xi on published primes") {
    CHECK(phi(primes(1.92, 1.36, 1.14, 3.98, 0.59)) == doctest::Approx(1.2256).epsilon(1e-4));
    CHECK(phi(primes(2.37, 1.49, 1.25, 4.93, 0.29)) == doctest::Approx(0.9018).epsilon(1e-4));
    CHECK(xi(primes(1.92, 1.36, 1.14, 3.98, 1.0)) == doctest::Approx(1.6775).epsilon(1e-4));
    CHECK(xi(primes(2.57, 1.78, 1.29, 5.19, 1.0)) == doctest::Approx(2.0847).epsilon(1e-4));
    CHECK(phi(primes(1, 1, 1, 1, 1)) == doctest::Approx(1.0));
    CHECK(xi(primes(1, 1, 1, 1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("xi ignores distance") {
    CHECK(xi(primes(2, 1.5, 1.2, 4, 0.1)) == xi(primes(2, 1.5, 1.2, 4, 9.0)));
}

TEST_CASE("scores reject non-positive inputs") {
    CHECK_THROWS_AS(phi(primes(1, 1, 0, 1, 1)), std::invalid_argument);
    CHECK_THROWS_AS(phi(primes(1, 1, 1, 1, -2)), std::invalid_argument);
    CHECK_THROWS_AS(xi(primes(1, -1, 1, 1, 1)), std::invalid_argument);
    CHECK_THROWS_AS(phi(primes(1, 1, 1, INFINITY, 1)), std::invalid_argument);
    CHECK_THROWS_AS(harmonic_mean(Eigen::VectorXd()), std::invalid_argument);
}

TEST_CASE("evaluate bundles primes and both scores") {
    const EvaluationResult r = evaluate(metrics(43.93, 31.23, 1.14, 0.84, 25.13), {23.01, 1.15, 26.52}, {30, 30});
    CHECK(r.phi == doctest::Approx(harmonic5(r.primes)));
    CHECK(r.xi == doctest::Approx(harmonic4(r.primes)));
}

TEST_CASE("harmonic mean properties on random bundles") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.05, 8.0), bump(0.01, 2.0);
    for (int i = 0; i < 1000; ++i) {
        const PrimeBundle p = primes(u(rng), u(rng), u(rng), u(rng), u(rng));
        const double values[5] = {p.t_g_prime, p.t_bar_prime, p.d_bar, p.s_bar_prime, p.w_bar_prime};
        const double lo = *std::min_element(values, values + 5), hi = *std::max_element(values, values + 5);
        const double f = phi(p), x = xi(p);
        CHECK(f == doctest::Approx(harmonic5(p)));
        CHECK(x == doctest::Approx(harmonic4(p)));
        CHECK(f >= lo - 1e-12);
        CHECK(f <= hi + 1e-12);
        const double lo4 = *std::min_element(values, values + 4), hi4 = *std::max_element(values, values + 4);
        CHECK(x >= lo4 - 1e-12);
        CHECK(x <= hi4 + 1e-12);

        double PrimeBundle::*fields[5] = {&PrimeBundle::t_g_prime, &PrimeBundle::t_bar_prime, &PrimeBundle::d_bar,
                                          &PrimeBundle::s_bar_prime, &PrimeBundle::w_bar_prime};
        for (int k = 0; k < 5; ++k) {
            PrimeBundle q = p;
            q.*fields[k] += bump(rng);
            CHECK(phi(q) > f);
            if (k < 4) CHECK(xi(q) > x);
        }
    }
}

TEST_CASE("time primes are scale free") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(1, 100), scale(0.1, 10);
    for (int i = 0; i < 200; ++i) {
        const MetricsBundle m = metrics(u(rng) + 50, u(rng), 1.2, 0.9, 30);
        const ReferenceResult ref{u(rng), 1.15, 30};
        const double k = scale(rng);
        MetricsBundle ms = m;
        ms.t_g *= k;
        ms.t_bar *= k;
        const ReferenceResult refs{ref.t_ar * k, ref.s_ar, ref.w_ar};
        const PrimeBundle a = prime_values(m, ref, {30, 30}), b = prime_values(ms, refs, {30, 30});
        CHECK(a.t_g_prime == doctest::Approx(b.t_g_prime).epsilon(1e-12));
        CHECK(a.t_bar_prime == doctest::Approx(b.t_bar_prime).epsilon(1e-12));
    }
}

TEST_CASE("reconstructed scores follow the published primes") {
    // phi and xi recomputed from the printed primes and the printed density
    double worst_phi = 0, worst_xi = 0;
    for (std::size_t i = 0; i < published::kScores.size(); ++i) {
        const auto& s = published::kScores[i];
        const auto& r = published::kRaw[i];
        REQUIRE(s.id == r.id);
        const PrimeBundle p = primes(s.t_g_prime, s.t_bar_prime, r.d_bar, s.s_bar_prime, s.w_bar_prime);
        worst_phi = std::max(worst_phi, std::abs(phi(p) - s.phi));
        worst_xi = std::max(worst_xi, std::abs(xi(p) - s.xi));
    }
    CHECK(worst_phi <= 0.02);
    CHECK(worst_xi <= 0.02);
}

TEST_CASE("mean and sample deviation") {
    const double one[] = {1.7};
    CHECK(mean_and_std(one).mean == doctest::Approx(1.7));
    CHECK(mean_and_std(one).std == 0.0);
    const double two[] = {1.0, 3.0};
    CHECK(mean_and_std(two).mean == doctest::Approx(2.0));
    CHECK(mean_and_std(two).std == doctest::Approx(std::sqrt(2.0)));
    const double three[] = {2.0, 4.0, 9.0};
    CHECK(mean_and_std(three).std == doctest::Approx(std::sqrt(13.0)));
}

TEST_CASE("aggregate runs") {
    RunRecord a, b;
    a.metrics = metrics(50, 40, 1.1, 0.9, 35);
    b.metrics = metrics(52, 41, 1.2, 0.8, 36);
    a.reference = b.reference = {32, 1.15, 37};
    a.primes = prime_values(a.metrics, a.reference, {30, 30});
    b.primes = prime_values(b.metrics, b.reference, {30, 30});
    a.phi = 1.0;
    b.phi = 3.0;
    a.xi = b.xi = 1.5;
    const RunRecord both[] = {a, b};
    const RunAggregate agg = aggregate_runs("A", both);
    CHECK(agg.runs == 2);
    CHECK(agg.at("t_g").mean == doctest::Approx(51));
    CHECK(agg.at("phi").mean == doctest::Approx(2.0));
    CHECK(agg.at("phi").std == doctest::Approx(std::sqrt(2.0)));
    CHECK(agg.at("xi").std == 0.0);
    CHECK(agg.at("t_ar").std == 0.0);
    // mean of per-run primes, not the prime of mean metrics
    CHECK(agg.at("s_bar_prime").mean == doctest::Approx(0.5 * (a.primes.s_bar_prime + b.primes.s_bar_prime)));
    for (const auto& [key, stat] : agg.stats) CHECK(stat.std >= 0);

    const RunRecord single[] = {a};
    CHECK(aggregate_runs("A", single).at("xi").std == 0.0);

    // phi is withheld when any run lacks it
    RunRecord c = a;
    c.phi.reset();
    const RunRecord mixed[] = {a, c};
    CHECK_FALSE(aggregate_runs("A", mixed).has("phi"));
    CHECK_THROWS_AS(aggregate_runs("A", std::span<const RunRecord>{}), std::invalid_argument);
    CHECK_THROWS_AS(agg.at("nope"), std::out_of_range);
}

TEST_CASE("ranking") {
    const std::vector<RunAggregate> s1{aggregate_with("A", 1.32, 1.54), aggregate_with("B", 1.23, 1.68),
                                       aggregate_with("C", 1.24, 1.71)};
    const auto by_phi = rank_configurations(s1, RankMetric::Phi, true);
    REQUIRE(by_phi.size() == 3);
    CHECK(by_phi[0].config_id == "B");
    CHECK(by_phi[1].config_id == "C");
    CHECK(by_phi[2].config_id == "A");
    CHECK(by_phi[0].mean == doctest::Approx(1.23));
    const auto by_xi = rank_configurations(s1, RankMetric::Xi, true);
    CHECK(by_xi[0].config_id == "A");
    CHECK(by_xi[1].config_id == "B");
    CHECK(by_xi[2].config_id == "C");

    const std::vector<RunAggregate> tied{aggregate_with("C", 1.5, 1), aggregate_with("A", 1.5 + 1e-12, 1),
                                         aggregate_with("B", 1.4, 1)};
    const auto order = rank_configurations(tied, RankMetric::Phi, true);
    CHECK(order[0].config_id == "B");
    CHECK(order[1].config_id == "A");
    CHECK(order[2].config_id == "C");

    CHECK_THROWS_WITH_AS(rank_configurations(s1, RankMetric::Phi, false),
                         "configurations not comparable; phi/xi undefined", NotComparableError);
    CHECK(std::string(to_string(RankMetric::Phi)) == "phi");
    CHECK(std::string(to_string(RankMetric::Xi)) == "xi");
}

TEST_CASE("ranking needs the score on every aggregate") {
    std::vector<RunAggregate> v{aggregate_with("A", 1, 1), aggregate_with("B", 2, 2)};
    v[1].stats.erase("phi");
    CHECK_THROWS(rank_configurations(v, RankMetric::Phi, true));
}

TEST_CASE("seeded runs of S1-B keep phi tight") {
    const ResultsBundle& s1 = cached_results("s1.json");
    const RunAggregate& b = s1.configurations[1].aggregate;
    REQUIRE(b.config_id == "B");
    CHECK(b.runs == 10);
    CHECK(b.at("phi").std <= 0.05);
}
