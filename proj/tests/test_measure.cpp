#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>

#include "sparsejac/measure.hpp"
#include "sparsejac/model.hpp"
#include "sparsejac/spectra.hpp"

using namespace sparsejac;
using namespace sparsejac::measure;

namespace {

AtomicMeasure two_point() {
    AtomicMeasure mu;
    mu.atoms = {-1.0, 1.0};
    mu.weights = {0.5, 0.5};
    return mu;
}

AtomicMeasure random_measure(std::mt19937_64& gen, int n) {
    std::uniform_real_distribution<double> pos(-2.0, 2.0), wt(0.1, 1.0);
    std::vector<double> atoms(n), weights(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        atoms[i] = pos(gen);
        weights[i] = wt(gen);
        total += weights[i];
    }
    for (double& w : weights) w /= total;
    return AtomicMeasure::from_unsorted(std::move(atoms), std::move(weights));
}

} // namespace

TEST_CASE("from_unsorted sorts and merges") {
    auto mu = AtomicMeasure::from_unsorted({1.0, -1.0, 1.0 + 1e-15}, {0.2, 0.3, 0.5});
    REQUIRE(mu.size() == 2);
    CHECK(mu.atoms[0] == -1.0);
    CHECK(mu.weights[1] == doctest::Approx(0.7));
    CHECK(mu.total_mass() == doctest::Approx(1.0));
}

TEST_CASE("fs_transform") {
    AtomicMeasure delta0;
    delta0.atoms = {0.0};
    delta0.weights = {1.0};
    CHECK(std::abs(fs_transform(delta0, 3.7) - std::complex<double>(1.0, 0.0)) < 1e-15);

    auto mu = two_point();
    for (double t : {0.0, 0.5, 2.0, 17.0})
        CHECK(std::abs(fs_transform(mu, t) - std::complex<double>(std::cos(t), 0.0)) < 1e-14);

    std::mt19937_64 gen(3);
    auto r = random_measure(gen, 57);
    CHECK(std::abs(fs_transform(r, 0.0).real() - r.total_mass()) < 1e-12);
}

TEST_CASE("time_average closed form") {
    AtomicMeasure delta;
    delta.atoms = {0.4};
    delta.weights = {0.8};
    CHECK(time_average(delta, 7.0) == doctest::Approx(0.64 * 7.0).epsilon(1e-14));

    auto mu = two_point();
    for (double T : {1.0, 5.0, 20.0})
        CHECK(time_average(mu, T) ==
              doctest::Approx(T / 2.0 + std::sin(2.0 * T) / 4.0).epsilon(1e-12));
}

TEST_CASE("time_average matches direct quadrature on random measures") {
    std::mt19937_64 gen(8);
    for (int rep = 0; rep < 10; ++rep) {
        auto mu = random_measure(gen, 12 + rep);
        double T = 3.0 + rep;
        int steps = 200000;
        double acc = 0.0;
        for (int i = 0; i < steps; ++i) {
            double t = T * (i + 0.5) / steps;
            acc += std::norm(fs_transform(mu, t)) * (T / steps);
        }
        CHECK(time_average(mu, T) == doctest::Approx(acc).epsilon(1e-6));
    }
}

TEST_CASE("Cauchy-Schwarz bounds on I(T)/T") {
    std::mt19937_64 gen(21);
    auto mu = random_measure(gen, 40);
    double sw2 = 0.0;
    for (double w : mu.weights) sw2 += w * w;
    for (double T : {0.5, 3.0, 50.0}) {
        double ratio = time_average(mu, T) / T;
        CHECK(ratio >= sw2 - 1e-12);
        CHECK(ratio <= mu.total_mass() * mu.total_mass() + 1e-12);
    }
}

TEST_CASE("Wiener limit") {
    std::mt19937_64 gen(5);
    auto mu = random_measure(gen, 100);
    double sw2 = 0.0;
    for (double w : mu.weights) sw2 += w * w;
    double min_gap = 1e300;
    for (std::size_t k = 1; k < mu.size(); ++k)
        min_gap = std::min(min_gap, mu.atoms[k] - mu.atoms[k - 1]);
    double T = 100.0 / min_gap;
    CHECK(std::abs(time_average(mu, T) / T - sw2) < 1e-3);
}

TEST_CASE("decay_fit") {
    AtomicMeasure delta;
    delta.atoms = {0.3};
    delta.weights = {1.0};
    std::vector<double> grid{2, 4, 8, 16, 32};
    auto fit = decay_fit(delta, grid);
    CHECK(fit.exponent_hat == doctest::Approx(1.0).epsilon(1e-10));

    // free-chain spectral measure: transform decays, I(T) flattens
    sparsejac::spectra::TridiagonalMatrix T;
    T.diag.assign(2048, 0.0);
    T.offdiag.assign(2047, 1.0);
    auto mu = sparsejac::spectra::spectral_measure(T, 1e-10);
    auto win = restrict(mu, -1.3, -1.1);
    double heis = heisenberg_time(win);
    std::vector<double> g;
    for (double t = 16.0; t <= heis / 10.0; t *= 2.0) g.push_back(t);
    REQUIRE(g.size() >= 5);
    auto f2 = decay_fit(win, g);
    CHECK(f2.exponent_hat < 0.1);

    CHECK_THROWS_AS(decay_fit(delta, std::vector<double>{1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(decay_fit(delta, std::vector<double>{0.1, 2, 4, 8, 16}),
                    std::invalid_argument);
}

TEST_CASE("restrict and scale") {
    auto mu = two_point();
    auto same = restrict(mu, -5.0, 5.0);
    CHECK(same.size() == 2);
    auto none = restrict(mu, 3.0, 4.0);
    CHECK(none.size() == 0);
    CHECK(none.total_mass() == 0.0);

    sparsejac::spectra::TridiagonalMatrix T;
    T.diag.assign(3, 0.0);
    T.offdiag.assign(2, 1.0);
    auto free3 = sparsejac::spectra::spectral_measure(T, 1e-12);
    auto mid = restrict(free3, -1.0, 1.0);
    REQUIRE(mid.size() == 1);
    CHECK(mid.atoms[0] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(mid.weights[0] == doctest::Approx(0.5).epsilon(1e-10));

    auto half = scale(mu, 0.5);
    CHECK(half.atoms[0] == -0.5);
    CHECK(half.atoms[1] == 0.5);
    auto twice = scale(scale(mu, 0.8), 0.5);
    auto once = scale(mu, 0.4);
    CHECK(twice.atoms[0] == doctest::Approx(once.atoms[0]).epsilon(1e-15));
    CHECK_THROWS_AS(scale(mu, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(scale(mu, 1.5), std::invalid_argument);
}

TEST_CASE("convolution") {
    AtomicMeasure a, b;
    a.atoms = {1.0};
    a.weights = {1.0};
    b.atoms = {0.5};
    b.weights = {1.0};
    auto c = convolve(a, b);
    REQUIRE(c.measure.size() == 1);
    CHECK(c.measure.atoms[0] == doctest::Approx(1.5));
    CHECK(c.measure.weights[0] == doctest::Approx(1.0));

    auto mu = two_point();
    auto sq = convolve(mu, mu);
    REQUIRE(sq.measure.size() == 3);
    CHECK(sq.measure.atoms[0] == doctest::Approx(-2.0));
    CHECK(sq.measure.weights[0] == doctest::Approx(0.25));
    CHECK(sq.measure.weights[1] == doctest::Approx(0.5));
    CHECK(sq.measure.weights[2] == doctest::Approx(0.25));
    CHECK(sq.measure.total_mass() == doctest::Approx(1.0).epsilon(1e-12));

    // exact p.p. * p.p. atom arithmetic through kronecker_measure
    for (double theta : {0.25, 0.7, 1.0}) {
        auto k = kronecker_measure(a, b, theta);
        REQUIRE(k.measure.size() == 1);
        CHECK(k.measure.atoms[0] == doctest::Approx(1.0 + theta * 0.5).epsilon(1e-14));
    }
}

TEST_CASE("transform of convolution = product of transforms") {
    std::mt19937_64 gen(13);
    auto m1 = random_measure(gen, 23);
    auto m2 = random_measure(gen, 31);
    auto c = convolve(m1, m2);
    for (double t : {0.3, 1.7, 9.2}) {
        auto lhs = fs_transform(c.measure, t);
        auto rhs = fs_transform(m1, t) * fs_transform(m2, t);
        CHECK(std::abs(lhs - rhs) < 1e-10);
    }
}

TEST_CASE("l2_criterion") {
    AtomicMeasure d0;
    d0.atoms = {0.0};
    d0.weights = {1.0};
    std::vector<double> grid{1, 2, 4, 8, 16, 32};
    auto pp = l2_criterion(d0, d0, 0.5, grid);
    CHECK(pp.tail_slope == doctest::Approx(1.0).epsilon(1e-6));

    // free * free is a.c.: the product integral saturates
    sparsejac::spectra::TridiagonalMatrix T;
    T.diag.assign(1024, 0.0);
    T.offdiag.assign(1023, 1.0);
    auto mu = sparsejac::spectra::spectral_measure(T, 1e-10);
    std::vector<double> g;
    double cap = std::min(heisenberg_time(mu), heisenberg_time(mu) / 0.7071) / 10.0;
    for (double t = 1.0; t <= cap; t *= 2.0) g.push_back(t);
    auto ac = l2_criterion(mu, mu, 0.7071, g);
    CHECK(ac.tail_slope < 0.1);
}

TEST_CASE("histograms") {
    // uniform synthetic comb: flat density, stability improves with atoms
    auto comb = [](int n) {
        std::vector<double> a(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n), 1.0 / n);
        for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = -1.0 + 2.0 * (i + 0.5) / n;
        return AtomicMeasure::from_unsorted(std::move(a), std::move(w));
    };
    auto coarse = histogram_density(comb(512), 16);
    auto fine = histogram_density(comb(8192), 16);
    CHECK(fine.stability_score < coarse.stability_score + 1e-12);
    CHECK(fine.stability_score < 0.05);

    AtomicMeasure d;
    d.atoms = {0.25};
    d.weights = {1.0};
    auto single = histogram_density(d, 16);
    CHECK(single.stability_score >= 0.9);

    // streaming convolution histogram equals direct pair binning
    std::mt19937_64 gen(31);
    auto m1 = random_measure(gen, 64);
    auto m2 = random_measure(gen, 64);
    auto streamed = convolution_histogram(m1, m2, 0.6, 32, -1.5, 1.5);
    std::vector<double> expect(32, 0.0);
    for (std::size_t k = 0; k < m1.size(); ++k)
        for (std::size_t l = 0; l < m2.size(); ++l) {
            double x = m1.atoms[k] + 0.6 * m2.atoms[l];
            if (x < -1.5 || x > 1.5) continue;
            int b = std::min(31, static_cast<int>((x + 1.5) / 3.0 * 32));
            expect[static_cast<std::size_t>(b)] += m1.weights[k] * m2.weights[l];
        }
    REQUIRE(streamed.density.size() == 32);
    double bin_w = 3.0 / 32.0;
    for (std::size_t i = 0; i < 32; ++i)
        CHECK(streamed.density[i] == doctest::Approx(expect[i] / bin_w).epsilon(1e-9));
}

TEST_CASE("free kronecker support bound") {
    sparsejac::spectra::TridiagonalMatrix T;
    T.diag.assign(80, 0.0);
    T.offdiag.assign(79, 1.0);
    auto mu = sparsejac::spectra::spectral_measure(T, 1e-10);
    auto conv = kronecker_measure(mu, mu, 1.0);
    CHECK(conv.measure.atoms.front() >= -4.0 - 1e-9);
    CHECK(conv.measure.atoms.back() <= 4.0 + 1e-9);
    CHECK(conv.measure.atoms.back() > 3.95);  // approaches 2(1+theta)
}

TEST_CASE("heisenberg time") {
    auto mu = two_point();
    CHECK(heisenberg_time(mu) == doctest::Approx(2.0 * std::numbers::pi / 2.0));
}
