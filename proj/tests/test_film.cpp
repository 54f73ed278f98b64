#include <doctest.h>

#include <random>

#include "cephforge/film.hpp"
#include "helpers.hpp"

using namespace cephforge;

namespace {

IntegralImage line(std::vector<double> g) {
    const std::size_t n = g.size();
    return {Grid2<double>(n, 1, std::move(g)), 0.5, 0.5, {}};
}

std::uint8_t one(double g, const ModifiedSigmoidParams& p = {}) { return modified_sigmoid_transform(line({g}), p).pixels(0, 0); }
std::uint8_t one_base(double g, const SigmoidParams& p = {}) { return sigmoid_transform(line({g}), p).pixels(0, 0); }

std::vector<CurveSample> samples_from(const SigmoidParams& p, const std::vector<double>& xs) {
    std::vector<CurveSample> out;
    for (double x : xs) out.push_back({x, sigmoid_curve(x, p)});
    return out;
}

}  // namespace

TEST_CASE("standard sigmoid") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(50.0) == doctest::Approx(1.0));
    CHECK(std::abs(sigmoid(-2.0) - 0.1192029) <= 1e-6);
}

TEST_CASE("sigmoid transform anchors") {
    CHECK(one_base(2.6) == 145);
    CHECK(one_base(50.0) == 250);
    CHECK(one_base(0.0) == 44);
    // closed form 40 + 210 / (1 + e^3.9)
    CHECK(sigmoid_curve(0.0, {}) == doctest::Approx(40.0 + 210.0 / (1.0 + std::exp(3.9))));
}

TEST_CASE("sigmoid transform stays inside [c1, 255 - c2] and is monotone") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 12.0);
    std::vector<double> g(2000);
    for (auto& x : g) x = u(rng);
    std::sort(g.begin(), g.end());
    const Cephalogram8 c = sigmoid_transform(line(g));
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(c.pixels(i, 0) >= 40);
        CHECK(c.pixels(i, 0) <= 250);
        if (i) CHECK(c.pixels(i, 0) >= c.pixels(i - 1, 0));
    }
}

TEST_CASE("derive_c4 for the default parameters") {
    const ModifiedSigmoidParams p;
    const double g_tau2 = 40.0 + 210.0 / (1.0 + std::exp(2.1));
    CHECK(g_tau2 == doctest::Approx(62.91).epsilon(1e-4));
    CHECK(std::abs(derive_c4(p) - 70.83) <= 0.05);
    CHECK(std::abs(low_range_curve(p.tau2, p.c3, derive_c4(p), p.tau1, p.tau2) - sigmoid_curve(p.tau2, p.base)) < 1e-9);
}

TEST_CASE("derive_c4 is zero when c3 equals the base curve at tau2") {
    ModifiedSigmoidParams p;
    p.c3 = sigmoid_curve(p.tau2, p.base);
    CHECK(derive_c4(p) == doctest::Approx(0.0).epsilon(1e-12));
    p.c3 += 1.0;
    CHECK_THROWS_AS(derive_c4(p), ValidationError);
}

TEST_CASE("modified transform branches") {
    CHECK(one(0.05) == 0);
    CHECK(one(0.65) == 53);
    for (double g : {1.21, 2.0, 3.0, 4.06, 7.5}) CHECK(one(g) == one_base(g));
    // the paper's literal constant stays available as an override
    ModifiedSigmoidParams literal;
    literal.c4 = 23.0;
    CHECK(one(0.65, literal) == to_u8(18.0 + 11.5));
}

TEST_CASE("modified transform is continuous at tau2 and monotone above tau1") {
    const ModifiedSigmoidParams p;
    const double below = modified_curve(p.tau2, p), above = modified_curve(std::nextafter(p.tau2, 10.0), p);
    CHECK(std::abs(below - above) < 0.5);
    double prev = modified_curve(p.tau1, p);
    for (double g = p.tau1 + 0.001; g < 10.0; g += 0.001) {
        const double cur = modified_curve(g, p);
        CHECK(cur >= prev - 1e-12);
        prev = cur;
    }
}

TEST_CASE("zeros appear only below tau1") {
    std::vector<double> g;
    for (double x = 0.0; x < 8.0; x += 0.01) g.push_back(x);
    const Cephalogram8 m = modified_sigmoid_transform(line(g));
    const Cephalogram8 o = sigmoid_transform(line(g));
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK((m.pixels(i, 0) == 0) == (g[i] < 0.1));
        CHECK(o.pixels(i, 0) > 0);
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS((SigmoidParams{200, 60, 2.6, 1.5}.validate()), ValidationError);
    CHECK_THROWS_AS((SigmoidParams{40, 5, 2.6, 0.0}.validate()), ValidationError);
    ModifiedSigmoidParams p;
    p.tau1 = 1.5;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = {};
    p.c3 = -1;
    CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("fit_sigmoid round-trips noiseless samples") {
    const SigmoidParams truth;
    const auto samples = samples_from(truth, {0, 1, 2, 2.6, 3, 4, 6});
    const SigmoidFit fit = fit_sigmoid(samples);
    CHECK(fit.converged);
    CHECK(std::abs(fit.params.c1 - truth.c1) < 1e-3);
    CHECK(std::abs(fit.params.c2 - truth.c2) < 1e-3);
    CHECK(std::abs(fit.params.t - truth.t) < 1e-3);
    CHECK(std::abs(fit.params.s - truth.s) < 1e-3);
    CHECK(fit.rms_residual < 1e-6);
}

TEST_CASE("fit_sigmoid converges from random starting points") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> c(0.0, 80.0), t(1.0, 4.0), s(0.5, 3.0);
    const SigmoidParams truth{30.0, 12.0, 2.2, 1.8};
    const auto samples = samples_from(truth, {0, 0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4, 5, 6});
    for (int trial = 0; trial < 10; ++trial) {
        FitOptions opt;
        opt.initial = SigmoidParams{c(rng), c(rng), t(rng), s(rng)};
        const SigmoidFit fit = fit_sigmoid(samples, opt);
        CHECK(std::abs(fit.params.c1 - truth.c1) < 1e-3);
        CHECK(std::abs(fit.params.c2 - truth.c2) < 1e-3);
        CHECK(std::abs(fit.params.t - truth.t) < 1e-3);
        CHECK(std::abs(fit.params.s - truth.s) < 1e-3);
    }
}

TEST_CASE("fit_sigmoid with bounded noise stays near the noise floor") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> noise(-2.0, 2.0);
    std::vector<CurveSample> samples;
    for (double x = 0.0; x <= 6.0; x += 0.1) samples.push_back({x, sigmoid_curve(x, {}) + noise(rng)});
    CHECK(fit_sigmoid(samples).rms_residual <= 2.5);
}

TEST_CASE("fit_sigmoid preconditions") {
    const auto three = samples_from({}, {0, 1, 2});
    CHECK_THROWS_AS(fit_sigmoid(three), ValidationError);
    auto bad = samples_from({}, {0, 1, 2, 3});
    bad[0].gray = 300;
    CHECK_THROWS_AS(fit_sigmoid(bad), ValidationError);
}

TEST_CASE("fit_sigmoid flags a fit that hits the iteration cap") {
    const auto samples = samples_from({}, {0, 1, 2, 2.6, 3, 4, 6});
    FitOptions opt;
    opt.initial = SigmoidParams{0, 0, 5, 0.2};
    opt.max_iterations = 1;
    const SigmoidFit fit = fit_sigmoid(samples, opt);
    CHECK_FALSE(fit.converged);
    CHECK(fit.iterations == 1);
}

TEST_CASE("film parameter files round trip") {
    testutil::TempDir dir("film");
    ModifiedSigmoidParams p;
    p.base = {35, 7, 2.4, 1.7};
    write_film_params(dir / "f.txt", p);
    auto back = read_film_params(dir / "f.txt");
    CHECK(back.base == p.base);
    CHECK_FALSE(back.c4.has_value());
    p.c4 = 23.0;
    write_film_params(dir / "f.txt", p);
    back = read_film_params(dir / "f.txt");
    REQUIRE(back.c4.has_value());
    CHECK(*back.c4 == 23.0);
}

TEST_CASE("cephalograms carry spacing through their sidecar") {
    testutil::TempDir dir("ceph");
    const Cephalogram8 c{testutil::random_gray(6, 4, 8), 0.25, 0.3};
    save_cephalogram(dir / "c.png", c);
    const Cephalogram8 back = load_cephalogram(dir / "c.png");
    CHECK(back.pixels == c.pixels);
    CHECK(back.su == 0.25);
    CHECK(back.sv == 0.3);
}
