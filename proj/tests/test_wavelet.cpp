#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <fdcluster/wavelet.hpp>

using namespace fdc;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = noise(rng);
    return v;
}

}  // namespace

TEST_CASE("constant signal concentrates in the scaling coefficient") {
    const std::vector<double> v = {1.0, 1.0, 1.0, 1.0};
    const HaarDwt dwt = haar_dwt(v);
    REQUIRE(dwt.scaling.size() == 1);
    REQUIRE(dwt.details.size() == 2);
    REQUIRE(dwt.details[0].size() == 1);
    REQUIRE(dwt.details[1].size() == 2);
    CHECK(dwt.size() == 4);
    CHECK(dwt.scaling[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(dwt.details[0][0] == 0.0);
    CHECK(dwt.details[1][0] == 0.0);
    CHECK(dwt.details[1][1] == 0.0);
}

TEST_CASE("two-sample transform matches the orthonormal formulas") {
    const std::vector<double> v = {3.0, 1.0};
    const HaarDwt dwt = haar_dwt(v);
    const double s = std::numbers::sqrt2_v<double>;
    CHECK(dwt.scaling[0] == doctest::Approx(4.0 / s).epsilon(1e-12));
    CHECK(dwt.details[0][0] == doctest::Approx(2.0 / s).epsilon(1e-12));
    const std::vector<double> back = haar_idwt(dwt);
    CHECK(back[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(back[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("round trip and Parseval on random signals") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::vector<double> v = random_vector(256, 100 + seed);
        const HaarDwt dwt = haar_dwt(v);
        const std::vector<double> back = haar_idwt(dwt);
        REQUIRE(back.size() == v.size());
        double max_err = 0.0;
        double energy = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            max_err = std::max(max_err, std::abs(back[i] - v[i]));
            energy += v[i] * v[i];
        }
        CHECK(max_err <= 1e-12);
        const double coef_energy = dwt.flatten().squaredNorm();
        CHECK(std::abs(coef_energy - energy) <= 1e-10 * (1.0 + energy));
    }
}

TEST_CASE("flatten orders scaling then details coarse to fine") {
    const std::vector<double> v = random_vector(8, 7);
    const HaarDwt dwt = haar_dwt(v);
    REQUIRE(dwt.details.size() == 3);
    const Eigen::VectorXd flat = dwt.flatten();
    REQUIRE(flat.size() == 8);
    CHECK(flat(0) == dwt.scaling[0]);
    CHECK(flat(1) == dwt.details[0][0]);
    CHECK(flat(2) == dwt.details[1][0]);
    CHECK(flat(3) == dwt.details[1][1]);
    for (int i = 0; i < 4; ++i) {
        CHECK(flat(4 + i) == dwt.details[2][static_cast<std::size_t>(i)]);
    }

    const HaarDwt rebuilt = haar_dwt_unflatten(flat);
    CHECK(rebuilt.scaling == dwt.scaling);
    CHECK(rebuilt.details == dwt.details);

    CHECK_THROWS_AS(haar_dwt_unflatten(Eigen::VectorXd::Zero(3)),
                    std::invalid_argument);
}

TEST_CASE("hard threshold zeroes strictly-small details only") {
    Eigen::VectorXd flat(8);
    flat << 5.0, 1.0, -2.0, 0.5, 3.0, -1.0, 0.999, 0.0;
    const HaarDwt dwt = haar_dwt_unflatten(flat);

    const HaarDwt cut = hard_threshold(dwt, 1.0);
    CHECK(cut.scaling[0] == 5.0);
    CHECK(cut.details[0][0] == 1.0);    // |d| == tau survives
    CHECK(cut.details[1][0] == -2.0);
    CHECK(cut.details[1][1] == 0.0);    // 0.5 < tau
    CHECK(cut.details[2][0] == 3.0);
    CHECK(cut.details[2][1] == -1.0);
    CHECK(cut.details[2][2] == 0.0);    // 0.999 < tau
    CHECK(cut.details[2][3] == 0.0);

    const HaarDwt keep = hard_threshold(dwt, 0.0);
    CHECK(keep.details == dwt.details);

    const HaarDwt all = hard_threshold(dwt, std::numeric_limits<double>::infinity());
    CHECK(all.scaling[0] == 5.0);
    for (const auto& level : all.details) {
        for (double d : level) CHECK(d == 0.0);
    }

    CHECK_THROWS_AS(hard_threshold(dwt, -1.0), std::invalid_argument);
}

TEST_CASE("universal threshold recomputes from the finest level") {
    Eigen::VectorXd flat(8);
    flat << 9.0, 0.1, 0.2, 0.3, 3.0, -1.0, 2.0, -4.0;
    const HaarDwt dwt = haar_dwt_unflatten(flat);
    // Finest magnitudes {3, 1, 2, 4} sorted -> median 2.5.
    const double sigma = 2.5 / 0.6745;
    const double expected = sigma * std::sqrt(2.0 * std::log(8.0));
    CHECK(universal_threshold(dwt) == doctest::Approx(expected).epsilon(1e-12));

    const HaarDwt trivial = haar_dwt(std::vector<double>{5.0});
    CHECK(trivial.details.empty());
    CHECK_THROWS_AS(universal_threshold(trivial), std::invalid_argument);
}

TEST_CASE("reflect padding bounces at both ends") {
    const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
    CHECK(pad_reflect(v, 8) == std::vector<double>{1, 2, 3, 4, 3, 2, 1, 2});
    CHECK(pad_reflect(v, 4) == v);
    CHECK(pad_reflect(std::vector<double>{1.0, 2.0}, 4) ==
          std::vector<double>{1, 2, 1, 2});
    CHECK(pad_reflect(std::vector<double>{7.0}, 1) == std::vector<double>{7.0});
    CHECK_THROWS_AS(pad_reflect(std::vector<double>{7.0}, 2), std::invalid_argument);
    CHECK_THROWS_AS(pad_reflect(v, 3), std::invalid_argument);
}

TEST_CASE("next power of two") {
    CHECK(next_power_of_two(0) == 1);
    CHECK(next_power_of_two(1) == 1);
    CHECK(next_power_of_two(2) == 2);
    CHECK(next_power_of_two(3) == 4);
    CHECK(next_power_of_two(4) == 4);
    CHECK(next_power_of_two(5) == 8);
    CHECK(next_power_of_two(255) == 256);
    CHECK(next_power_of_two(256) == 256);
    CHECK(next_power_of_two(257) == 512);
}

TEST_CASE("transform validates its inputs") {
    CHECK_THROWS_AS(haar_dwt(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(haar_dwt(std::vector<double>{1.0, 2.0, 3.0}),
                    std::invalid_argument);

    HaarDwt broken;
    broken.scaling = {1.0, 2.0};
    CHECK_THROWS_AS(haar_idwt(broken), std::invalid_argument);

    HaarDwt mismatched;
    mismatched.scaling = {1.0};
    mismatched.details = {{1.0, 2.0}};  // first level must have size 1
    CHECK_THROWS_AS(haar_idwt(mismatched), std::invalid_argument);
}
