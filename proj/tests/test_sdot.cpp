#include <doctest.h>

#include <cmath>
#include <set>

#include "otsing/errors.hpp"
#include "otsing/sdot.hpp"
#include "support/polygon_oracle.hpp"
#include "support/test_util.hpp"

using namespace otsing;

namespace {

PointCloud two_symmetric_points() {
    PointCloud cloud;
    cloud.points = Matrix(2, 2);
    cloud.points << 1.0, 0.0, -1.0, 0.0;
    cloud.weights = Vector::Constant(2, 0.5);
    return cloud;
}

PointCloud three_collinear_points() {
    PointCloud cloud;
    cloud.points = Matrix(3, 2);
    cloud.points << -1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
    cloud.weights = Vector::Constant(3, 1.0 / 3.0);
    return cloud;
}

BaseMeasure unit_box_2d() {
    return BaseMeasure::uniform_box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
}

Vector vec2(double x, double y) {
    Vector v(2);
    v << x, y;
    return v;
}

PointCloud random_cloud(SeededRng& rng, Index n) {
    PointCloud cloud;
    cloud.points = Matrix(n, 2);
    for (Index r = 0; r < n; ++r) {
        cloud.points(r, 0) = 2.0 * rng.next_unit() - 1.0;
        cloud.points(r, 1) = 2.0 * rng.next_unit() - 1.0;
    }
    cloud.weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
    return cloud;
}

} // namespace

TEST_CASE("potential value is the max affine piece with lowest-index ties") {
    const auto cloud = two_symmetric_points();
    auto offsets = PotentialOffsets::zeros(2);

    auto [v1, i1] = potential_value(cloud, offsets, vec2(0.5, 0.0));
    CHECK(v1 == 0.5);
    CHECK(i1 == 0);

    auto [v2, i2] = potential_value(cloud, offsets, vec2(0.0, 0.0));
    CHECK(v2 == 0.0);
    CHECK(i2 == 0); // exact tie goes to the lowest index

    offsets.h << 0.2, -0.2;
    auto [v3, i3] = potential_value(cloud, offsets, vec2(0.0, 0.0));
    CHECK(v3 == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(i3 == 0);
}

TEST_CASE("potential value rejects dimension mismatches") {
    const auto cloud = two_symmetric_points();
    const auto offsets = PotentialOffsets::zeros(2);
    CHECK_THROWS_AS(potential_value(cloud, offsets, Vector::Zero(3)), ShapeError);
    CHECK_THROWS_AS(potential_value(cloud, PotentialOffsets::zeros(5), vec2(0, 0)),
                    ShapeError);
}

TEST_CASE("assign returns best cell, runner-up and margin") {
    const auto cloud = two_symmetric_points();
    const auto offsets = PotentialOffsets::zeros(2);

    Matrix samples(2, 2);
    samples << 0.5, 0.0, /* bisector point: */ 0.0, 0.7;
    const auto result = assign(cloud, offsets, samples);
    CHECK(result[0].best == 0);
    CHECK(result[0].runner_up == 1);
    CHECK(result[0].margin == 1.0);
    CHECK(result[1].best == 0); // tie on the bisector, lowest index
    CHECK(result[1].margin == 0.0);
}

TEST_CASE("assign on three collinear points matches the hand oracle") {
    const auto cloud = three_collinear_points();
    const auto offsets = PotentialOffsets::zeros(3);
    Matrix samples(1, 2);
    samples << 0.6, 0.0;
    // hand oracle: inner products are (-0.6, 0.0, 0.6)
    const double products[3] = {-0.6, 0.0, 0.6};
    CHECK(products[2] > products[1]);
    const auto result = assign(cloud, offsets, samples);
    CHECK(result[0].best == 2);
    CHECK(result[0].runner_up == 1);
    CHECK(result[0].margin == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("assign is identical for any thread count") {
    SeededRng rng(17);
    const auto cloud = random_cloud(rng, 9);
    auto offsets = PotentialOffsets::zeros(9);
    const Matrix pool = sample(unit_box_2d(), 21, 20000);
    const auto serial = assign(cloud, offsets, pool, 1);
    const auto parallel = assign(cloud, offsets, pool, 4);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t k = 0; k < serial.size(); ++k) {
        CHECK(serial[k].best == parallel[k].best);
        CHECK(serial[k].runner_up == parallel[k].runner_up);
        CHECK(serial[k].margin == parallel[k].margin);
    }
}

TEST_CASE("estimate_cells splits the symmetric two-point box evenly") {
    const auto cloud = two_symmetric_points();
    const auto offsets = PotentialOffsets::zeros(2);
    const Index m = 100000;
    const auto stats = estimate_cells(cloud, offsets, unit_box_2d(), 4711, m);

    CHECK(stats.total_samples == m);
    CHECK(stats.sample_count[0] + stats.sample_count[1] == m);
    CHECK(stats.volume[0] == static_cast<double>(stats.sample_count[0]) / m);

    const double band = 4.0 * std::sqrt(0.25 / static_cast<double>(m)); // ~0.0063
    CHECK(std::abs(stats.volume[0] - 0.5) < band);
    CHECK(std::abs(stats.volume[1] - 0.5) < band);

    // centroid of the x > 0 half of the box is (0.5, 0)
    CHECK(std::abs(stats.centroid(0, 0) - 0.5) < 0.01);
    CHECK(std::abs(stats.centroid(0, 1) - 0.0) < 0.01);
}

TEST_CASE("three collinear targets leave the middle cell empty") {
    // The max-affine cell of the middle point is the measure-zero line x = 0:
    // max(-x, 0, x) = |x| beats the middle piece everywhere else.
    const auto cloud = three_collinear_points();
    const auto offsets = PotentialOffsets::zeros(3);

    const auto exact = oracle::exact_cells_2d(cloud, offsets, Vector::Constant(2, -1.0),
                                              Vector::Constant(2, 1.0));
    CHECK(exact.volume[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(exact.volume[1] == doctest::Approx(0.0));
    CHECK(exact.volume[2] == doctest::Approx(0.5).epsilon(1e-12));

    const Index m = 100000;
    const auto stats = estimate_cells(cloud, offsets, unit_box_2d(), 2718, m);
    for (Index i = 0; i < 3; ++i) {
        const double p = exact.volume[i];
        const double band = 4.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(m));
        CHECK(std::abs(stats.volume[i] - p) <= band);
    }
    CHECK(stats.cell_empty(1));
    CHECK(std::isnan(stats.centroid(1, 0)));
}

TEST_CASE("monte carlo volumes match the exact polygon oracle") {
    SeededRng rng(97);
    const Index m = 40000;
    for (int instance = 0; instance < 5; ++instance) {
        const Index n = 3 + static_cast<Index>(rng.next_below(6));
        const auto cloud = random_cloud(rng, n);
        PotentialOffsets offsets{Vector(n)};
        for (Index i = 0; i < n; ++i) offsets.h[i] = 0.6 * rng.next_unit() - 0.3;
        offsets.project_zero_sum();

        const auto exact = oracle::exact_cells_2d(cloud, offsets, Vector::Constant(2, -1.0),
                                                  Vector::Constant(2, 1.0));
        CHECK(exact.volume.sum() == doctest::Approx(1.0).epsilon(1e-9));

        const auto stats = estimate_cells(cloud, offsets, unit_box_2d(),
                                          rng.next_u64(), m);
        for (Index i = 0; i < n; ++i) {
            const double p = exact.volume[i];
            const double band = 4.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(m));
            CHECK(std::abs(stats.volume[i] - p) <= band);
        }
    }
}

TEST_CASE("energy examples") {
    PointCloud cloud = two_symmetric_points();
    CellStats stats;
    stats.volume = Vector(2);
    stats.volume << 0.5, 0.5;
    CHECK(energy(stats, cloud) == 0.0);

    stats.volume << 0.6, 0.4;
    CHECK(energy(stats, cloud) == doctest::Approx(0.02).epsilon(1e-12));

    PointCloud three = three_collinear_points();
    CellStats s3;
    s3.volume = Vector(3);
    s3.volume << 0.25, 0.5, 0.25;
    // direct arithmetic oracle: 2*(1/12)^2 + (1/6)^2 = 1/24
    const double expected = 2.0 * std::pow(0.25 - 1.0 / 3.0, 2) +
                            std::pow(0.5 - 1.0 / 3.0, 2);
    CHECK(expected == doctest::Approx(1.0 / 24.0).epsilon(1e-14));
    CHECK(energy(s3, three) == doctest::Approx(expected).epsilon(1e-14));

    CHECK_THROWS_AS(energy(s3, cloud), ShapeError);
}

TEST_CASE("every sample lands in exactly one cell") {
    SeededRng rng(55);
    const auto cloud = random_cloud(rng, 7);
    const auto offsets = PotentialOffsets::zeros(7);
    const Index m = 5000;
    const auto stats = estimate_cells(cloud, offsets, unit_box_2d(), 8, m);
    std::int64_t total = 0;
    for (Index i = 0; i < 7; ++i) total += stats.sample_count[static_cast<std::size_t>(i)];
    CHECK(total == m);
    CHECK(stats.volume.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("adding a constant to all offsets changes nothing") {
    SeededRng rng(7);
    const auto cloud = random_cloud(rng, 5);
    PotentialOffsets offsets{Vector(5)};
    for (Index i = 0; i < 5; ++i) offsets.h[i] = 0.4 * rng.next_unit() - 0.2;

    const Matrix pool = sample(unit_box_2d(), 919, 20000);
    const auto before = assign(cloud, offsets, pool);
    PotentialOffsets shifted = offsets;
    shifted.h.array() += 5.0;
    const auto after = assign(cloud, shifted, pool);
    for (std::size_t k = 0; k < before.size(); ++k) {
        CHECK(before[k].best == after[k].best);
    }
}

TEST_CASE("raising an offset never shrinks that cell") {
    SeededRng rng(23);
    const auto cloud = random_cloud(rng, 6);
    PotentialOffsets offsets = PotentialOffsets::zeros(6);
    const Matrix pool = sample(unit_box_2d(), 100, 20000);

    const auto before = assign(cloud, offsets, pool);
    PotentialOffsets raised = offsets;
    raised.h[2] += 0.3;
    const auto after = assign(cloud, raised, pool);
    for (std::size_t k = 0; k < before.size(); ++k) {
        if (before[k].best == 2) {
            CHECK(after[k].best == 2); // superset: samples of cell 2 stay in cell 2
        }
    }
}

TEST_CASE("optimizer finds the symmetric optimum") {
    const auto cloud = two_symmetric_points();
    SolverConfig config;
    config.mc_samples = 20000;
    config.max_iters = 500;
    const auto [offsets, report] = optimize_offsets(cloud, unit_box_2d(), 3, config);
    CHECK(report.converged);
    CHECK(report.final_energy <= config.tolerance);
    CHECK(std::abs(offsets.h[0]) <= 0.02);
    CHECK(std::abs(offsets.h[1]) <= 0.02);
    CHECK(std::abs(offsets.h.sum()) < 1e-10);
    CHECK(report.energy_trace.back() == report.final_energy);
}

TEST_CASE("optimizer recovers the analytic two-point offsets") {
    PointCloud cloud = two_symmetric_points();
    cloud.weights << 0.7, 0.3;
    SolverConfig config; // defaults: M=1e5, eta=0.5
    const auto [offsets, report] = optimize_offsets(cloud, unit_box_2d(), 12345, config);
    CHECK(report.converged);

    // Exact oracle: the boundary 2x + (h1 - h0) = 0 must sit at x = -0.4 so
    // that the x >= -0.4 slab holds fraction 0.7 of the box.
    const auto exact = oracle::exact_cells_2d(cloud, offsets, Vector::Constant(2, -1.0),
                                              Vector::Constant(2, 1.0));
    CHECK(std::abs(exact.volume[0] - 0.7) < 0.02);
    CHECK(std::abs(offsets.h[0] - offsets.h[1] - 0.8) <= 0.05);

    // Pushforward condition on a fresh pool.
    const Index m = 100000;
    const auto stats = estimate_cells(cloud, offsets, unit_box_2d(), 777, m);
    CHECK(std::abs(stats.volume[0] - 0.7) <= 0.006);
}

TEST_CASE("non-convergence returns best-seen offsets without throwing") {
    PointCloud cloud = two_symmetric_points();
    cloud.weights << 0.7, 0.3;
    SolverConfig config;
    config.mc_samples = 2000;
    config.max_iters = 3; // far too few
    config.tolerance = 1e-12;
    const auto [offsets, report] = optimize_offsets(cloud, unit_box_2d(), 5, config);
    CHECK_FALSE(report.converged);
    CHECK(report.iterations == 3);
    CHECK(std::isfinite(report.final_energy));
    CHECK(offsets.h.size() == 2);
}

TEST_CASE("transport maps each point to its cell target") {
    const auto cloud = two_symmetric_points();
    const auto offsets = PotentialOffsets::zeros(2);
    CHECK(testutil::same_vector(transport_point(cloud, offsets, vec2(0.5, 0.0)), vec2(1.0, 0.0)));
    CHECK(testutil::same_vector(transport_point(cloud, offsets, vec2(-0.3, 0.9)), vec2(-1.0, 0.0)));
}

TEST_CASE("estimate_cells validates the sample budget") {
    const auto cloud = two_symmetric_points();
    const auto offsets = PotentialOffsets::zeros(2);
    CHECK_THROWS_AS(estimate_cells(cloud, offsets, unit_box_2d(), 1, 1), ConfigError);
}

TEST_CASE("solver config validation") {
    SolverConfig config;
    config.step_size = 0.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = SolverConfig{};
    config.max_iters = 0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = SolverConfig{};
    config.tolerance = -1.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
}
