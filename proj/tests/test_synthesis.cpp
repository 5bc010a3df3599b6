#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "otsing/errors.hpp"
#include "otsing/io.hpp"
#include "otsing/synthesis.hpp"
#include "support/test_util.hpp"

using namespace otsing;

namespace {

Vector vec2(double x, double y) {
    Vector v(2);
    v << x, y;
    return v;
}

PointCloud two_symmetric_points() {
    PointCloud cloud;
    cloud.points = Matrix(2, 2);
    cloud.points << 1.0, 0.0, -1.0, 0.0;
    cloud.weights = Vector::Constant(2, 0.5);
    return cloud;
}

BaseMeasure unit_box_2d() {
    return BaseMeasure::uniform_box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
}

struct TwoPointSetup {
    PointCloud cloud = two_symmetric_points();
    PotentialOffsets offsets = PotentialOffsets::zeros(2);
    BaseMeasure measure = unit_box_2d();
    CellStats stats;
    SingularSet singular;

    TwoPointSetup() {
        stats = estimate_cells(cloud, offsets, measure, 1001, 50000);
        const Matrix pool = sample(measure, 1001, 50000);
        const auto assignments = assign(cloud, offsets, pool);
        const auto candidates =
            candidate_boundaries(cloud, offsets, assignments, AdjacencyMode::AllPairs);
        singular = select_singular(candidates, 1.0);
    }
};

} // namespace

TEST_CASE("interpolation weights follow the inverse-distance rule") {
    const Vector c_i = vec2(-1.0, 0.0);
    const Vector c_j = vec2(1.0, 0.0);

    auto [li, lj] = interpolation_weights(vec2(0.0, 0.5), c_i, c_j);
    CHECK(li == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(li + lj == 1.0);

    // distances 1 and 3
    auto [l2, l2j] = interpolation_weights(vec2(0.0, 0.0), c_i, vec2(3.0, 0.0));
    CHECK(l2 == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(l2 + l2j == 1.0);

    // z exactly on a centroid: the guard keeps the weight finite
    auto [l3, l3j] = interpolation_weights(c_i, c_i, vec2(0.0, 0.0), 1e-9);
    CHECK(l3 == doctest::Approx(1.0 / (1.0 + 1e-9)).epsilon(1e-12));
    CHECK(l3 + l3j == 1.0);

    CHECK_THROWS_AS(interpolation_weights(vec2(0, 0), c_i, c_i, 1e-9), SynthesisError);
}

TEST_CASE("smoothed transport is the convex combination of the two targets") {
    const TwoPointSetup setup;
    const auto& rec = setup.singular.records[0];
    const Vector c_i = setup.stats.centroid.row(rec.i).transpose();
    const Vector c_j = setup.stats.centroid.row(rec.j).transpose();

    CHECK(testutil::same_vector(
        smoothed_transport(setup.cloud, setup.offsets, rec, c_i, c_j, 0.5, 0.5),
        vec2(0.0, 0.0)));
    CHECK(testutil::same_vector(
        smoothed_transport(setup.cloud, setup.offsets, rec, c_i, c_j, 1.0, 0.0),
        setup.cloud.points.row(rec.i).transpose()));
    const Vector mixed =
        smoothed_transport(setup.cloud, setup.offsets, rec, c_i, c_j, 0.75, 0.25);
    CHECK((mixed - (0.75 * setup.cloud.points.row(rec.i).transpose() +
                    0.25 * setup.cloud.points.row(rec.j).transpose()))
              .norm() <= 1e-12);
}

TEST_CASE("smoothed transport fails loudly when a centroid escaped its cell") {
    const TwoPointSetup setup;
    const auto& rec = setup.singular.records[0];
    const Vector wrong_side = vec2(-0.5, 0.0); // lies in cell 1, claimed for cell 0
    CHECK_THROWS_AS(smoothed_transport(setup.cloud, setup.offsets, rec, wrong_side,
                                       vec2(-0.9, 0.0), 0.5, 0.5),
                    SynthesisError);
}

TEST_CASE("otis samples satisfy the simplex and segment invariants") {
    const TwoPointSetup setup;
    SynthesisConfig config;
    config.per_boundary = 10000;
    config.slab = SlabSpec::off();
    const auto samples = generate_otis(setup.cloud, setup.offsets, setup.singular,
                                       setup.stats, Codec::identity(), setup.measure,
                                       42, config);
    REQUIRE(samples.size() == 10000);

    double lambda_sum = 0.0;
    for (const auto& s : samples) {
        CHECK(s.lambda_i >= 0.0);
        CHECK(s.lambda_j >= 0.0);
        CHECK(s.lambda_i + s.lambda_j == 1.0);
        const Vector segment = s.lambda_i * setup.cloud.points.row(s.i).transpose() +
                               s.lambda_j * setup.cloud.points.row(s.j).transpose();
        CHECK((s.y_hat - segment).norm() <= 1e-12);
        CHECK(testutil::same_vector(s.x_hat, s.y_hat)); // identity codec
        lambda_sum += s.lambda_i;
    }
    // symmetric cloud and box: mean lambda is 1/2 (bootstrap band +-0.02)
    CHECK(std::abs(lambda_sum / static_cast<double>(samples.size()) - 0.5) <= 0.02);

    // fixed seed reproduces the draw exactly
    const auto again = generate_otis(setup.cloud, setup.offsets, setup.singular,
                                     setup.stats, Codec::identity(), setup.measure,
                                     42, config);
    REQUIRE(again.size() == samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        CHECK(testutil::same_vector(again[k].z, samples[k].z));
        CHECK(again[k].lambda_i == samples[k].lambda_i);
    }
}

TEST_CASE("slab restriction keeps draws near the boundary and in the two cells") {
    const TwoPointSetup setup;
    SynthesisConfig config;
    config.per_boundary = 500;
    config.slab = SlabSpec::auto_width(); // delta = 0.05 * ||a||, a = (2, 0)
    const auto samples = generate_otis(setup.cloud, setup.offsets, setup.singular,
                                       setup.stats, Codec::identity(), setup.measure,
                                       9, config);
    const auto& rec = setup.singular.records[0];
    const double delta = 0.05 * rec.a.norm();
    for (const auto& s : samples) {
        CHECK(std::abs(rec.a.dot(s.z) + rec.b) <= delta);
        const auto [value, cell] = potential_value(setup.cloud, setup.offsets, s.z);
        (void)value;
        CHECK((cell == rec.i || cell == rec.j));
    }
}

TEST_CASE("rejection cap failure names the boundary") {
    const TwoPointSetup setup;
    SynthesisConfig config;
    config.per_boundary = 1;
    config.slab = SlabSpec::fixed(1e-9); // essentially never accepted
    config.retry_cap = 50;
    CHECK_THROWS_WITH_AS(generate_otis(setup.cloud, setup.offsets, setup.singular,
                                       setup.stats, Codec::identity(), setup.measure,
                                       1, config),
                         doctest::Contains("(0, 1)"), SynthesisError);
}

TEST_CASE("empty centroids are synthesis errors") {
    const TwoPointSetup setup;
    CellStats broken = setup.stats;
    broken.sample_count[1] = 0;
    SynthesisConfig config;
    config.per_boundary = 1;
    CHECK_THROWS_AS(generate_otis(setup.cloud, setup.offsets, setup.singular, broken,
                                  Codec::identity(), setup.measure, 1, config),
                    SynthesisError);
}

TEST_CASE("affine codec round trips and identity is exact") {
    Matrix a(2, 2);
    a << 2.0, 0.5, -0.25, 1.5;
    const Codec codec = Codec::affine(a, vec2(0.3, -0.7));
    SeededRng rng(3);
    for (int k = 0; k < 50; ++k) {
        const Vector x = vec2(10 * rng.next_unit() - 5, 10 * rng.next_unit() - 5);
        CHECK((codec.decode(codec.encode(x)) - x).norm() <= 1e-9);
    }
    const Codec id = Codec::identity();
    const Vector x = vec2(1.25, -3.5);
    CHECK(testutil::same_vector(id.decode(id.encode(x)), x));

    Matrix singular(2, 2);
    singular << 1.0, 2.0, 2.0, 4.0;
    CHECK_THROWS_AS(Codec::affine(singular, vec2(0, 0)), ConfigError);
}

TEST_CASE("external codec exchanges OTPC files") {
    const auto dir = std::filesystem::temp_directory_path() / "otsing_external_codec";
    std::filesystem::remove_all(dir);
    const Codec codec = Codec::external(dir);

    Matrix latents(3, 2);
    latents << 0.0, 1.0, 2.0, 3.0, 4.0, 5.0;
    CHECK_THROWS_WITH_AS(codec.decode_batch(latents), doctest::Contains("decoded.otpc"),
                         SynthesisError);
    CHECK(std::filesystem::exists(dir / "latents.otpc"));

    // stand-in for the out-of-process decoder: doubles every latent
    const PointCloud written = load_otpc(dir / "latents.otpc");
    save_otpc(dir / "decoded.otpc", Matrix(2.0 * written.points));
    const Matrix decoded = codec.decode_batch(latents);
    CHECK(testutil::same_matrix(decoded, 2.0 * latents));

    // stale output with the wrong row count is rejected
    Matrix more(4, 2);
    more.setZero();
    CHECK_THROWS_AS(codec.decode_batch(more), SynthesisError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("interpolation baselines coincide under the identity codec") {
    const PointCloud cloud = two_symmetric_points();
    SeededRng r1(31);
    SeededRng r2(31);
    const Matrix latent = interpolation_baselines(cloud, Codec::identity(), r1,
                                                  InterpMode::LatentInterp, 200);
    const Matrix input = interpolation_baselines(cloud, Codec::identity(), r2,
                                                 InterpMode::InputInterp, 200);
    CHECK(testutil::same_matrix(latent, input));

    // every mix lies on the segment between the two targets
    for (Index r = 0; r < latent.rows(); ++r) {
        CHECK(std::abs(latent(r, 1)) <= 1e-12);       // y stays 0
        CHECK(std::abs(latent(r, 0)) <= 1.0 + 1e-12); // x within [-1, 1]
    }
    CHECK_THROWS_AS(interpolation_baselines(cloud, Codec::identity(), r1,
                                            InterpMode::LatentInterp, 0),
                    ConfigError);
}
