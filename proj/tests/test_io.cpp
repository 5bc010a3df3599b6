#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "otsing/errors.hpp"
#include "otsing/io.hpp"
#include "otsing/rng.hpp"
#include "support/test_util.hpp"

using namespace otsing;

namespace {

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("otpc round trip is bit exact") {
    SeededRng rng(31);
    for (int instance = 0; instance < 20; ++instance) {
        const Index n = 2 + static_cast<Index>(rng.next_below(40));
        const Index d = 1 + static_cast<Index>(rng.next_below(8));
        Matrix pts(n, d);
        Vector w(n);
        for (Index r = 0; r < n; ++r) {
            for (Index c = 0; c < d; ++c) pts(r, c) = 20.0 * rng.next_unit() - 10.0;
            w[r] = rng.next_unit();
        }
        w /= w.sum();
        const auto path = temp_file("roundtrip.otpc");
        save_otpc(path, pts, w);
        const PointCloud loaded = load_otpc(path);
        CHECK(testutil::same_matrix(loaded.points, pts));
        CHECK(testutil::same_vector(loaded.weights, w));
    }
}

TEST_CASE("otpc loader rejects bad files") {
    const auto path = temp_file("bad.otpc");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE and some trailing bytes";
    }
    CHECK_THROWS_AS(load_otpc(path), IoError);
    {
        std::ofstream out(path, std::ios::binary);
        out << "OTPC"; // truncated header
    }
    CHECK_THROWS_AS(load_otpc(path), IoError);
    CHECK_THROWS_AS(load_otpc(temp_file("missing-file.otpc")), IoError);
}

TEST_CASE("csv loader parses header, points and optional weights") {
    const auto path = temp_file("points.csv");
    {
        std::ofstream out(path);
        out << "dim=2,count=3\n";
        out << "0.0,1.0\n";
        out << "2.0,3.0\n";
        out << "4.0,5.0\n";
    }
    const PointCloud cloud = load_points_csv(path);
    CHECK(cloud.points.rows() == 3);
    CHECK(cloud.points(1, 1) == 3.0);
    CHECK(cloud.weights[0] == doctest::Approx(1.0 / 3.0));

    {
        std::ofstream out(path);
        out << "dim=1,count=2\n";
        out << "1.0,0.25\n";
        out << "2.0,0.75\n";
    }
    const PointCloud weighted = load_points_csv(path);
    CHECK(weighted.weights[0] == 0.25);
    CHECK(weighted.weights[1] == 0.75);
}

TEST_CASE("csv loader reports malformed input") {
    const auto path = temp_file("bad.csv");
    {
        std::ofstream out(path);
        out << "count=3,dim=2\n0,0\n";
    }
    CHECK_THROWS_AS(load_points_csv(path), IoError);
    {
        std::ofstream out(path);
        out << "dim=2,count=2\n0.0,0.0\n1.0\n";
    }
    CHECK_THROWS_AS(load_points_csv(path), IoError);
    {
        std::ofstream out(path);
        out << "dim=2,count=2\n0.0,abc\n1.0,2.0\n";
    }
    CHECK_THROWS_AS(load_points_csv(path), IoError);
}

TEST_CASE("load_points sniffs the format") {
    Matrix pts(2, 2);
    pts << 0.0, 0.0, 1.0, 1.0;
    const auto binary = temp_file("sniff.otpc");
    save_otpc(binary, pts);
    CHECK(testutil::same_matrix(load_points(binary).points, pts));

    const auto csv = temp_file("sniff.csv");
    save_points_csv(csv, pts);
    CHECK(testutil::same_matrix(load_points(csv).points, pts));
}

TEST_CASE("labels round trip") {
    const auto path = temp_file("labels.csv");
    const std::vector<int> labels = {0, 1, 2, 1, 0};
    save_labels_csv(path, labels);
    CHECK(load_labels_csv(path) == labels);
}

TEST_CASE("offsets json round trip") {
    OffsetsFile file;
    file.offsets.h = Vector(3);
    file.offsets.h << 0.25, -0.5, 0.25;
    file.energy = 1.5e-5;
    file.seed = 99;
    const auto path = temp_file("offsets.json");
    save_offsets_json(path, file);
    const OffsetsFile loaded = load_offsets_json(path);
    CHECK(testutil::same_vector(loaded.offsets.h, file.offsets.h));
    CHECK(loaded.energy == file.energy);
    CHECK(loaded.seed == file.seed);
}

TEST_CASE("boundaries json round trip") {
    std::vector<BoundaryRecord> records(2);
    records[0].i = 0;
    records[0].j = 2;
    records[0].a = Vector(2);
    records[0].a << 1.0, -2.0;
    records[0].b = 0.5;
    records[0].score = 1.25;
    records[0].empirically_adjacent = true;
    records[1].i = 1;
    records[1].j = 2;
    records[1].a = Vector(2);
    records[1].a << 0.0, 1.0;
    records[1].b = -0.25;
    records[1].score = 0.75;
    records[1].empirically_adjacent = false;

    const auto path = temp_file("boundaries.json");
    save_boundaries_json(path, records);
    const auto loaded = load_boundaries_json(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].i == 0);
    CHECK(loaded[0].j == 2);
    CHECK(testutil::same_vector(loaded[0].a, records[0].a));
    CHECK(loaded[0].b == records[0].b);
    CHECK(loaded[0].score == records[0].score);
    CHECK(loaded[0].empirically_adjacent);
    CHECK_FALSE(loaded[1].empirically_adjacent);
}

TEST_CASE("point cloud validation catches bad targets") {
    PointCloud cloud;
    cloud.points = Matrix(2, 2);
    cloud.points << 0.0, 0.0, 0.0, 0.0; // duplicates
    cloud.weights = Vector::Constant(2, 0.5);
    CHECK_THROWS_WITH_AS(cloud.validate(),
                         doctest::Contains("duplicate target points at indices 0 and 1"),
                         ConfigError);

    cloud.points << 0.0, 0.0, 1.0, 1.0;
    cloud.weights << 0.5, 0.6; // does not sum to 1
    CHECK_THROWS_AS(cloud.validate(), ConfigError);

    cloud.weights << 1.0, 0.0; // zero weight
    CHECK_THROWS_AS(cloud.validate(), ConfigError);

    PointCloud single;
    single.points = Matrix(1, 2);
    single.points << 0.0, 0.0;
    single.weights = Vector::Constant(1, 1.0);
    CHECK_THROWS_AS(single.validate(), ConfigError);
}
