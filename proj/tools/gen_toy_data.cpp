// Writes the bundled three-blobs-plus-ring dataset as CSV files, so the
// example config can be re-generated from scratch if needed.

#include <iostream>
#include <string>

#include "otsing/io.hpp"
#include "otsing/toy_data.hpp"

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: otsing-gen-toy <seed> <output-dir>\n";
        return 1;
    }
    const auto seed = static_cast<std::uint64_t>(std::stoull(argv[1]));
    const std::filesystem::path dir = argv[2];
    std::filesystem::create_directories(dir);

    const otsing::ToyDataset data = otsing::make_three_blobs_ring(seed);
    otsing::save_points_csv(dir / "toy2d_train.csv", data.train_x);
    otsing::save_labels_csv(dir / "toy2d_train_labels.csv", data.train_y);
    otsing::save_points_csv(dir / "toy2d_test.csv", data.test_x);
    otsing::save_labels_csv(dir / "toy2d_test_labels.csv", data.test_y);
    otsing::save_points_csv(dir / "toy2d_ood.csv", data.ood_x);
    std::cout << "wrote toy2d data (" << data.train_x.rows() << " train, "
              << data.test_x.rows() << " test, " << data.ood_x.rows() << " ood) to "
              << dir.string() << "\n";
    return 0;
}
