#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "otsing/point_cloud.hpp"
#include "otsing/sdot.hpp"
#include "otsing/singularity.hpp"
#include "otsing/types.hpp"

namespace otsing {

// Point-cloud binary format "OTPC v1":
//   magic 'O' 'T' 'P' 'C', version u16 = 1, dim u16, count u64,
//   count*dim little-endian IEEE-754 float64 row-major,
//   count little-endian float64 weights.
void save_otpc(const std::filesystem::path& path, const Matrix& points,
               const Vector& weights);
// Convenience: uniform weights 1/count.
void save_otpc(const std::filesystem::path& path, const Matrix& points);
PointCloud load_otpc(const std::filesystem::path& path);

// CSV alternative: header line "dim=<d>,count=<n>", then one point per line,
// optional last column weight (uniform weights when absent).
PointCloud load_points_csv(const std::filesystem::path& path);
void save_points_csv(const std::filesystem::path& path, const Matrix& points);

// Dispatches on the OTPC magic bytes, CSV otherwise. Does not run target
// validation; call PointCloud::validate() before using the result as nu.
PointCloud load_points(const std::filesystem::path& path);

// One integer class label per line, aligned with the point file row order.
std::vector<int> load_labels_csv(const std::filesystem::path& path);
void save_labels_csv(const std::filesystem::path& path, const std::vector<int>& labels);

struct OffsetsFile {
    PotentialOffsets offsets;
    double energy = 0.0;
    std::uint64_t seed = 0;
};

// {"n": ..., "h": [...], "energy": ..., "seed": ...}
void save_offsets_json(const std::filesystem::path& path, const OffsetsFile& file);
OffsetsFile load_offsets_json(const std::filesystem::path& path);

// Score-descending array of {"i","j","score","a","b","adjacent"}.
void save_boundaries_json(const std::filesystem::path& path,
                          const std::vector<BoundaryRecord>& records);
std::vector<BoundaryRecord> load_boundaries_json(const std::filesystem::path& path);

} // namespace otsing
