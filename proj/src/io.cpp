#include "otsing/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "otsing/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "OTPC writer assumes a little-endian host");

namespace otsing {

namespace {

constexpr char kMagic[4] = {'O', 'T', 'P', 'C'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
}

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ifstream in(path, mode);
    if (!in) {
        throw IoError("cannot open " + path.string() + " for reading");
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ofstream out(path, mode);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    return out;
}

nlohmann::json parse_json_file(const std::filesystem::path& path) {
    auto in = open_input(path, std::ios::in);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

} // namespace

void save_otpc(const std::filesystem::path& path, const Matrix& points,
               const Vector& weights) {
    if (weights.size() != points.rows()) {
        throw ShapeError("save_otpc: weights length != point count");
    }
    auto out = open_output(path, std::ios::binary);
    out.write(kMagic, 4);
    write_raw(out, kVersion);
    write_raw(out, static_cast<std::uint16_t>(points.cols()));
    write_raw(out, static_cast<std::uint64_t>(points.rows()));
    for (Index r = 0; r < points.rows(); ++r) {
        for (Index c = 0; c < points.cols(); ++c) {
            write_raw(out, points(r, c));
        }
    }
    for (Index r = 0; r < weights.size(); ++r) {
        write_raw(out, weights[r]);
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

void save_otpc(const std::filesystem::path& path, const Matrix& points) {
    const Vector uniform =
        Vector::Constant(points.rows(), 1.0 / static_cast<double>(points.rows()));
    save_otpc(path, points, uniform);
}

PointCloud load_otpc(const std::filesystem::path& path) {
    auto in = open_input(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError(path.string() + ": missing OTPC magic bytes");
    }
    const auto version = read_raw<std::uint16_t>(in);
    if (version != kVersion) {
        throw IoError(path.string() + ": unsupported OTPC version " +
                      std::to_string(version));
    }
    const auto dim = read_raw<std::uint16_t>(in);
    const auto count = read_raw<std::uint64_t>(in);
    if (!in || dim == 0 || count == 0) {
        throw IoError(path.string() + ": corrupt OTPC header");
    }

    PointCloud cloud;
    cloud.points.resize(static_cast<Index>(count), static_cast<Index>(dim));
    for (Index r = 0; r < cloud.points.rows(); ++r) {
        for (Index c = 0; c < cloud.points.cols(); ++c) {
            cloud.points(r, c) = read_raw<double>(in);
        }
    }
    cloud.weights.resize(static_cast<Index>(count));
    for (Index r = 0; r < cloud.weights.size(); ++r) {
        cloud.weights[r] = read_raw<double>(in);
    }
    if (!in) {
        throw IoError(path.string() + ": truncated OTPC payload");
    }
    return cloud;
}

PointCloud load_points_csv(const std::filesystem::path& path) {
    auto in = open_input(path, std::ios::in);
    std::string header;
    if (!std::getline(in, header)) {
        throw IoError(path.string() + ": empty CSV");
    }
    Index dim = -1;
    Index count = -1;
    if (std::sscanf(header.c_str(), "dim=%td,count=%td", &dim, &count) != 2 ||
        dim < 1 || count < 1) {
        throw IoError(path.string() + ": expected CSV header \"dim=<d>,count=<n>\"");
    }

    PointCloud cloud;
    cloud.points.resize(count, dim);
    cloud.weights.resize(count);
    bool any_weight = false;
    std::string line;
    for (Index r = 0; r < count; ++r) {
        if (!std::getline(in, line)) {
            throw IoError(path.string() + ": expected " + std::to_string(count) +
                          " data rows, got " + std::to_string(r));
        }
        std::stringstream row(line);
        std::string field;
        std::vector<double> values;
        while (std::getline(row, field, ',')) {
            try {
                values.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw IoError(path.string() + ": bad number '" + field + "' on row " +
                              std::to_string(r + 2));
            }
        }
        if (static_cast<Index>(values.size()) == dim) {
            cloud.weights[r] = -1.0; // filled with uniform below
        } else if (static_cast<Index>(values.size()) == dim + 1) {
            any_weight = true;
            cloud.weights[r] = values.back();
        } else {
            throw IoError(path.string() + ": row " + std::to_string(r + 2) + " has " +
                          std::to_string(values.size()) + " fields, expected " +
                          std::to_string(dim) + " or " + std::to_string(dim + 1));
        }
        for (Index c = 0; c < dim; ++c) {
            cloud.points(r, c) = values[static_cast<std::size_t>(c)];
        }
    }
    if (!any_weight) {
        cloud.weights.setConstant(1.0 / static_cast<double>(count));
    } else if ((cloud.weights.array() < 0.0).any()) {
        throw IoError(path.string() + ": weight column present on some rows only");
    }
    return cloud;
}

void save_points_csv(const std::filesystem::path& path, const Matrix& points) {
    auto out = open_output(path, std::ios::out);
    out << "dim=" << points.cols() << ",count=" << points.rows() << "\n";
    char buf[32];
    for (Index r = 0; r < points.rows(); ++r) {
        for (Index c = 0; c < points.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", points(r, c));
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

PointCloud load_points(const std::filesystem::path& path) {
    {
        auto in = open_input(path, std::ios::binary);
        char magic[4] = {0, 0, 0, 0};
        in.read(magic, 4);
        if (in && std::memcmp(magic, kMagic, 4) == 0) {
            return load_otpc(path);
        }
    }
    return load_points_csv(path);
}

std::vector<int> load_labels_csv(const std::filesystem::path& path) {
    auto in = open_input(path, std::ios::in);
    std::vector<int> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            labels.push_back(std::stoi(line));
        } catch (const std::exception&) {
            throw IoError(path.string() + ": bad label '" + line + "'");
        }
    }
    if (labels.empty()) {
        throw IoError(path.string() + ": no labels");
    }
    return labels;
}

void save_labels_csv(const std::filesystem::path& path, const std::vector<int>& labels) {
    auto out = open_output(path, std::ios::out);
    for (int label : labels) {
        out << label << "\n";
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

void save_offsets_json(const std::filesystem::path& path, const OffsetsFile& file) {
    nlohmann::json j;
    j["n"] = file.offsets.h.size();
    j["h"] = std::vector<double>(file.offsets.h.begin(), file.offsets.h.end());
    j["energy"] = file.energy;
    j["seed"] = file.seed;
    auto out = open_output(path, std::ios::out);
    out << j.dump(2) << "\n";
}

OffsetsFile load_offsets_json(const std::filesystem::path& path) {
    const auto j = parse_json_file(path);
    OffsetsFile file;
    try {
        const auto values = j.at("h").get<std::vector<double>>();
        file.offsets.h = Eigen::Map<const Vector>(values.data(),
                                                  static_cast<Index>(values.size()));
        if (j.at("n").get<Index>() != file.offsets.h.size()) {
            throw IoError(path.string() + ": n does not match |h|");
        }
        file.energy = j.at("energy").get<double>();
        file.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": bad offsets file: " + e.what());
    }
    return file;
}

void save_boundaries_json(const std::filesystem::path& path,
                          const std::vector<BoundaryRecord>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& rec : records) {
        nlohmann::json j;
        j["i"] = rec.i;
        j["j"] = rec.j;
        j["score"] = rec.score;
        j["a"] = std::vector<double>(rec.a.begin(), rec.a.end());
        j["b"] = rec.b;
        j["adjacent"] = rec.empirically_adjacent;
        arr.push_back(std::move(j));
    }
    auto out = open_output(path, std::ios::out);
    out << arr.dump(2) << "\n";
}

std::vector<BoundaryRecord> load_boundaries_json(const std::filesystem::path& path) {
    const auto arr = parse_json_file(path);
    if (!arr.is_array()) {
        throw IoError(path.string() + ": expected a JSON array of boundary records");
    }
    std::vector<BoundaryRecord> records;
    records.reserve(arr.size());
    try {
        for (const auto& j : arr) {
            BoundaryRecord rec;
            rec.i = j.at("i").get<Index>();
            rec.j = j.at("j").get<Index>();
            rec.score = j.at("score").get<double>();
            const auto a = j.at("a").get<std::vector<double>>();
            rec.a = Eigen::Map<const Vector>(a.data(), static_cast<Index>(a.size()));
            rec.b = j.at("b").get<double>();
            rec.empirically_adjacent = j.at("adjacent").get<bool>();
            records.push_back(std::move(rec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": bad boundary record: " + e.what());
    }
    return records;
}

} // namespace otsing
