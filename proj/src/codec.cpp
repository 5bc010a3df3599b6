#include "otsing/codec.hpp"

#include <fstream>
#include <string>

#include <json.hpp>

#include "otsing/errors.hpp"
#include "otsing/io.hpp"

namespace otsing {

Codec Codec::identity() {
    Codec c;
    c.kind_ = CodecKind::Identity;
    return c;
}

Codec Codec::affine(Matrix a, Vector c) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw ConfigError("affine codec: matrix must be square and non-empty");
    }
    if (c.size() != a.rows()) {
        throw ConfigError("affine codec: offset length != matrix size");
    }
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) {
        throw ConfigError("affine codec: matrix is singular");
    }
    Codec codec;
    codec.kind_ = CodecKind::Affine;
    codec.decode_mat_ = lu.inverse();
    codec.encode_mat_ = std::move(a);
    codec.encode_off_ = std::move(c);
    return codec;
}

Codec Codec::affine_from_json(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open " + path.string());
        in >> j;
        const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
        const auto off = j.at("offset").get<std::vector<double>>();
        const auto d = static_cast<Index>(rows.size());
        Matrix a(d, d);
        for (Index r = 0; r < d; ++r) {
            if (static_cast<Index>(rows[static_cast<std::size_t>(r)].size()) != d) {
                throw ConfigError("affine codec: matrix rows must be square");
            }
            for (Index col = 0; col < d; ++col) {
                a(r, col) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)];
            }
        }
        Vector c = Eigen::Map<const Vector>(off.data(), static_cast<Index>(off.size()));
        return affine(std::move(a), std::move(c));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("affine codec: bad JSON in " + path.string() + ": " + e.what());
    }
}

Codec Codec::external(std::filesystem::path dir) {
    Codec c;
    c.kind_ = CodecKind::External;
    c.dir_ = std::move(dir);
    return c;
}

Vector Codec::encode(const Vector& x) const {
    switch (kind_) {
        case CodecKind::Identity: return x;
        case CodecKind::Affine: return encode_mat_ * x + encode_off_;
        case CodecKind::External:
            // Inputs to an external codec are already latent vectors; the
            // out-of-process encoder runs before the pipeline.
            return x;
    }
    throw ConfigError("codec: unknown kind");
}

Vector Codec::decode(const Vector& y) const {
    switch (kind_) {
        case CodecKind::Identity: return y;
        case CodecKind::Affine: return decode_mat_ * (y - encode_off_);
        case CodecKind::External:
            throw SynthesisError("external codec: single-vector decode unsupported, use decode_batch");
    }
    throw ConfigError("codec: unknown kind");
}

Matrix Codec::encode_batch(const Matrix& xs) const {
    if (kind_ == CodecKind::Affine) {
        Matrix out = xs * encode_mat_.transpose();
        out.rowwise() += encode_off_.transpose();
        return out;
    }
    return xs;
}

Matrix Codec::decode_batch(const Matrix& ys) const {
    switch (kind_) {
        case CodecKind::Identity: return ys;
        case CodecKind::Affine: {
            Matrix shifted = ys;
            shifted.rowwise() -= encode_off_.transpose();
            return shifted * decode_mat_.transpose();
        }
        case CodecKind::External: {
            std::filesystem::create_directories(dir_);
            const auto latents = dir_ / "latents.otpc";
            const auto decoded = dir_ / "decoded.otpc";
            save_otpc(latents, ys);
            if (!std::filesystem::exists(decoded)) {
                throw SynthesisError("external codec: wrote " + std::to_string(ys.rows()) +
                                     " latents to " + latents.string() +
                                     "; run the external decoder to produce " +
                                     decoded.string() + " and re-invoke");
            }
            const PointCloud result = load_otpc(decoded);
            if (result.points.rows() != ys.rows()) {
                throw SynthesisError("external codec: " + decoded.string() + " holds " +
                                     std::to_string(result.points.rows()) +
                                     " vectors, expected " + std::to_string(ys.rows()) +
                                     " (stale output?)");
            }
            return result.points;
        }
    }
    throw ConfigError("codec: unknown kind");
}

} // namespace otsing
