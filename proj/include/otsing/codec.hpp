#pragma once

#include <filesystem>

#include "otsing/types.hpp"

namespace otsing {

enum class CodecKind { Identity, Affine, External };

// Pluggable latent <-> output-space map standing in for a learned
// encoder/decoder pair. Identity passes vectors through; Affine applies
// encode(x) = A x + c with decode as the exact inverse; External exchanges
// OTPC files with an out-of-process decoder.
class Codec {
public:
    static Codec identity();

    // Throws ConfigError when A is singular or badly conditioned.
    static Codec affine(Matrix a, Vector c);
    static Codec affine_from_json(const std::filesystem::path& path);

    // decode_batch writes latents to <dir>/latents.otpc and reads the
    // externally produced <dir>/decoded.otpc; a missing or mismatched
    // decoded file is a SynthesisError telling the caller to run the
    // decoder and re-invoke.
    static Codec external(std::filesystem::path dir);

    CodecKind kind() const { return kind_; }
    const std::filesystem::path& external_dir() const { return dir_; }

    Vector encode(const Vector& x) const;
    Vector decode(const Vector& y) const;
    Matrix encode_batch(const Matrix& xs) const; // one vector per row
    Matrix decode_batch(const Matrix& ys) const;

private:
    Codec() = default;

    CodecKind kind_ = CodecKind::Identity;
    Matrix encode_mat_;
    Vector encode_off_;
    Matrix decode_mat_; // inverse of encode_mat_
    std::filesystem::path dir_;
};

} // namespace otsing
