#pragma once

#include "otsing/types.hpp"

namespace otsing::testutil {

inline bool same_matrix(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

inline bool same_vector(const Vector& a, const Vector& b) {
    return a.size() == b.size() && (a.array() == b.array()).all();
}

} // namespace otsing::testutil
