#pragma once

#include <Eigen/Dense>

namespace otsing {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd; // rows are points/samples

} // namespace otsing
