#pragma once

#include <Eigen/Core>

namespace pulse {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace pulse
