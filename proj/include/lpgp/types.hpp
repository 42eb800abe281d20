#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace lpgp {

/// A location in the unit cube [0,1]^D.
using Point = Eigen::VectorXd;

struct Observation {
    Point x;
    double y = 0.0;
};

using Dataset = std::vector<Observation>;

}  // namespace lpgp
