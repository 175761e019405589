#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace chainforge {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

enum class TaskKind { classification, regression };

}  // namespace chainforge
