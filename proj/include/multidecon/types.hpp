#pragma once

#include <complex>
#include <cstdint>
#include <Eigen/Dense>

namespace mdc {

using Index = Eigen::Index;

// Dense dynamic-size aliases, templated on scalar so core routines stay
// generic over real/complex arguments.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using cplx  = std::complex<double>;
using MatX  = Mat<double>;
using VecX  = Vec<double>;
using CMatX = Mat<cplx>;
using CVecX = Vec<cplx>;

}  // namespace mdc
