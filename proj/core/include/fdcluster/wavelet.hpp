#ifndef FDCLUSTER_WAVELET_HPP_
#define FDCLUSTER_WAVELET_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fdc {

// Full-depth orthonormal Haar decomposition of a 2^J-vector: one scaling
// coefficient plus J detail levels ordered coarsest to finest with sizes
// 1, 2, ..., 2^(J-1). The transform is an isometry (Parseval).
struct HaarDwt {
    std::vector<double> scaling;               // length 1 at full depth
    std::vector<std::vector<double>> details;  // coarsest first

    std::size_t size() const;
    Eigen::VectorXd flatten() const;  // [scaling, details coarse->fine]
};

HaarDwt haar_dwt(std::span<const double> values);
HaarDwt haar_dwt_unflatten(const Eigen::VectorXd& flat);  // inverse of flatten
std::vector<double> haar_idwt(const HaarDwt& dwt);

// Zeroes detail coefficients with |d| < tau; scaling untouched. tau >= 0,
// +infinity zeroes every detail.
HaarDwt hard_threshold(const HaarDwt& dwt, double tau);

// sigma_hat * sqrt(2 log N) with sigma_hat = MAD(finest details)/0.6745.
double universal_threshold(const HaarDwt& dwt);

// Appends reflected samples (v[m-2], v[m-3], ...) up to `target` length.
std::vector<double> pad_reflect(std::span<const double> values, std::size_t target);

std::size_t next_power_of_two(std::size_t n);

}  // namespace fdc

#endif  // FDCLUSTER_WAVELET_HPP_
