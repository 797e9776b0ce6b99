#include "fdcluster/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fdc {

namespace {
const double kInvSqrt2 = 1.0 / std::numbers::sqrt2_v<double>;
}

std::size_t HaarDwt::size() const {
    std::size_t total = scaling.size();
    for (const auto& level : details) total += level.size();
    return total;
}

Eigen::VectorXd HaarDwt::flatten() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
    Eigen::Index k = 0;
    for (double v : scaling) out(k++) = v;
    for (const auto& level : details) {
        for (double v : level) out(k++) = v;
    }
    return out;
}

HaarDwt haar_dwt(std::span<const double> values) {
    const std::size_t N = values.size();
    if (N == 0 || (N & (N - 1)) != 0) {
        throw std::invalid_argument("haar_dwt: length must be a power of two");
    }
    HaarDwt out;
    std::vector<double> approx(values.begin(), values.end());
    // Peel one level per pass: pairwise orthonormal averages carry on,
    // differences are recorded finest-last once reversed.
    std::vector<std::vector<double>> levels_fine_first;
    while (approx.size() > 1) {
        const std::size_t half = approx.size() / 2;
        std::vector<double> next(half), detail(half);
        for (std::size_t i = 0; i < half; ++i) {
            next[i] = (approx[2 * i] + approx[2 * i + 1]) * kInvSqrt2;
            detail[i] = (approx[2 * i] - approx[2 * i + 1]) * kInvSqrt2;
        }
        levels_fine_first.push_back(std::move(detail));
        approx = std::move(next);
    }
    out.scaling = std::move(approx);
    out.details.assign(levels_fine_first.rbegin(), levels_fine_first.rend());
    return out;
}

HaarDwt haar_dwt_unflatten(const Eigen::VectorXd& flat) {
    const std::size_t N = static_cast<std::size_t>(flat.size());
    if (N == 0 || (N & (N - 1)) != 0) {
        throw std::invalid_argument("haar_dwt_unflatten: length must be a power of two");
    }
    HaarDwt out;
    out.scaling = {flat(0)};
    std::size_t pos = 1;
    std::size_t width = 1;
    while (pos < N) {
        std::vector<double> level(width);
        for (std::size_t i = 0; i < width; ++i) level[i] = flat(static_cast<Eigen::Index>(pos + i));
        out.details.push_back(std::move(level));
        pos += width;
        width *= 2;
    }
    return out;
}

std::vector<double> haar_idwt(const HaarDwt& dwt) {
    if (dwt.scaling.size() != 1) {
        throw std::invalid_argument("haar_idwt: expected full-depth transform");
    }
    std::vector<double> approx = dwt.scaling;
    for (const auto& detail : dwt.details) {
        if (detail.size() != approx.size()) {
            throw std::invalid_argument("haar_idwt: level sizes must double");
        }
        std::vector<double> next(2 * approx.size());
        for (std::size_t i = 0; i < approx.size(); ++i) {
            next[2 * i] = (approx[i] + detail[i]) * kInvSqrt2;
            next[2 * i + 1] = (approx[i] - detail[i]) * kInvSqrt2;
        }
        approx = std::move(next);
    }
    return approx;
}

HaarDwt hard_threshold(const HaarDwt& dwt, double tau) {
    if (!(tau >= 0.0)) throw std::invalid_argument("hard_threshold: tau must be >= 0");
    HaarDwt out = dwt;
    for (auto& level : out.details) {
        for (double& d : level) {
            if (std::abs(d) < tau) d = 0.0;
        }
    }
    return out;
}

double universal_threshold(const HaarDwt& dwt) {
    if (dwt.details.empty()) {
        throw std::invalid_argument("universal_threshold: no detail levels");
    }
    const std::vector<double>& finest = dwt.details.back();
    std::vector<double> mags(finest.size());
    for (std::size_t i = 0; i < finest.size(); ++i) mags[i] = std::abs(finest[i]);
    std::sort(mags.begin(), mags.end());
    const std::size_t n = mags.size();
    const double median = n % 2 == 1 ? mags[n / 2]
                                     : 0.5 * (mags[n / 2 - 1] + mags[n / 2]);
    const double sigma = median / 0.6745;
    const double N = static_cast<double>(dwt.size());
    return sigma * std::sqrt(2.0 * std::log(N));
}

std::vector<double> pad_reflect(std::span<const double> values, std::size_t target) {
    if (values.size() < 2 && values.size() < target) {
        throw std::invalid_argument("pad_reflect: need >= 2 samples to reflect");
    }
    if (values.size() > target) {
        throw std::invalid_argument("pad_reflect: already longer than target");
    }
    std::vector<double> out(values.begin(), values.end());
    out.reserve(target);
    // Mirror about the final sample, bouncing at the ends without repeats.
    std::size_t src = values.size() - 2;
    bool down = true;
    while (out.size() < target) {
        out.push_back(values[src]);
        if (down) {
            if (src == 0) {
                down = false;
                src = values.size() > 1 ? 1 : 0;
            } else {
                --src;
            }
        } else {
            if (src == values.size() - 1) {
                down = true;
                src = values.size() - 2;
            } else {
                ++src;
            }
        }
    }
    return out;
}

std::size_t next_power_of_two(std::size_t n) {
    if (n == 0) return 1;
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace fdc
