#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dynshape/errors.hpp"

namespace dynshape {

/// Euclidean projection onto the l1 ball of radius tau.
/// Interior points pass through; otherwise soft-threshold at the unique
/// theta >= 0 with sum max(|v_i| - theta, 0) = tau (sort-based simplex rule).
inline std::vector<double> project_l1_ball(std::vector<double> v, double tau) {
    require(tau > 0, "project_l1_ball: tau must be > 0");
    double l1 = 0.0;
    for (double x : v) l1 += std::abs(x);
    if (l1 <= tau) return v;

    std::vector<double> u(v.size());
    for (size_t i = 0; i < v.size(); ++i) u[i] = std::abs(v[i]);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (size_t k = 0; k < u.size(); ++k) {
        cum += u[k];
        double cand = (cum - tau) / static_cast<double>(k + 1);
        if (u[k] > cand) theta = cand;
        else break;
    }
    for (auto& x : v) {
        double mag = std::max(std::abs(x) - theta, 0.0);
        x = x < 0 ? -mag : mag;
    }
    return v;
}

} // namespace dynshape
