#pragma once

#include <cmath>
#include <vector>

#include "dynshape/dct.hpp"
#include "dynshape/errors.hpp"

namespace dynshape {

/// Smooth Heaviside with transition half-width epsilon:
/// 0 below -eps, 1 above +eps, C1 sigmoid in between.
inline double heaviside(double s, double epsilon) {
    require(epsilon > 0, "heaviside: epsilon must be > 0");
    if (s <= -epsilon) return 0.0;
    if (s >= epsilon) return 1.0;
    return 0.5 * (1.0 + s / epsilon + std::sin(M_PI * s / epsilon) / M_PI);
}

/// Derivative of the smooth Heaviside: a bump of width 2*eps integrating to 1.
inline double dirac(double s, double epsilon) {
    require(epsilon > 0, "dirac: epsilon must be > 0");
    if (std::abs(s) > epsilon) return 0.0;
    return (1.0 + std::cos(M_PI * s / epsilon)) / (2.0 * epsilon);
}

/// Derivative of the smooth Dirac, needed by the perimeter penalty gradient.
inline double dirac_prime(double s, double epsilon) {
    require(epsilon > 0, "dirac_prime: epsilon must be > 0");
    if (std::abs(s) > epsilon) return 0.0;
    return -(M_PI / (2.0 * epsilon * epsilon)) * std::sin(M_PI * s / epsilon);
}

/// Max gradient magnitude of phi over all three axes, central differences with
/// unit spacing, one-sided at the boundaries.
inline double max_gradient_magnitude(const std::vector<double>& phi, const DctDims& dims) {
    dims.validate();
    require(phi.size() == dims.voxels(), "max_gradient_magnitude: size mismatch");
    const int nx = dims.nx, ny = dims.ny, nt = dims.nt;
    auto at = [&](int x, int y, int t) {
        return phi[(static_cast<size_t>(t) * ny + y) * nx + x];
    };
    auto diff = [](double lo, double hi, int span) { return (hi - lo) / span; };
    double best = 0.0;
    for (int t = 0; t < nt; ++t)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                double gx = nx == 1 ? 0.0
                            : x == 0 ? diff(at(0, y, t), at(1, y, t), 1)
                            : x == nx - 1 ? diff(at(nx - 2, y, t), at(nx - 1, y, t), 1)
                            : diff(at(x - 1, y, t), at(x + 1, y, t), 2);
                double gy = ny == 1 ? 0.0
                            : y == 0 ? diff(at(x, 0, t), at(x, 1, t), 1)
                            : y == ny - 1 ? diff(at(x, ny - 2, t), at(x, ny - 1, t), 1)
                            : diff(at(x, y - 1, t), at(x, y + 1, t), 2);
                double gt = nt == 1 ? 0.0
                            : t == 0 ? diff(at(x, y, 0), at(x, y, 1), 1)
                            : t == nt - 1 ? diff(at(x, y, nt - 2), at(x, y, nt - 1), 1)
                            : diff(at(x, y, t - 1), at(x, y, t + 1), 2);
                double m = std::sqrt(gx * gx + gy * gy + gt * gt);
                if (m > best) best = m;
            }
    return best;
}

/// Heaviside-width heuristic: eps = kappa * max |grad phi|.
/// A flat phi has no usable width; the caller must reinitialize.
inline double epsilon_from_phi(const std::vector<double>& phi, const DctDims& dims,
                               double kappa) {
    require(kappa > 0, "epsilon_from_phi: kappa must be > 0");
    double g = max_gradient_magnitude(phi, dims);
    if (g <= 0.0)
        throw numerical_error("epsilon_from_phi: level-set function is constant");
    return kappa * g;
}

} // namespace dynshape
