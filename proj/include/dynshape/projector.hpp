#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "dynshape/errors.hpp"
#include "dynshape/geometry.hpp"
#include "dynshape/parallel.hpp"

namespace dynshape {

/// Walks the ray {s * n(theta) + u * d(theta)} through the pixel raster and
/// reports every (pixel, intersection length) pair. n = (cos, sin) is the
/// detector axis, d = (-sin, cos) the ray direction. Rays missing the grid
/// visit nothing. Forward and adjoint share this traversal, which makes the
/// adjoint the exact transpose of the forward map.
template <typename Visit>
void trace_ray(const ImageGrid& g, double angle_deg, double s, Visit&& visit) {
    const double th = deg2rad(angle_deg);
    const double nx_ = std::cos(th), ny_ = std::sin(th);
    const double dx = -ny_, dy = nx_;
    const double px = s * nx_, py = s * ny_;
    const double p = g.pixel_size;
    const double xmin = -0.5 * g.nx * p, xmax = 0.5 * g.nx * p;
    const double ymin = -0.5 * g.ny * p, ymax = 0.5 * g.ny * p;

    // clip the ray parameter to the grid bounding box
    double umin = -std::numeric_limits<double>::infinity();
    double umax = std::numeric_limits<double>::infinity();
    const double tiny = 1e-12 * p;
    if (std::abs(dx) < 1e-14) {
        if (px <= xmin || px >= xmax) return;
    } else {
        double u1 = (xmin - px) / dx, u2 = (xmax - px) / dx;
        umin = std::max(umin, std::min(u1, u2));
        umax = std::min(umax, std::max(u1, u2));
    }
    if (std::abs(dy) < 1e-14) {
        if (py <= ymin || py >= ymax) return;
    } else {
        double u1 = (ymin - py) / dy, u2 = (ymax - py) / dy;
        umin = std::max(umin, std::min(u1, u2));
        umax = std::min(umax, std::max(u1, u2));
    }
    if (umin >= umax - tiny) return;

    // starting cell: nudge slightly inward along the ray
    double u = umin;
    double x0 = px + (u + tiny) * dx;
    double y0 = py + (u + tiny) * dy;
    int ix = std::clamp(static_cast<int>(std::floor((x0 - xmin) / p)), 0, g.nx - 1);
    int iy = std::clamp(static_cast<int>(std::floor((y0 - ymin) / p)), 0, g.ny - 1);
    const int sx = dx > 0 ? 1 : -1;
    const int sy = dy > 0 ? 1 : -1;

    while (u < umax - tiny) {
        double ux = std::numeric_limits<double>::infinity();
        double uy = std::numeric_limits<double>::infinity();
        if (std::abs(dx) >= 1e-14)
            ux = ((xmin + (ix + (sx > 0 ? 1 : 0)) * p) - px) / dx;
        if (std::abs(dy) >= 1e-14)
            uy = ((ymin + (iy + (sy > 0 ? 1 : 0)) * p) - py) / dy;
        double unext = std::min({ux, uy, umax});
        double len = unext - u;
        if (len > 0) visit(iy * g.nx + ix, len);
        if (unext >= umax - tiny) break;
        if (ux <= uy) ix += sx;
        if (uy <= ux) iy += sy;
        if (ix < 0 || ix >= g.nx || iy < 0 || iy >= g.ny) break;
        u = unext;
    }
}

/// Parallel-beam Radon projection of one image at one angle.
inline std::vector<double> radon_forward(std::span<const double> image,
                                         const ImageGrid& grid, double angle_deg,
                                         const DetectorArray& det) {
    grid.validate();
    det.validate();
    require(image.size() == static_cast<size_t>(grid.pixels()),
            "radon_forward: image size does not match grid");
    std::vector<double> proj(det.n_det, 0.0);
    for (int j = 0; j < det.n_det; ++j) {
        double acc = 0.0;
        trace_ray(grid, angle_deg, det.bin_center(j),
                  [&](int pix, double len) { acc += image[pix] * len; });
        proj[j] = acc;
    }
    return proj;
}

/// Exact transpose of radon_forward.
inline std::vector<double> radon_adjoint(std::span<const double> projection,
                                         const ImageGrid& grid, double angle_deg,
                                         const DetectorArray& det) {
    grid.validate();
    det.validate();
    require(projection.size() == static_cast<size_t>(det.n_det),
            "radon_adjoint: projection size does not match detector");
    std::vector<double> image(grid.pixels(), 0.0);
    for (int j = 0; j < det.n_det; ++j) {
        double w = projection[j];
        if (w == 0.0) continue;
        trace_ray(grid, angle_deg, det.bin_center(j),
                  [&](int pix, double len) { image[pix] += w * len; });
    }
    return image;
}

/// One projection per frame at the scheduled angle.
inline Sinogram forward_sequence(const ImageSequence& seq,
                                 const AngleSchedule& schedule,
                                 const DetectorArray& det) {
    schedule.validate();
    require(seq.frames == schedule.frames,
            "forward_sequence: sequence frame count does not match schedule");
    Sinogram sino;
    sino.schedule = schedule;
    sino.detector = det;
    sino.grid = seq.grid();
    sino.data.assign(static_cast<size_t>(schedule.frames) * det.n_det, 0.0);
    parallel_for(schedule.frames, [&](int t) {
        auto proj = radon_forward(seq.frame(t), seq.grid(), schedule.angle_deg(t), det);
        std::copy(proj.begin(), proj.end(), sino.row(t));
    });
    return sino;
}

/// Per-frame backprojection; exact transpose of forward_sequence.
inline ImageSequence adjoint_sequence(const Sinogram& sino, const ImageGrid& grid) {
    grid.validate();
    require(sino.data.size() ==
                static_cast<size_t>(sino.schedule.frames) * sino.detector.n_det,
            "adjoint_sequence: sinogram data does not match its geometry");
    ImageSequence seq(grid.nx, grid.ny, sino.schedule.frames, grid.pixel_size);
    parallel_for(sino.schedule.frames, [&](int t) {
        auto img = radon_adjoint({sino.row(t), static_cast<size_t>(sino.detector.n_det)},
                                 grid, sino.schedule.angle_deg(t), sino.detector);
        std::copy(img.begin(), img.end(), seq.frame(t).begin());
    });
    return seq;
}

} // namespace dynshape
