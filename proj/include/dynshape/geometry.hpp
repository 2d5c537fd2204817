#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dynshape/errors.hpp"

namespace dynshape {

/// Square-pixel image raster centered on the origin.
struct ImageGrid {
    int nx = 0;
    int ny = 0;
    double pixel_size = 1.0;

    int pixels() const { return nx * ny; }

    void validate() const {
        require(nx >= 1 && ny >= 1, "ImageGrid: nx and ny must be >= 1");
        require(pixel_size > 0, "ImageGrid: pixel_size must be > 0");
    }
};

/// 1-D detector, bins centered on the origin along the detector axis.
struct DetectorArray {
    int n_det = 0;
    double det_spacing = 1.0;

    /// Signed distance of bin center j from the rotation axis.
    double bin_center(int j) const {
        return (j - 0.5 * (n_det - 1)) * det_spacing;
    }

    void validate() const {
        require(n_det >= 1, "DetectorArray: n_det must be >= 1");
        require(det_spacing > 0, "DetectorArray: det_spacing must be > 0");
    }
};

/// Convention: one detector bin per grid column/row at unit coverage.
inline DetectorArray default_detector(const ImageGrid& g) {
    return DetectorArray{std::max(g.nx, g.ny), g.pixel_size};
}

/// Single-shot angle schedule: frame t (0-based) is measured at
/// theta1 + t * delta_theta degrees.
struct AngleSchedule {
    double theta1 = 0.0;
    double delta_theta = 5.0;
    int frames = 1;

    double angle_deg(int t) const { return theta1 + t * delta_theta; }

    void validate() const {
        require(frames >= 1, "AngleSchedule: frame count must be >= 1");
    }
};

/// Time series of 1-D projections, one row per frame.
struct Sinogram {
    AngleSchedule schedule;
    DetectorArray detector;
    ImageGrid grid;               // geometry the data was (or will be) matched to
    std::vector<double> data;     // frames x n_det, row-major

    double* row(int t) { return data.data() + static_cast<size_t>(t) * detector.n_det; }
    const double* row(int t) const {
        return data.data() + static_cast<size_t>(t) * detector.n_det;
    }

    void validate() const {
        schedule.validate();
        detector.validate();
        require(data.size() ==
                    static_cast<size_t>(schedule.frames) * detector.n_det,
                "Sinogram: data size does not match frames x n_det");
        for (double v : data)
            require(std::isfinite(v), "Sinogram: non-finite value");
    }
};

/// Spatiotemporal volume: frames stored contiguously, row-major per frame.
struct ImageSequence {
    int nx = 0;
    int ny = 0;
    int frames = 0;
    double pixel_size = 1.0;
    std::vector<double> data;

    ImageSequence() = default;
    ImageSequence(int nx_, int ny_, int frames_, double pixel_size_ = 1.0)
        : nx(nx_), ny(ny_), frames(frames_), pixel_size(pixel_size_),
          data(static_cast<size_t>(nx_) * ny_ * frames_, 0.0) {}

    int frame_pixels() const { return nx * ny; }
    size_t size() const { return data.size(); }

    std::span<double> frame(int t) {
        return {data.data() + static_cast<size_t>(t) * frame_pixels(),
                static_cast<size_t>(frame_pixels())};
    }
    std::span<const double> frame(int t) const {
        return {data.data() + static_cast<size_t>(t) * frame_pixels(),
                static_cast<size_t>(frame_pixels())};
    }

    ImageGrid grid() const { return ImageGrid{nx, ny, pixel_size}; }
};

inline double deg2rad(double deg) { return deg * M_PI / 180.0; }

} // namespace dynshape
