#pragma once

#include <algorithm>
#include <vector>

#include "dynshape/dct.hpp"
#include "dynshape/levelset.hpp"
#include "dynshape/metrics.hpp"

namespace dynshape {

struct CompressionResult {
    double mse = 0.0;
    double ssim = 0.0;    // mean per-frame SSIM
};

/// Truncated-DCT compression error of a volume with values in [0, 1].
///
/// Direct mode: truncate the volume's DCT, synthesize, clamp to [0, 1].
/// Level-set mode: map to the signed field 2v - 1, truncate its DCT,
/// synthesize, then apply the smooth Heaviside of width heaviside_width.
inline CompressionResult compression_error(const std::vector<double>& volume,
                                           const DctDims& dims, double fraction,
                                           bool use_levelset,
                                           double heaviside_width = 0.1) {
    dims.validate();
    require(volume.size() == dims.voxels(), "compression_error: volume size mismatch");
    auto mask = make_mask(dims, fraction);

    std::vector<double> recon;
    if (use_levelset) {
        std::vector<double> field(volume.size());
        for (size_t i = 0; i < volume.size(); ++i) field[i] = 2.0 * volume[i] - 1.0;
        auto coeffs = dct_analyze_masked(field, dims, mask);
        recon = dct_synthesize(coeffs);
        for (auto& v : recon) v = heaviside(v, heaviside_width);
    } else {
        auto coeffs = dct_analyze_masked(volume, dims, mask);
        recon = dct_synthesize(coeffs);
        for (auto& v : recon) v = std::clamp(v, 0.0, 1.0);
    }

    CompressionResult r;
    r.mse = mse(volume, recon);
    const size_t fp = static_cast<size_t>(dims.nx) * dims.ny;
    double acc = 0.0;
    for (int t = 0; t < dims.nt; ++t)
        acc += ssim({volume.data() + t * fp, fp}, {recon.data() + t * fp, fp}, dims.nx,
                    dims.ny);
    r.ssim = acc / dims.nt;
    return r;
}

} // namespace dynshape
