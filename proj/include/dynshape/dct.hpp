#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dynshape/errors.hpp"

namespace dynshape {

/// Spatiotemporal transform extents (nx, ny fastest; nt slowest).
struct DctDims {
    int nx = 0;
    int ny = 0;
    int nt = 0;

    size_t voxels() const {
        return static_cast<size_t>(nx) * ny * nt;
    }
    void validate() const {
        require(nx >= 1 && ny >= 1 && nt >= 1, "DctDims: all counts must be >= 1");
    }
};

/// Low-frequency hyperrectangle: the lowest kx * ky * kt frequencies.
struct TruncationMask {
    int kx = 0;
    int ky = 0;
    int kt = 0;

    size_t count() const {
        return static_cast<size_t>(kx) * ky * kt;
    }
    void validate(const DctDims& dims) const {
        require(kx >= 1 && ky >= 1 && kt >= 1, "TruncationMask: empty mask");
        require(kx <= dims.nx && ky <= dims.ny && kt <= dims.nt,
                "TruncationMask: kept counts exceed dims");
    }
};

/// Truncated coefficient vector with its transform geometry.
struct DctCoeffs {
    DctDims dims;
    TruncationMask mask;
    std::vector<double> values;   // kx fastest, kt slowest

    void validate() const {
        dims.validate();
        mask.validate(dims);
        require(values.size() == mask.count(),
                "DctCoeffs: value count does not match mask");
    }
};

namespace detail {

/// Orthonormal DCT-II analysis matrix, row k (of n_out), column j (of n):
/// a_k cos(pi (2j+1) k / (2n)), a_0 = sqrt(1/n), a_k = sqrt(2/n).
inline std::vector<double> dct_matrix(int n, int n_out) {
    std::vector<double> m(static_cast<size_t>(n_out) * n);
    for (int k = 0; k < n_out; ++k) {
        double a = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
        for (int j = 0; j < n; ++j)
            m[static_cast<size_t>(k) * n + j] =
                a * std::cos(M_PI * (2 * j + 1) * k / (2.0 * n));
    }
    return m;
}

/// Applies an (n_out x n_in) matrix along one axis of a 3-D array laid out
/// (x fastest, t slowest). transpose=true applies the transpose (n_in x n_out
/// view of the same matrix), used for synthesis.
inline std::vector<double> apply_axis(const std::vector<double>& in, int d0, int d1,
                                      int d2, int axis, const std::vector<double>& mat,
                                      int n_out, bool transpose) {
    int n_in = axis == 0 ? d0 : axis == 1 ? d1 : d2;
    int o0 = axis == 0 ? n_out : d0;
    int o1 = axis == 1 ? n_out : d1;
    int o2 = axis == 2 ? n_out : d2;
    std::vector<double> out(static_cast<size_t>(o0) * o1 * o2, 0.0);
    auto idx = [](int i0, int i1, int i2, int s0, int s1) {
        return (static_cast<size_t>(i2) * s1 + i1) * s0 + i0;
    };
    // mat element (k, j): analysis uses mat[k*n_in + j]; synthesis (transpose)
    // uses mat[j*n_out_mat + k] where the stored matrix is (n_in_mat x ...).
    for (int i2 = 0; i2 < (axis == 2 ? 1 : d2); ++i2)
        for (int i1 = 0; i1 < (axis == 1 ? 1 : d1); ++i1)
            for (int i0 = 0; i0 < (axis == 0 ? 1 : d0); ++i0)
                for (int k = 0; k < n_out; ++k) {
                    double acc = 0.0;
                    for (int j = 0; j < n_in; ++j) {
                        double mkj = transpose
                                         ? mat[static_cast<size_t>(j) * n_out + k]
                                         : mat[static_cast<size_t>(k) * n_in + j];
                        int a0 = axis == 0 ? j : i0;
                        int a1 = axis == 1 ? j : i1;
                        int a2 = axis == 2 ? j : i2;
                        acc += mkj * in[idx(a0, a1, a2, d0, d1)];
                    }
                    int b0 = axis == 0 ? k : i0;
                    int b1 = axis == 1 ? k : i1;
                    int b2 = axis == 2 ? k : i2;
                    out[idx(b0, b1, b2, o0, o1)] = acc;
                }
    return out;
}

} // namespace detail

/// Full separable orthonormal DCT-II of an (nx, ny, nt) volume.
inline std::vector<double> dct_analyze(const std::vector<double>& volume,
                                       const DctDims& dims) {
    dims.validate();
    require(volume.size() == dims.voxels(), "dct_analyze: volume size mismatch");
    auto mx = detail::dct_matrix(dims.nx, dims.nx);
    auto my = detail::dct_matrix(dims.ny, dims.ny);
    auto mt = detail::dct_matrix(dims.nt, dims.nt);
    auto a = detail::apply_axis(volume, dims.nx, dims.ny, dims.nt, 0, mx, dims.nx, false);
    a = detail::apply_axis(a, dims.nx, dims.ny, dims.nt, 1, my, dims.ny, false);
    a = detail::apply_axis(a, dims.nx, dims.ny, dims.nt, 2, mt, dims.nt, false);
    return a;
}

/// Adjoint of the truncated synthesis: projects a volume onto the masked
/// low-frequency coefficients. With a full mask this equals dct_analyze.
inline DctCoeffs dct_analyze_masked(const std::vector<double>& volume,
                                    const DctDims& dims, const TruncationMask& mask) {
    dims.validate();
    mask.validate(dims);
    require(volume.size() == dims.voxels(), "dct_analyze_masked: volume size mismatch");
    auto mx = detail::dct_matrix(dims.nx, mask.kx);
    auto my = detail::dct_matrix(dims.ny, mask.ky);
    auto mt = detail::dct_matrix(dims.nt, mask.kt);
    auto a = detail::apply_axis(volume, dims.nx, dims.ny, dims.nt, 0, mx, mask.kx, false);
    a = detail::apply_axis(a, mask.kx, dims.ny, dims.nt, 1, my, mask.ky, false);
    a = detail::apply_axis(a, mask.kx, mask.ky, dims.nt, 2, mt, mask.kt, false);
    return DctCoeffs{dims, mask, std::move(a)};
}

/// Inverse transform (DCT-III composition); truncated coefficients behave as
/// zero-filled before synthesis.
inline std::vector<double> dct_synthesize(const DctCoeffs& coeffs) {
    coeffs.validate();
    const auto& d = coeffs.dims;
    const auto& m = coeffs.mask;
    auto mx = detail::dct_matrix(d.nx, m.kx);
    auto my = detail::dct_matrix(d.ny, m.ky);
    auto mt = detail::dct_matrix(d.nt, m.kt);
    auto v = detail::apply_axis(coeffs.values, m.kx, m.ky, m.kt, 2, mt, d.nt, true);
    v = detail::apply_axis(v, m.kx, m.ky, d.nt, 1, my, d.ny, true);
    v = detail::apply_axis(v, m.kx, d.ny, d.nt, 0, mx, d.nx, true);
    return v;
}

inline TruncationMask full_mask(const DctDims& dims) {
    return TruncationMask{dims.nx, dims.ny, dims.nt};
}

/// Kept fraction per axis: k_i = ceil(fraction * W_i).
inline TruncationMask make_mask(const DctDims& dims, double fraction) {
    dims.validate();
    require(fraction > 0.0 && fraction <= 1.0, "make_mask: fraction must be in (0, 1]");
    auto kept = [fraction](int n) {
        return std::min(n, static_cast<int>(std::ceil(fraction * n)));
    };
    return TruncationMask{kept(dims.nx), kept(dims.ny), kept(dims.nt)};
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline double norm1(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s += std::abs(v);
    return s;
}

} // namespace dynshape
