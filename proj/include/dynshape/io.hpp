#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "dynshape/dss.hpp"
#include "dynshape/errors.hpp"
#include "dynshape/geometry.hpp"
#include "dynshape/metrics.hpp"

namespace dynshape {

// Volumes and sinograms are stored as raw little-endian float32 with a
// sidecar `<base>.hdr` text file describing the geometry. The raw payload is
// `<base>.raw`.

namespace detail {

inline void write_f32(const std::string& path, const std::vector<double>& data) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open for writing: " + path);
    std::vector<float> buf(data.begin(), data.end());
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!f) throw io_error("write failed: " + path);
}

inline std::vector<double> read_f32(const std::string& path, size_t count) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open for reading: " + path);
    std::vector<float> buf(count);
    f.read(reinterpret_cast<char*>(buf.data()),
           static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<size_t>(f.gcount()) != count * sizeof(float))
        throw io_error("short read: " + path);
    return {buf.begin(), buf.end()};
}

inline void write_header(const std::string& path, const std::string& kind,
                         const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << "dynshape " << kind << " v1\n";
    for (const auto& [k, v] : kv) f << k << " = " << v << "\n";
    if (!f) throw io_error("write failed: " + path);
}

inline std::map<std::string, std::string> read_header(const std::string& path,
                                                      const std::string& kind) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(f, line) || line != "dynshape " + kind + " v1")
        throw io_error("bad header magic in " + path);
    std::map<std::string, std::string> kv;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw io_error("malformed header line: " + line);
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t");
            size_t b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline double header_num(const std::map<std::string, std::string>& kv,
                         const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw io_error("missing header key: " + key);
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw io_error("bad numeric header value for " + key + ": " + it->second);
    }
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace detail

inline void write_sequence(const std::string& base, const ImageSequence& seq) {
    detail::write_f32(base + ".raw", seq.data);
    detail::write_header(base + ".hdr", "volume",
                         {{"nx", std::to_string(seq.nx)},
                          {"ny", std::to_string(seq.ny)},
                          {"T", std::to_string(seq.frames)},
                          {"pixel_size", detail::fmt(seq.pixel_size)}});
}

inline ImageSequence read_sequence(const std::string& base) {
    auto kv = detail::read_header(base + ".hdr", "volume");
    ImageSequence seq(static_cast<int>(detail::header_num(kv, "nx")),
                      static_cast<int>(detail::header_num(kv, "ny")),
                      static_cast<int>(detail::header_num(kv, "T")),
                      detail::header_num(kv, "pixel_size"));
    seq.data = detail::read_f32(base + ".raw", seq.size());
    return seq;
}

inline void write_sinogram(const std::string& base, const Sinogram& sino) {
    detail::write_f32(base + ".raw", sino.data);
    detail::write_header(base + ".hdr", "sinogram",
                         {{"T", std::to_string(sino.schedule.frames)},
                          {"n_det", std::to_string(sino.detector.n_det)},
                          {"det_spacing", detail::fmt(sino.detector.det_spacing)},
                          {"theta1", detail::fmt(sino.schedule.theta1)},
                          {"delta_theta", detail::fmt(sino.schedule.delta_theta)},
                          {"pixel_size", detail::fmt(sino.grid.pixel_size)},
                          {"nx", std::to_string(sino.grid.nx)},
                          {"ny", std::to_string(sino.grid.ny)}});
}

inline Sinogram read_sinogram(const std::string& base) {
    auto kv = detail::read_header(base + ".hdr", "sinogram");
    Sinogram sino;
    sino.schedule.frames = static_cast<int>(detail::header_num(kv, "T"));
    sino.schedule.theta1 = detail::header_num(kv, "theta1");
    sino.schedule.delta_theta = detail::header_num(kv, "delta_theta");
    sino.detector.n_det = static_cast<int>(detail::header_num(kv, "n_det"));
    sino.detector.det_spacing = detail::header_num(kv, "det_spacing");
    sino.grid.nx = static_cast<int>(detail::header_num(kv, "nx"));
    sino.grid.ny = static_cast<int>(detail::header_num(kv, "ny"));
    sino.grid.pixel_size = detail::header_num(kv, "pixel_size");
    sino.data = detail::read_f32(
        base + ".raw",
        static_cast<size_t>(sino.schedule.frames) * sino.detector.n_det);
    return sino;
}

/// Binary 8-bit PGM (P5); pixel values = clamp(round(255 * x)).
inline void write_pgm(const std::string& path, std::span<const double> image, int nx,
                      int ny) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << "P5\n" << nx << " " << ny << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(nx) * ny);
    for (size_t i = 0; i < row.size(); ++i) {
        double v = std::clamp(image[i], 0.0, 1.0);
        row[i] = static_cast<uint8_t>(std::lround(255.0 * v));
    }
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size()));
    if (!f) throw io_error("write failed: " + path);
}

namespace detail {

inline void png_chunk(std::ofstream& f, const char type[4],
                      const std::vector<uint8_t>& payload) {
    auto be32 = [](uint32_t v) {
        return std::array<uint8_t, 4>{static_cast<uint8_t>(v >> 24),
                                      static_cast<uint8_t>(v >> 16),
                                      static_cast<uint8_t>(v >> 8),
                                      static_cast<uint8_t>(v)};
    };
    auto len = be32(static_cast<uint32_t>(payload.size()));
    f.write(reinterpret_cast<const char*>(len.data()), 4);
    std::vector<uint8_t> body(type, type + 4);
    body.insert(body.end(), payload.begin(), payload.end());
    f.write(reinterpret_cast<const char*>(body.data()),
            static_cast<std::streamsize>(body.size()));
    uint32_t crc = static_cast<uint32_t>(
        ::crc32(0L, body.data(), static_cast<uInt>(body.size())));
    auto c = be32(crc);
    f.write(reinterpret_cast<const char*>(c.data()), 4);
}

} // namespace detail

/// Minimal 8-bit grayscale PNG writer (zlib-compressed scanlines).
inline void write_png(const std::string& path, std::span<const double> image, int nx,
                      int ny) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open for writing: " + path);
    static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    f.write(reinterpret_cast<const char*>(sig), 8);
    std::vector<uint8_t> ihdr(13, 0);
    auto put32 = [&](std::vector<uint8_t>& v, size_t at, uint32_t x) {
        v[at] = x >> 24; v[at + 1] = x >> 16; v[at + 2] = x >> 8; v[at + 3] = x;
    };
    put32(ihdr, 0, static_cast<uint32_t>(nx));
    put32(ihdr, 4, static_cast<uint32_t>(ny));
    ihdr[8] = 8;    // bit depth
    ihdr[9] = 0;    // grayscale
    detail::png_chunk(f, "IHDR", ihdr);
    std::vector<uint8_t> scan(static_cast<size_t>(ny) * (nx + 1));
    for (int y = 0; y < ny; ++y) {
        scan[static_cast<size_t>(y) * (nx + 1)] = 0;   // no filter
        for (int x = 0; x < nx; ++x) {
            double v = std::clamp(image[static_cast<size_t>(y) * nx + x], 0.0, 1.0);
            scan[static_cast<size_t>(y) * (nx + 1) + 1 + x] =
                static_cast<uint8_t>(std::lround(255.0 * v));
        }
    }
    uLongf bound = ::compressBound(static_cast<uLong>(scan.size()));
    std::vector<uint8_t> idat(bound);
    if (::compress2(idat.data(), &bound, scan.data(), static_cast<uLong>(scan.size()),
                    9) != Z_OK)
        throw io_error("png compression failed: " + path);
    idat.resize(bound);
    detail::png_chunk(f, "IDAT", idat);
    detail::png_chunk(f, "IEND", {});
    if (!f) throw io_error("write failed: " + path);
}

inline void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << "outer,inner,objective,gamma,epsilon,alpha_l1,stagnated\n";
    f.precision(17);
    for (const auto& r : trace)
        f << r.outer << ',' << r.inner << ',' << r.objective << ',' << r.gamma << ','
          << r.epsilon << ',' << r.alpha_l1 << ',' << (r.stagnated ? 1 : 0) << "\n";
    if (!f) throw io_error("write failed: " + path);
}

inline void write_metrics_csv(const std::string& path, const MetricReport& r) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << "frame,psnr_db,ssim,dice\n";
    f.precision(17);
    for (size_t t = 0; t < r.psnr_db.size(); ++t)
        f << t << ',' << r.psnr_db[t] << ',' << r.ssim_val[t] << ',' << r.dice_val[t]
          << "\n";
    f << "mean," << r.mean_psnr << ',' << r.mean_ssim << ',' << r.mean_dice << "\n";
    if (!f) throw io_error("write failed: " + path);
}

inline void write_coeffs(const std::string& base, const DctCoeffs& c) {
    detail::write_f32(base + ".raw", c.values);
    detail::write_header(base + ".hdr", "coeffs",
                         {{"nx", std::to_string(c.dims.nx)},
                          {"ny", std::to_string(c.dims.ny)},
                          {"T", std::to_string(c.dims.nt)},
                          {"kx", std::to_string(c.mask.kx)},
                          {"ky", std::to_string(c.mask.ky)},
                          {"kt", std::to_string(c.mask.kt)}});
}

} // namespace dynshape
