// dynshape: single-shot dynamic tomography experiments.
//
// Subcommands: phantom, simulate, reconstruct, metrics, compress-study,
// export. Each takes an experiment config file; individual keys can be
// overridden with --set section.key=value.

#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dynshape/baselines.hpp"
#include "dynshape/compression.hpp"
#include "dynshape/config.hpp"
#include "dynshape/dss.hpp"
#include "dynshape/io.hpp"
#include "dynshape/metrics.hpp"
#include "dynshape/phantoms.hpp"
#include "dynshape/projector.hpp"

namespace fs = std::filesystem;
using namespace dynshape;

namespace {

const std::set<std::string> kSchema = {
    "/output_dir", "/seed",
    "phantom/kind", "phantom/n", "phantom/frames", "phantom/radius",
    "phantom/frequency", "phantom/amplitude",
    "geometry/theta1", "geometry/delta_theta", "geometry/n_det",
    "geometry/det_spacing", "geometry/pixel_size",
    "noise/snr_db",
    "method/name", "method/tau", "method/outer_iters", "method/inner_iters",
    "method/kappa0", "method/kappa_decay", "method/dct_fraction",
    "method/bin_size", "method/alpha_tv", "method/beta_temporal", "method/tv_mu",
    "method/max_iters", "method/css_tau", "method/css_fraction",
    "method/gray_levels", "method/perimeter_lambda",
    "study/fractions", "study/heaviside_width",
    "export/format", "export/stride",
};

struct Context {
    ExperimentConfig cfg;
    fs::path out_dir;
    uint64_t seed = 0;
};

Context make_context(const std::string& config_path,
                     const std::vector<std::string>& overrides,
                     const std::string& out_flag) {
    Context ctx;
    ctx.cfg = ExperimentConfig::from_file(config_path);
    for (const auto& o : overrides) ctx.cfg.set_override(o);
    ctx.cfg.validate_schema(kSchema);
    std::string dir = out_flag.empty() ? ctx.cfg.str("", "output_dir", "out") : out_flag;
    ctx.out_dir = dir;
    double seed = ctx.cfg.num("", "seed", 0);
    require(seed >= 0, "seed must be >= 0");
    ctx.seed = static_cast<uint64_t>(seed);
    return ctx;
}

ImageSequence build_phantom(const Context& ctx) {
    const auto& c = ctx.cfg;
    std::string kind = c.str("phantom", "kind", "rigid-balls");
    int n = c.integer("phantom", "n", 64);
    if (kind == "rigid-balls") {
        int frames = c.integer("phantom", "frames", 64);
        auto spec = RigidBallSpec::defaults(n, frames);
        double radius = c.num("phantom", "radius", 0.08);
        for (auto& b : spec.balls) b.radius = radius * n;
        spec.seed = ctx.seed;
        return rigid_balls(spec);
    }
    if (kind == "nonrigid-bell") {
        NonRigidSpec spec;
        spec.n = n;
        spec.frames = c.integer("phantom", "frames", 360);
        spec.frequency = c.num("phantom", "frequency", 10.0);
        spec.amplitude = c.num("phantom", "amplitude", 2.0);
        spec.base = bell_base(n);
        spec.seed = ctx.seed;
        return nonrigid_bell(spec);
    }
    throw config_error("unknown phantom.kind: " + kind);
}

struct Geometry {
    AngleSchedule schedule;
    DetectorArray detector;
};

Geometry build_geometry(const Context& ctx, const ImageGrid& grid, int frames) {
    Geometry g;
    g.schedule.theta1 = ctx.cfg.num("geometry", "theta1", 0.0);
    g.schedule.delta_theta = ctx.cfg.num("geometry", "delta_theta", 5.0);
    g.schedule.frames = frames;
    int n_det = ctx.cfg.integer("geometry", "n_det", 0);
    double spacing = ctx.cfg.num("geometry", "det_spacing",
                                 ctx.cfg.num("geometry", "pixel_size", grid.pixel_size));
    g.detector = n_det > 0 ? DetectorArray{n_det, spacing} : default_detector(grid);
    return g;
}

ReconConfig build_recon_config(const Context& ctx) {
    const auto& c = ctx.cfg;
    ReconConfig rc;
    rc.tau = c.num("method", "tau", 0.0);
    rc.outer_iters = c.integer("method", "outer_iters", rc.outer_iters);
    rc.inner_iters = c.integer("method", "inner_iters", rc.inner_iters);
    rc.kappa0 = c.num("method", "kappa0", rc.kappa0);
    rc.kappa_decay = c.num("method", "kappa_decay", rc.kappa_decay);
    rc.dct_fraction = c.num("method", "dct_fraction", rc.dct_fraction);
    return rc;
}

BaselineConfig build_baseline_config(const Context& ctx) {
    const auto& c = ctx.cfg;
    BaselineConfig bc;
    bc.bin_size = c.integer("method", "bin_size", bc.bin_size);
    bc.alpha_tv = c.num("method", "alpha_tv", bc.alpha_tv);
    bc.beta_temporal = c.num("method", "beta_temporal", bc.beta_temporal);
    bc.tv_mu = c.num("method", "tv_mu", bc.tv_mu);
    bc.max_iters = c.integer("method", "max_iters", bc.max_iters);
    bc.css_tau = c.num("method", "css_tau", bc.css_tau);
    bc.css_fraction = c.num("method", "css_fraction", bc.css_fraction);
    return bc;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw config_error("bad " + what + " entry: " + item);
        }
    }
    require(!out.empty(), what + " list is empty");
    return out;
}

int cmd_phantom(const Context& ctx) {
    auto seq = build_phantom(ctx);
    fs::create_directories(ctx.out_dir);
    write_sequence((ctx.out_dir / "phantom").string(), seq);
    std::cout << "wrote " << (ctx.out_dir / "phantom").string() << ".{raw,hdr} ("
              << seq.nx << "x" << seq.ny << "x" << seq.frames << ")\n";
    return 0;
}

int cmd_simulate(const Context& ctx, const std::string& phantom_base) {
    std::string base =
        phantom_base.empty() ? (ctx.out_dir / "phantom").string() : phantom_base;
    auto seq = read_sequence(base);
    auto geo = build_geometry(ctx, seq.grid(), seq.frames);
    auto sino = forward_sequence(seq, geo.schedule, geo.detector);
    double snr = ctx.cfg.num("noise", "snr_db",
                             std::numeric_limits<double>::infinity());
    sino = add_awgn(std::move(sino), snr, ctx.seed);
    fs::create_directories(ctx.out_dir);
    write_sinogram((ctx.out_dir / "sinogram").string(), sino);
    std::cout << "wrote " << (ctx.out_dir / "sinogram").string() << ".{raw,hdr} ("
              << sino.schedule.frames << "x" << sino.detector.n_det << ")\n";
    return 0;
}

int cmd_reconstruct(const Context& ctx, const std::string& sino_base) {
    std::string base =
        sino_base.empty() ? (ctx.out_dir / "sinogram").string() : sino_base;
    auto sino = read_sinogram(base);
    sino.validate();
    ImageGrid grid = sino.grid;
    std::string method = ctx.cfg.str("method", "name", "dss");
    fs::create_directories(ctx.out_dir);
    std::string recon_base = (ctx.out_dir / "recon").string();

    if (method == "static" || method == "css") {
        auto bc = build_baseline_config(ctx);
        auto bins = bin_measurements(sino, std::min(bc.bin_size, sino.schedule.frames));
        std::vector<std::vector<double>> images(bins.size());
        auto rc = build_recon_config(ctx);
        for (size_t b = 0; b < bins.size(); ++b)
            images[b] = method == "static"
                            ? static_tv_reconstruct(bins[b], grid, bc)
                            : css_reconstruct(bins[b], grid, bc, rc);
        auto seq = expand_bins(bins, images, grid, sino.schedule.frames);
        write_sequence(recon_base, seq);
    } else if (method == "boxl2") {
        auto bc = build_baseline_config(ctx);
        auto seq = boxl2_reconstruct(sino, grid, bc);
        write_sequence(recon_base, seq);
    } else if (method == "dss" || method == "dss-atten" || method == "dss-multilevel" ||
               method == "dss-perim") {
        auto rc = build_recon_config(ctx);
        ExtensionConfig ext;
        if (method == "dss-atten") ext.fit_attenuation = true;
        if (method == "dss-multilevel")
            ext.gray_levels = parse_list(
                ctx.cfg.str("method", "gray_levels", ""), "method.gray_levels");
        if (method == "dss-perim")
            ext.perimeter_lambda = ctx.cfg.num("method", "perimeter_lambda", 0.0);
        auto res = method == "dss-atten" ? dss_attenuation(sino, grid, rc, ext)
                                         : dss_reconstruct(sino, grid, rc, ext);
        write_sequence(recon_base, res.reconstruction);
        write_coeffs((ctx.out_dir / "coeffs").string(), res.alpha);
        write_trace_csv((ctx.out_dir / "trace.csv").string(), res.trace);
        if (res.stagnated)
            std::cerr << "note: optimizer stagnated in at least one outer iteration\n";
    } else {
        throw config_error("unknown method.name: " + method);
    }
    std::cout << "wrote " << recon_base << ".{raw,hdr}\n";
    return 0;
}

int cmd_metrics(const Context& ctx, const std::string& gt_base,
                const std::string& recon_base) {
    std::string gt = gt_base.empty() ? (ctx.out_dir / "phantom").string() : gt_base;
    std::string rec =
        recon_base.empty() ? (ctx.out_dir / "recon").string() : recon_base;
    auto r = report(read_sequence(gt), read_sequence(rec));
    fs::create_directories(ctx.out_dir);
    write_metrics_csv((ctx.out_dir / "metrics.csv").string(), r);
    std::cout << "mean psnr " << r.mean_psnr << " dB, ssim " << r.mean_ssim
              << ", dice " << r.mean_dice << "\n";
    return 0;
}

int cmd_compress_study(const Context& ctx, const std::string& phantom_base) {
    std::string base =
        phantom_base.empty() ? (ctx.out_dir / "phantom").string() : phantom_base;
    auto seq = read_sequence(base);
    for (double v : seq.data)
        require(v == 0.0 || v == 1.0, "compress-study expects a binary phantom");
    auto fractions = parse_list(
        ctx.cfg.str("study", "fractions", "0.01,0.02,0.05,0.1,0.2"), "study.fractions");
    double eps = ctx.cfg.num("study", "heaviside_width", 0.1);
    DctDims dims{seq.nx, seq.ny, seq.frames};

    // time-permuted copy (fixed seed) for the randomized-motion comparison
    std::vector<int> perm(seq.frames);
    for (int t = 0; t < seq.frames; ++t) perm[t] = t;
    std::mt19937_64 rng(ctx.seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    ImageSequence permuted(seq.nx, seq.ny, seq.frames, seq.pixel_size);
    for (int t = 0; t < seq.frames; ++t) {
        auto src = seq.frame(perm[t]);
        std::copy(src.begin(), src.end(), permuted.frame(t).begin());
    }

    fs::create_directories(ctx.out_dir);
    std::ofstream f(ctx.out_dir / "compress.csv");
    if (!f) throw io_error("cannot open compress.csv for writing");
    f << "fraction,phantom,mode,mse,ssim\n";
    f.precision(17);
    for (double frac : fractions) {
        for (int levelset = 0; levelset <= 1; ++levelset) {
            auto smooth = compression_error(seq.data, dims, frac, levelset != 0, eps);
            auto random = compression_error(permuted.data, dims, frac, levelset != 0, eps);
            const char* mode = levelset ? "levelset" : "direct";
            f << frac << ",smooth," << mode << ',' << smooth.mse << ',' << smooth.ssim
              << "\n";
            f << frac << ",permuted," << mode << ',' << random.mse << ',' << random.ssim
              << "\n";
        }
    }
    std::cout << "wrote " << (ctx.out_dir / "compress.csv").string() << "\n";
    return 0;
}

int cmd_export(const Context& ctx, const std::string& recon_base) {
    std::string base =
        recon_base.empty() ? (ctx.out_dir / "recon").string() : recon_base;
    auto seq = read_sequence(base);
    std::string format = ctx.cfg.str("export", "format", "pgm");
    require(format == "pgm" || format == "png", "export.format must be pgm or png");
    int stride = ctx.cfg.integer("export", "stride", 1);
    require(stride >= 1, "export.stride must be >= 1");
    fs::path dir = ctx.out_dir / "frames";
    fs::create_directories(dir);
    int written = 0;
    for (int t = 0; t < seq.frames; t += stride) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.%s", t, format.c_str());
        if (format == "pgm")
            write_pgm((dir / name).string(), seq.frame(t), seq.nx, seq.ny);
        else
            write_png((dir / name).string(), seq.frame(t), seq.nx, seq.ny);
        ++written;
    }
    std::cout << "wrote " << written << " " << format << " frames to " << dir.string()
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-shot dynamic tomography of discrete objects"};
    app.require_subcommand(1);

    std::string config_path, out_flag, phantom_base, sino_base, gt_base, recon_base;
    std::vector<std::string> overrides;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "experiment config file")->required();
        sub->add_option("--set", overrides, "override section.key=value");
        sub->add_option("--out", out_flag, "output directory (overrides config)");
    };

    auto* sc_phantom = app.add_subcommand("phantom", "generate a dynamic phantom");
    add_common(sc_phantom);
    auto* sc_simulate = app.add_subcommand("simulate", "simulate the acquisition");
    add_common(sc_simulate);
    sc_simulate->add_option("--phantom", phantom_base, "phantom file base");
    auto* sc_recon = app.add_subcommand("reconstruct", "run a reconstruction method");
    add_common(sc_recon);
    sc_recon->add_option("--sinogram", sino_base, "sinogram file base");
    auto* sc_metrics = app.add_subcommand("metrics", "score a reconstruction");
    add_common(sc_metrics);
    sc_metrics->add_option("--gt", gt_base, "ground-truth volume base");
    sc_metrics->add_option("--recon", recon_base, "reconstruction volume base");
    auto* sc_study = app.add_subcommand("compress-study", "DCT compression comparison");
    add_common(sc_study);
    sc_study->add_option("--phantom", phantom_base, "phantom file base");
    auto* sc_export = app.add_subcommand("export", "export frames as images");
    add_common(sc_export);
    sc_export->add_option("--recon", recon_base, "volume file base");

    CLI11_PARSE(app, argc, argv);

    try {
        auto ctx = make_context(config_path, overrides, out_flag);
        if (sc_phantom->parsed()) return cmd_phantom(ctx);
        if (sc_simulate->parsed()) return cmd_simulate(ctx, phantom_base);
        if (sc_recon->parsed()) return cmd_reconstruct(ctx, sino_base);
        if (sc_metrics->parsed()) return cmd_metrics(ctx, gt_base, recon_base);
        if (sc_study->parsed()) return cmd_compress_study(ctx, phantom_base);
        if (sc_export->parsed()) return cmd_export(ctx, recon_base);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
