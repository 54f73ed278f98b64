#include "cephforge/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "cephforge/cephgeom.hpp"
#include "cephforge/dataset.hpp"
#include "cephforge/film.hpp"
#include "cephforge/io.hpp"
#include "cephforge/metrics.hpp"
#include "cephforge/parallel.hpp"
#include "cephforge/pipeline.hpp"
#include "cephforge/projector.hpp"
#include "cephforge/volume.hpp"

namespace cephforge::cli {

namespace fs = std::filesystem;

namespace {

// "d0=650,d1=950" -> geometry distances.
void apply_geometry(const std::string& text, ConeGeometry& g) {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ValidationError("--geom expects key=value pairs, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        const double value = io::parse_doubles(item.substr(eq + 1), 1)[0];
        if (key == "d0")
            g.d0 = value;
        else if (key == "d1")
            g.d1 = value;
        else
            throw ValidationError("unknown geometry key '" + key + "' (d0, d1)");
    }
    if (g.d0 >= g.d1)
        throw ValidationError("invalid geometry: d0 (source-isocenter, " + std::to_string(g.d0) +
                              " mm) must be smaller than d1 (source-detector, " + std::to_string(g.d1) +
                              " mm); were the two distances swapped?");
}

DetectorGrid parse_grid(const std::string& text) {
    const auto v = io::parse_doubles(text, 4);
    if (v[0] < 1 || v[1] < 1 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1]))
        throw ValidationError("grid '" + text + "' needs integer pixel counts nu,nv,su,sv");
    DetectorGrid g{std::size_t(v[0]), std::size_t(v[1]), v[2], v[3]};
    g.validate();
    return g;
}

Vec2 parse_point(const std::string& text) {
    const auto v = io::parse_doubles(text, 2);
    return {v[0], v[1]};
}

void write_cephalogram(const fs::path& path, const Cephalogram8& c) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_cephalogram(path, c);
}

struct FilmFlags {
    double c1 = 40, c2 = 5, t = 2.6, s = 1.5, c3 = 18, tau1 = 0.1, tau2 = 1.2;
    std::optional<double> c4;
    std::string params_file;

    void add(CLI::App* cmd) {
        cmd->add_option("--c1", c1, "film base gray level")->capture_default_str();
        cmd->add_option("--c2", c2, "saturation margin below 255")->capture_default_str();
        cmd->add_option("--t", t, "integral shift of the sigmoid")->capture_default_str();
        cmd->add_option("--s", s, "sigmoid slope")->capture_default_str();
        cmd->add_option("--c3", c3, "low-range base gray level")->capture_default_str();
        cmd->add_option("--c4", c4, "low-range span (default: derived for continuity at tau2)");
        cmd->add_option("--tau1", tau1, "air threshold on the integral")->capture_default_str();
        cmd->add_option("--tau2", tau2, "soft-tissue threshold on the integral")->capture_default_str();
        cmd->add_option("--film-params", params_file, "key=value film parameter file (overrides the flags)")
            ->check(CLI::ExistingFile);
    }
    ModifiedSigmoidParams resolve() const {
        if (!params_file.empty()) return read_film_params(params_file);
        ModifiedSigmoidParams p{{c1, c2, t, s}, c3, c4, tau1, tau2};
        p.validate();
        return p;
    }
};

struct EnhanceFlags {
    EnhanceParams p;
    void add(CLI::App* cmd) {
        cmd->add_option("--a", p.bone_weight, "bone weight")->capture_default_str();
        cmd->add_option("--bone-threshold", p.bone_threshold, "HU above which voxels count as bone")->capture_default_str();
        cmd->add_option("--air-threshold", p.air_threshold, "HU below which voxels reset to air")->capture_default_str();
    }
};

class Runner {
public:
    Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int main(const std::vector<std::string>& args);

private:
    void build();
    void dispatch();

    std::ostream& out_;
    std::ostream& err_;
    CLI::App app_{"cephforge: cephalogram synthesis from CBCT volumes and projections"};
    unsigned threads_ = default_thread_count();

    // option storage, one block per subcommand
    CLI::App *synth_ = nullptr, *project_ = nullptr, *mip_ = nullptr, *rebin_ = nullptr, *envelope_ = nullptr,
             *quadrants_ = nullptr, *pack_ = nullptr, *type2_ = nullptr, *sr_ = nullptr, *quantize_ = nullptr,
             *rmse_ = nullptr, *profile_ = nullptr, *sdr_ = nullptr, *fit_ = nullptr;

    std::string volume_, out_path_, projection_ = "orthogonal", curve_ = "modified", integral_out_;
    bool recover_air_ = false;
    std::size_t mip_k_ = 50;
    std::string size_ = "512,512", grid_spacing_ = "0.5,0.5";
    double mu_water_ = 0.0203, rate_ = 3.0;
    std::vector<double> rotation_, translation_;
    FilmFlags film_;
    EnhanceFlags enhance_;

    std::string mode_ = "orthogonal", geom_ = "d0=650,d1=950", detector_;
    int angle_ = 0;
    bool flip_ = false, enhance_flag_ = false;

    std::string proj_, vd_ = "512,512,0.5,0.5";

    double y0_ = 0, z0_ = 0, edge_ = 0, x_min_ = 0, x_max_ = 0, d0_ = 650;

    std::string image_, out_dir_;
    bool normalize_ = false;

    std::string p0_path_, p180_path_, quadrant_ = "Q1";

    std::string list_, root_, cache_dir_;

    std::vector<std::string> inputs_;
    std::uint64_t seed_ = 20;
    std::size_t per_image_ = 42;
    std::string blur_ = "alternate";

    double lo_ = 0.0, hi_ = 6.0;

    std::string a_path_, b_path_;
    double peak_ = 255.0;

    std::string p0_, p1_;
    std::size_t samples_ = 100;
    double spacing_override_ = 0.0;

    std::string detected_, reference_, radii_ = "2,2.5,3,4";
    bool tsv_ = false;
    double pixel_spacing_ = 0.0;

    std::string samples_path_;
};

void Runner::build() {
    app_.set_config("--config", "", "key=value configuration file (use [subcommand] sections)");
    app_.add_option("--threads", threads_, "worker threads")->envname("CEPHFORGE_THREADS")->capture_default_str();
    app_.require_subcommand(1, 1);
    app_.fallthrough();

    synth_ = app_.add_subcommand("synth-type1", "synthesize a cephalogram from a CT volume");
    synth_->add_option("--volume", volume_, "volume sidecar (.meta) or payload (.raw)")->required();
    synth_->add_option("--out", out_path_, "output PNG (a .meta sidecar is written next to it)")->required();
    synth_->add_option("--projection", projection_, "orthogonal | perspective (Wehmer cephalostat)")
        ->check(CLI::IsMember({"orthogonal", "perspective"}))
        ->capture_default_str();
    synth_->add_option("--curve", curve_, "modified | original | mip")
        ->check(CLI::IsMember({"modified", "original", "mip"}))
        ->capture_default_str();
    synth_->add_flag("--recover-air", recover_air_, "zero pixels below tau1 with the original curve");
    synth_->add_option("--mip-k", mip_k_, "samples averaged per ray for --curve mip")->capture_default_str();
    synth_->add_option("--size", size_, "output pixels nu,nv")->capture_default_str();
    synth_->add_option("--spacing", grid_spacing_, "output pixel spacing su,sv in mm")->capture_default_str();
    synth_->add_option("--mu-water", mu_water_, "water attenuation, 1/mm")->capture_default_str();
    synth_->add_option("--samples-per-mm", rate_, "ray sampling rate")->capture_default_str();
    synth_->add_option("--rotation", rotation_, "row-major 3x3 rotation applied before synthesis")->expected(9)->delimiter(',');
    synth_->add_option("--translation", translation_, "translation in mm (with --rotation)")->expected(3)->delimiter(',');
    synth_->add_option("--integral-out", integral_out_, "also write the line-integral image (.raw + .meta)");
    film_.add(synth_);
    enhance_.add(synth_);

    project_ = app_.add_subcommand("project", "forward-project a volume to a line-integral image");
    project_->add_option("--volume", volume_, "volume sidecar or payload")->required();
    project_->add_option("--out", out_path_, "output .raw (a .meta sidecar is written next to it)")->required();
    project_->add_option("--mode", mode_, "orthogonal | perspective")
        ->check(CLI::IsMember({"orthogonal", "perspective"}))
        ->capture_default_str();
    project_->add_option("--angle", angle_, "view angle for perspective mode (0 or 180)")->capture_default_str();
    project_->add_option("--geom", geom_, "cone geometry d0=<mm>,d1=<mm>")->capture_default_str();
    project_->add_option("--detector", detector_,
                         "detector nu,nv,su,sv (default 512,512,0.5,0.5 orthogonal; 512,512,0.73,0.73 perspective)");
    project_->add_flag("--flip", flip_, "flip a 180 degree view into the 0 degree frame");
    project_->add_flag("--enhance", enhance_flag_, "apply skeleton enhancement first");
    project_->add_option("--mu-water", mu_water_, "water attenuation, 1/mm")->capture_default_str();
    project_->add_option("--samples-per-mm", rate_, "ray sampling rate")->capture_default_str();
    enhance_.add(project_);

    mip_ = app_.add_subcommand("mip", "MIP-K projection along X, windowed to 8 bit");
    mip_->add_option("--volume", volume_, "volume sidecar or payload")->required();
    mip_->add_option("--out", out_path_, "output PNG")->required();
    mip_->add_option("--k", mip_k_, "number of largest samples averaged per ray")->capture_default_str();
    mip_->add_option("--detector", detector_, "detector nu,nv,su,sv (default 512,512,0.5,0.5)");
    mip_->add_option("--raw-out", integral_out_, "also write the unwindowed HU image (.raw + .meta)");
    mip_->add_option("--samples-per-mm", rate_, "ray sampling rate")->capture_default_str();

    rebin_ = app_.add_subcommand("rebin", "rebin a cone-beam projection onto the virtual detector");
    rebin_->add_option("--proj", proj_, "projection .raw/.meta in the 0 degree frame")->required();
    rebin_->add_option("--geom", geom_, "cone geometry d0=<mm>,d1=<mm>")->capture_default_str();
    rebin_->add_option("--vd", vd_, "virtual detector nu,nv,su,sv")->capture_default_str();
    rebin_->add_option("--out", out_path_, "output .raw (default: <proj>_vd.raw)");

    envelope_ = app_.add_subcommand("envelope", "footprint of a depth-swept square patch on the virtual detector");
    envelope_->add_option("--y0", y0_, "lower-left corner y, mm")->required();
    envelope_->add_option("--z0", z0_, "lower-left corner z, mm")->required();
    envelope_->add_option("--edge", edge_, "patch edge length, mm")->required();
    envelope_->add_option("--x-min", x_min_, "smallest depth toward the source, mm")->required();
    envelope_->add_option("--x-max", x_max_, "largest depth toward the source, mm")->required();
    envelope_->add_option("--d0", d0_, "source-to-isocenter distance, mm")->capture_default_str();

    quadrants_ = app_.add_subcommand("quadrants", "split an image into its four quadrant patches");
    quadrants_->add_option("--image", image_, "input PNG with even dims")->required()->check(CLI::ExistingFile);
    quadrants_->add_option("--out-dir", out_dir_, "directory for Q1.png .. Q4.png")->required();
    quadrants_->add_flag("--normalize", normalize_, "flip every patch into the Q1 orientation");

    pack_ = app_.add_subcommand("pack-dual", "pack normalized 0/180 degree patches into an RGB patch");
    pack_->add_option("--p0", p0_path_, "0 degree patch PNG")->required()->check(CLI::ExistingFile);
    pack_->add_option("--p180", p180_path_, "180 degree patch PNG (same quadrant)")->required()->check(CLI::ExistingFile);
    pack_->add_option("--quadrant", quadrant_, "quadrant of both patches")->capture_default_str();
    pack_->add_option("--out", out_path_, "output RGB PNG")->required();

    type2_ = app_.add_subcommand("make-type2-dataset", "dual-projection patch pairs from a list of volumes");
    type2_->add_option("--list", list_, "TSV lines: patient<TAB>split<TAB>volume path")->required()->check(CLI::ExistingFile);
    type2_->add_option("--root", root_, "output directory")->required();
    type2_->add_option("--geom", geom_, "cone geometry d0=<mm>,d1=<mm>")->capture_default_str();
    type2_->add_option("--detector", detector_, "CBCT detector nu,nv,su,sv (default 512,512,0.73,0.73)");
    type2_->add_option("--vd", vd_, "virtual detector nu,nv,su,sv")->capture_default_str();
    type2_->add_option("--lo", lo_, "integral mapped to gray 0")->capture_default_str();
    type2_->add_option("--hi", hi_, "integral mapped to gray 255")->capture_default_str();
    type2_->add_option("--cache-dir", cache_dir_, "cache projections here keyed by content hash");
    film_.add(type2_);
    enhance_.add(type2_);

    sr_ = app_.add_subcommand("make-sr-dataset", "HR/LR/ILR super-resolution patches from 0.1 mm cephalograms");
    sr_->add_option("--inputs", inputs_, "input PNGs")->required()->check(CLI::ExistingFile);
    sr_->add_option("--root", root_, "output directory")->required();
    sr_->add_option("--seed", seed_, "jitter seed")->capture_default_str();
    sr_->add_option("--per-image", per_image_, "patches per input")->capture_default_str();
    sr_->add_option("--blur", blur_, "alternate | x5 | x10x2")
        ->check(CLI::IsMember({"alternate", "x5", "x10x2"}))
        ->capture_default_str();

    quantize_ = app_.add_subcommand("quantize", "map a line-integral image linearly onto 8 bit");
    quantize_->add_option("--proj", proj_, "integral image .raw/.meta")->required();
    quantize_->add_option("--out", out_path_, "output PNG")->required();
    quantize_->add_option("--lo", lo_, "integral mapped to 0")->capture_default_str();
    quantize_->add_option("--hi", hi_, "integral mapped to 255")->capture_default_str();

    rmse_ = app_.add_subcommand("rmse-psnr", "RMSE and PSNR between two 8-bit images");
    rmse_->add_option("--a", a_path_, "first PNG")->required()->check(CLI::ExistingFile);
    rmse_->add_option("--b", b_path_, "second PNG")->required()->check(CLI::ExistingFile);
    rmse_->add_option("--peak", peak_, "peak signal value")->capture_default_str();

    profile_ = app_.add_subcommand("profile", "bilinear intensity profile along a segment");
    profile_->add_option("--image", image_, "input PNG")->required()->check(CLI::ExistingFile);
    profile_->add_option("--p0", p0_, "start point y,z in mm")->required();
    profile_->add_option("--p1", p1_, "end point y,z in mm")->required();
    profile_->add_option("--n", samples_, "number of samples")->capture_default_str();
    profile_->add_option("--spacing", spacing_override_, "pixel spacing in mm (default: from .meta, else 0.5)");

    sdr_ = app_.add_subcommand("sdr", "successful detection rates of 19 landmarks");
    sdr_->add_option("--detected", detected_, "detected landmarks TSV")->required()->check(CLI::ExistingFile);
    sdr_->add_option("--reference", reference_, "reference landmarks TSV")->required()->check(CLI::ExistingFile);
    sdr_->add_option("--radii", radii_, "comma-separated radii in mm")->capture_default_str();
    sdr_->add_flag("--tsv", tsv_, "print tab-separated values");
    sdr_->add_option("--pixel-spacing", pixel_spacing_, "coordinates are pixels with this spacing in mm");

    fit_ = app_.add_subcommand("fit-sigmoid", "least-squares fit of the film curve to samples");
    fit_->add_option("--samples", samples_path_, "TSV lines: integral<TAB>gray")->required()->check(CLI::ExistingFile);
    fit_->add_option("--out", out_path_, "write the fitted parameters as key=value");
}

Volume load_aligned(const std::string& path, const std::vector<double>& rotation, const std::vector<double>& translation) {
    Volume v = load_volume(path);
    if (rotation.empty() && translation.empty()) return v;
    RigidTransform t;
    if (!rotation.empty()) std::copy(rotation.begin(), rotation.end(), t.rotation.m.begin());
    if (!translation.empty()) t.translation = {translation[0], translation[1], translation[2]};
    return resample_rigid(v, t);
}

std::vector<CurveSample> read_samples(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<CurveSample> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ValidationError("sample line needs integral<TAB>gray: " + line);
        out.push_back({io::parse_doubles(line.substr(0, tab), 1)[0], io::parse_doubles(line.substr(tab + 1), 1)[0]});
    }
    return out;
}

void Runner::dispatch() {
    const ProjectionOptions po{rate_, threads_};
    const AttenuationModel model{mu_water_};

    if (synth_->parsed()) {
        Type1Config cfg;
        cfg.enhance = enhance_.p;
        cfg.projection = parse_projection_kind(projection_);
        cfg.curve = parse_film_curve(curve_);
        cfg.recover_air = recover_air_;
        cfg.mip_k = mip_k_;
        cfg.film = film_.resolve();
        const auto size = io::parse_doubles(size_, 2);
        const auto sp = io::parse_doubles(grid_spacing_, 2);
        cfg.output = {std::size_t(size[0]), std::size_t(size[1]), sp[0], sp[1]};
        cfg.attenuation = model;
        cfg.projection_options = po;
        cfg.validate();
        const Volume v = load_aligned(volume_, rotation_, translation_);
        const Cephalogram8 ceph = synthesize_type1(v, cfg);
        if (!integral_out_.empty() && cfg.curve != FilmCurve::mip) save_integral_image(integral_out_, type1_integral(v, cfg));
        write_cephalogram(out_path_, ceph);
        err_ << "wrote " << out_path_ << " (" << ceph.pixels.nu() << "x" << ceph.pixels.nv() << ")\n";
        return;
    }
    if (project_->parsed()) {
        const bool perspective = mode_ == "perspective";
        ConeGeometry g;
        apply_geometry(geom_, g);
        g.angle_deg = angle_;
        const std::string det_text = detector_.empty() ? (perspective ? "512,512,0.73,0.73" : "512,512,0.5,0.5") : detector_;
        g.detector = parse_grid(det_text);
        if (perspective) g.validate();
        enhance_.p.validate();
        Volume v = load_volume(volume_);
        if (enhance_flag_) v = enhance_skeleton(v, enhance_.p);
        IntegralImage img = perspective ? project_perspective(v, g, model, po) : project_orthogonal(v, g.detector, model, po);
        if (flip_) img = flip_horizontal(img);
        save_integral_image(out_path_, img);
        if (const auto n = img.suspicious_count()) err_ << "warning: " << n << " pixels exceed 20 (unusual for heads)\n";
        return;
    }
    if (mip_->parsed()) {
        if (mip_k_ < 1) throw ValidationError("--k must be at least 1");
        const DetectorGrid det = parse_grid(detector_.empty() ? "512,512,0.5,0.5" : detector_);
        const Volume v = load_volume(volume_);
        const IntegralImage img = project_mip(v, mip_k_, det, po);
        if (!integral_out_.empty()) {
            // MIP values are HU and may be negative; store them without the integral-image check.
            save_integral_image(integral_out_, img);
        }
        write_cephalogram(out_path_, {window_to_gray8(img.values), det.su, det.sv});
        return;
    }
    if (rebin_->parsed()) {
        ConeGeometry g;
        apply_geometry(geom_, g);
        const DetectorGrid vdg = parse_grid(vd_);
        const VirtualDetectorSpec vd{vdg.nu, vdg.nv, vdg.su, vdg.sv};
        vd.validate();
        const IntegralImage proj = load_integral_image(proj_);
        g.detector = {proj.nu(), proj.nv(), proj.su, proj.sv};
        const IntegralImage out = rebin_to_vd(proj, g, vd, threads_);
        const fs::path target = out_path_.empty() ? fs::path(fs::path(proj_).replace_extension("").string() + "_vd.raw") : fs::path(out_path_);
        save_integral_image(target, out);
        err_ << "wrote " << target.string() << "\n";
        return;
    }
    if (envelope_->parsed()) {
        const PatchEnvelope env = patch_envelope(y0_, z0_, edge_, x_min_, x_max_, d0_);
        out_ << "y_mm\tz_mm\n" << std::setprecision(10);
        for (const auto& p : env.vertices) out_ << p.y << '\t' << p.z << '\n';
        return;
    }
    if (quadrants_->parsed()) {
        const Gray8 img = io::read_png_gray(image_);
        auto patches = split_quadrants(img);
        fs::create_directories(out_dir_);
        for (auto& p : patches) {
            if (normalize_) p = normalize_quadrant(p);
            io::write_png_gray(fs::path(out_dir_) / (to_string(p.quadrant) + ".png"), p.data);
        }
        return;
    }
    if (pack_->parsed()) {
        const Quadrant q = parse_quadrant(quadrant_);
        const QuadrantPatch<std::uint8_t> a{io::read_png_gray(p0_path_), q, true};
        const QuadrantPatch<std::uint8_t> b{io::read_png_gray(p180_path_), q, true};
        const DualRgbPatch rgb = pack_dual(a, b);
        io::write_png_rgb(out_path_, {rgb.r, rgb.g, rgb.b});
        return;
    }
    if (type2_->parsed()) {
        Type2Options opt;
        apply_geometry(geom_, opt.cbct);
        if (!detector_.empty()) opt.cbct.detector = parse_grid(detector_);
        const DetectorGrid vdg = parse_grid(vd_);
        opt.vd = {vdg.nu, vdg.nv, vdg.su, vdg.sv};
        opt.quant_lo = lo_;
        opt.quant_hi = hi_;
        opt.threads = threads_;
        if (!cache_dir_.empty()) opt.cache_dir = fs::path(cache_dir_);
        Type1Config cfg;
        cfg.enhance = enhance_.p;
        cfg.film = film_.resolve();
        cfg.output = opt.vd;

        std::vector<Type2Source> sources;
        std::ifstream in(list_);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            std::stringstream ss(line);
            std::string patient, split, path;
            if (!std::getline(ss, patient, '\t') || !std::getline(ss, split, '\t') || !std::getline(ss, path, '\t'))
                throw ValidationError("volume list lines need patient<TAB>split<TAB>path: " + line);
            fs::path p(path);
            if (p.is_relative()) p = fs::path(list_).parent_path() / p;
            if (!fs::exists(io::meta_path_for(p))) throw ValidationError("volume not found: " + p.string());
            sources.push_back({patient, parse_split(split), p});
        }
        const fs::path manifest = produce_type2_dataset(sources, cfg, opt, root_);
        out_ << manifest.string() << '\n';
        return;
    }
    if (sr_->parsed()) {
        SrOptions opt;
        opt.seed = seed_;
        opt.per_image = per_image_;
        opt.threads = threads_;
        opt.blur = blur_ == "x5" ? BlurPolicy::x5_only : (blur_ == "x10x2" ? BlurPolicy::x10x2_only : BlurPolicy::alternate);
        std::vector<SrSource> sources;
        for (const auto& p : inputs_) sources.push_back({fs::path(p).stem().string(), io::read_png_gray(p)});
        const auto records = make_sr_dataset(sources, opt, root_);
        out_ << (fs::path(root_) / "sr_manifest.tsv").string() << '\n';
        err_ << records.size() << " records\n";
        return;
    }
    if (quantize_->parsed()) {
        if (!(hi_ > lo_)) throw ValidationError("--hi must exceed --lo");
        const IntegralImage img = load_integral_image(proj_);
        io::write_png_gray(out_path_, quantize_integral(img, lo_, hi_));
        return;
    }
    if (rmse_->parsed()) {
        const Gray8 a = io::read_png_gray(a_path_), b = io::read_png_gray(b_path_);
        const double r = rmse(a, b);
        out_ << std::setprecision(10) << "rmse\t" << r << "\npsnr\t";
        const double p = psnr_from_rmse(r, peak_);
        if (std::isinf(p))
            out_ << "inf\n";
        else
            out_ << p << '\n';
        return;
    }
    if (profile_->parsed()) {
        double spacing = spacing_override_;
        if (spacing <= 0.0) spacing = load_cephalogram(image_).su;
        const auto values = line_profile(to_double(io::read_png_gray(image_)), spacing, spacing, parse_point(p0_),
                                         parse_point(p1_), samples_);
        out_ << std::setprecision(10);
        for (double v : values) out_ << v << '\n';
        return;
    }
    if (sdr_->parsed()) {
        const auto radii = io::parse_doubles(radii_);
        const SdrTable t = sdr(read_landmarks(detected_, pixel_spacing_), read_landmarks(reference_, pixel_spacing_), radii);
        out_ << (tsv_ ? format_sdr_tsv(t) : format_sdr_table(t));
        return;
    }
    if (fit_->parsed()) {
        const auto samples = read_samples(samples_path_);
        const SigmoidFit fit = fit_sigmoid(samples);
        ModifiedSigmoidParams p;
        p.base = fit.params;
        out_ << std::setprecision(10) << "c1=" << fit.params.c1 << "\nc2=" << fit.params.c2 << "\nt=" << fit.params.t
             << "\ns=" << fit.params.s << "\nrms=" << fit.rms_residual << "\niterations=" << fit.iterations
             << "\nconverged=" << (fit.converged ? "true" : "false") << '\n';
        if (!fit.converged) err_ << "warning: fit did not converge; returning best parameters so far\n";
        if (!out_path_.empty()) write_film_params(out_path_, p);
        return;
    }
}

int Runner::main(const std::vector<std::string>& args) {
    build();
    std::vector<const char*> argv;
    argv.push_back("cephforge");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app_.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app_.exit(e, out_, err_);
    } catch (const CLI::CallForAllHelp& e) {
        return app_.exit(e, out_, err_);
    } catch (const CLI::ParseError& e) {
        app_.exit(e, out_, err_);
        return kValidation;
    }
    try {
        dispatch();
    } catch (const ValidationError& e) {
        err_ << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err_ << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Runner runner(out, err);
    return runner.main(args);
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace cephforge::cli
