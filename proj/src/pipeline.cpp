#include "cephforge/pipeline.hpp"

#include <cstdio>
#include <cstring>
#include <set>
#include <tuple>

#include "cephforge/parallel.hpp"

namespace cephforge {

namespace fs = std::filesystem;

std::string to_string(ProjectionKind k) { return k == ProjectionKind::orthogonal ? "orthogonal" : "perspective"; }

ProjectionKind parse_projection_kind(const std::string& s) {
    if (s == "orthogonal") return ProjectionKind::orthogonal;
    if (s == "perspective" || s == "wehmer" || s == "wehmer_perspective") return ProjectionKind::wehmer_perspective;
    throw ValidationError("unknown projection '" + s + "' (orthogonal|perspective)");
}

std::string to_string(FilmCurve c) {
    switch (c) {
        case FilmCurve::modified: return "modified";
        case FilmCurve::original: return "original";
        case FilmCurve::mip: return "mip";
    }
    return "modified";
}

FilmCurve parse_film_curve(const std::string& s) {
    if (s == "modified") return FilmCurve::modified;
    if (s == "original") return FilmCurve::original;
    if (s == "mip") return FilmCurve::mip;
    throw ValidationError("unknown film curve '" + s + "' (modified|original|mip)");
}

void Type1Config::validate() const {
    enhance.validate();
    film.validate();
    output.validate();
    attenuation.validate();
    if (curve == FilmCurve::mip && mip_k < 1) throw ValidationError("MIP requires k >= 1");
    if (!(wehmer_scale > 0.0)) throw ValidationError("Wehmer scale must be positive");
}

IntegralImage type1_integral(const Volume& v, const Type1Config& cfg) {
    cfg.validate();
    const Volume enhanced = enhance_skeleton(v, cfg.enhance);
    if (cfg.projection == ProjectionKind::orthogonal)
        return project_orthogonal(enhanced, cfg.output.grid(), cfg.attenuation, cfg.projection_options);

    // Sample the detector at the magnified pitch so the image is expressed in
    // isocenter-plane millimetres.
    ConeGeometry g = ConeGeometry::wehmer(cfg.output.grid());
    g.d0 *= cfg.wehmer_scale;
    g.d1 *= cfg.wehmer_scale;
    const double mag = g.d1 / g.d0;
    g.detector.su *= mag;
    g.detector.sv *= mag;
    IntegralImage img = project_perspective(enhanced, g, cfg.attenuation, cfg.projection_options);
    img.su = cfg.output.su;
    img.sv = cfg.output.sv;
    img.plane_origin = {cfg.output.grid().u_coord(0.0), cfg.output.grid().v_coord(0.0)};
    return img;
}

Cephalogram8 synthesize_type1(const Volume& v, const Type1Config& cfg) {
    cfg.validate();
    if (cfg.curve == FilmCurve::mip) {
        const IntegralImage mip = project_mip(v, cfg.mip_k, cfg.output.grid(), cfg.projection_options);
        return {window_to_gray8(mip.values), cfg.output.su, cfg.output.sv};
    }
    const IntegralImage g = type1_integral(v, cfg);
    if (cfg.curve == FilmCurve::modified) return modified_sigmoid_transform(g, cfg.film);

    Cephalogram8 c = sigmoid_transform(g, cfg.film.base);
    if (cfg.recover_air)
        for (std::size_t i = 0; i < g.values.size(); ++i)
            if (g.values.values()[i] < cfg.film.tau1) c.pixels.values()[i] = 0;
    return c;
}

std::uint64_t content_hash(const Volume& v, std::uint64_t seed) {
    std::uint64_t h = seed;
    const auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    const std::uint64_t dims[3] = {v.dims().nx, v.dims().ny, v.dims().nz};
    const double geo[6] = {v.spacing().x, v.spacing().y, v.spacing().z, v.origin().x, v.origin().y, v.origin().z};
    mix(dims, sizeof dims);
    mix(geo, sizeof geo);
    mix(v.data().data(), v.data().size() * sizeof(double));
    return h;
}

namespace {

std::string hex(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

std::uint64_t hash_geometry(std::uint64_t h, const ConeGeometry& g, const AttenuationModel& m, double rate) {
    const double vals[8] = {g.d0, g.d1, double(g.detector.nu), double(g.detector.nv), g.detector.su, g.detector.sv,
                            m.mu_water, rate};
    const auto* p = reinterpret_cast<const unsigned char*>(vals);
    for (std::size_t i = 0; i < sizeof vals; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    h ^= static_cast<std::uint64_t>(g.angle_deg);
    h *= 1099511628211ULL;
    return h;
}

IntegralImage projection_with_cache(const Volume& v, const ConeGeometry& g, const AttenuationModel& m,
                                    const ProjectionOptions& po, const std::optional<fs::path>& cache_dir) {
    if (!cache_dir) return project_perspective(v, g, m, po);
    const fs::path entry = *cache_dir / (hex(hash_geometry(content_hash(v), g, m, po.samples_per_mm)) + ".raw");
    if (fs::exists(entry) && fs::exists(io::meta_path_for(entry))) return load_integral_image(entry);
    IntegralImage img = project_perspective(v, g, m, po);
    std::error_code ec;
    fs::create_directories(*cache_dir, ec);
    // Cache entries hold float32; reload so cold and warm runs agree bit-for-bit.
    save_integral_image(entry, img);
    return load_integral_image(entry);
}

}  // namespace

DualViews simulate_dual_views(const Volume& v, const Type2Options& opt, unsigned threads) {
    opt.vd.validate();
    const AttenuationModel model;
    const ProjectionOptions po{3.0, threads};
    ConeGeometry g0 = opt.cbct;
    g0.angle_deg = 0;
    ConeGeometry g180 = opt.cbct;
    g180.angle_deg = 180;
    g0.validate();

    const IntegralImage p0 = projection_with_cache(v, g0, model, po, opt.cache_dir);
    const IntegralImage p180 = flip_horizontal(projection_with_cache(v, g180, model, po, opt.cache_dir));
    return {quantize_integral(rebin_to_vd(p0, g0, opt.vd, threads), opt.quant_lo, opt.quant_hi),
            quantize_integral(rebin_to_vd(p180, g180, opt.vd, threads), opt.quant_lo, opt.quant_hi)};
}

std::array<PatchPair, 4> type2_pairs(const Volume& v, const std::string& patient_id, Split split,
                                     const Type1Config& cfg, const Type2Options& opt, unsigned threads) {
    Type1Config target_cfg = cfg;
    target_cfg.projection = ProjectionKind::orthogonal;
    target_cfg.curve = FilmCurve::modified;
    target_cfg.output = opt.vd;
    target_cfg.projection_options.threads = threads;
    const Cephalogram8 target = synthesize_type1(v, target_cfg);
    const DualViews views = simulate_dual_views(v, opt, threads);

    const auto q0 = split_quadrants(views.view0);
    const auto q180 = split_quadrants(views.view180);
    const auto qt = split_quadrants(target.pixels);
    std::array<PatchPair, 4> out;
    for (std::size_t n = 0; n < 4; ++n)
        out[n] = {pack_dual(normalize_quadrant(q0[n]), normalize_quadrant(q180[n])), normalize_quadrant(qt[n]).data,
                  patient_id, split};
    return out;
}

namespace {

template <typename Seq>
void check_patients(const Seq& items) {
    std::set<std::string> ids;
    for (const auto& s : items) {
        pair_record_for(s.patient_id, Quadrant::q1, s.split);
        if (!ids.insert(s.patient_id).second) throw ValidationError("duplicate patient id " + s.patient_id);
    }
}

template <typename LoadFn>
fs::path produce(std::size_t count, LoadFn&& load, const Type1Config& cfg, const Type2Options& opt, const fs::path& root) {
    cfg.validate();
    opt.vd.validate();
    opt.cbct.validate();
    if (!(opt.quant_hi > opt.quant_lo)) throw ValidationError("quantization needs hi > lo");

    // One worker per volume when several are queued, otherwise parallelize pixels.
    const unsigned outer = count > 1 ? opt.threads : 1;
    const unsigned inner = count > 1 ? 1 : opt.threads;
    std::vector<PatchPairRecord> records(4 * count);
    parallel_for(count, outer, [&](std::size_t i) {
        const auto [patient, split, volume] = load(i);
        const auto pairs = type2_pairs(volume, patient, split, cfg, opt, inner);
        for (std::size_t n = 0; n < 4; ++n) records[4 * i + n] = write_pair_images(pairs[n], root);
    });
    return write_pair_manifest(std::move(records), root);
}

}  // namespace

fs::path produce_type2_dataset(const std::vector<Type2Source>& sources, const Type1Config& cfg,
                               const Type2Options& opt, const fs::path& root) {
    check_patients(sources);
    return produce(
        sources.size(),
        [&](std::size_t i) {
            return std::tuple<std::string, Split, Volume>(sources[i].patient_id, sources[i].split,
                                                          load_volume(sources[i].volume_path));
        },
        cfg, opt, root);
}

fs::path produce_type2_dataset(const std::vector<NamedVolume>& volumes, const Type1Config& cfg,
                               const Type2Options& opt, const fs::path& root) {
    check_patients(volumes);
    return produce(
        volumes.size(),
        [&](std::size_t i) {
            return std::tuple<std::string, Split, Volume>(volumes[i].patient_id, volumes[i].split, volumes[i].volume);
        },
        cfg, opt, root);
}

}  // namespace cephforge
