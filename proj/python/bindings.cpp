// numpy views: 2D images are (nv, nu), volumes are (nz, ny, nx), C order.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cephforge/cephgeom.hpp"
#include "cephforge/dataset.hpp"
#include "cephforge/film.hpp"
#include "cephforge/metrics.hpp"
#include "cephforge/pipeline.hpp"
#include "cephforge/projector.hpp"
#include "cephforge/volume.hpp"

namespace py = pybind11;
using namespace cephforge;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

template <typename T>
py::array_t<T> to_numpy(const Grid2<T>& g) {
    py::array_t<T> a({g.nv(), g.nu()});
    std::copy(g.storage().begin(), g.storage().end(), a.mutable_data());
    return a;
}

template <typename T, typename Arr>
Grid2<T> from_numpy(const Arr& a) {
    if (a.ndim() != 2) throw ValidationError("expected a 2D array shaped (nv, nu)");
    const auto nv = static_cast<std::size_t>(a.shape(0)), nu = static_cast<std::size_t>(a.shape(1));
    return Grid2<T>(nu, nv, std::vector<T>(a.data(), a.data() + nu * nv));
}

Vec3 vec3(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

Volume make_volume(const F64& hu, std::array<double, 3> spacing, std::optional<std::array<double, 3>> origin) {
    if (hu.ndim() != 3) throw ValidationError("expected a 3D array shaped (nz, ny, nx)");
    const Dims3 d{static_cast<std::size_t>(hu.shape(2)), static_cast<std::size_t>(hu.shape(1)),
                  static_cast<std::size_t>(hu.shape(0))};
    const Vec3 sp = vec3(spacing);
    return Volume(d, sp, origin ? vec3(*origin) : Volume::centered_origin(d, sp),
                  std::vector<double>(hu.data(), hu.data() + d.count()));
}

F64 volume_array(const Volume& v) {
    F64 a({v.dims().nz, v.dims().ny, v.dims().nx});
    std::copy(v.data().begin(), v.data().end(), a.mutable_data());
    return a;
}

ModifiedSigmoidParams film_params(double c1, double c2, double t, double s, double c3, std::optional<double> c4,
                                  double tau1, double tau2) {
    ModifiedSigmoidParams p;
    p.base = {c1, c2, t, s};
    p.c3 = c3;
    p.c4 = c4;
    p.tau1 = tau1;
    p.tau2 = tau2;
    return p;
}

IntegralImage integral_from(const F64& a, double su, double sv) {
    IntegralImage img = IntegralImage::on_grid({static_cast<std::size_t>(a.ndim() == 2 ? a.shape(1) : 0),
                                                static_cast<std::size_t>(a.ndim() == 2 ? a.shape(0) : 0), su, sv});
    img.values = from_numpy<double>(a);
    return img;
}

LandmarkSet landmarks(const F64& pts) {
    if (pts.ndim() != 2 || pts.shape(1) != 2) throw ValidationError("landmarks must be shaped (N, 2)");
    LandmarkSet s;
    for (py::ssize_t i = 0; i < pts.shape(0); ++i) {
        s.points.push_back({pts.at(i, 0), pts.at(i, 1)});
        s.labels.push_back("L" + std::to_string(i + 1));
    }
    return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Synthetic cephalogram generation from CT/CBCT volumes";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<Volume>(m, "Volume")
        .def(py::init(&make_volume), py::arg("hu"), py::arg("spacing"), py::arg("origin") = py::none(),
             "HU volume from an array shaped (nz, ny, nx); origin defaults to centred.")
        .def_property_readonly("hu", &volume_array)
        .def_property_readonly("shape", [](const Volume& v) {
            return py::make_tuple(v.dims().nz, v.dims().ny, v.dims().nx);
        })
        .def_property_readonly("spacing", [](const Volume& v) {
            return std::array<double, 3>{v.spacing().x, v.spacing().y, v.spacing().z};
        })
        .def_property_readonly("origin", [](const Volume& v) {
            return std::array<double, 3>{v.origin().x, v.origin().y, v.origin().z};
        })
        .def("content_hash", [](const Volume& v) { return content_hash(v); });

    m.def("load_volume", &load_volume, py::arg("path"));
    m.def("save_volume", &save_volume, py::arg("path"), py::arg("volume"));

    m.def(
        "rotate_z",
        [](const Volume& v, double degrees, std::array<double, 3> translation) {
            return resample_rigid(v, RigidTransform::rotation_z(degrees, vec3(translation)));
        },
        py::arg("volume"), py::arg("degrees"), py::arg("translation") = std::array<double, 3>{0, 0, 0});

    m.def(
        "enhance_skeleton",
        [](const Volume& v, double a, double bone, double air) { return enhance_skeleton(v, {bone, air, a}); },
        py::arg("volume"), py::arg("a") = 1.3, py::arg("bone_threshold") = 1000.0, py::arg("air_threshold") = -500.0);

    m.def(
        "project_orthogonal",
        [](const Volume& v, std::size_t nu, std::size_t nv, double su, double sv, unsigned threads) {
            return to_numpy(project_orthogonal(v, {nu, nv, su, sv}, {}, {3.0, threads}).values);
        },
        py::arg("volume"), py::arg("nu") = 512, py::arg("nv") = 512, py::arg("su") = 0.5, py::arg("sv") = 0.5,
        py::arg("threads") = 1, "Line integrals of mu along X; returns (nv, nu).");

    m.def(
        "project_perspective",
        [](const Volume& v, int angle, double d0, double d1, std::size_t nu, std::size_t nv, double su, double sv,
           bool flip, unsigned threads) {
            const ConeGeometry g{d0, d1, {nu, nv, su, sv}, angle};
            IntegralImage img = project_perspective(v, g, {}, {3.0, threads});
            if (flip) img = flip_horizontal(img);
            return to_numpy(img.values);
        },
        py::arg("volume"), py::arg("angle") = 0, py::arg("d0") = 650.0, py::arg("d1") = 950.0, py::arg("nu") = 512,
        py::arg("nv") = 512, py::arg("su") = 0.73, py::arg("sv") = 0.73, py::arg("flip") = false,
        py::arg("threads") = 1);

    m.def(
        "project_mip",
        [](const Volume& v, std::size_t k, std::size_t nu, std::size_t nv, double su, double sv, unsigned threads) {
            return to_numpy(project_mip(v, k, {nu, nv, su, sv}, {3.0, threads}).values);
        },
        py::arg("volume"), py::arg("k") = 50, py::arg("nu") = 512, py::arg("nv") = 512, py::arg("su") = 0.5,
        py::arg("sv") = 0.5, py::arg("threads") = 1, "Mean of the top-k HU samples per ray.");

    m.def("sigmoid_curve",
          py::vectorize([](double g, double c1, double c2, double t, double s) {
              return sigmoid_curve(g, {c1, c2, t, s});
          }),
          py::arg("g"), py::arg("c1") = 40.0, py::arg("c2") = 5.0, py::arg("t") = 2.6, py::arg("s") = 1.5);

    m.def(
        "modified_curve",
        [](F64 g, double c1, double c2, double t, double s, double c3, std::optional<double> c4, double tau1,
           double tau2) {
            const auto p = film_params(c1, c2, t, s, c3, c4, tau1, tau2);
            p.validate();
            return py::vectorize([&p](double x) { return modified_curve(x, p); })(g);
        },
        py::arg("g"), py::arg("c1") = 40.0, py::arg("c2") = 5.0, py::arg("t") = 2.6, py::arg("s") = 1.5,
        py::arg("c3") = 18.0, py::arg("c4") = py::none(), py::arg("tau1") = 0.1, py::arg("tau2") = 1.2);

    m.def(
        "derive_c4",
        [](double c1, double c2, double t, double s, double c3, double tau1, double tau2) {
            return derive_c4(film_params(c1, c2, t, s, c3, std::nullopt, tau1, tau2));
        },
        py::arg("c1") = 40.0, py::arg("c2") = 5.0, py::arg("t") = 2.6, py::arg("s") = 1.5, py::arg("c3") = 18.0,
        py::arg("tau1") = 0.1, py::arg("tau2") = 1.2);

    m.def(
        "fit_sigmoid",
        [](const F64& integrals, const F64& grays, int max_iterations) {
            if (integrals.size() != grays.size()) throw ValidationError("integrals and grays differ in length");
            std::vector<CurveSample> samples;
            for (py::ssize_t i = 0; i < integrals.size(); ++i) samples.push_back({integrals.data()[i], grays.data()[i]});
            FitOptions opt;
            opt.max_iterations = max_iterations;
            const SigmoidFit f = fit_sigmoid(samples, opt);
            py::dict d;
            d["c1"] = f.params.c1;
            d["c2"] = f.params.c2;
            d["t"] = f.params.t;
            d["s"] = f.params.s;
            d["rms"] = f.rms_residual;
            d["iterations"] = f.iterations;
            d["converged"] = f.converged;
            return d;
        },
        py::arg("integrals"), py::arg("grays"), py::arg("max_iterations") = 200);

    m.def(
        "synthesize_type1",
        [](const Volume& v, const std::string& projection, const std::string& curve, bool recover_air,
           std::size_t mip_k, std::size_t size, double spacing, std::optional<double> c4, unsigned threads) {
            Type1Config cfg;
            cfg.projection = parse_projection_kind(projection);
            cfg.curve = parse_film_curve(curve);
            cfg.recover_air = recover_air;
            cfg.mip_k = mip_k;
            cfg.output = {size, size, spacing, spacing};
            cfg.film.c4 = c4;
            cfg.projection_options.threads = threads;
            return to_numpy(synthesize_type1(v, cfg).pixels);
        },
        py::arg("volume"), py::arg("projection") = "orthogonal", py::arg("curve") = "modified",
        py::arg("recover_air") = false, py::arg("mip_k") = 50, py::arg("size") = 512, py::arg("spacing") = 0.5,
        py::arg("c4") = py::none(), py::arg("threads") = 1, "Type I cephalogram as uint8 (nv, nu).");

    m.def(
        "rebin_to_vd",
        [](const F64& proj, double su, double sv, double d0, double d1, std::size_t nu, std::size_t nv, double vsu,
           double vsv, unsigned threads) {
            const IntegralImage img = integral_from(proj, su, sv);
            const ConeGeometry g{d0, d1, {img.nu(), img.nv(), su, sv}, 0};
            return to_numpy(rebin_to_vd(img, g, {nu, nv, vsu, vsv}, threads).values);
        },
        py::arg("projection"), py::arg("su") = 0.73, py::arg("sv") = 0.73, py::arg("d0") = 650.0,
        py::arg("d1") = 950.0, py::arg("nu") = 512, py::arg("nv") = 512, py::arg("vd_su") = 0.5,
        py::arg("vd_sv") = 0.5, py::arg("threads") = 1);

    m.def("magnification", &magnification, py::arg("depth_mm"), py::arg("d0"));

    m.def(
        "cone_project_point",
        [](std::array<double, 3> p, int angle, double d0, double d1) {
            const Vec2 r = cone_project_point(vec3(p), {d0, d1, {}, angle});
            return std::array<double, 2>{r.y, r.z};
        },
        py::arg("point"), py::arg("angle") = 0, py::arg("d0") = 650.0, py::arg("d1") = 950.0);

    m.def(
        "patch_envelope",
        [](double y0, double z0, double edge, double x_min, double x_max, double d0) {
            std::vector<std::array<double, 2>> out;
            for (const Vec2& p : patch_envelope(y0, z0, edge, x_min, x_max, d0).vertices) out.push_back({p.y, p.z});
            return out;
        },
        py::arg("y0"), py::arg("z0"), py::arg("edge"), py::arg("x_min"), py::arg("x_max"), py::arg("d0") = 650.0);

    m.def(
        "split_quadrants",
        [](const U8& img, bool normalize) {
            py::dict out;
            for (const auto& q : split_quadrants(from_numpy<std::uint8_t>(img)))
                out[py::str(to_string(q.quadrant))] = to_numpy(normalize ? normalize_quadrant(q).data : q.data);
            return out;
        },
        py::arg("image"), py::arg("normalize") = true, "Dict Q1..Q4 of uint8 patches.");

    m.def(
        "pack_dual",
        [](const U8& p0, const U8& p180) {
            const DualRgbPatch d = pack_dual({from_numpy<std::uint8_t>(p0), Quadrant::q1, true},
                                             {from_numpy<std::uint8_t>(p180), Quadrant::q1, true});
            py::array_t<std::uint8_t> a({d.r.nv(), d.r.nu(), std::size_t{3}});
            auto* out = a.mutable_data();
            for (std::size_t i = 0; i < d.r.size(); ++i) {
                out[3 * i] = d.r.storage()[i];
                out[3 * i + 1] = d.g.storage()[i];
                out[3 * i + 2] = d.b.storage()[i];
            }
            return a;
        },
        py::arg("p0"), py::arg("p180"), "Normalized patches of one quadrant to an (nv, nu, 3) array.");

    m.def(
        "quantize",
        [](const F64& g, double lo, double hi) { return to_numpy(quantize_integral(from_numpy<double>(g), lo, hi)); },
        py::arg("integrals"), py::arg("lo") = 0.0, py::arg("hi") = 6.0);
    m.def(
        "downsample_avg", [](const F64& g, std::size_t f) { return to_numpy(downsample_avg(from_numpy<double>(g), f)); },
        py::arg("image"), py::arg("factor"));
    m.def(
        "upsample_bicubic",
        [](const F64& g, std::size_t f) { return to_numpy(upsample_bicubic(from_numpy<double>(g), f)); },
        py::arg("image"), py::arg("factor"));

    m.def(
        "rmse", [](const F64& a, const F64& b) { return rmse(from_numpy<double>(a), from_numpy<double>(b)); },
        py::arg("a"), py::arg("b"));
    m.def(
        "psnr",
        [](const F64& a, const F64& b, double peak) { return psnr(from_numpy<double>(a), from_numpy<double>(b), peak); },
        py::arg("a"), py::arg("b"), py::arg("peak") = 255.0);
    m.def(
        "sdr",
        [](const F64& detected, const F64& reference, std::vector<double> radii) {
            return sdr(landmarks(detected), landmarks(reference), radii).rates;
        },
        py::arg("detected"), py::arg("reference"), py::arg("radii") = kDefaultSdrRadii,
        "Success detection rate (percent) per radius for 19 landmarks given in mm, shaped (19, 2).");

    m.def(
        "read_pair_manifest",
        [](const std::filesystem::path& p) {
            py::list out;
            for (const auto& r : read_pair_manifest(p)) {
                py::dict d;
                d["input_path"] = r.input_path;
                d["target_path"] = r.target_path;
                d["quadrant"] = to_string(r.quadrant);
                d["patient_id"] = r.patient_id;
                d["split"] = to_string(r.split);
                out.append(d);
            }
            return out;
        },
        py::arg("manifest"));

    m.def(
        "produce_type2_dataset",
        [](const std::vector<std::tuple<std::string, std::string, Volume>>& items, const std::filesystem::path& root,
           std::size_t detector, std::size_t vd, unsigned threads) {
            std::vector<NamedVolume> vols;
            for (const auto& [id, split, v] : items) vols.push_back({id, parse_split(split), v});
            Type2Options opt;
            opt.cbct.detector.nu = opt.cbct.detector.nv = detector;
            opt.vd.nu = opt.vd.nv = vd;
            opt.threads = threads;
            return produce_type2_dataset(vols, Type1Config{}, opt, root);
        },
        py::arg("volumes"), py::arg("root"), py::arg("detector") = 512, py::arg("vd") = 512, py::arg("threads") = 1,
        "volumes: list of (patient_id, split, Volume). Returns the manifest path.");

    m.def(
        "make_sr_dataset",
        [](const std::vector<std::pair<std::string, U8>>& images, const std::filesystem::path& root,
           std::uint64_t seed, std::size_t per_image, unsigned threads) {
            std::vector<SrSource> src;
            for (const auto& [name, img] : images) src.push_back({name, from_numpy<std::uint8_t>(img)});
            SrOptions opt;
            opt.seed = seed;
            opt.per_image = per_image;
            opt.threads = threads;
            return make_sr_dataset(src, opt, root).size();
        },
        py::arg("images"), py::arg("root"), py::arg("seed") = 20, py::arg("per_image") = 42, py::arg("threads") = 1,
        "images: list of (name, uint8 array). Returns the number of patch triples written.");
}
