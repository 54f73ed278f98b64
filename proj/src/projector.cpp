#include "cephforge/projector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "cephforge/io.hpp"
#include "cephforge/parallel.hpp"

namespace cephforge {

void DetectorGrid::validate() const {
    if (nu < 1 || nv < 1) throw ValidationError("detector grid must have at least one pixel per axis");
    if (!(su > 0.0 && sv > 0.0) || !std::isfinite(su) || !std::isfinite(sv))
        throw ValidationError("detector pixel spacing must be positive");
}

IntegralImage IntegralImage::on_grid(const DetectorGrid& g) {
    g.validate();
    return {Grid2<double>(g.nu, g.nv, 0.0), g.su, g.sv, {g.u_coord(0.0), g.v_coord(0.0)}};
}

void IntegralImage::validate() const {
    for (double x : values.values())
        if (!std::isfinite(x) || x < 0.0) throw ValidationError("integral image holds a negative or non-finite value");
}

std::size_t IntegralImage::suspicious_count() const {
    return static_cast<std::size_t>(
        std::count_if(values.values().begin(), values.values().end(), [](double x) { return x > 20.0; }));
}

void ConeGeometry::validate() const {
    if (!(d0 > 0.0 && d0 < d1))
        throw ValidationError("cone geometry requires 0 < d0 < d1 (got d0=" + std::to_string(d0) +
                              ", d1=" + std::to_string(d1) + "); source-to-isocenter must be the shorter distance");
    if (angle_deg != 0 && angle_deg != 180) throw ValidationError("only 0 and 180 degree views are supported");
    detector.validate();
}

ConeGeometry ConeGeometry::dental_cbct(int angle_deg) { return {650.0, 950.0, {512, 512, 0.73, 0.73}, angle_deg}; }

ConeGeometry ConeGeometry::wehmer(DetectorGrid detector, int angle_deg) {
    return {1524.0, 1524.0 + 115.0, detector, angle_deg};
}

void AttenuationModel::validate() const {
    if (!(mu_water > 0.0)) throw ValidationError("mu_water must be positive");
}

double hu_to_mu(double hu, const AttenuationModel& m) { return std::max(0.0, m.mu_water * (1.0 + hu / 1000.0)); }

Volume attenuation_volume(const Volume& hu, const AttenuationModel& m) {
    m.validate();
    std::vector<double> mu(hu.data().size());
    std::transform(hu.data().begin(), hu.data().end(), mu.begin(), [&](double h) { return hu_to_mu(h, m); });
    return hu.with_data(std::move(mu));
}

namespace {

void check_rate(const ProjectionOptions& opt) {
    if (!(opt.samples_per_mm > 0.0) || !std::isfinite(opt.samples_per_mm))
        throw ValidationError("sampling rate must be positive");
}

std::size_t sample_count(double length_mm, double rate) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length_mm * rate - 1e-9)));
}

// Trilinear sample of `f` at continuous index (x, y, z); zero outside the grid.
double sample_zero_padded(const Volume& f, double x, double y, double z) {
    const Dims3& d = f.dims();
    const double n[3] = {double(d.nx), double(d.ny), double(d.nz)};
    const double c[3] = {x, y, z};
    long i0[3];
    double w[3];
    for (int a = 0; a < 3; ++a) {
        if (!(c[a] > -1.0 && c[a] < n[a])) return 0.0;
        const double fl = std::floor(c[a]);
        i0[a] = static_cast<long>(fl);
        w[a] = c[a] - fl;
    }
    double acc = 0.0;
    for (int cz = 0; cz < 2; ++cz) {
        const long k = i0[2] + cz;
        if (k < 0 || k >= long(d.nz)) continue;
        const double wz = cz ? w[2] : 1.0 - w[2];
        for (int cy = 0; cy < 2; ++cy) {
            const long j = i0[1] + cy;
            if (j < 0 || j >= long(d.ny)) continue;
            const double wyz = wz * (cy ? w[1] : 1.0 - w[1]);
            const std::size_t row = (std::size_t(k) * d.ny + std::size_t(j)) * d.nx;
            for (int cx = 0; cx < 2; ++cx) {
                const long i = i0[0] + cx;
                if (i < 0 || i >= long(d.nx)) continue;
                acc += wyz * (cx ? w[0] : 1.0 - w[0]) * f.data()[row + std::size_t(i)];
            }
        }
    }
    return acc;
}

// Bilinear weights of a Y-Z position over the voxel columns; entries outside the
// grid are dropped (zero padding).
struct ColumnMix {
    std::size_t count = 0;
    std::size_t row[4]{};
    double weight[4]{};
};

ColumnMix column_mix(const Volume& f, double jf, double kf, bool pad) {
    ColumnMix mix;
    const Dims3& d = f.dims();
    const double lo = pad ? -1.0 : 0.0;
    const double hy = pad ? double(d.ny) : double(d.ny - 1);
    const double hz = pad ? double(d.nz) : double(d.nz - 1);
    if (pad ? !(jf > lo && jf < hy && kf > lo && kf < hz) : !(jf >= lo && jf <= hy && kf >= lo && kf <= hz))
        return mix;
    const double j0 = std::floor(jf), k0 = std::floor(kf);
    const double wj = jf - j0, wk = kf - k0;
    for (int ck = 0; ck < 2; ++ck)
        for (int cj = 0; cj < 2; ++cj) {
            const long j = long(j0) + cj, k = long(k0) + ck;
            const double w = (cj ? wj : 1.0 - wj) * (ck ? wk : 1.0 - wk);
            if (w == 0.0 || j < 0 || k < 0 || j >= long(d.ny) || k >= long(d.nz)) continue;
            mix.row[mix.count] = (std::size_t(k) * d.ny + std::size_t(j)) * d.nx;
            mix.weight[mix.count] = w;
            ++mix.count;
        }
    return mix;
}

std::vector<double> column_profile(const Volume& f, const ColumnMix& mix) {
    std::vector<double> p(f.dims().nx, 0.0);
    for (std::size_t c = 0; c < mix.count; ++c)
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += mix.weight[c] * f.data()[mix.row[c] + i];
    return p;
}

// Linear interpolation of a profile at continuous index `x`, with `pad` outside.
double lerp_profile(const std::vector<double>& p, double x, double pad) {
    const double fl = std::floor(x);
    const long i = static_cast<long>(fl);
    const double w = x - fl;
    const long n = static_cast<long>(p.size());
    const double a = (i >= 0 && i < n) ? p[std::size_t(i)] : pad;
    if (w == 0.0) return a;
    const double b = (i + 1 >= 0 && i + 1 < n) ? p[std::size_t(i + 1)] : pad;
    return a + w * (b - a);
}

// Ray/box clip. Returns false when the segment [0, tmax] misses the box.
bool clip_ray(const Vec3& o, const Vec3& dir, const Vec3& lo, const Vec3& hi, double tmax, double& t0, double& t1) {
    t0 = 0.0;
    t1 = tmax;
    for (int a = 0; a < 3; ++a) {
        const double oa = o[a], da = dir[a];
        if (std::abs(da) < 1e-300) {
            if (oa <= lo[a] || oa >= hi[a]) return false;
            continue;
        }
        double ta = (lo[a] - oa) / da, tb = (hi[a] - oa) / da;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 >= t1) return false;
    }
    return true;
}

}  // namespace

IntegralImage integrate_orthogonal(const Volume& field, const DetectorGrid& det, const ProjectionOptions& opt) {
    check_rate(opt);
    IntegralImage img = IntegralImage::on_grid(det);
    const std::size_t nx = field.dims().nx;
    const double sx = field.spacing().x;
    // Integrate over the zero-padded support, index range [-1, nx].
    const double span_idx = double(nx + 1);
    const std::size_t n = sample_count(span_idx * sx, opt.samples_per_mm);
    const double step_idx = span_idx / double(n);

    parallel_for(det.nv, opt.threads, [&](std::size_t v) {
        const double kf = (det.v_coord(double(v)) - field.origin().z) / field.spacing().z;
        for (std::size_t u = 0; u < det.nu; ++u) {
            const double jf = (det.u_coord(double(u)) - field.origin().y) / field.spacing().y;
            const ColumnMix mix = column_mix(field, jf, kf, true);
            if (mix.count == 0) continue;
            const auto profile = column_profile(field, mix);
            double sum = 0.0;
            for (std::size_t m = 0; m < n; ++m) sum += lerp_profile(profile, -1.0 + (double(m) + 0.5) * step_idx, 0.0);
            img.values(u, v) = sum * step_idx * sx;
        }
    });
    return img;
}

IntegralImage integrate_perspective(const Volume& field, const ConeGeometry& g, const ProjectionOptions& opt) {
    g.validate();
    check_rate(opt);
    IntegralImage img = IntegralImage::on_grid(g.detector);
    const Vec3 src{g.source_x(), 0.0, 0.0};
    const double det_x = g.detector_x();
    const double ysign = g.angle_deg == 0 ? 1.0 : -1.0;
    const Vec3& sp = field.spacing();
    const Dims3& d = field.dims();
    const Vec3 lo = field.origin() - sp;
    const Vec3 hi = field.world_of(double(d.nx), double(d.ny), double(d.nz));

    parallel_for(g.detector.nv, opt.threads, [&](std::size_t v) {
        const double z = g.detector.v_coord(double(v));
        for (std::size_t u = 0; u < g.detector.nu; ++u) {
            const Vec3 target{det_x, ysign * g.detector.u_coord(double(u)), z};
            const Vec3 delta = target - src;
            const double len = delta.norm();
            const Vec3 dir = delta * (1.0 / len);
            double t0 = 0.0, t1 = 0.0;
            if (!clip_ray(src, dir, lo, hi, len, t0, t1)) continue;
            const std::size_t n = sample_count(t1 - t0, opt.samples_per_mm);
            const double step = (t1 - t0) / double(n);
            double sum = 0.0;
            for (std::size_t m = 0; m < n; ++m) {
                const Vec3 idx = field.index_of(src + dir * (t0 + (double(m) + 0.5) * step));
                sum += sample_zero_padded(field, idx.x, idx.y, idx.z);
            }
            img.values(u, v) = sum * step;
        }
    });
    return img;
}

IntegralImage project_orthogonal(const Volume& v, const DetectorGrid& det, const AttenuationModel& m,
                                 const ProjectionOptions& opt) {
    return integrate_orthogonal(attenuation_volume(v, m), det, opt);
}

IntegralImage project_perspective(const Volume& v, const ConeGeometry& g, const AttenuationModel& m,
                                  const ProjectionOptions& opt) {
    g.validate();
    return integrate_perspective(attenuation_volume(v, m), g, opt);
}

IntegralImage flip_horizontal(const IntegralImage& img) {
    IntegralImage out = img;
    for (std::size_t v = 0; v < img.nv(); ++v)
        for (std::size_t u = 0; u < img.nu(); ++u) out.values(u, v) = img.values(img.nu() - 1 - u, v);
    // Keep the grid symmetric about the same centre.
    out.plane_origin.y = -(img.plane_origin.y + double(img.nu() - 1) * img.su);
    return out;
}

double mean_of_top_k(std::span<const double> samples, std::size_t k) {
    if (k < 1) throw ValidationError("k must be at least 1");
    if (samples.empty()) throw ValidationError("no samples");
    std::vector<double> s(samples.begin(), samples.end());
    const std::size_t take = std::min(k, s.size());
    std::nth_element(s.begin(), s.begin() + std::ptrdiff_t(take - 1), s.end(), std::greater<>());
    // Sum in descending order so the result does not depend on input order.
    std::sort(s.begin(), s.begin() + std::ptrdiff_t(take), std::greater<>());
    return std::accumulate(s.begin(), s.begin() + std::ptrdiff_t(take), 0.0) / double(take);
}

IntegralImage project_mip(const Volume& v, std::size_t k, const DetectorGrid& det, const ProjectionOptions& opt) {
    if (k < 1) throw ValidationError("MIP requires k >= 1");
    check_rate(opt);
    IntegralImage img = IntegralImage::on_grid(det);
    const std::size_t nx = v.dims().nx;
    const double hull_mm = double(nx - 1) * v.spacing().x;
    const std::size_t intervals = nx > 1 ? sample_count(hull_mm, opt.samples_per_mm) : 0;
    const std::size_t n = intervals + 1;

    parallel_for(det.nv, opt.threads, [&](std::size_t row) {
        std::vector<double> samples(n);
        double kf = (det.v_coord(double(row)) - v.origin().z) / v.spacing().z;
        if (std::abs(kf - std::round(kf)) < 1e-9) kf = std::round(kf);
        for (std::size_t u = 0; u < det.nu; ++u) {
            double jf = (det.u_coord(double(u)) - v.origin().y) / v.spacing().y;
            if (std::abs(jf - std::round(jf)) < 1e-9) jf = std::round(jf);
            const ColumnMix mix = column_mix(v, jf, kf, false);
            if (mix.count == 0) {
                img.values(u, row) = kAirHu;
                continue;
            }
            const auto profile = column_profile(v, mix);
            for (std::size_t m = 0; m < n; ++m) {
                const double x = intervals ? double(m) * double(nx - 1) / double(intervals) : 0.0;
                samples[m] = lerp_profile(profile, x, kAirHu);
            }
            img.values(u, row) = mean_of_top_k(samples, k);
        }
    });
    return img;
}

Gray8 window_to_gray8(const Grid2<double>& img, double lo, double hi) {
    if (!(hi > lo)) throw ValidationError("window requires hi > lo");
    Gray8 out(img.nu(), img.nv());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double c = std::clamp(img.values()[i], lo, hi);
        out.values()[i] = to_u8((c - lo) / (hi - lo) * 255.0);
    }
    return out;
}

IntegralImage load_integral_image(const std::filesystem::path& path) {
    const auto meta = io::meta_path_for(path);
    const auto kv = io::read_key_values(meta);
    if (!kv.contains("dims") || !kv.contains("spacing_mm"))
        throw ValidationError(meta.string() + ": integral image metadata needs dims and spacing_mm");
    const auto dims = io::parse_doubles(kv.at("dims"), 2);
    const auto sp = io::parse_doubles(kv.at("spacing_mm"), 2);
    const auto org = kv.contains("plane_origin_mm") ? io::parse_doubles(kv.at("plane_origin_mm"), 2)
                                                    : std::vector<double>{0.0, 0.0};
    if (kv.contains("dtype") && kv.at("dtype") != "float32le")
        throw ValidationError(meta.string() + ": unsupported dtype " + kv.at("dtype"));
    if (dims[0] < 1 || dims[1] < 1) throw ValidationError(meta.string() + ": dims must be positive");
    if (!(sp[0] > 0 && sp[1] > 0)) throw ValidationError(meta.string() + ": spacing must be positive");
    const std::size_t nu = std::size_t(dims[0]), nv = std::size_t(dims[1]);

    const auto bytes = io::read_bytes(io::raw_path_for(path));
    if (bytes.size() != nu * nv * 4)
        throw ValidationError(path.string() + ": payload size does not match dims " + kv.at("dims"));
    std::vector<double> data(nu * nv);
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::uint32_t word = 0;
        for (int b = 0; b < 4; ++b) word |= std::uint32_t(static_cast<unsigned char>(bytes[4 * i + b])) << (8 * b);
        data[i] = static_cast<double>(std::bit_cast<float>(word));
    }
    IntegralImage img{Grid2<double>(nu, nv, std::move(data)), sp[0], sp[1], {org[0], org[1]}};
    img.validate();
    return img;
}

void save_integral_image(const std::filesystem::path& path, const IntegralImage& img) {
    std::vector<char> bytes(img.values.size() * 4);
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        const auto word = std::bit_cast<std::uint32_t>(static_cast<float>(img.values.values()[i]));
        for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<char>((word >> (8 * b)) & 0xff);
    }
    io::write_bytes(io::raw_path_for(path), bytes);
    const double dims[2] = {double(img.nu()), double(img.nv())};
    const double sp[2] = {img.su, img.sv};
    const double org[2] = {img.plane_origin.y, img.plane_origin.z};
    io::write_key_values(io::meta_path_for(path), {{"dims", io::format_doubles(dims)},
                                                   {"spacing_mm", io::format_doubles(sp)},
                                                   {"plane_origin_mm", io::format_doubles(org)},
                                                   {"dtype", "float32le"}});
}

}  // namespace cephforge
