#include "cephforge/cephgeom.hpp"

#include <algorithm>
#include <cmath>

#include "cephforge/parallel.hpp"

namespace cephforge {

void VirtualDetectorSpec::validate() const {
    if (nu == 0 || nv == 0 || nu % 2 || nv % 2) throw ValidationError("virtual detector dims must be even and non-zero");
    if (!(su > 0.0 && sv > 0.0)) throw ValidationError("virtual detector spacing must be positive");
}

double magnification(double depth_mm, double d0) {
    if (!(d0 > 0.0)) throw ValidationError("d0 must be positive");
    if (!(depth_mm < d0)) throw ValidationError("depth must be closer to the VD than the source (x < d0)");
    return d0 / (d0 - depth_mm);
}

IntegralImage rebin_to_vd(const IntegralImage& proj, const ConeGeometry& g, const VirtualDetectorSpec& vd,
                          unsigned threads) {
    g.validate();
    vd.validate();
    if (proj.nu() != g.detector.nu || proj.nv() != g.detector.nv)
        throw ValidationError("projection dims do not match the geometry's detector");
    if (std::abs(proj.su - g.detector.su) > 1e-9 || std::abs(proj.sv - g.detector.sv) > 1e-9)
        throw ValidationError("projection pixel spacing does not match the geometry's detector");

    IntegralImage out = IntegralImage::on_grid(vd.grid());
    const double scale = g.d1 / g.d0;
    parallel_for(vd.nv, threads, [&](std::size_t v) {
        const double fv = (out.plane_origin.z + double(v) * vd.sv) * scale;
        const double pv = (fv - proj.plane_origin.z) / proj.sv;
        for (std::size_t u = 0; u < vd.nu; ++u) {
            const double fu = (out.plane_origin.y + double(u) * vd.su) * scale;
            const double pu = (fu - proj.plane_origin.y) / proj.su;
            if (pu < 0.0 || pv < 0.0 || pu > double(proj.nu() - 1) || pv > double(proj.nv() - 1)) continue;
            const auto u0 = static_cast<std::size_t>(pu), v0 = static_cast<std::size_t>(pv);
            const std::size_t u1 = std::min(u0 + 1, proj.nu() - 1), v1 = std::min(v0 + 1, proj.nv() - 1);
            const double wu = pu - double(u0), wv = pv - double(v0);
            const auto& p = proj.values;
            out.values(u, v) = (1 - wv) * ((1 - wu) * p(u0, v0) + wu * p(u1, v0)) + wv * ((1 - wu) * p(u0, v1) + wu * p(u1, v1));
        }
    });
    return out;
}

namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.y - o.y) * (b.z - o.z) - (a.z - o.z) * (b.y - o.y);
}

// Andrew's monotone chain; drops collinear and duplicate points.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) { return a.y < b.y || (a.y == b.y && a.z < b.z); });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    const double eps = 1e-12;
    std::vector<Vec2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= eps) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= eps) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace

PatchEnvelope patch_envelope(double y0, double z0, double edge, double x_min, double x_max, double d0) {
    if (!(y0 >= 0.0 && z0 >= 0.0)) throw ValidationError("patch corner must lie in the first quadrant");
    if (!(edge > 0.0)) throw ValidationError("patch edge must be positive");
    if (!(x_min <= x_max && x_max < d0)) throw ValidationError("invalid depth range: need x_min <= x_max < d0");
    const double m_lo = magnification(x_min, d0);
    const double m_hi = magnification(x_max, d0);
    std::vector<Vec2> corners;
    for (double m : {m_lo, m_hi})
        for (double dy : {0.0, edge})
            for (double dz : {0.0, edge}) corners.push_back({m * (y0 + dy), m * (z0 + dz)});
    return {convex_hull(std::move(corners))};
}

std::string to_string(Quadrant q) { return "Q" + std::to_string(static_cast<int>(q)); }

Quadrant parse_quadrant(const std::string& s) {
    for (auto q : kQuadrants)
        if (s == to_string(q) || s == std::to_string(static_cast<int>(q))) return q;
    throw ValidationError("unknown quadrant '" + s + "'");
}

DualRgbPatch pack_dual(const QuadrantPatch<std::uint8_t>& p0, const QuadrantPatch<std::uint8_t>& p180) {
    if (!p0.normalized || !p180.normalized) throw ValidationError("dual packing expects normalized patches");
    if (p0.quadrant != p180.quadrant) throw ValidationError("dual packing needs patches from the same quadrant");
    if (!p0.data.same_shape(p180.data)) throw ValidationError("dual packing needs patches of identical dims");
    return {p0.data, p180.data, p0.data, p0.quadrant};
}

Vec2 cone_project_point(const Vec3& pt, const ConeGeometry& g) {
    g.validate();
    // Distance from the source toward the VD, measured along the central ray.
    const double along = g.angle_deg == 0 ? g.d0 + pt.x : g.d0 - pt.x;
    if (!(along > 0.0)) throw ValidationError("point lies at or behind the source");
    const double m = g.d0 / along;
    return {pt.y * m, pt.z * m};
}

}  // namespace cephforge
