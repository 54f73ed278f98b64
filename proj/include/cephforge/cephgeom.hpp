// Cone-beam geometry on the virtual detector (VD) placed at the midsagittal
// plane: magnification, rebinning, patch envelopes, quadrant handling and
// dual-projection packing.
//
// Quadrants are defined in detector millimetres with the VD centre at the
// isocenter projection: Q1 = (y >= 0, z >= 0), Q2 = (y < 0, z >= 0),
// Q3 = (y < 0, z < 0), Q4 = (y >= 0, z < 0). In memory, y grows with the
// column index u and z with the row index v.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cephforge/core.hpp"
#include "cephforge/projector.hpp"

namespace cephforge {

struct VirtualDetectorSpec {
    std::size_t nu = 512;
    std::size_t nv = 512;
    double su = 0.5;
    double sv = 0.5;

    void validate() const;
    DetectorGrid grid() const { return {nu, nv, su, sv}; }
};

/// d0 / (d0 - x) for a structure at depth x from the VD toward the source.
double magnification(double depth_mm, double d0);

/// Resamples a projection (in the 0 degree frame, i.e. 180 degree views already
/// flipped) onto the VD: VD pixel (y, z) reads the detector at (y, z) * d1/d0.
/// Bilinear; samples off the detector read 0.
IntegralImage rebin_to_vd(const IntegralImage& proj, const ConeGeometry& g, const VirtualDetectorSpec& vd = {},
                          unsigned threads = 1);

struct PatchEnvelope {
    std::vector<Vec2> vertices;  // counter-clockwise, no repeated or collinear points
};

/// Convex footprint on the VD of the square patch with lower-left corner
/// (y0, z0) and edge L0, swept over depths x in [x_min, x_max].
PatchEnvelope patch_envelope(double y0, double z0, double edge, double x_min, double x_max, double d0);

enum class Quadrant { q1 = 1, q2 = 2, q3 = 3, q4 = 4 };

std::string to_string(Quadrant q);
Quadrant parse_quadrant(const std::string& s);
inline constexpr std::array<Quadrant, 4> kQuadrants{Quadrant::q1, Quadrant::q2, Quadrant::q3, Quadrant::q4};

template <typename T>
struct QuadrantPatch {
    Grid2<T> data;
    Quadrant quadrant = Quadrant::q1;
    bool normalized = false;
};

template <typename T>
Grid2<T> flip_grid(const Grid2<T>& g, bool horizontal, bool vertical) {
    Grid2<T> out(g.nu(), g.nv());
    for (std::size_t v = 0; v < g.nv(); ++v)
        for (std::size_t u = 0; u < g.nu(); ++u)
            out(u, v) = g(horizontal ? g.nu() - 1 - u : u, vertical ? g.nv() - 1 - v : v);
    return out;
}

namespace detail {

inline bool flips_u(Quadrant q) { return q == Quadrant::q2 || q == Quadrant::q3; }
inline bool flips_v(Quadrant q) { return q == Quadrant::q3 || q == Quadrant::q4; }

}  // namespace detail

/// Cuts an even-sized image into its four quadrant patches, ordered Q1..Q4.
template <typename T>
std::array<QuadrantPatch<T>, 4> split_quadrants(const Grid2<T>& img) {
    if (img.nu() % 2 || img.nv() % 2 || img.empty())
        throw ValidationError("quadrant split needs even, non-zero dims (got " + std::to_string(img.nu()) + "x" +
                              std::to_string(img.nv()) + ")");
    const std::size_t hu = img.nu() / 2, hv = img.nv() / 2;
    std::array<QuadrantPatch<T>, 4> out;
    for (std::size_t n = 0; n < 4; ++n) {
        const Quadrant q = kQuadrants[n];
        const std::size_t u0 = detail::flips_u(q) ? 0 : hu;
        const std::size_t v0 = detail::flips_v(q) ? 0 : hv;
        Grid2<T> patch(hu, hv);
        for (std::size_t v = 0; v < hv; ++v)
            for (std::size_t u = 0; u < hu; ++u) patch(u, v) = img(u0 + u, v0 + v);
        out[n] = {std::move(patch), q, false};
    }
    return out;
}

/// Flips a patch into the Q1 deformation orientation: Q2 horizontal, Q3 both, Q4 vertical.
template <typename T>
QuadrantPatch<T> normalize_quadrant(const QuadrantPatch<T>& p) {
    if (p.normalized) throw ValidationError("patch is already normalized");
    return {flip_grid(p.data, detail::flips_u(p.quadrant), detail::flips_v(p.quadrant)), p.quadrant, true};
}

template <typename T>
QuadrantPatch<T> denormalize_quadrant(const QuadrantPatch<T>& p) {
    if (!p.normalized) throw ValidationError("patch is not normalized");
    return {flip_grid(p.data, detail::flips_u(p.quadrant), detail::flips_v(p.quadrant)), p.quadrant, false};
}

/// Reassembles four patches (any order, one per quadrant). Normalized patches
/// are flipped back when `denormalize` is set; otherwise they must not be normalized.
template <typename T>
Grid2<T> stitch_quadrants(const std::array<QuadrantPatch<T>, 4>& patches, bool denormalize) {
    std::array<const QuadrantPatch<T>*, 4> slot{};
    for (const auto& p : patches) {
        auto& s = slot[static_cast<std::size_t>(p.quadrant) - 1];
        if (s) throw ValidationError("duplicate quadrant " + to_string(p.quadrant));
        s = &p;
    }
    for (std::size_t n = 0; n < 4; ++n)
        if (!slot[n]) throw ValidationError("missing quadrant " + to_string(kQuadrants[n]));
    const std::size_t hu = slot[0]->data.nu(), hv = slot[0]->data.nv();
    for (const auto* p : slot)
        if (!p->data.same_shape(slot[0]->data)) throw ValidationError("quadrant patches differ in dims");

    Grid2<T> out(2 * hu, 2 * hv);
    for (const auto* p : slot) {
        if (p->normalized && !denormalize)
            throw ValidationError("normalized patch stitched without denormalize");
        const Grid2<T> data = p->normalized ? denormalize_quadrant(*p).data : p->data;
        const std::size_t u0 = detail::flips_u(p->quadrant) ? 0 : hu;
        const std::size_t v0 = detail::flips_v(p->quadrant) ? 0 : hv;
        for (std::size_t v = 0; v < hv; ++v)
            for (std::size_t u = 0; u < hu; ++u) out(u0 + u, v0 + v) = data(u, v);
    }
    return out;
}

/// Three-channel network input: red and blue carry the 0 degree patch, green
/// the 180 degree patch.
struct DualRgbPatch {
    Gray8 r, g, b;
    Quadrant quadrant = Quadrant::q1;
};

DualRgbPatch pack_dual(const QuadrantPatch<std::uint8_t>& p0, const QuadrantPatch<std::uint8_t>& p180);

/// Perspective projection of a world point onto the VD plane (x = 0) from the
/// view's source, in the 0 degree frame. Throws for points at or behind the source.
Vec2 cone_project_point(const Vec3& pt, const ConeGeometry& g);

}  // namespace cephforge
