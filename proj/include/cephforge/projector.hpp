// Forward projection of volumes to attenuation line-integral images.
//
// World frame: the isocenter is the world origin; rays of the orthogonal
// projector run along +X. For cone-beam views the source sits at (-d0, 0, 0)
// for 0 degrees and at (+d0, 0, 0) for 180 degrees, with the detector plane
// perpendicular to X at distance d1 from the source.
#pragma once

#include <filesystem>
#include <span>

#include "cephforge/core.hpp"
#include "cephforge/volume.hpp"

namespace cephforge {

/// Regular detector grid centred on the projection of the isocenter.
struct DetectorGrid {
    std::size_t nu = 512;
    std::size_t nv = 512;
    double su = 0.5;  // mm per pixel along Y
    double sv = 0.5;  // mm per pixel along Z

    void validate() const;
    /// Local detector coordinate (mm) of pixel centre `u` / `v`.
    double u_coord(double u) const { return (u - 0.5 * static_cast<double>(nu - 1)) * su; }
    double v_coord(double v) const { return (v - 0.5 * static_cast<double>(nv - 1)) * sv; }
};

/// 2D image of line integrals. `plane_origin` is the in-plane position (mm) of
/// the centre of pixel (0,0); pixel (u,v) sits at plane_origin + (u*su, v*sv).
struct IntegralImage {
    Grid2<double> values;
    double su = 1.0;
    double sv = 1.0;
    Vec2 plane_origin;

    std::size_t nu() const { return values.nu(); }
    std::size_t nv() const { return values.nv(); }

    static IntegralImage on_grid(const DetectorGrid& g);

    /// Throws unless every value is finite and >= 0.
    void validate() const;
    /// Count of pixels above the "suspicious" level for head data (20).
    std::size_t suspicious_count() const;
};

struct ConeGeometry {
    double d0 = 650.0;   // source to isocenter, mm
    double d1 = 950.0;   // source to detector, mm
    DetectorGrid detector{512, 512, 0.73, 0.73};
    int angle_deg = 0;   // 0 or 180

    void validate() const;

    /// Dental CBCT configuration: 512x512 detector with 0.73 mm pixels.
    static ConeGeometry dental_cbct(int angle_deg = 0);
    /// Wehmer cephalostat: source-isocenter 1524 mm, isocenter-detector 115 mm.
    static ConeGeometry wehmer(DetectorGrid detector, int angle_deg = 0);

    double source_x() const { return angle_deg == 0 ? -d0 : d0; }
    double detector_x() const { return angle_deg == 0 ? d1 - d0 : d0 - d1; }
};

struct AttenuationModel {
    double mu_water = 0.0203;  // 1/mm

    void validate() const;
};

struct ProjectionOptions {
    double samples_per_mm = 3.0;
    unsigned threads = 1;
};

/// mu = mu_water * (1 + hu/1000), clamped below at zero.
double hu_to_mu(double hu, const AttenuationModel& m = {});

/// Volume of attenuation coefficients (1/mm) from a HU volume.
Volume attenuation_volume(const Volume& hu, const AttenuationModel& m = {});

/// Line integrals of an arbitrary scalar field (no HU conversion). Outside the
/// voxel grid the field is zero; inside it is trilinear.
IntegralImage integrate_orthogonal(const Volume& field, const DetectorGrid& det, const ProjectionOptions& opt = {});
IntegralImage integrate_perspective(const Volume& field, const ConeGeometry& g, const ProjectionOptions& opt = {});

/// Parallel-beam projection along +X of the HU volume `v`.
IntegralImage project_orthogonal(const Volume& v, const DetectorGrid& det, const AttenuationModel& m = {},
                                 const ProjectionOptions& opt = {});

/// Cone-beam projection of `v`. For 180 degrees the image is in the rotated
/// detector's own frame (its u axis runs along -Y); apply flip_horizontal to
/// bring it into the 0 degree frame.
IntegralImage project_perspective(const Volume& v, const ConeGeometry& g, const AttenuationModel& m = {},
                                  const ProjectionOptions& opt = {});

/// Mirrors u. Converts a 180 degree projection into the 0 degree orientation.
IntegralImage flip_horizontal(const IntegralImage& img);

/// Mean of the k largest values (all values when fewer than k).
double mean_of_top_k(std::span<const double> samples, std::size_t k);

/// MIP-K: per X-parallel ray, mean of the k largest trilinear HU samples
/// (3 samples/mm over the voxel-centre hull). Off-grid rays read air.
IntegralImage project_mip(const Volume& v, std::size_t k, const DetectorGrid& det, const ProjectionOptions& opt = {});

/// Linear display window mapping [lo, hi] to [0, 255].
Gray8 window_to_gray8(const Grid2<double>& img, double lo = -1000.0, double hi = 3000.0);

/// 32-bit float raster + sidecar (dims, spacing_mm, plane_origin_mm).
IntegralImage load_integral_image(const std::filesystem::path& path);
void save_integral_image(const std::filesystem::path& path, const IntegralImage& img);

}  // namespace cephforge
