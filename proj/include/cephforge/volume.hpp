// CT head volumes: loading, rigid resampling and skeleton enhancement.
#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "cephforge/core.hpp"

namespace cephforge {

inline constexpr double kAirHu = -1000.0;
inline constexpr double kHuFloor = -1024.0;

struct Dims3 {
    std::size_t nx = 0, ny = 0, nz = 0;

    std::size_t count() const { return nx * ny * nz; }
    std::size_t operator[](int axis) const { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
    friend bool operator==(const Dims3&, const Dims3&) = default;
};

/// Scalar volume on a regular grid. X runs left-right (the lateral projection
/// axis), Y anterior, Z superior. `origin` is the world position (mm) of the
/// centre of voxel (0,0,0). Storage is X fastest, then Y, then Z.
///
/// Immutable after construction; operations return new volumes.
class Volume {
public:
    Volume(Dims3 dims, Vec3 spacing, Vec3 origin, std::vector<double> data);

    /// Constant-valued volume, convenient for phantoms.
    static Volume filled(Dims3 dims, Vec3 spacing, Vec3 origin, double value);

    /// Grid centred on the world origin, i.e. the isocenter sits at the volume centre.
    static Vec3 centered_origin(Dims3 dims, Vec3 spacing);

    const Dims3& dims() const { return dims_; }
    const Vec3& spacing() const { return spacing_; }
    const Vec3& origin() const { return origin_; }
    const std::vector<double>& data() const { return data_; }

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
        return (k * dims_.ny + j) * dims_.nx + i;
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return data_[index(i, j, k)]; }

    Vec3 world_of(double i, double j, double k) const;
    /// Continuous voxel index of a world position.
    Vec3 index_of(const Vec3& world) const;

    /// Same grid, new payload.
    Volume with_data(std::vector<double> data) const;

    bool same_grid(const Volume& o) const;

    friend bool operator==(const Volume&, const Volume&) = default;

private:
    Dims3 dims_;
    Vec3 spacing_;
    Vec3 origin_;
    std::vector<double> data_;
};

struct RigidTransform {
    Mat3 rotation;
    Vec3 translation;

    static RigidTransform identity() { return {}; }
    /// Rotation about the world Z axis by `degrees` (right-handed).
    static RigidTransform rotation_z(double degrees, Vec3 translation = {});

    /// Throws ValidationError unless the rotation is orthonormal with det +1 (tol 1e-9).
    void validate() const;

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Vec3 apply_inverse(const Vec3& p) const { return rotation.transposed() * (p - translation); }
};

enum class Interpolation { trilinear, nearest };

/// Resamples `v` on its own grid: output(p) = input(T^-1 p). Samples that fall
/// outside the input voxel-centre hull are set to air (-1000 HU).
Volume resample_rigid(const Volume& v, const RigidTransform& t,
                      Interpolation interp = Interpolation::trilinear);

struct EnhanceParams {
    double bone_threshold = 1000.0;
    double air_threshold = -500.0;
    double bone_weight = 1.3;

    void validate() const;
};

/// Skeleton/airway enhancement of a single HU value.
double enhance_value(double hu, const EnhanceParams& p);

/// Voxelwise: bone (> bone_threshold) scaled by bone_weight, air (< air_threshold)
/// reset to -1000 HU, everything else kept. Not idempotent for bone voxels.
Volume enhance_skeleton(const Volume& v, const EnhanceParams& p = {});

/// Reads `<stem>.meta` + `<stem>.raw` (int16 little-endian, X fastest).
/// Values below -1024 HU are clamped to -1024.
Volume load_volume(const std::filesystem::path& path);

/// Writes the volume as int16 (values rounded and saturated) plus its sidecar.
void save_volume(const std::filesystem::path& path, const Volume& v);

}  // namespace cephforge
