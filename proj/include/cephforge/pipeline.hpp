// End-to-end orchestration: volume-to-cephalogram synthesis (Type I) and the
// CBCT-projection-to-cephalogram patch dataset (Type II).
#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cephforge/cephgeom.hpp"
#include "cephforge/dataset.hpp"
#include "cephforge/film.hpp"
#include "cephforge/projector.hpp"
#include "cephforge/volume.hpp"

namespace cephforge {

enum class ProjectionKind { orthogonal, wehmer_perspective };
enum class FilmCurve { modified, original, mip };

std::string to_string(ProjectionKind k);
ProjectionKind parse_projection_kind(const std::string& s);
std::string to_string(FilmCurve c);
FilmCurve parse_film_curve(const std::string& s);

struct Type1Config {
    EnhanceParams enhance;
    ProjectionKind projection = ProjectionKind::orthogonal;
    FilmCurve curve = FilmCurve::modified;
    /// Zero integrals below tau1 when using the original curve.
    bool recover_air = false;
    std::size_t mip_k = 50;
    ModifiedSigmoidParams film;
    VirtualDetectorSpec output;  // 512 x 512 at 0.5 mm
    AttenuationModel attenuation;
    ProjectionOptions projection_options;
    /// Multiplies both Wehmer distances; large values approach parallel beams.
    double wehmer_scale = 1.0;

    void validate() const;
};

/// Skeleton-enhanced line-integral image on the output grid. Perspective images
/// are referenced to the isocenter plane, so pixel spacing matches `output`.
IntegralImage type1_integral(const Volume& v, const Type1Config& cfg);

/// enhance -> project -> film curve. For FilmCurve::mip the raw volume is
/// MIP-K projected and windowed from [-1000, 3000] HU instead.
Cephalogram8 synthesize_type1(const Volume& v, const Type1Config& cfg = {});

struct Type2Options {
    ConeGeometry cbct = ConeGeometry::dental_cbct();
    VirtualDetectorSpec vd;
    double quant_lo = 0.0;
    double quant_hi = 6.0;
    unsigned threads = 1;
    /// When set, projections are cached here keyed by a content hash.
    std::optional<std::filesystem::path> cache_dir;
};

struct Type2Source {
    std::string patient_id;
    Split split = Split::train;
    std::filesystem::path volume_path;
};

/// Rebinned, quantized 0 and 180 degree CBCT views on the VD (0 degree frame).
struct DualViews {
    Gray8 view0;
    Gray8 view180;
};
DualViews simulate_dual_views(const Volume& v, const Type2Options& opt, unsigned threads = 1);

/// The four (RGB input, target) pairs of one volume, ordered Q1..Q4.
std::array<PatchPair, 4> type2_pairs(const Volume& v, const std::string& patient_id, Split split,
                                     const Type1Config& cfg, const Type2Options& opt, unsigned threads = 1);

/// Writes all pairs under `root` and returns the manifest path.
std::filesystem::path produce_type2_dataset(const std::vector<Type2Source>& sources, const Type1Config& cfg,
                                            const Type2Options& opt, const std::filesystem::path& root);

struct NamedVolume {
    std::string patient_id;
    Split split = Split::train;
    Volume volume;
};
std::filesystem::path produce_type2_dataset(const std::vector<NamedVolume>& volumes, const Type1Config& cfg,
                                            const Type2Options& opt, const std::filesystem::path& root);

/// FNV-1a 64-bit content hash of a volume's grid and payload.
std::uint64_t content_hash(const Volume& v, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace cephforge
