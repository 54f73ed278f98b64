// Training-set preparation: quantization, resampling kernels, patch-pair
// export with manifests, and super-resolution triples.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cephforge/cephgeom.hpp"
#include "cephforge/core.hpp"
#include "cephforge/io.hpp"
#include "cephforge/projector.hpp"

namespace cephforge {

/// Clamp to [lo, hi] then map linearly onto [0, 255], rounding half away from zero.
Gray8 quantize_integral(const Grid2<double>& g, double lo = 0.0, double hi = 6.0);
inline Gray8 quantize_integral(const IntegralImage& g, double lo = 0.0, double hi = 6.0) {
    return quantize_integral(g.values, lo, hi);
}
/// Inverse linear map of quantized codes back to integrals.
Grid2<double> dequantize(const Gray8& q, double lo = 0.0, double hi = 6.0);

struct CropWindow {
    std::size_t u0 = 0, v0 = 0, nu = 0, nv = 0;
};

/// Centered crop to the largest size divisible by `factor` in both axes.
CropWindow divisible_crop(std::size_t nu, std::size_t nv, std::size_t factor);

/// Block-mean downsampling. Non-divisible images are centre-cropped first.
Grid2<double> downsample_avg(const Grid2<double>& img, std::size_t factor);

/// Catmull-Rom (a = -0.5) bicubic upsampling, half-pixel-centre convention,
/// edge pixels replicated.
Grid2<double> upsample_bicubic(const Grid2<double>& img, std::size_t factor);

/// Pixel replication.
Grid2<double> upsample_nearest(const Grid2<double>& img, std::size_t factor);

enum class Split { train, val, test };
std::string to_string(Split s);
Split parse_split(const std::string& s);

/// One line of a patch-pair manifest. Paths are relative to the manifest's directory.
struct PatchPairRecord {
    std::string input_path;
    std::string target_path;
    Quadrant quadrant = Quadrant::q1;
    std::string patient_id;
    Split split = Split::train;

    friend bool operator==(const PatchPairRecord&, const PatchPairRecord&) = default;
};

/// In-memory pair ready for export.
struct PatchPair {
    DualRgbPatch input;
    Gray8 target;
    std::string patient_id;
    Split split = Split::train;
};

inline constexpr const char* kPairManifestHeader = "input\ttarget\tquadrant\tpatient\tsplit";

/// Relative file names used for a pair: `<patient>/<Qn>_input.png` and `<patient>/<Qn>_target.png`.
PatchPairRecord pair_record_for(const std::string& patient_id, Quadrant q, Split split);

/// Writes the two PNGs of a pair under `root` and returns its record.
PatchPairRecord write_pair_images(const PatchPair& pair, const std::filesystem::path& root);

/// Writes `root/manifest.tsv` sorted by (patient, quadrant). Throws on duplicate paths.
std::filesystem::path write_pair_manifest(std::vector<PatchPairRecord> records, const std::filesystem::path& root);

/// Writes all images then the manifest. Image writes run on `threads` workers.
std::filesystem::path export_pairs(const std::vector<PatchPair>& pairs, const std::filesystem::path& root,
                                   unsigned threads = 1);

std::vector<PatchPairRecord> read_pair_manifest(const std::filesystem::path& manifest);

enum class BlurLevel { x5, x10x2 };
std::string to_string(BlurLevel b);
BlurLevel parse_blur_level(const std::string& s);

struct SrRecord {
    std::string hr_path;
    std::string lr_path;
    std::string ilr_path;
    BlurLevel blur_level = BlurLevel::x5;
    std::string source;
    std::size_t u0 = 0;  // HR crop corner in the source image
    std::size_t v0 = 0;

    friend bool operator==(const SrRecord&, const SrRecord&) = default;
};

struct SrSource {
    std::string name;
    Gray8 image;  // 0.1 mm/pixel
};

enum class BlurPolicy { alternate, x5_only, x10x2_only };

struct SrOptions {
    std::size_t hr_patch = 320;
    std::size_t lr_factor = 5;
    std::size_t per_image = 42;
    std::size_t grid_cols = 7;
    std::size_t grid_rows = 6;
    int jitter_px = 16;
    std::uint64_t seed = 20;
    BlurPolicy blur = BlurPolicy::alternate;
    unsigned threads = 1;
};

/// LR and ILR images for one HR patch at the given blur level.
struct SrTriple {
    Gray8 hr, lr, ilr;
};
SrTriple make_sr_triple(const Gray8& hr, BlurLevel level, std::size_t lr_factor = 5);

/// HR crop corners for one source image (grid positions plus seeded jitter).
std::vector<std::pair<std::size_t, std::size_t>> sr_patch_corners(std::size_t nu, std::size_t nv,
                                                                  const SrOptions& opt, std::uint64_t stream);

/// Cuts per_image HR patches from each source, derives LR/ILR, writes PNGs under
/// `root` and `root/sr_manifest.tsv`. Returns the records in manifest order.
std::vector<SrRecord> make_sr_dataset(const std::vector<SrSource>& sources, const SrOptions& opt,
                                      const std::filesystem::path& root);

std::vector<SrRecord> read_sr_manifest(const std::filesystem::path& manifest);

}  // namespace cephforge
