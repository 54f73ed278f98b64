// Image-quality metrics, line profiles and landmark detection rates.
#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "cephforge/core.hpp"

namespace cephforge {

double rmse(const Grid2<double>& a, const Grid2<double>& b);
double rmse(const Gray8& a, const Gray8& b);

/// 20 log10(peak / rmse). Identical images give +infinity.
double psnr(const Grid2<double>& a, const Grid2<double>& b, double peak = 255.0);
double psnr(const Gray8& a, const Gray8& b, double peak = 255.0);
double psnr_from_rmse(double rmse_value, double peak = 255.0);

/// `n` bilinear samples from p0 to p1 inclusive. Points are (y, z) in mm with
/// pixel (0,0) centred at (0,0), so pixel (u,v) sits at (u*su, v*sv).
std::vector<double> line_profile(const Grid2<double>& img, double su, double sv, Vec2 p0, Vec2 p1, std::size_t n);

inline constexpr std::size_t kLandmarkCount = 19;

struct LandmarkSet {
    std::vector<Vec2> points;  // mm
    std::vector<std::string> labels;

    void validate() const;
};

struct SdrTable {
    std::vector<double> radii;  // mm
    std::vector<double> rates;  // percent
};

inline const std::vector<double> kDefaultSdrRadii{2.0, 2.5, 3.0, 4.0};

/// Percentage of landmarks whose Euclidean error is <= r, for each radius.
SdrTable sdr(const LandmarkSet& detected, const LandmarkSet& reference,
             const std::vector<double>& radii = kDefaultSdrRadii);

/// Reads "label<TAB>y<TAB>z" lines. With `pixel_spacing` > 0 the coordinates are
/// pixel indices and are scaled to mm.
LandmarkSet read_landmarks(const std::filesystem::path& path, double pixel_spacing = 0.0);
void write_landmarks(const std::filesystem::path& path, const LandmarkSet& set);

std::string format_sdr_table(const SdrTable& t);
std::string format_sdr_tsv(const SdrTable& t);

}  // namespace cephforge
