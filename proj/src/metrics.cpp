#include "cephforge/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "cephforge/io.hpp"

namespace cephforge {

double rmse(const Grid2<double>& a, const Grid2<double>& b) {
    if (!a.same_shape(b)) throw ValidationError("rmse: image dims differ");
    if (a.empty()) throw ValidationError("rmse: empty images");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.values()[i] - b.values()[i];
        sum += d * d;
    }
    return std::sqrt(sum / double(a.size()));
}

double rmse(const Gray8& a, const Gray8& b) { return rmse(to_double(a), to_double(b)); }

double psnr_from_rmse(double rmse_value, double peak) {
    if (rmse_value == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(peak / rmse_value);
}

double psnr(const Grid2<double>& a, const Grid2<double>& b, double peak) { return psnr_from_rmse(rmse(a, b), peak); }
double psnr(const Gray8& a, const Gray8& b, double peak) { return psnr_from_rmse(rmse(a, b), peak); }

std::vector<double> line_profile(const Grid2<double>& img, double su, double sv, Vec2 p0, Vec2 p1, std::size_t n) {
    if (n < 2) throw ValidationError("line profile needs at least 2 samples");
    if (img.empty()) throw ValidationError("line profile on an empty image");
    if (!(su > 0 && sv > 0)) throw ValidationError("pixel spacing must be positive");
    const double max_u = double(img.nu() - 1), max_v = double(img.nv() - 1);
    const auto inside = [&](Vec2 p) {
        const double u = p.y / su, v = p.z / sv;
        return u >= -1e-9 && v >= -1e-9 && u <= max_u + 1e-9 && v <= max_v + 1e-9;
    };
    if (!inside(p0) || !inside(p1)) throw ValidationError("line profile endpoint lies outside the image");

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = double(i) / double(n - 1);
        const double u = std::clamp((p0.y + t * (p1.y - p0.y)) / su, 0.0, max_u);
        const double v = std::clamp((p0.z + t * (p1.z - p0.z)) / sv, 0.0, max_v);
        const auto u0 = static_cast<std::size_t>(u), v0 = static_cast<std::size_t>(v);
        const std::size_t u1 = std::min(u0 + 1, img.nu() - 1), v1 = std::min(v0 + 1, img.nv() - 1);
        const double wu = u - double(u0), wv = v - double(v0);
        out[i] = (1 - wv) * ((1 - wu) * img(u0, v0) + wu * img(u1, v0)) + wv * ((1 - wu) * img(u0, v1) + wu * img(u1, v1));
    }
    return out;
}

void LandmarkSet::validate() const {
    if (points.size() != kLandmarkCount || labels.size() != kLandmarkCount)
        throw ValidationError("landmark sets hold exactly 19 entries (got " + std::to_string(points.size()) + ")");
    for (const auto& p : points)
        if (!std::isfinite(p.y) || !std::isfinite(p.z)) throw ValidationError("landmark coordinate is not finite");
}

SdrTable sdr(const LandmarkSet& detected, const LandmarkSet& reference, const std::vector<double>& radii) {
    detected.validate();
    reference.validate();
    if (detected.labels != reference.labels) throw ValidationError("landmark labels differ between sets");
    if (radii.empty()) throw ValidationError("no SDR radii given");
    std::vector<double> dist(kLandmarkCount);
    for (std::size_t i = 0; i < kLandmarkCount; ++i)
        dist[i] = std::hypot(detected.points[i].y - reference.points[i].y, detected.points[i].z - reference.points[i].z);
    SdrTable t{radii, {}};
    for (double r : radii) {
        if (!(r >= 0.0)) throw ValidationError("SDR radius must be non-negative");
        std::size_t hits = 0;
        for (double d : dist) hits += d <= r ? 1 : 0;
        t.rates.push_back(100.0 * double(hits) / double(kLandmarkCount));
    }
    return t;
}

LandmarkSet read_landmarks(const std::filesystem::path& path, double pixel_spacing) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    const double scale = pixel_spacing > 0.0 ? pixel_spacing : 1.0;
    LandmarkSet set;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string label, y, z;
        if (!std::getline(ss, label, '\t') || !std::getline(ss, y, '\t') || !std::getline(ss, z, '\t'))
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected label<TAB>y<TAB>z");
        set.labels.push_back(label);
        set.points.push_back({io::parse_doubles(y, 1)[0] * scale, io::parse_doubles(z, 1)[0] * scale});
    }
    set.validate();
    return set;
}

void write_landmarks(const std::filesystem::path& path, const LandmarkSet& set) {
    set.validate();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << std::setprecision(17);
    for (std::size_t i = 0; i < set.points.size(); ++i)
        out << set.labels[i] << '\t' << set.points[i].y << '\t' << set.points[i].z << '\n';
}

std::string format_sdr_table(const SdrTable& t) {
    std::ostringstream os;
    os << std::left << std::setw(12) << "radius_mm" << "sdr_percent\n";
    for (std::size_t i = 0; i < t.radii.size(); ++i) {
        char line[64];
        std::snprintf(line, sizeof line, "%-12.1f%.2f\n", t.radii[i], t.rates[i]);
        os << line;
    }
    return os.str();
}

std::string format_sdr_tsv(const SdrTable& t) {
    std::ostringstream os;
    os << "radius_mm\tsdr_percent\n" << std::setprecision(10);
    for (std::size_t i = 0; i < t.radii.size(); ++i) os << t.radii[i] << '\t' << t.rates[i] << '\n';
    return os.str();
}

}  // namespace cephforge
