// Phantoms, temporary directories and small oracles shared by the test suites.
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <unistd.h>

#include "cephforge/core.hpp"
#include "cephforge/volume.hpp"

namespace testutil {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("cephforge_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline cephforge::Volume air(cephforge::Dims3 d, double s) {
    return cephforge::Volume::filled(d, {s, s, s}, cephforge::Volume::centered_origin(d, {s, s, s}), cephforge::kAirHu);
}

// Fills every voxel whose centre lies inside the world-space box with `hu`.
inline cephforge::Volume with_box(const cephforge::Volume& v, cephforge::Vec3 lo, cephforge::Vec3 hi, double hu) {
    auto data = v.data();
    const auto& d = v.dims();
    for (std::size_t k = 0; k < d.nz; ++k)
        for (std::size_t j = 0; j < d.ny; ++j)
            for (std::size_t i = 0; i < d.nx; ++i) {
                const auto w = v.world_of(double(i), double(j), double(k));
                if (w.x >= lo.x && w.x <= hi.x && w.y >= lo.y && w.y <= hi.y && w.z >= lo.z && w.z <= hi.z)
                    data[v.index(i, j, k)] = hu;
            }
    return v.with_data(std::move(data));
}

inline std::pair<std::size_t, std::size_t> argmax(const cephforge::Grid2<double>& g) {
    std::size_t bu = 0, bv = 0;
    for (std::size_t v = 0; v < g.nv(); ++v)
        for (std::size_t u = 0; u < g.nu(); ++u)
            if (g(u, v) > g(bu, bv)) {
                bu = u;
                bv = v;
            }
    return {bu, bv};
}

inline cephforge::Gray8 random_gray(std::size_t nu, std::size_t nv, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    cephforge::Gray8 g(nu, nv);
    for (auto& x : g.values()) x = static_cast<std::uint8_t>(rng() & 0xff);
    return g;
}

}  // namespace testutil
