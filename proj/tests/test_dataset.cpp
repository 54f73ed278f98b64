#include <doctest.h>

#include <map>
#include <random>

#include "cephforge/io.hpp"
#include "cephforge/dataset.hpp"
#include "helpers.hpp"

using namespace cephforge;

namespace {

Grid2<double> ramp(std::size_t nu, std::size_t nv, double a, double b, double c) {
    Grid2<double> g(nu, nv);
    for (std::size_t v = 0; v < nv; ++v)
        for (std::size_t u = 0; u < nu; ++u) g(u, v) = a + b * double(u) + c * double(v);
    return g;
}

PatchPair make_pair(const std::string& patient, Quadrant q, Split s, std::uint64_t seed) {
    const Gray8 a = testutil::random_gray(8, 8, seed), b = testutil::random_gray(8, 8, seed + 100);
    const auto packed = pack_dual({a, q, true}, {b, q, true});
    return {packed, testutil::random_gray(8, 8, seed + 200), patient, s};
}

}  // namespace

TEST_CASE("quantization endpoints, midpoint and clamp") {
    const Grid2<double> g(5, 1, std::vector<double>{0.0, 6.0, 3.0, 7.0, -1.0});
    const Gray8 q = quantize_integral(g);
    CHECK(q(0, 0) == 0);
    CHECK(q(1, 0) == 255);
    CHECK(q(2, 0) == 128);
    CHECK(q(3, 0) == 255);
    CHECK(q(4, 0) == 0);
    CHECK_THROWS_AS(quantize_integral(g, 1.0, 1.0), ValidationError);
}

TEST_CASE("quantization is idempotent after the first pass") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 8.0);
    Grid2<double> g(50, 40);
    for (auto& x : g.values()) x = u(rng);
    const Gray8 q = quantize_integral(g);
    CHECK(quantize_integral(dequantize(q)) == q);
}

TEST_CASE("downsample factor 1 is the identity") {
    const auto g = ramp(7, 5, 1, 2, 3);
    CHECK(downsample_avg(g, 1) == g);
    CHECK_THROWS_AS(downsample_avg(g, 0), ValidationError);
    CHECK_THROWS_AS(downsample_avg(g, 8), ValidationError);
}

TEST_CASE("downsample of the paper cephalogram size") {
    const Grid2<double> g(1935, 2400, 1.0);
    const auto d = downsample_avg(g, 5);
    CHECK(d.nu() == 387);
    CHECK(d.nv() == 480);
}

TEST_CASE("checkerboard averages to a uniform grey") {
    Grid2<double> g(6, 4);
    for (std::size_t v = 0; v < 4; ++v)
        for (std::size_t u = 0; u < 6; ++u) g(u, v) = (u + v) % 2 ? 255.0 : 0.0;
    const auto d = downsample_avg(g, 2);
    for (double x : d.values()) CHECK(x == 127.5);
}

TEST_CASE("non-divisible images are centre-cropped") {
    const CropWindow c = divisible_crop(13, 11, 5);
    CHECK(c.nu == 10);
    CHECK(c.nv == 10);
    CHECK(c.u0 == 1);
    CHECK(c.v0 == 0);
    const auto g = ramp(13, 11, 0, 1, 100);
    const auto d = downsample_avg(g, 5);
    REQUIRE(d.nu() == 2);
    // block u in [1, 6), v in [0, 5): mean u = 3, mean v = 2
    CHECK(d(0, 0) == doctest::Approx(3.0 + 200.0));
}

TEST_CASE("downsampling undoes pixel replication exactly") {
    std::mt19937_64 rng(2);
    Grid2<double> g(9, 6);
    for (auto& x : g.values()) x = double(rng() % 256);
    for (std::size_t f : {1u, 2u, 5u}) CHECK(downsample_avg(upsample_nearest(g, f), f) == g);
}

TEST_CASE("bicubic upsampling basics") {
    const auto g = ramp(6, 5, 3, 1, -2);
    CHECK(upsample_bicubic(g, 1) == g);
    const Grid2<double> flat(5, 4, 42.0);
    const auto flat_up = upsample_bicubic(flat, 5);
    for (double x : flat_up.values()) CHECK(std::abs(x - 42.0) <= 1e-9);
    const auto up = upsample_bicubic(g, 3);
    CHECK(up.nu() == 18);
    CHECK(up.nv() == 15);
    CHECK_THROWS_AS(upsample_bicubic(g, 0), ValidationError);
}

TEST_CASE("bicubic upsampling reproduces linear ramps in the interior") {
    const std::size_t f = 5;
    const auto g = ramp(12, 10, 7, 1.5, -0.25);
    const auto up = upsample_bicubic(g, f);
    // Output pixel o samples input coordinate (o + 0.5)/f - 0.5; stay 2 input pixels from the edges.
    for (std::size_t v = 2 * f + f / 2; v + 2 * f + f / 2 < up.nv(); ++v)
        for (std::size_t u = 2 * f + f / 2; u + 2 * f + f / 2 < up.nu(); ++u) {
            const double x = (double(u) + 0.5) / double(f) - 0.5, y = (double(v) + 0.5) / double(f) - 0.5;
            CHECK(std::abs(up(u, v) - (7 + 1.5 * x - 0.25 * y)) <= 1e-6);
        }
}

TEST_CASE("split names") {
    CHECK(parse_split("val") == Split::val);
    CHECK(to_string(Split::test) == "test");
    CHECK_THROWS_AS(parse_split("dev"), ValidationError);
}

TEST_CASE("empty export writes a header-only manifest") {
    testutil::TempDir dir("pairs");
    const auto m = export_pairs({}, dir.path());
    CHECK(testutil::slurp(m) == std::string(kPairManifestHeader) + "\n");
    CHECK(read_pair_manifest(m).empty());
}

TEST_CASE("exported pairs round trip through the manifest") {
    testutil::TempDir dir("pairs");
    std::vector<PatchPair> pairs;
    std::uint64_t seed = 0;
    for (const std::string patient : {"p2", "p1"})
        for (auto q : {Quadrant::q3, Quadrant::q1, Quadrant::q4, Quadrant::q2})
            pairs.push_back(make_pair(patient, q, patient == "p1" ? Split::train : Split::test, ++seed));
    const auto manifest = export_pairs(pairs, dir.path(), 4);
    const auto records = read_pair_manifest(manifest);
    REQUIRE(records.size() == 8);
    CHECK(records.front().patient_id == "p1");
    CHECK(records.front().quadrant == Quadrant::q1);
    CHECK(records.back().patient_id == "p2");
    CHECK(records.back().quadrant == Quadrant::q4);
    CHECK(records[0].input_path == "p1/Q1_input.png");
    CHECK(records[0].target_path == "p1/Q1_target.png");

    for (const auto& r : records) {
        const auto rgb = io::read_png_rgb(dir / r.input_path);
        const auto target = io::read_png_gray(dir / r.target_path);
        CHECK(rgb.r == rgb.b);
        CHECK(rgb.r.same_shape(target));
        const auto it = std::find_if(pairs.begin(), pairs.end(), [&](const PatchPair& p) {
            return p.patient_id == r.patient_id && p.input.quadrant == r.quadrant;
        });
        REQUIRE(it != pairs.end());
        CHECK(rgb.g == it->input.g);
        CHECK(target == it->target);
        CHECK(r.split == it->split);
    }

    // parse(export(records)) == records, and re-export is byte-identical
    const std::string first = testutil::slurp(manifest);
    CHECK(read_pair_manifest(write_pair_manifest(records, dir.path())) == records);
    std::reverse(pairs.begin(), pairs.end());
    export_pairs(pairs, dir.path(), 1);
    CHECK(testutil::slurp(manifest) == first);
}

TEST_CASE("export validates before writing") {
    testutil::TempDir dir("pairs");
    std::vector<PatchPair> dup{make_pair("a", Quadrant::q1, Split::train, 1), make_pair("a", Quadrant::q1, Split::train, 2)};
    CHECK_THROWS_AS(export_pairs(dup, dir / "out"), ValidationError);
    CHECK_FALSE(std::filesystem::exists(dir / "out/a"));
    std::vector<PatchPair> bad{make_pair("b", Quadrant::q1, Split::train, 1)};
    bad[0].target = Gray8(3, 3);
    CHECK_THROWS_AS(export_pairs(bad, dir / "out"), ValidationError);
    std::vector<PatchPair> sneaky{make_pair("../x", Quadrant::q1, Split::train, 1)};
    CHECK_THROWS_AS(export_pairs(sneaky, dir / "out"), ValidationError);
    CHECK_THROWS_AS(write_pair_manifest({pair_record_for("c", Quadrant::q1, Split::val),
                                         pair_record_for("c", Quadrant::q1, Split::val)},
                                        dir.path()),
                    ValidationError);
}

TEST_CASE("a full-size manifest keeps the split counts") {
    testutil::TempDir dir("pairs");
    std::vector<PatchPairRecord> records;
    for (int p = 0; p < 460; ++p) {
        const Split s = p < 400 ? Split::train : (p < 410 ? Split::val : Split::test);
        char id[16];
        std::snprintf(id, sizeof id, "pat%03d", p);
        for (auto q : kQuadrants) records.push_back(pair_record_for(id, q, s));
    }
    const auto back = read_pair_manifest(write_pair_manifest(records, dir.path()));
    REQUIRE(back.size() == 1840);
    std::map<Split, int> counts;
    for (const auto& r : back) counts[r.split]++;
    CHECK(counts[Split::train] == 1600);
    CHECK(counts[Split::val] == 40);
    CHECK(counts[Split::test] == 200);
}

TEST_CASE("manifest readers reject malformed files") {
    testutil::TempDir dir("pairs");
    io::write_bytes(dir / "m.tsv", std::vector<char>{'x', '\n'});
    CHECK_THROWS_AS(read_pair_manifest(dir / "m.tsv"), ValidationError);
    const std::string bad = std::string(kPairManifestHeader) + "\na\tb\tQ1\tp\n";
    io::write_bytes(dir / "m.tsv", std::vector<char>(bad.begin(), bad.end()));
    CHECK_THROWS_AS(read_pair_manifest(dir / "m.tsv"), ValidationError);
    CHECK_THROWS_AS(read_pair_manifest(dir / "absent.tsv"), IoError);
}

TEST_CASE("SR triples at both blur levels") {
    const Gray8 hr = testutil::random_gray(320, 320, 3);
    const SrTriple x5 = make_sr_triple(hr, BlurLevel::x5);
    CHECK(x5.lr.nu() == 64);
    CHECK(x5.ilr.nu() == 320);
    CHECK(x5.lr == to_gray8(downsample_avg(to_double(hr), 5)));
    CHECK(x5.ilr == to_gray8(upsample_bicubic(to_double(x5.lr), 5)));
    const SrTriple x10 = make_sr_triple(hr, BlurLevel::x10x2);
    CHECK(x10.lr.nu() == 64);
    CHECK(x10.lr.nv() == 64);
    CHECK(x10.lr == to_gray8(upsample_bicubic(downsample_avg(to_double(hr), 10), 2)));
    CHECK_THROWS_AS(make_sr_triple(Gray8(15, 15), BlurLevel::x5), ValidationError);
}

TEST_CASE("SR patch corners stay inside the image and follow the seed") {
    SrOptions opt;
    const auto a = sr_patch_corners(1935, 2400, opt, 0);
    CHECK(a.size() == 42);
    for (const auto& [u, v] : a) {
        CHECK(u + 320 <= 1935);
        CHECK(v + 320 <= 2400);
    }
    CHECK(sr_patch_corners(1935, 2400, opt, 0) == a);
    CHECK(sr_patch_corners(1935, 2400, opt, 1) != a);
    opt.seed = 21;
    CHECK(sr_patch_corners(1935, 2400, opt, 0) != a);
    CHECK_THROWS_AS(sr_patch_corners(300, 2400, opt, 0), ValidationError);
}

TEST_CASE("SR dataset generation") {
    testutil::TempDir dir("sr");
    Gray8 img(700, 760);
    for (std::size_t v = 0; v < img.nv(); ++v)
        for (std::size_t u = 0; u < img.nu(); ++u) img(u, v) = static_cast<std::uint8_t>((u * 7 + v * 3 + (u * v) % 11) & 0xff);
    SrOptions opt;
    opt.threads = 4;
    const auto records = make_sr_dataset({{"ceph01", img}}, opt, dir / "a");
    REQUIRE(records.size() == 42);
    int x5 = 0;
    for (const auto& r : records) {
        const Gray8 hr = io::read_png_gray(dir / "a" / r.hr_path);
        const Gray8 lr = io::read_png_gray(dir / "a" / r.lr_path);
        const Gray8 ilr = io::read_png_gray(dir / "a" / r.ilr_path);
        CHECK(hr.nu() == 320);
        CHECK(hr.nv() == 320);
        CHECK(lr.nu() == 64);
        CHECK(lr.nv() == 64);
        CHECK(ilr.nu() == 320);
        CHECK(hr(0, 0) == img(r.u0, r.v0));
        if (r.blur_level == BlurLevel::x5) {
            ++x5;
            CHECK(to_gray8(downsample_avg(to_double(hr), 5)) == lr);
        }
    }
    CHECK(x5 == 21);
    CHECK(read_sr_manifest(dir / "a/sr_manifest.tsv") == records);

    opt.threads = 1;
    make_sr_dataset({{"ceph01", img}}, opt, dir / "b");
    CHECK(testutil::slurp(dir / "a/sr_manifest.tsv") == testutil::slurp(dir / "b/sr_manifest.tsv"));
    CHECK(testutil::slurp(dir / "a/ceph01/p007_ilr.png") == testutil::slurp(dir / "b/ceph01/p007_ilr.png"));

    CHECK_THROWS_AS(make_sr_dataset({{"small", Gray8(100, 100)}}, opt, dir / "c"), ValidationError);
    CHECK_THROWS_AS(make_sr_dataset({{"d", img}, {"d", img}}, opt, dir / "c"), ValidationError);
}
