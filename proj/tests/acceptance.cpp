// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

#include "cephforge/io.hpp"
#include "cephforge/cephgeom.hpp"
#include "cephforge/dataset.hpp"
#include "cephforge/film.hpp"
#include "cephforge/metrics.hpp"
#include "cephforge/pipeline.hpp"
#include "cephforge/projector.hpp"
#include "cephforge/volume.hpp"
#include "helpers.hpp"

using namespace cephforge;

namespace {

int failures = 0;

// Collects sub-check results for one criterion.
class Criterion {
public:
    explicit Criterion(std::string name) : name_(std::move(name)) {}

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass_ = false;
            detail_ << " [failed: " << what << "]";
        }
    }
    void note(const std::string& text) { detail_ << ' ' << text; }

    ~Criterion() {
        std::cout << (pass_ ? "PASS " : "FAIL ") << name_ << ':' << detail_.str() << std::endl;
        if (!pass_) ++failures;
    }

private:
    std::string name_;
    bool pass_ = true;
    std::ostringstream detail_;
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

void enhancement_table() {
    Criterion c("enhance_skeleton branch table (exact to 1e-9)");
    const std::vector<std::pair<double, double>> table{{-1024, -1000}, {-800, -1000}, {-500, -500}, {0, 0},
                                                       {999, 999},     {1000, 1000},  {1001, 1301.3}, {1200, 1560}};
    std::vector<double> in;
    for (const auto& [h, _] : table) in.push_back(h);
    const Volume out = enhance_skeleton(Volume({in.size(), 1, 1}, {1, 1, 1}, {}, in));
    for (std::size_t i = 0; i < table.size(); ++i)
        c.check(std::abs(out.data()[i] - table[i].second) <= 1e-9, std::to_string(int(table[i].first)) + " HU");
    c.note("8/8 branch values checked");
}

void sigmoid_anchors() {
    Criterion c("sigmoid anchors 145/250/44, modified(0.05)=0, continuity at tau2 < 0.5");
    const IntegralImage g{Grid2<double>(4, 1, std::vector<double>{2.6, 50.0, 0.0, 0.05}), 0.5, 0.5, {}};
    const Cephalogram8 base = sigmoid_transform(g);
    const Cephalogram8 mod = modified_sigmoid_transform(g);
    c.check(base.pixels(0, 0) == 145, "g=t");
    c.check(base.pixels(1, 0) == 250, "g=50");
    c.check(base.pixels(2, 0) == 44, "g=0");
    c.check(mod.pixels(3, 0) == 0, "modified g=0.05");
    const ModifiedSigmoidParams p;
    const double residual =
        std::abs(low_range_curve(p.tau2, p.c3, derive_c4(p), p.tau1, p.tau2) - sigmoid_curve(p.tau2, p.base));
    c.check(residual < 0.5, "continuity");
    c.note("c4=" + fmt("%.3f", derive_c4(p)) + " residual=" + fmt("%.2e", residual));
}

Volume head_phantom(std::size_t n, double s) {
    const Dims3 d{n, n, n};
    Volume v = testutil::air(d, s);
    std::vector<double> data(d.count(), kAirHu);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) {
                const Vec3 w = v.world_of(double(i), double(j), double(k));
                const double r = std::sqrt(w.x * w.x / (75.0 * 75.0) + w.y * w.y / (90.0 * 90.0) + w.z * w.z / (100.0 * 100.0));
                if (r < 0.93)
                    data[v.index(i, j, k)] = 40.0;
                else if (r < 1.0)
                    data[v.index(i, j, k)] = 1500.0;
                if (std::abs(w.x - 20) < 10 && std::abs(w.y + 30) < 15 && std::abs(w.z - 10) < 25) data[v.index(i, j, k)] = 1800.0;
            }
    return v.with_data(std::move(data));
}

void projection_phantoms() {
    Criterion c("projection phantoms (slab 0.1%, peak 1 px, x100 Wehmer limit < 1%, 128^3 < 60 s)");

    const Dims3 sd{200, 3, 3};
    const Volume slab = Volume::filled(sd, {1, 1, 1}, Volume::centered_origin(sd, {1, 1, 1}), 0.0);
    const double got = project_orthogonal(slab, {1, 1, 1, 1}).values(0, 0);
    const double rel = std::abs(got - 4.06) / 4.06;
    c.check(rel <= 1e-3, "water slab");
    c.note("slab=" + fmt("%.6f", got) + " rel_err=" + fmt("%.1e", rel));

    const double y0 = 20.0, z0 = -15.0;
    const Volume dot = testutil::with_box(testutil::air({65, 65, 65}, 1.0), {-0.1, y0 - 0.1, z0 - 0.1}, {0.1, y0 + 0.1, z0 + 0.1}, 3000.0);
    const ConeGeometry g{650, 950, {128, 128, 0.73, 0.73}, 0};
    const auto [u, v] = testutil::argmax(project_perspective(dot, g).values);
    const double du = std::abs(g.detector.u_coord(double(u)) - y0 * g.d1 / g.d0) / g.detector.su;
    const double dv = std::abs(g.detector.v_coord(double(v)) - z0 * g.d1 / g.d0) / g.detector.sv;
    c.check(du <= 1.0 && dv <= 1.0, "perspective peak");
    c.note("peak_offset_px=(" + fmt("%.2f", du) + "," + fmt("%.2f", dv) + ")");

    const Volume head = head_phantom(96, 2.5);
    Type1Config cfg;
    cfg.output = {128, 128, 2.0, 2.0};
    const IntegralImage ortho = type1_integral(head, cfg);
    cfg.projection = ProjectionKind::wehmer_perspective;
    cfg.wehmer_scale = 100.0;
    const IntegralImage far = type1_integral(head, cfg);
    double diff = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < ortho.values.size(); ++i) {
        diff = std::max(diff, std::abs(ortho.values.values()[i] - far.values.values()[i]));
        peak = std::max(peak, ortho.values.values()[i]);
    }
    c.check(diff < 0.01 * peak, "x100 Wehmer limit");
    c.note("limit_maxdiff/max=" + fmt("%.2e", diff / peak));

    const Volume big = head_phantom(128, 1.6);
    const auto t0 = std::chrono::steady_clock::now();
    const IntegralImage po = project_orthogonal(big, {512, 512, 0.5, 0.5}, {}, {3.0, 1});
    const auto t1 = std::chrono::steady_clock::now();
    const IntegralImage pp = project_perspective(big, ConeGeometry::dental_cbct(), {}, {3.0, 1});
    const auto t2 = std::chrono::steady_clock::now();
    const double so = std::chrono::duration<double>(t1 - t0).count();
    const double sp = std::chrono::duration<double>(t2 - t1).count();
    c.check(so < 60.0 && sp < 60.0, "runtime");
    c.check(po.suspicious_count() == 0 && pp.suspicious_count() == 0, "head-range integrals");
    c.note("128^3 orthogonal=" + fmt("%.2f", so) + "s perspective=" + fmt("%.2f", sp) + "s");
}

void geometry_suite() {
    Criterion c("geometry suite (magnification, 10^4 bracket, rebin fixed point, involution, envelope 4/6)");
    c.check(magnification(0, 650) == 1.0, "m(0)");
    c.check(magnification(325, 650) == 2.0, "m(d0/2)");
    c.check(std::abs(magnification(65, 650) - 1.1111) <= 1e-4, "m(65)");

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ux(-0.8 * 650.0, 0.8 * 650.0), uyz(-150.0, 150.0);
    const ConeGeometry g0{650, 950, {}, 0}, g180{650, 950, {}, 180};
    int violations = 0;
    for (int n = 0; n < 10000; ++n) {
        const Vec3 p{ux(rng), uyz(rng), uyz(rng)};
        const Vec2 a = cone_project_point(p, g0), b = cone_project_point(p, g180);
        if (!(std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y))) ++violations;
        if (!(std::min(a.z, b.z) <= p.z && p.z <= std::max(a.z, b.z))) ++violations;
    }
    c.check(violations == 0, "bracket");
    c.note("bracket_violations=" + std::to_string(violations));

    const double y0 = 12.0, z0 = -9.0;
    const Volume dot = testutil::with_box(testutil::air({41, 41, 41}, 1.0), {-0.1, y0 - 0.1, z0 - 0.1}, {0.1, y0 + 0.1, z0 + 0.1}, 3000.0);
    const VirtualDetectorSpec vd{128, 128, 0.5, 0.5};
    ConeGeometry g{650, 950, {96, 96, 0.73, 0.73}, 0};
    const auto [ua, va] = testutil::argmax(rebin_to_vd(project_perspective(dot, g), g, vd).values);
    g.angle_deg = 180;
    const auto [ub, vb] = testutil::argmax(rebin_to_vd(flip_horizontal(project_perspective(dot, g)), g, vd).values);
    const long off = std::max(std::abs(long(ua) - long(ub)), std::abs(long(va) - long(vb)));
    c.check(off <= 1, "rebin fixed point");
    c.note("rebin_0_vs_180_px=" + std::to_string(off));

    const Gray8 img = testutil::random_gray(512, 512, 1);
    bool involution = true;
    for (const auto& q : split_quadrants(img)) involution = involution && denormalize_quadrant(normalize_quadrant(q)).data == q.data;
    c.check(involution, "involution");

    const auto sq = patch_envelope(0, 0, 20, 0, 65, 650).vertices.size();
    const auto hex = patch_envelope(10, 10, 20, 0, 65, 650).vertices.size();
    c.check(sq == 4 && hex == 6, "envelope vertex counts");
    c.note("envelope=" + std::to_string(sq) + "/" + std::to_string(hex));
}

void metrics_suite() {
    Criterion c("metrics suite (offset-10 PSNR 28.13, SDR 94.74/100, monotone over 1000 draws)");
    const Gray8 a(64, 64, 100), b(64, 64, 110);
    const double ps = psnr(a, b);
    c.check(std::abs(rmse(a, b) - 10.0) < 1e-12, "rmse");
    c.check(std::abs(ps - 28.13) <= 0.01, "psnr");
    c.note("psnr=" + fmt("%.4f", ps));

    LandmarkSet ref;
    for (std::size_t i = 0; i < kLandmarkCount; ++i) {
        ref.points.push_back({5.0 * double(i), 100.0 - 3.0 * double(i)});
        ref.labels.push_back("L" + std::to_string(i + 1));
    }
    LandmarkSet det = ref;
    det.points[7].z += 3.0;
    const SdrTable t = sdr(det, ref, {2.0, 3.0});
    c.check(std::abs(t.rates[0] - 94.74) < 0.005 && t.rates[1] == 100.0, "SDR boundary");
    c.note("sdr=" + fmt("%.2f", t.rates[0]) + "/" + fmt("%.2f", t.rates[1]));

    std::mt19937_64 rng(99);
    std::normal_distribution<double> n(0.0, 2.5);
    int bad = 0;
    for (int draw = 0; draw < 1000; ++draw) {
        LandmarkSet d = ref;
        for (auto& p : d.points) {
            p.y += n(rng);
            p.z += n(rng);
        }
        const SdrTable s = sdr(d, ref);
        for (std::size_t i = 1; i < s.rates.size(); ++i) bad += s.rates[i] < s.rates[i - 1];
    }
    c.check(bad == 0, "monotonicity");
    c.note("monotonicity_violations=" + std::to_string(bad));
}

void dataset_suite() {
    Criterion c("dataset suite (quantize 0->0 6->255, 1935x2400->387x480, HR/LR bit-exact, manifests identical)");
    const Gray8 q = quantize_integral(Grid2<double>(2, 1, std::vector<double>{0.0, 6.0}));
    c.check(q(0, 0) == 0 && q(1, 0) == 255, "quantization endpoints");

    const Grid2<double> big(1935, 2400, 7.0);
    const auto small = downsample_avg(big, 5);
    c.check(small.nu() == 387 && small.nv() == 480, "downsample dims");

    testutil::TempDir dir("accept");
    Gray8 ceph(1935, 2400);
    std::mt19937_64 rng(5);
    for (std::size_t v = 0; v < ceph.nv(); ++v)
        for (std::size_t u = 0; u < ceph.nu(); ++u) ceph(u, v) = static_cast<std::uint8_t>((u / 3 + v / 5 + rng() % 7) & 0xff);
    SrOptions opt;
    opt.threads = 4;
    const auto recs = make_sr_dataset({{"ceph", ceph}}, opt, dir / "sr1");
    int mismatches = 0, x5 = 0;
    for (const auto& r : recs) {
        if (r.blur_level != BlurLevel::x5) continue;
        ++x5;
        const Gray8 hr = io::read_png_gray(dir / "sr1" / r.hr_path), lr = io::read_png_gray(dir / "sr1" / r.lr_path);
        mismatches += !(to_gray8(downsample_avg(to_double(hr), 5)) == lr);
    }
    c.check(recs.size() == 42 && mismatches == 0, "HR/LR consistency");
    c.note("records=" + std::to_string(recs.size()) + " x5_checked=" + std::to_string(x5));

    opt.threads = 1;
    make_sr_dataset({{"ceph", ceph}}, opt, dir / "sr2");
    const bool sr_same = testutil::slurp(dir / "sr1/sr_manifest.tsv") == testutil::slurp(dir / "sr2/sr_manifest.tsv");

    std::vector<PatchPair> pairs;
    for (const std::string patient : {"b", "a"})
        for (auto quad : kQuadrants) {
            const Gray8 g = testutil::random_gray(16, 16, static_cast<std::uint64_t>(quad));
            pairs.push_back({pack_dual({g, quad, true}, {g, quad, true}), g, patient, Split::train});
        }
    const auto m1 = export_pairs(pairs, dir / "p1", 4);
    std::reverse(pairs.begin(), pairs.end());
    const auto m2 = export_pairs(pairs, dir / "p2", 1);
    const bool pair_same = testutil::slurp(m1) == testutil::slurp(m2);
    c.check(sr_same && pair_same, "manifest determinism");
}

}  // namespace

int main() {
    try {
        enhancement_table();
        sigmoid_anchors();
        projection_phantoms();
        geometry_suite();
        metrics_suite();
        dataset_suite();
    } catch (const std::exception& e) {
        std::cout << "FAIL acceptance run aborted: " << e.what() << std::endl;
        return 1;
    }
    std::cout << "NOTE paper tables (one/dual-projection PSNR, SR PSNR, SDR tables, challenge curves): "
                 "not reproducible without GAN training and the clinical corpora; covered by the suites above"
              << std::endl;
    return failures == 0 ? 0 : 1;
}
