#include "cephforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <tuple>
#include <cstdio>

#include "cephforge/parallel.hpp"

namespace cephforge {

namespace fs = std::filesystem;

Gray8 quantize_integral(const Grid2<double>& g, double lo, double hi) {
    if (!(hi > lo)) throw ValidationError("quantization needs hi > lo");
    Gray8 out(g.nu(), g.nv());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double c = std::clamp(g.values()[i], lo, hi);
        out.values()[i] = to_u8((c - lo) / (hi - lo) * 255.0);
    }
    return out;
}

Grid2<double> dequantize(const Gray8& q, double lo, double hi) {
    if (!(hi > lo)) throw ValidationError("quantization needs hi > lo");
    Grid2<double> out(q.nu(), q.nv());
    for (std::size_t i = 0; i < q.size(); ++i) out.values()[i] = lo + double(q.values()[i]) / 255.0 * (hi - lo);
    return out;
}

CropWindow divisible_crop(std::size_t nu, std::size_t nv, std::size_t factor) {
    if (factor < 1) throw ValidationError("factor must be >= 1");
    const std::size_t cu = nu - nu % factor, cv = nv - nv % factor;
    return {(nu - cu) / 2, (nv - cv) / 2, cu, cv};
}

Grid2<double> downsample_avg(const Grid2<double>& img, std::size_t factor) {
    if (factor < 1) throw ValidationError("downsampling factor must be >= 1");
    const CropWindow c = divisible_crop(img.nu(), img.nv(), factor);
    if (c.nu == 0 || c.nv == 0) throw ValidationError("image is smaller than one downsampling block");
    const std::size_t ou = c.nu / factor, ov = c.nv / factor;
    Grid2<double> out(ou, ov);
    const double inv = 1.0 / double(factor * factor);
    for (std::size_t v = 0; v < ov; ++v)
        for (std::size_t u = 0; u < ou; ++u) {
            double sum = 0.0;
            for (std::size_t dv = 0; dv < factor; ++dv)
                for (std::size_t du = 0; du < factor; ++du) sum += img(c.u0 + u * factor + du, c.v0 + v * factor + dv);
            out(u, v) = sum * inv;
        }
    return out;
}

namespace {

double cubic_weight(double x) {
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

// 1D bicubic resampling along one axis; `along_u` selects the axis.
Grid2<double> resample_axis(const Grid2<double>& img, std::size_t factor, bool along_u) {
    const std::size_t n_in = along_u ? img.nu() : img.nv();
    const std::size_t n_out = n_in * factor;
    Grid2<double> out(along_u ? n_out : img.nu(), along_u ? img.nv() : n_out);
    // Precompute taps: index and weight of the 4 contributing inputs per output.
    std::vector<std::array<std::size_t, 4>> idx(n_out);
    std::vector<std::array<double, 4>> wts(n_out);
    for (std::size_t o = 0; o < n_out; ++o) {
        const double src = (double(o) + 0.5) / double(factor) - 0.5;
        const double base = std::floor(src);
        const double frac = src - base;
        for (int t = 0; t < 4; ++t) {
            const long i = long(base) - 1 + t;
            idx[o][t] = std::size_t(std::clamp(i, 0L, long(n_in) - 1));
            wts[o][t] = cubic_weight(frac - double(t - 1));
        }
    }
    const std::size_t lines = along_u ? img.nv() : img.nu();
    for (std::size_t l = 0; l < lines; ++l)
        for (std::size_t o = 0; o < n_out; ++o) {
            double acc = 0.0;
            for (int t = 0; t < 4; ++t) acc += wts[o][t] * (along_u ? img(idx[o][t], l) : img(l, idx[o][t]));
            if (along_u)
                out(o, l) = acc;
            else
                out(l, o) = acc;
        }
    return out;
}

}  // namespace

Grid2<double> upsample_bicubic(const Grid2<double>& img, std::size_t factor) {
    if (factor < 1) throw ValidationError("upsampling factor must be >= 1");
    if (factor == 1) return img;
    return resample_axis(resample_axis(img, factor, true), factor, false);
}

Grid2<double> upsample_nearest(const Grid2<double>& img, std::size_t factor) {
    if (factor < 1) throw ValidationError("upsampling factor must be >= 1");
    Grid2<double> out(img.nu() * factor, img.nv() * factor);
    for (std::size_t v = 0; v < out.nv(); ++v)
        for (std::size_t u = 0; u < out.nu(); ++u) out(u, v) = img(u / factor, v / factor);
    return out;
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "train";
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw ValidationError("unknown split '" + s + "'");
}

namespace {

void check_name(const std::string& name, const char* what) {
    if (name.empty() || name.find_first_of("/\\\t\n\r") != std::string::npos || name == "." || name == "..")
        throw ValidationError(std::string(what) + " '" + name + "' is not a valid file-name component");
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    // a concurrent creator may report EEXIST; only the end state matters
    if (!fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, '\t')) out.push_back(field);
    if (!line.empty() && line.back() == '\t') out.emplace_back();
    return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

PatchPairRecord pair_record_for(const std::string& patient_id, Quadrant q, Split split) {
    check_name(patient_id, "patient id");
    const std::string stem = patient_id + "/" + to_string(q);
    return {stem + "_input.png", stem + "_target.png", q, patient_id, split};
}

PatchPairRecord write_pair_images(const PatchPair& pair, const fs::path& root) {
    if (!pair.input.r.same_shape(pair.target)) throw ValidationError("pair input and target dims differ");
    PatchPairRecord rec = pair_record_for(pair.patient_id, pair.input.quadrant, pair.split);
    ensure_dir(root / pair.patient_id);
    io::write_png_rgb(root / rec.input_path, {pair.input.r, pair.input.g, pair.input.b});
    io::write_png_gray(root / rec.target_path, pair.target);
    return rec;
}

fs::path write_pair_manifest(std::vector<PatchPairRecord> records, const fs::path& root) {
    ensure_dir(root);
    std::set<std::string> seen;
    for (const auto& r : records)
        if (!seen.insert(r.input_path).second || !seen.insert(r.target_path).second)
            throw ValidationError("duplicate output path for patient " + r.patient_id + " " + to_string(r.quadrant));
    std::sort(records.begin(), records.end(), [](const PatchPairRecord& a, const PatchPairRecord& b) {
        return std::tie(a.patient_id, a.quadrant) < std::tie(b.patient_id, b.quadrant);
    });
    std::string text = std::string(kPairManifestHeader) + "\n";
    for (const auto& r : records)
        text += r.input_path + "\t" + r.target_path + "\t" + to_string(r.quadrant) + "\t" + r.patient_id + "\t" +
                to_string(r.split) + "\n";
    const fs::path manifest = root / "manifest.tsv";
    write_text_file(manifest, text);
    return manifest;
}

fs::path export_pairs(const std::vector<PatchPair>& pairs, const fs::path& root, unsigned threads) {
    // Validate everything before the first write.
    std::set<std::pair<std::string, Quadrant>> keys;
    for (const auto& p : pairs) {
        check_name(p.patient_id, "patient id");
        if (!keys.insert({p.patient_id, p.input.quadrant}).second)
            throw ValidationError("duplicate output path for patient " + p.patient_id + " " + to_string(p.input.quadrant));
        if (!p.input.r.same_shape(p.target)) throw ValidationError("pair input and target dims differ");
    }
    ensure_dir(root);
    std::vector<PatchPairRecord> records(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t i) { records[i] = write_pair_images(pairs[i], root); });
    return write_pair_manifest(std::move(records), root);
}

std::vector<PatchPairRecord> read_pair_manifest(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot open " + manifest.string());
    std::string line;
    if (!std::getline(in, line) || line != kPairManifestHeader)
        throw ValidationError(manifest.string() + ": missing or unexpected header");
    std::vector<PatchPairRecord> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_tabs(line);
        if (f.size() != 5) throw ValidationError(manifest.string() + ":" + std::to_string(lineno) + ": expected 5 fields");
        out.push_back({f[0], f[1], parse_quadrant(f[2]), f[3], parse_split(f[4])});
    }
    return out;
}

std::string to_string(BlurLevel b) { return b == BlurLevel::x5 ? "x5" : "x10x2"; }

BlurLevel parse_blur_level(const std::string& s) {
    if (s == "x5") return BlurLevel::x5;
    if (s == "x10x2") return BlurLevel::x10x2;
    throw ValidationError("unknown blur level '" + s + "'");
}

SrTriple make_sr_triple(const Gray8& hr, BlurLevel level, std::size_t lr_factor) {
    if (lr_factor < 1) throw ValidationError("LR factor must be >= 1");
    if (hr.nu() % (2 * lr_factor) || hr.nv() % (2 * lr_factor) || hr.empty())
        throw ValidationError("HR patch dims must be multiples of twice the LR factor");
    const Grid2<double> hr_d = to_double(hr);
    Gray8 lr;
    if (level == BlurLevel::x5)
        lr = to_gray8(downsample_avg(hr_d, lr_factor));
    else
        lr = to_gray8(upsample_bicubic(downsample_avg(hr_d, 2 * lr_factor), 2));
    Gray8 ilr = to_gray8(upsample_bicubic(to_double(lr), lr_factor));
    return {hr, std::move(lr), std::move(ilr)};
}

std::vector<std::pair<std::size_t, std::size_t>> sr_patch_corners(std::size_t nu, std::size_t nv, const SrOptions& opt,
                                                                  std::uint64_t stream) {
    if (nu < opt.hr_patch || nv < opt.hr_patch) throw ValidationError("input image is smaller than one HR patch");
    if (opt.grid_cols < 1 || opt.grid_rows < 1) throw ValidationError("patch grid must be at least 1x1");
    std::mt19937_64 rng(opt.seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
    const auto free_u = long(nu - opt.hr_patch), free_v = long(nv - opt.hr_patch);
    const auto span = std::uint64_t(2 * opt.jitter_px + 1);
    std::vector<std::pair<std::size_t, std::size_t>> corners;
    corners.reserve(opt.per_image);
    for (std::size_t k = 0; k < opt.per_image; ++k) {
        const std::size_t cell = k % (opt.grid_cols * opt.grid_rows);
        const std::size_t col = cell % opt.grid_cols, row = cell / opt.grid_cols;
        const long bu = opt.grid_cols > 1 ? long(std::llround(double(col) * double(free_u) / double(opt.grid_cols - 1))) : free_u / 2;
        const long bv = opt.grid_rows > 1 ? long(std::llround(double(row) * double(free_v) / double(opt.grid_rows - 1))) : free_v / 2;
        const long ju = long(rng() % span) - opt.jitter_px;
        const long jv = long(rng() % span) - opt.jitter_px;
        corners.emplace_back(std::size_t(std::clamp(bu + ju, 0L, free_u)), std::size_t(std::clamp(bv + jv, 0L, free_v)));
    }
    return corners;
}

std::vector<SrRecord> make_sr_dataset(const std::vector<SrSource>& sources, const SrOptions& opt, const fs::path& root) {
    if (opt.hr_patch == 0 || opt.hr_patch % (2 * opt.lr_factor))
        throw ValidationError("HR patch size must be a multiple of twice the LR factor");
    std::set<std::string> names;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> corners;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        check_name(sources[s].name, "source name");
        if (!names.insert(sources[s].name).second) throw ValidationError("duplicate source name " + sources[s].name);
        corners.push_back(sr_patch_corners(sources[s].image.nu(), sources[s].image.nv(), opt, s));
    }
    ensure_dir(root);

    std::vector<SrRecord> records;
    for (std::size_t s = 0; s < sources.size(); ++s)
        for (std::size_t k = 0; k < corners[s].size(); ++k) {
            BlurLevel level = BlurLevel::x5;
            if (opt.blur == BlurPolicy::x10x2_only || (opt.blur == BlurPolicy::alternate && k % 2 == 1))
                level = BlurLevel::x10x2;
            char stem[32];
            std::snprintf(stem, sizeof stem, "p%03zu", k);
            const std::string base = sources[s].name + "/" + stem;
            records.push_back({base + "_hr.png", base + "_lr.png", base + "_ilr.png", level, sources[s].name,
                               corners[s][k].first, corners[s][k].second});
        }

    parallel_for(records.size(), opt.threads, [&](std::size_t i) {
        const SrRecord& r = records[i];
        const auto src = std::find_if(sources.begin(), sources.end(), [&](const SrSource& x) { return x.name == r.source; });
        Gray8 hr(opt.hr_patch, opt.hr_patch);
        for (std::size_t v = 0; v < opt.hr_patch; ++v)
            for (std::size_t u = 0; u < opt.hr_patch; ++u) hr(u, v) = src->image(r.u0 + u, r.v0 + v);
        const SrTriple t = make_sr_triple(hr, r.blur_level, opt.lr_factor);
        ensure_dir(root / r.source);
        io::write_png_gray(root / r.hr_path, t.hr);
        io::write_png_gray(root / r.lr_path, t.lr);
        io::write_png_gray(root / r.ilr_path, t.ilr);
    });

    std::ostringstream text;
    text << "# seed=" << opt.seed << "\n";
    text << "# hr_patch=" << opt.hr_patch << " lr_factor=" << opt.lr_factor << " per_image=" << opt.per_image
         << " grid=" << opt.grid_cols << "x" << opt.grid_rows << " jitter_px=" << opt.jitter_px << "\n";
    text << "hr\tlr\tilr\tblur_level\tsource\tu0\tv0\n";
    for (const auto& r : records)
        text << r.hr_path << '\t' << r.lr_path << '\t' << r.ilr_path << '\t' << to_string(r.blur_level) << '\t'
             << r.source << '\t' << r.u0 << '\t' << r.v0 << '\n';
    write_text_file(root / "sr_manifest.tsv", text.str());
    return records;
}

std::vector<SrRecord> read_sr_manifest(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot open " + manifest.string());
    std::vector<SrRecord> out;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "hr\tlr\tilr\tblur_level\tsource\tu0\tv0")
                throw ValidationError(manifest.string() + ": unexpected header");
            header = true;
            continue;
        }
        const auto f = split_tabs(line);
        if (f.size() != 7) throw ValidationError(manifest.string() + ": expected 7 fields");
        out.push_back({f[0], f[1], f[2], parse_blur_level(f[3]), f[4], std::stoul(f[5]), std::stoul(f[6])});
    }
    return out;
}

}  // namespace cephforge
