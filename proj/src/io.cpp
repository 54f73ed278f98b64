#include "cephforge/io.hpp"

#include <png.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace cephforge::io {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("metadata line " + std::to_string(lineno) + " has no '=': " + line);
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues read_key_values(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str());
}

void write_key_values(const fs::path& path, const KeyValues& kv) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<double> parse_doubles(const std::string& text, std::size_t expected) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        field = trim(field);
        double value = 0.0;
        const auto* first = field.data();
        const auto* last = field.data() + field.size();
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (field.empty() || ec != std::errc{} || ptr != last)
            throw ValidationError("not a number: '" + field + "' in '" + text + "'");
        out.push_back(value);
    }
    if (expected != 0 && out.size() != expected)
        throw ValidationError("expected " + std::to_string(expected) + " comma-separated values, got '" +
                              text + "'");
    return out;
}

std::string format_doubles(std::span<const double> values) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
    return os.str();
}

fs::path meta_path_for(const fs::path& p) {
    fs::path out = p;
    return out.replace_extension(".meta");
}

fs::path raw_path_for(const fs::path& p) {
    fs::path out = p;
    return out.replace_extension(".raw");
}

std::vector<char> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, std::span<const char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_png(const fs::path& path, std::size_t width, std::size_t height, int color_type,
               const std::vector<png_byte>& rows_top_first) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw IoError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    for (std::size_t r = 0; r < height; ++r)
        png_write_row(png, const_cast<png_bytep>(rows_top_first.data() + r * width * channels));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Reads any PNG as 8-bit gray (channels==1) or RGB (channels==3).
std::vector<png_byte> read_png(const fs::path& path, std::size_t channels, std::size_t& width,
                               std::size_t& height) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("not a readable PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    const bool is_gray = (color & PNG_COLOR_MASK_COLOR) == 0;
    if (channels == 3 && is_gray) png_set_gray_to_rgb(png);
    if (channels == 1 && !is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);
    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    if (png_get_rowbytes(png, info) != width * channels) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported PNG layout: " + path.string());
    }
    std::vector<png_byte> buf(width * height * channels);
    std::vector<png_bytep> rows(height);
    for (std::size_t r = 0; r < height; ++r) rows[r] = buf.data() + r * width * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return buf;
}

}  // namespace

void write_png_gray(const fs::path& path, const Gray8& img) {
    if (img.empty()) throw ValidationError("cannot write an empty image");
    std::vector<png_byte> rows(img.size());
    for (std::size_t r = 0; r < img.nv(); ++r)
        for (std::size_t u = 0; u < img.nu(); ++u) rows[r * img.nu() + u] = img(u, img.nv() - 1 - r);
    write_png(path, img.nu(), img.nv(), PNG_COLOR_TYPE_GRAY, rows);
}

Gray8 read_png_gray(const fs::path& path) {
    std::size_t w = 0, h = 0;
    const auto buf = read_png(path, 1, w, h);
    Gray8 img(w, h);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t u = 0; u < w; ++u) img(u, h - 1 - r) = buf[r * w + u];
    return img;
}

void write_png_rgb(const fs::path& path, const Rgb8& img) {
    if (!img.r.same_shape(img.g) || !img.r.same_shape(img.b) || img.r.empty())
        throw ValidationError("RGB channels must be non-empty and share dims");
    const std::size_t w = img.r.nu(), h = img.r.nv();
    std::vector<png_byte> rows(w * h * 3);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t u = 0; u < w; ++u) {
            const std::size_t v = h - 1 - r;
            png_byte* px = rows.data() + (r * w + u) * 3;
            px[0] = img.r(u, v);
            px[1] = img.g(u, v);
            px[2] = img.b(u, v);
        }
    write_png(path, w, h, PNG_COLOR_TYPE_RGB, rows);
}

Rgb8 read_png_rgb(const fs::path& path) {
    std::size_t w = 0, h = 0;
    const auto buf = read_png(path, 3, w, h);
    Rgb8 img{Gray8(w, h), Gray8(w, h), Gray8(w, h)};
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t u = 0; u < w; ++u) {
            const std::size_t v = h - 1 - r;
            const png_byte* px = buf.data() + (r * w + u) * 3;
            img.r(u, v) = px[0];
            img.g(u, v) = px[1];
            img.b(u, v) = px[2];
        }
    return img;
}

}  // namespace cephforge::io
