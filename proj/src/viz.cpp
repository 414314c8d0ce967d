#include "gdpw/viz.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gdpw::viz {

namespace {

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void write_chunk(std::ofstream& out, const char type[4], const std::vector<uint8_t>& payload) {
    std::vector<uint8_t> buf;
    put_be32(buf, static_cast<uint32_t>(payload.size()));
    buf.insert(buf.end(), type, type + 4);
    buf.insert(buf.end(), payload.begin(), payload.end());
    const uint32_t crc = static_cast<uint32_t>(
        crc32(crc32(0L, reinterpret_cast<const Bytef*>(type), 4),
              payload.empty() ? nullptr : payload.data(), static_cast<uInt>(payload.size())));
    put_be32(buf, crc);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

// Five-anchor gradient from dark blue through green to yellow.
std::array<uint8_t, 3> colormap(double v) {
    static constexpr double anchors[5][3] = {{68, 1, 84},
                                             {59, 82, 139},
                                             {33, 145, 140},
                                             {94, 201, 98},
                                             {253, 231, 37}};
    v = std::clamp(v, 0.0, 1.0);
    const double pos = v * 4.0;
    const int lo = std::min(3, static_cast<int>(pos));
    const double frac = pos - lo;
    std::array<uint8_t, 3> rgb{};
    for (int c = 0; c < 3; ++c) {
        const double x = anchors[lo][c] + frac * (anchors[lo + 1][c] - anchors[lo][c]);
        rgb[static_cast<size_t>(c)] = static_cast<uint8_t>(std::lround(x));
    }
    return rgb;
}

}  // namespace

void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<uint8_t>& rgb) {
    require(width > 0 && height > 0, "png dimensions must be positive");
    require(rgb.size() == static_cast<size_t>(width) * static_cast<size_t>(height) * 3,
            "rgb buffer size mismatch");

    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot write " + path);
    static const uint8_t signature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    out.write(reinterpret_cast<const char*>(signature), 8);

    std::vector<uint8_t> ihdr;
    put_be32(ihdr, static_cast<uint32_t>(width));
    put_be32(ihdr, static_cast<uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    write_chunk(out, "IHDR", ihdr);

    // Each scanline gets filter byte 0 (no filtering).
    std::vector<uint8_t> raw;
    raw.reserve(static_cast<size_t>(height) * (static_cast<size_t>(width) * 3 + 1));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);
        const uint8_t* line = rgb.data() + static_cast<size_t>(y) * static_cast<size_t>(width) * 3;
        raw.insert(raw.end(), line, line + static_cast<size_t>(width) * 3);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> compressed(bound);
    const int rc = compress2(compressed.data(), &bound, raw.data(),
                             static_cast<uLong>(raw.size()), Z_DEFAULT_COMPRESSION);
    require(rc == Z_OK, "zlib compression failed");
    compressed.resize(bound);
    write_chunk(out, "IDAT", compressed);
    write_chunk(out, "IEND", {});
    require(static_cast<bool>(out), "failed writing " + path);
}

void write_csv(const Mat& m, const std::string& path) {
    write_csv_rows(static_cast<int>(m.rows()), static_cast<int>(m.cols()),
                   [&m](int i) -> Vec { return m.row(i).transpose(); }, path);
}

void write_csv_rows(int rows, int cols, const RowFn& row_fn, const std::string& path) {
    require(rows > 0 && cols > 0, "csv dimensions must be positive");
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write " + path);
    out.precision(10);
    for (int i = 0; i < rows; ++i) {
        const Vec r = row_fn(i);
        require(r.size() == cols, "row width mismatch in csv export");
        for (int j = 0; j < cols; ++j) {
            if (j > 0) out << ',';
            out << r(j);
        }
        out << '\n';
    }
    require(static_cast<bool>(out), "failed writing " + path);
}

void write_heatmap_png(int rows, int cols, const RowFn& row_fn, const std::string& path,
                       int max_side) {
    require(rows > 0 && cols > 0, "heatmap dimensions must be positive");
    require(max_side > 0, "max_side must be positive");
    const int out_h = std::min(rows, max_side);
    const int out_w = std::min(cols, max_side);

    Mat sums = Mat::Zero(out_h, out_w);
    Mat counts = Mat::Zero(out_h, out_w);
    for (int i = 0; i < rows; ++i) {
        const Vec r = row_fn(i);
        require(r.size() == cols, "row width mismatch in heatmap export");
        const int oy = static_cast<int>(static_cast<int64_t>(i) * out_h / rows);
        for (int j = 0; j < cols; ++j) {
            const int ox = static_cast<int>(static_cast<int64_t>(j) * out_w / cols);
            sums(oy, ox) += r(j);
            counts(oy, ox) += 1.0;
        }
    }
    Mat img = sums.cwiseQuotient(counts);
    const double lo = img.minCoeff();
    const double hi = img.maxCoeff();
    const double span = hi > lo ? hi - lo : 1.0;

    std::vector<uint8_t> rgb(static_cast<size_t>(out_w) * static_cast<size_t>(out_h) * 3);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const auto c = colormap((img(y, x) - lo) / span);
            const size_t off = (static_cast<size_t>(y) * static_cast<size_t>(out_w) +
                                static_cast<size_t>(x)) *
                               3;
            rgb[off] = c[0];
            rgb[off + 1] = c[1];
            rgb[off + 2] = c[2];
        }
    }
    write_png_rgb(path, out_w, out_h, rgb);
}

void write_heatmap_png(const Mat& m, const std::string& path, int max_side) {
    write_heatmap_png(static_cast<int>(m.rows()), static_cast<int>(m.cols()),
                      [&m](int i) -> Vec { return m.row(i).transpose(); }, path, max_side);
}

void write_histogram_csv(const std::vector<int64_t>& bins, const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write " + path);
    out << "slot,count\n";
    for (size_t i = 0; i < bins.size(); ++i) {
        out << i << ',' << bins[i] << '\n';
    }
    require(static_cast<bool>(out), "failed writing " + path);
}

void write_histogram_png(const std::vector<int64_t>& bins, const std::string& path) {
    require(!bins.empty(), "histogram needs at least one bin");
    const int bar_w = 10;
    const int height = 240;
    const int width = static_cast<int>(bins.size()) * bar_w;
    const int64_t peak = std::max<int64_t>(1, *std::max_element(bins.begin(), bins.end()));

    std::vector<uint8_t> rgb(static_cast<size_t>(width) * static_cast<size_t>(height) * 3, 255);
    for (size_t b = 0; b < bins.size(); ++b) {
        const int bar_h =
            static_cast<int>(static_cast<double>(bins[b]) / static_cast<double>(peak) *
                             (height - 10));
        // Weekday slots in blue, weekend slots in orange.
        const bool weekend = b >= 24;
        const uint8_t r = weekend ? 230 : 31;
        const uint8_t g = weekend ? 126 : 119;
        const uint8_t bl = weekend ? 34 : 180;
        for (int y = height - bar_h; y < height; ++y) {
            for (int x = static_cast<int>(b) * bar_w + 1; x < (static_cast<int>(b) + 1) * bar_w - 1;
                 ++x) {
                const size_t off =
                    (static_cast<size_t>(y) * static_cast<size_t>(width) + static_cast<size_t>(x)) *
                    3;
                rgb[off] = r;
                rgb[off + 1] = g;
                rgb[off + 2] = bl;
            }
        }
    }
    write_png_rgb(path, width, height, rgb);
}

}  // namespace gdpw::viz
