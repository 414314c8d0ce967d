#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gdpw/viz.hpp"

using namespace gdpw;

namespace {

std::vector<uint8_t> file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(static_cast<bool>(in));
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

std::string file_text(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(static_cast<bool>(in));
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

uint32_t be32(const std::vector<uint8_t>& b, size_t at) {
    return (uint32_t(b[at]) << 24) | (uint32_t(b[at + 1]) << 16) | (uint32_t(b[at + 2]) << 8) |
           uint32_t(b[at + 3]);
}

void check_png(const std::string& path, int width, int height) {
    std::vector<uint8_t> b = file_bytes(path);
    REQUIRE(b.size() > 45);
    const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    for (int i = 0; i < 8; ++i) CHECK(b[size_t(i)] == sig[i]);
    // First chunk is IHDR with the image dimensions.
    CHECK(be32(b, 8) == 13);
    CHECK(std::string(b.begin() + 12, b.begin() + 16) == "IHDR");
    CHECK(be32(b, 16) == uint32_t(width));
    CHECK(be32(b, 20) == uint32_t(height));
    CHECK(b[24] == 8);  // bit depth
    CHECK(b[25] == 2);  // truecolor
    // File ends with an IEND chunk.
    CHECK(std::string(b.end() - 8, b.end() - 4) == "IEND");
}

}  // namespace

TEST_CASE("png writer emits a valid signature, header and trailer") {
    const std::string path = "viz_test_rgb.png";
    std::vector<uint8_t> rgb(4 * 3 * 3, 0);
    rgb[0] = 255;
    viz::write_png_rgb(path, 4, 3, rgb);
    check_png(path, 4, 3);
    std::remove(path.c_str());
}

TEST_CASE("csv writer matches the streaming row writer") {
    Mat m(3, 4);
    m << 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11.5;
    const std::string a = "viz_test_a.csv";
    const std::string b = "viz_test_b.csv";
    viz::write_csv(m, a);
    viz::write_csv_rows(3, 4, [&](int r) { return Vec(m.row(r).transpose()); }, b);
    CHECK(file_text(a) == file_text(b));

    // Spot format: first row, comma separated.
    std::istringstream first(file_text(a));
    std::string line;
    std::getline(first, line);
    CHECK(line == "0,1,2,3");
    std::remove(a.c_str());
    std::remove(b.c_str());
}

TEST_CASE("heatmap of a small matrix keeps its dimensions") {
    Mat m(5, 7);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 7; ++c) m(r, c) = r * 7 + c;
    const std::string path = "viz_test_heat.png";
    viz::write_heatmap_png(m, path);
    check_png(path, 7, 5);
    std::remove(path.c_str());

    // Matrix overload and row-function overload agree byte for byte.
    const std::string p2 = "viz_test_heat2.png";
    viz::write_heatmap_png(5, 7, [&](int r) { return Vec(m.row(r).transpose()); }, p2);
    viz::write_heatmap_png(m, path);
    CHECK(file_bytes(path) == file_bytes(p2));
    std::remove(path.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("large heatmaps are downsampled to the cap") {
    const std::string path = "viz_test_big.png";
    viz::write_heatmap_png(300, 50, [](int) { return Vec::Ones(50); }, path, 100);
    check_png(path, 50, 100);
    std::remove(path.c_str());
}

TEST_CASE("constant matrices render without dividing by zero range") {
    const std::string path = "viz_test_flat.png";
    viz::write_heatmap_png(Mat::Zero(4, 4), path);
    check_png(path, 4, 4);
    std::remove(path.c_str());
}

TEST_CASE("histogram csv lists slot and count") {
    std::vector<int64_t> bins(48, 0);
    bins[7] = 3;
    bins[47] = 1;
    const std::string path = "viz_test_hist.csv";
    viz::write_histogram_csv(bins, path);
    std::istringstream in(file_text(path));
    std::string line;
    std::getline(in, line);
    CHECK(line == "slot,count");
    int rows = 0;
    int64_t total = 0;
    while (std::getline(in, line)) {
        ++rows;
        const size_t comma = line.find(',');
        REQUIRE(comma != std::string::npos);
        total += std::stoll(line.substr(comma + 1));
    }
    CHECK(rows == 48);
    CHECK(total == 4);
    std::remove(path.c_str());
}

TEST_CASE("histogram png renders one column per bin") {
    std::vector<int64_t> bins(48, 0);
    bins[0] = 5;
    bins[24] = 2;
    const std::string path = "viz_test_hist.png";
    viz::write_histogram_png(bins, path);
    std::vector<uint8_t> b = file_bytes(path);
    CHECK(be32(b, 16) % 48 == 0);  // width is a whole number of bins
    std::remove(path.c_str());
}
