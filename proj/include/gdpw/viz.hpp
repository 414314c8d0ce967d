#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gdpw/common.hpp"

namespace gdpw::viz {

// Produces one matrix row at a time so |P| x |P| maps never sit in memory.
using RowFn = std::function<Vec(int)>;

void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<uint8_t>& rgb);

void write_csv(const Mat& m, const std::string& path);
void write_csv_rows(int rows, int cols, const RowFn& row_fn, const std::string& path);

// Heatmap with block-mean downsampling to at most max_side pixels per axis.
void write_heatmap_png(int rows, int cols, const RowFn& row_fn, const std::string& path,
                       int max_side = 1024);
void write_heatmap_png(const Mat& m, const std::string& path, int max_side = 1024);

void write_histogram_csv(const std::vector<int64_t>& bins, const std::string& path);
void write_histogram_png(const std::vector<int64_t>& bins, const std::string& path);

}  // namespace gdpw::viz
