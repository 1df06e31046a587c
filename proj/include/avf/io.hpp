#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "avf/envs.hpp"
#include "avf/mdp.hpp"

namespace avf {

/// Shortest round-trippable decimal form of a double (%.17g, trimmed).
std::string fmt_double(double x);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

/// CSV with a header row; every cell already formatted.
std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows);

/// Matrix as CSV with one row per state. `comment` goes above the header
/// as a '#' line (provenance and shape metadata).
std::string matrix_csv(const Mat& m, const std::string& col_prefix,
                       const std::string& comment);

/// One feature laid out on the grid as an SVG heatmap: diverging palette,
/// blue = low, red = high, walls dark.
std::string svg_heatmap(const GridSpec& spec, const std::vector<int>& cell_to_state,
                        const Vec& visible_values);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; exceptions are
/// rethrown on the caller. Results must be written to owned slots by index.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

} // namespace avf
