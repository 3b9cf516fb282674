#pragma once

#include "adlraw/harness/experiment.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace adlraw::harness {

/// SVG line chart of median test PSNR against target-set size, one
/// polyline per method, sizes as evenly spaced x ticks.
std::string size_sweep_svg(const std::vector<ResultRecord>& records);
void write_size_sweep_svg(const std::vector<ResultRecord>& records, const std::filesystem::path& path);

} // namespace adlraw::harness
