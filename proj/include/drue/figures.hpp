#pragma once

#include <string>
#include <vector>

#include "drue/tensor.hpp"

namespace drue {

// AUC heat table rendered from an evaluation report's JSON text. Rows are
// methods, columns are rungs, cell text is mean +/- std.
void figure_heat_table(const std::string& report_json,
                       const std::string& out_png);

// One panel per method from a distribution export's JSON text: stacked
// per-dataset histograms on the shared bin edges, median marked. Returns the
// file names written (method order of the export).
std::vector<std::string> figure_distributions(const std::string& histograms_json,
                                              const std::string& out_dir);

// Input, the two reconstructions and the colorized map side by side, with
// captions, upscaled for inspection.
void figure_panel_strip(const Tensor& input, const Tensor& recon_shallow,
                        const Tensor& recon_deep, const Tensor& map_norm,
                        const std::string& out_png);

// Normalized map as an 8-bit grayscale raster plus the raw float values as a
// CSV sidecar (one line per image row).
void export_map(const Tensor& map_raw, const Tensor& map_norm,
                const std::string& png_path, const std::string& csv_path);

}  // namespace drue
