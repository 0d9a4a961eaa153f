#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bpi/harness.hpp"

namespace bpi {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Plain comma-separated file without quoting, as written by the harness.
CsvTable read_csv(const std::filesystem::path& path);

/// Metric against t: median over seeds with a 10%-90% band.
std::string render_curves_svg(const std::vector<EvalRow>& rows);

/// One size of a bounds table: value of each allocation under U0 and U, log scale.
std::string render_bounds_svg(const std::vector<BoundsRow>& rows, int size);

/// Quantity columns against size, log scale; zero entries are skipped.
std::string render_quantities_svg(const std::vector<QuantitiesRow>& rows);

/**
 * Renders every plot a harness CSV supports into out_dir and returns the
 * written paths. The table kind is read from the header. Throws
 * std::invalid_argument on an empty table or an unknown header.
 */
std::vector<std::filesystem::path> render_plots(const std::filesystem::path& input,
                                                const std::filesystem::path& out_dir);

}  // namespace bpi
