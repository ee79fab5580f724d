#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vaxalloc/episode.hpp"

namespace vaxalloc {

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

/// One row per (week, zone) with the EpisodeResult columns.
void write_trace_csv(const std::filesystem::path& path, const EpisodeResult& result);

/// Per-week mean curves for each policy: new infections, cumulative
/// infections and vaccine supply.
void write_curves_csv(const std::filesystem::path& path, const std::vector<PolicySummary>& summaries);

void write_tuning_csv(const std::filesystem::path& path, const TuneResult& result);

}  // namespace vaxalloc
