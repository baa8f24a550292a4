#pragma once

#include <filesystem>
#include <string>

#include "fcs/plant.hpp"

namespace fcs {

/// Shortest of fixed/scientific with 6 significant digits, '.' decimal point
/// regardless of locale.
std::string format_number(double v);

std::string trace_csv(const RunResult &r);
std::string summary_csv(const RunResult &r);

/// Writes trace.csv and summary.csv into out_dir (created if needed).
/// Throws std::runtime_error on I/O failure or an empty log.
void write_logs(const RunResult &r, const std::filesystem::path &out_dir);

} // namespace fcs
