#pragma once

#include <filesystem>
#include <iosfwd>

#include "camrl/scheduler.hpp"

namespace camrl {

/// Config file or metrics schema problem; the CLI maps this to its own exit
/// code, distinct from I/O and numerical failures.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Strict JSON parsing: unknown keys are rejected at every level, values are
/// type- and range-checked, omitted keys take the documented defaults.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Lossless: parse_run_config(serialize_run_config(c)) reproduces c exactly.
std::string serialize_run_config(const RunConfig& config);

/// One metrics line (no trailing newline).
std::string serialize_epoch_record(const EpochRecord& record);
EpochRecord parse_epoch_record(const std::string& json_line);

std::string serialize_run_summary(const RunSummary& summary);

void write_summary_csv(std::ostream& out, const RunSummary& summary);

}  // namespace camrl
