#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "grip/trainer.hpp"

namespace grip {

/// Parses every line of a run's epochs.jsonl.
std::vector<EpochLog> load_epoch_logs(const std::filesystem::path& run_dir);

/// Plain-text run summary: final/best accuracy, loss trajectory endpoints,
/// purification counts of the last active epoch, and selection quality when
/// ground truth was present.
std::string render_report(const std::vector<EpochLog>& logs);

/// Same content as a JSON object (used by `grip report --format json`).
std::string render_report_json(const std::vector<EpochLog>& logs);

}  // namespace grip
