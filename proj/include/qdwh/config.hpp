#pragma once

#include <string>
#include <vector>

#include "qdwh/index.hpp"
#include "qdwh/trainer.hpp"

namespace qdwh {

// Plain-text run configuration, one "section.key = value" per line, with
// '#' comments. Unknown keys are rejected up front.
struct RunConfig {
    std::vector<std::size_t> hidden_dims;  // feature stack between input and rep
    std::size_t rep_dim = 16;
    std::size_t code_length = 12;

    TrainConfig train;

    RankMode mode = RankMode::exact;
    std::size_t radius = 2;
    std::size_t k = 10;

    std::size_t truncation = 0;  // 0 = full ranking
    std::vector<std::size_t> precision_ks = {1, 5, 10, 50, 100};

    std::string dataset_path;
    std::string queries_path;
    std::string checkpoint_path;
    std::string codes_path;
    std::string loss_log_path;
    std::string ranking_path;
    std::string report_path;
};

RunConfig parse_run_config(const std::string& path);
// Applies one "section.key = value" line; unknown key or bad value throws
// ParseError tagged with `line` (the file's line number, 0 from the CLI).
void apply_config_line(RunConfig& cfg, const std::string& text, std::size_t line);

// Full key set in fixed order, suitable for checkpoint snapshots.
std::vector<std::string> serialize_run_config(const RunConfig& cfg);

std::string rank_mode_name(RankMode mode);
RankMode parse_rank_mode(const std::string& name);

}  // namespace qdwh
