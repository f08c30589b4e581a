#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qdwh/eval.hpp"
#include "qdwh/index.hpp"
#include "qdwh/model.hpp"
#include "qdwh/trainer.hpp"

namespace qdwh::io {

// %.17g, enough digits for an exact double round-trip.
std::string format_double(double v);

// Every writer goes through a temp file plus rename, so a crashed command
// never leaves a partial artifact behind.
void write_text_atomic(const std::string& path, const std::string& content);

// Tab-separated dataset: header "n d c", then per item d feature values
// and a final field of semicolon-separated 0-based positive class indices.
Dataset read_dataset(const std::string& path);
void write_dataset(const Dataset& ds, const std::string& path);

struct Checkpoint {
    std::uint32_t version = 1;
    std::size_t step = 0;
    ModelParams params;
    std::vector<std::string> config_lines;
};

// Text checkpoint: named dimension-tagged tensors in decimal floating
// point, the training step count, and a config snapshot.
Checkpoint read_checkpoint(const std::string& path);
void write_checkpoint(const Checkpoint& cp, const std::string& path);

// Binary code file: magic "QDWH", version byte 1, q (2-byte LE), n
// (8-byte LE), then n records of ceil(q/8) bytes. 15 + n*ceil(q/8) bytes.
BitCodeSet read_codes(const std::string& path);
void write_codes(const BitCodeSet& set, const std::string& path);

// Per-step loss log, tab-separated: step, triplet loss, class loss, lr.
void write_loss_log(const TrainReport& report, const std::string& path);

// Ranked output lines: query_idx, 1-based rank, item_idx, distance.
void write_ranking(const std::vector<RankedList>& rankings, const std::string& path);
// Reads rankings for queries 0..num_queries-1; throws if any are missing.
std::vector<RankedList> read_ranking(const std::string& path, std::size_t num_queries);

void write_report(const EvalReport& report, const std::string& path);

}  // namespace qdwh::io
