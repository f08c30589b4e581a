#pragma once

#include <cstdint>
#include <string>

#include "qdwh/model.hpp"

namespace qdwh {

// Ablation variants sharing the retrieval pipeline:
//   qadwh      full method, per-query adaptive weights
//   dwh        trained weights collapsed to one fixed row (column mean)
//   unweighted class weights frozen at all ones
//   lsh        random signed projections, no training
enum class BaselineVariant { qadwh, dwh, unweighted, lsh };

BaselineVariant parse_baseline_variant(const std::string& name);
std::string baseline_variant_name(BaselineVariant v);

// Replaces every class_weights row with the column mean, so all queries
// get the same fused weight vector regardless of predicted class.
void apply_column_mean_weights(ModelParams& params);

// Untrained model over raw features: empty feature stack, random hash
// projections with zero bias (bits are signs of projections), all-ones
// class weights, so ranking reduces to plain Hamming.
ModelParams lsh_params(std::size_t d, std::size_t q, std::size_t c, std::uint64_t seed);

}  // namespace qdwh
