#pragma once

#include <string>
#include <vector>

#include "qdwh/index.hpp"
#include "qdwh/model.hpp"

namespace qdwh::cli {

// Runs one command (args exclude the program name). Exit status: 0 on
// success, 1 on usage/parse/validation problems, 2 on numeric divergence.
int run(const std::vector<std::string>& args);

// Forward passes + binarize over a whole dataset, in item order.
BitCodeSet encode_dataset(const ModelParams& params, const Dataset& ds);

}  // namespace qdwh::cli
