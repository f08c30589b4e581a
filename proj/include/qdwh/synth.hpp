#pragma once

#include <cstdint>

#include "qdwh/model.hpp"

namespace qdwh {

// Gaussian cluster toy data. c centers sit on the sphere of radius
// 4*noise_sigma (radius 1 when noise_sigma is 0); item i belongs to
// cluster i mod c and adds isotropic noise. With probability
// multi_label_prob an item also takes the label of its second-nearest
// center. Deterministic given the seed.
Dataset gen_synth(std::size_t n, std::size_t d, std::size_t c, double multi_label_prob,
                  double noise_sigma, std::uint64_t seed);

}  // namespace qdwh
