#include "qdwh/baselines.hpp"

#include "qdwh/error.hpp"

namespace qdwh {

BaselineVariant parse_baseline_variant(const std::string& name) {
    if (name == "qadwh") return BaselineVariant::qadwh;
    if (name == "dwh") return BaselineVariant::dwh;
    if (name == "unweighted") return BaselineVariant::unweighted;
    if (name == "lsh") return BaselineVariant::lsh;
    throw ArgumentError("unknown baseline variant '" + name +
                        "' (expected qadwh, dwh, unweighted, or lsh)");
}

std::string baseline_variant_name(BaselineVariant v) {
    switch (v) {
        case BaselineVariant::qadwh: return "qadwh";
        case BaselineVariant::dwh: return "dwh";
        case BaselineVariant::unweighted: return "unweighted";
        case BaselineVariant::lsh: return "lsh";
    }
    throw ArgumentError("bad baseline variant value");
}

void apply_column_mean_weights(ModelParams& params) {
    Matrix& w = params.class_weights;
    double inv = 1.0 / static_cast<double>(w.rows);
    Vec mean(w.cols, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i)
        for (std::size_t k = 0; k < w.cols; ++k) mean[k] += w(i, k);
    for (double& v : mean) v *= inv;
    for (std::size_t i = 0; i < w.rows; ++i)
        for (std::size_t k = 0; k < w.cols; ++k) w(i, k) = mean[k];
}

ModelParams lsh_params(std::size_t d, std::size_t q, std::size_t c, std::uint64_t seed) {
    return init_params({d}, q, c, seed);
}

}  // namespace qdwh
