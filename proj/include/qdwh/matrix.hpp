#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qdwh/error.hpp"

namespace qdwh {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. Just storage plus bounds bookkeeping;
// the arithmetic lives with its callers (and the kernels module for the
// data-parallel inner loops).
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    std::size_t size() const { return data.size(); }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline void require_dims(bool ok, const std::string& what) {
    if (!ok) throw DimensionError(what);
}

}  // namespace qdwh
