#pragma once

#include <cstdint>
#include <memory>
#include <tuple>
#include <vector>

#include "diffkg/tensor.hpp"

namespace diffkg {

/// Compressed sparse rows. `ptr` has rows+1 entries; column indices within a
/// row are sorted ascending.
struct Csr {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint32_t> ptr;
    std::vector<std::uint32_t> idx;
    std::vector<real> val;

    std::size_t nnz() const { return idx.size(); }
};

/// A sparse matrix stored together with its transpose so tape ops can route
/// gradients without rebuilding. Entries are constants (never differentiated).
struct SpMat {
    Csr a;   // rows x cols
    Csr at;  // cols x rows

    std::size_t rows() const { return a.rows; }
    std::size_t cols() const { return a.cols; }

    /// Build from (row, col, value) entries; duplicates are summed.
    static SpMat from_coo(std::size_t rows, std::size_t cols,
                          std::vector<std::tuple<std::uint32_t, std::uint32_t, real>> entries);
};

using SpMatPtr = std::shared_ptr<const SpMat>;

Csr transpose(const Csr& m);

}  // namespace diffkg
