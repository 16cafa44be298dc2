#include "diffkg/sparse.hpp"

#include <algorithm>

namespace diffkg {

Csr transpose(const Csr& m) {
    Csr t;
    t.rows = m.cols;
    t.cols = m.rows;
    t.ptr.assign(t.rows + 1, 0);
    t.idx.resize(m.nnz());
    t.val.resize(m.nnz());
    for (std::uint32_t c : m.idx) ++t.ptr[c + 1];
    for (std::size_t r = 0; r < t.rows; ++r) t.ptr[r + 1] += t.ptr[r];
    std::vector<std::uint32_t> fill(t.ptr.begin(), t.ptr.end() - 1);
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::uint32_t k = m.ptr[r]; k < m.ptr[r + 1]; ++k) {
            std::uint32_t pos = fill[m.idx[k]]++;
            t.idx[pos] = static_cast<std::uint32_t>(r);
            t.val[pos] = m.val[k];
        }
    }
    return t;
}

SpMat SpMat::from_coo(std::size_t rows, std::size_t cols,
                      std::vector<std::tuple<std::uint32_t, std::uint32_t, real>> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& x, const auto& y) {
                  return std::tie(std::get<0>(x), std::get<1>(x)) <
                         std::tie(std::get<0>(y), std::get<1>(y));
              });
    SpMat m;
    m.a.rows = rows;
    m.a.cols = cols;
    m.a.ptr.assign(rows + 1, 0);
    for (std::size_t i = 0; i < entries.size();) {
        auto [r, c, v] = entries[i];
        std::size_t j = i + 1;
        while (j < entries.size() && std::get<0>(entries[j]) == r && std::get<1>(entries[j]) == c) {
            v += std::get<2>(entries[j]);
            ++j;
        }
        m.a.idx.push_back(c);
        m.a.val.push_back(v);
        ++m.a.ptr[r + 1];
        i = j;
    }
    for (std::size_t r = 0; r < rows; ++r) m.a.ptr[r + 1] += m.a.ptr[r];
    m.at = transpose(m.a);
    return m;
}

}  // namespace diffkg
