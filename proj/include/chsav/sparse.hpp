/// @file sparse.hpp
/// @brief Compressed-row sparse matrix with deterministic triplet assembly.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chsav {

struct Triplet {
    int row;
    int col;
    double value;
};

/// CSR matrix. Column indices are strictly increasing within each row and
/// duplicates are merged at construction.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

    /// Duplicates are summed in the order they appear in @p triplets, so the
    /// result is bit-reproducible for a fixed input order. Explicit zeros that
    /// arise are kept (structure depends only on the triplet pattern).
    static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);

    [[nodiscard]] int rows() const { return rows_; }
    [[nodiscard]] int cols() const { return cols_; }
    [[nodiscard]] std::size_t nonzeros() const { return values_.size(); }

    [[nodiscard]] const std::vector<int>& row_ptr() const { return row_ptr_; }
    [[nodiscard]] const std::vector<int>& col_idx() const { return col_idx_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }

    /// Entry (i, j), zero when not stored.
    [[nodiscard]] double at(int i, int j) const;

    [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const;
    /// y += alpha * A x
    void multiply_add(std::span<const double> x, std::span<double> y, double alpha = 1.0) const;
    /// x^T A y
    [[nodiscard]] double bilinear(std::span<const double> x, std::span<const double> y) const;

    [[nodiscard]] SparseMatrix transpose() const;
    [[nodiscard]] std::vector<Triplet> to_triplets() const;

    /// Max absolute row sum.
    [[nodiscard]] double norm_inf() const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm_inf(std::span<const double> a);

}  // namespace chsav
