#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace stsc {

/// What a matrix axis indexes.
enum class Domain { vertices, edges, triangles, mixed };

const char* to_string(Domain d) noexcept;
Domain domain_of_order(int order);

struct Entry {
  std::size_t row = 0;
  std::size_t col = 0;
  std::int64_t value = 0;

  bool operator==(const Entry&) const = default;
};

/// Integer-valued sparse matrix, compressed by rows. Every operator built
/// here (boundaries, adjacencies, Laplacians) has integer entries, so
/// products and sums are exact.
///
/// Duplicate coordinates are summed on construction and zeros are dropped;
/// columns within a row are ascending.
class SparseOperator {
 public:
  SparseOperator() = default;
  SparseOperator(std::size_t rows, std::size_t cols, std::vector<Entry> entries,
                 Domain row_domain = Domain::mixed, Domain col_domain = Domain::mixed);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return col_idx_.size(); }
  Domain row_domain() const noexcept { return row_domain_; }
  Domain col_domain() const noexcept { return col_domain_; }

  std::span<const std::size_t> row_cols(std::size_t r) const;
  std::span<const std::int64_t> row_values(std::size_t r) const;
  std::size_t row_nnz(std::size_t r) const { return row_ptr_[r + 1] - row_ptr_[r]; }
  std::int64_t at(std::size_t r, std::size_t c) const;

  /// Coordinate list in row-major order.
  std::vector<Entry> entries() const;
  /// Row-major dense copy; meant for small matrices and tests.
  std::vector<std::int64_t> to_dense() const;

  SparseOperator transposed() const;
  SparseOperator abs() const;
  bool is_zero() const noexcept { return nnz() == 0; }
  bool is_symmetric() const;

  bool operator==(const SparseOperator& other) const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  Domain row_domain_ = Domain::mixed, col_domain_ = Domain::mixed;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<std::int64_t> values_;
};

SparseOperator operator*(const SparseOperator& a, const SparseOperator& b);
SparseOperator operator+(const SparseOperator& a, const SparseOperator& b);

/// MatrixMarket coordinate format, 1-based indices.
void write_matrix_market(std::ostream& os, const SparseOperator& m,
                         const std::string& comment = {});

}  // namespace stsc
