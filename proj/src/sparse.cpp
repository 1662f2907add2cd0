#include "stsc/sparse.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <ostream>

#include "stsc/error.hpp"

namespace stsc {

const char* to_string(Domain d) noexcept {
  switch (d) {
    case Domain::vertices: return "vertices";
    case Domain::edges: return "edges";
    case Domain::triangles: return "triangles";
    case Domain::mixed: return "mixed";
  }
  return "mixed";
}

Domain domain_of_order(int order) {
  switch (order) {
    case 0: return Domain::vertices;
    case 1: return Domain::edges;
    case 2: return Domain::triangles;
    default: fail(ErrorCode::invalid_order, "no domain for order " + std::to_string(order));
  }
}

SparseOperator::SparseOperator(std::size_t rows, std::size_t cols, std::vector<Entry> entries,
                               Domain row_domain, Domain col_domain)
    : rows_(rows), cols_(cols), row_domain_(row_domain), col_domain_(col_domain) {
  for (const auto& e : entries)
    require(e.row < rows && e.col < cols, ErrorCode::shape_error,
            "entry (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  row_ptr_.assign(rows + 1, 0);
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    std::int64_t sum = 0;
    while (j < entries.size() && entries[j].row == entries[i].row &&
           entries[j].col == entries[i].col)
      sum += entries[j++].value;
    if (sum != 0) {
      col_idx_.push_back(entries[i].col);
      values_.push_back(sum);
      ++row_ptr_[entries[i].row + 1];
    }
    i = j;
  }
  for (std::size_t r = 0; r < rows; ++r) row_ptr_[r + 1] += row_ptr_[r];
}

std::span<const std::size_t> SparseOperator::row_cols(std::size_t r) const {
  return {col_idx_.data() + row_ptr_[r], row_nnz(r)};
}

std::span<const std::int64_t> SparseOperator::row_values(std::size_t r) const {
  return {values_.data() + row_ptr_[r], row_nnz(r)};
}

std::int64_t SparseOperator::at(std::size_t r, std::size_t c) const {
  require(r < rows_ && c < cols_, ErrorCode::shape_error, "index outside matrix");
  auto cols = row_cols(r);
  auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0;
  return row_values(r)[static_cast<std::size_t>(it - cols.begin())];
}

std::vector<Entry> SparseOperator::entries() const {
  std::vector<Entry> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      out.push_back({r, col_idx_[k], values_[k]});
  return out;
}

std::vector<std::int64_t> SparseOperator::to_dense() const {
  std::vector<std::int64_t> out(rows_ * cols_, 0);
  for (const auto& e : entries()) out[e.row * cols_ + e.col] = e.value;
  return out;
}

SparseOperator SparseOperator::transposed() const {
  auto es = entries();
  for (auto& e : es) std::swap(e.row, e.col);
  return SparseOperator(cols_, rows_, std::move(es), col_domain_, row_domain_);
}

SparseOperator SparseOperator::abs() const {
  auto es = entries();
  for (auto& e : es) e.value = std::abs(e.value);
  return SparseOperator(rows_, cols_, std::move(es), row_domain_, col_domain_);
}

bool SparseOperator::is_symmetric() const {
  return rows_ == cols_ && *this == transposed();
}

bool SparseOperator::operator==(const SparseOperator& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ && row_ptr_ == other.row_ptr_ &&
         col_idx_ == other.col_idx_ && values_ == other.values_;
}

SparseOperator operator*(const SparseOperator& a, const SparseOperator& b) {
  require(a.cols() == b.rows(), ErrorCode::shape_error,
          "product of " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
              " and " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  std::vector<Entry> out;
  std::map<std::size_t, std::int64_t> acc;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    acc.clear();
    auto ac = a.row_cols(r);
    auto av = a.row_values(r);
    for (std::size_t k = 0; k < ac.size(); ++k) {
      auto bc = b.row_cols(ac[k]);
      auto bv = b.row_values(ac[k]);
      for (std::size_t j = 0; j < bc.size(); ++j) acc[bc[j]] += av[k] * bv[j];
    }
    for (const auto& [c, v] : acc) out.push_back({r, c, v});
  }
  return SparseOperator(a.rows(), b.cols(), std::move(out), a.row_domain(), b.col_domain());
}

SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::shape_error,
          "sum of differently shaped operators");
  auto es = a.entries();
  auto eb = b.entries();
  es.insert(es.end(), eb.begin(), eb.end());
  return SparseOperator(a.rows(), a.cols(), std::move(es), a.row_domain(), a.col_domain());
}

void write_matrix_market(std::ostream& os, const SparseOperator& m, const std::string& comment) {
  os << "%%MatrixMarket matrix coordinate integer general\n";
  if (!comment.empty()) os << "% " << comment << '\n';
  os << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  for (const auto& e : m.entries()) os << e.row + 1 << ' ' << e.col + 1 << ' ' << e.value << '\n';
}

}  // namespace stsc
