#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace grl {

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles.
///
/// Every free function in this header checks shapes and throws ShapeError on
/// mismatch; products additionally verify the result is finite.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix column(std::span<const double> values);
  static DenseMatrix from_data(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  Vector col(std::size_t c) const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Products skip zero entries of the left operand, so a dense but mostly-zero
// adjacency costs one pass over its storage plus work proportional to its
// nonzeros.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// aᵀ·b without materialising the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a·bᵀ without materialising the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b);

void add_row_vector(DenseMatrix& m, std::span<const double> v);
Vector column_sums(const DenseMatrix& m);
Vector row_means(const DenseMatrix& m);

void relu_inplace(DenseMatrix& m);
bool all_finite(std::span<const double> v);
void require_finite(const DenseMatrix& m, const char* context);

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace grl
