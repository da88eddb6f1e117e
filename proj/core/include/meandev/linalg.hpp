#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace meandev {

using Vector = std::vector<double>;

// Small dense row-major matrix. Dimensions here are tiny (assets, Brownian
// factors, jump factors), so no expression templates.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix from_rows(const std::vector<Vector>& rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  // c^T M for a row-weight vector c of length rows().
  Vector left_multiply(std::span<const double> c) const;
  // M y for a vector y of length cols().
  Vector multiply(std::span<const double> y) const;

  Matrix transpose() const;
  Matrix operator*(const Matrix& other) const;
  Matrix operator+(const Matrix& other) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double norm(std::span<const double> a);
double sum(std::span<const double> a);

Vector scaled(std::span<const double> a, double factor);
Vector added(std::span<const double> a, std::span<const double> b);

}  // namespace meandev
