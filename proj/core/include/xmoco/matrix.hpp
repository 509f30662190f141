// Copyright 2026 The XMoCo Engine Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XMOCO_MATRIX_HPP_
#define XMOCO_MATRIX_HPP_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace xmoco {

// Dense row-major f64 matrix. Feature matrices are stored with one
// embedding per column (d x n); probability matrices as (K+1) x N with
// the positive peer in row 0.
//
// All reductions accumulate left-to-right in a fixed order so repeated
// runs are bit-identical.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Mat identity(std::size_t n);
  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> values);

  bool same_shape(const Mat& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  Mat& operator+=(const Mat& other);
  Mat& operator-=(const Mat& other);
  Mat& operator*=(double s);

  friend bool operator==(const Mat& a, const Mat& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(Mat a, double s);
Mat operator*(double s, Mat a);

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& m);
Mat hadamard(const Mat& a, const Mat& b);
Mat map(const Mat& m, double (*fn)(double));

std::vector<double> row_sums(const Mat& m);
std::vector<double> col_sums(const Mat& m);
double total_sum(const Mat& m);
double max_abs(const Mat& m);
double max_abs_diff(const Mat& a, const Mat& b);
bool all_finite(const Mat& m);

// Column-wise softmax with max subtraction. Throws on an empty matrix.
Mat softmax_columns(const Mat& m);

// Scales every column to unit Euclidean norm. Throws "zero-norm feature"
// on an all-zero column.
Mat l2_normalize_columns(const Mat& m);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);

// S(x, y) = x.y / (|x||y|). Throws on a zero vector.
double cosine_similarity(std::span<const double> x, std::span<const double> y);

// "XMC1" matrix file format: ASCII header line `XMC1 <rows> <cols>\n`
// followed by rows*cols little-endian f64 values in row-major order.
void write_xmc1(std::ostream& out, const Mat& m);
Mat read_xmc1(std::istream& in);
void save_xmc1(const std::string& path, const Mat& m);
Mat load_xmc1(const std::string& path);

}  // namespace xmoco

#endif  // XMOCO_MATRIX_HPP_
