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

#include "xmoco/matrix.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace xmoco {

Mat::Mat(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("matrix data length does not match rows*cols");
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Mat m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("ragged row list");
    std::size_t j = 0;
    for (double v : row) m.at(i, j++) = v;
    ++i;
  }
  return m;
}

std::vector<double> Mat::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, c);
  return out;
}

void Mat::set_column(std::size_t c, std::span<const double> values) {
  if (values.size() != rows_) throw std::invalid_argument("column length mismatch");
  for (std::size_t r = 0; r < rows_; ++r) at(r, c) = values[r];
}

Mat& Mat::operator+=(const Mat& other) {
  if (!same_shape(other)) throw std::invalid_argument("shape mismatch in +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Mat& Mat::operator-=(const Mat& other) {
  if (!same_shape(other)) throw std::invalid_argument("shape mismatch in -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(Mat a, double s) { return a *= s; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("shape mismatch in matmul");
  Mat c(a.rows(), b.cols());
  // i-k-j order: cache friendly and still accumulates each entry in
  // ascending k, keeping sums bit-identical to the naive loop.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = c.data() + i * c.cols();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a.at(i, k);
      const double* brow = b.data() + k * b.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Mat transpose(const Mat& m) {
  Mat t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t.at(c, r) = m.at(r, c);
  return t;
}

Mat hadamard(const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("shape mismatch in hadamard");
  Mat out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

Mat map(const Mat& m, double (*fn)(double)) {
  Mat out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = fn(m.data()[i]);
  return out;
}

std::vector<double> row_sums(const Mat& m) {
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[r] += m.at(r, c);
  return out;
}

std::vector<double> col_sums(const Mat& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += m.at(r, c);
  return out;
}

double total_sum(const Mat& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m.data()[i];
  return s;
}

double max_abs(const Mat& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s = std::max(s, std::fabs(m.data()[i]));
  return s;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("shape mismatch in max_abs_diff");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s = std::max(s, std::fabs(a.data()[i] - b.data()[i]));
  return s;
}

bool all_finite(const Mat& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!std::isfinite(m.data()[i])) return false;
  return true;
}

Mat softmax_columns(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) throw std::invalid_argument("empty matrix");
  Mat out(m.rows(), m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m.rows(); ++r) mx = std::max(mx, m.at(r, c));
    double z = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const double e = std::exp(m.at(r, c) - mx);
      out.at(r, c) = e;
      z += e;
    }
    for (std::size_t r = 0; r < m.rows(); ++r) out.at(r, c) /= z;
  }
  return out;
}

Mat l2_normalize_columns(const Mat& m) {
  Mat out(m.rows(), m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double ss = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) ss += m.at(r, c) * m.at(r, c);
    const double n = std::sqrt(ss);
    if (n == 0.0) throw std::invalid_argument("zero-norm feature");
    for (std::size_t r = 0; r < m.rows(); ++r) out.at(r, c) = m.at(r, c) / n;
  }
  return out;
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("length mismatch in dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double cosine_similarity(std::span<const double> x, std::span<const double> y) {
  const double nx = norm2(x);
  const double ny = norm2(y);
  if (nx == 0.0 || ny == 0.0)
    throw std::invalid_argument("zero vector in cosine_similarity");
  return dot(x, y) / (nx * ny);
}

namespace {

void write_f64_le(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64_le(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw std::runtime_error("truncated XMC1 payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_xmc1(std::ostream& out, const Mat& m) {
  out << "XMC1 " << m.rows() << " " << m.cols() << "\n";
  for (std::size_t i = 0; i < m.size(); ++i) write_f64_le(out, m.data()[i]);
  if (!out) throw std::runtime_error("XMC1 write failed");
}

Mat read_xmc1(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("missing XMC1 header");
  std::istringstream hdr(line);
  std::string magic;
  std::size_t rows = 0, cols = 0;
  if (!(hdr >> magic >> rows >> cols) || magic != "XMC1")
    throw std::runtime_error("bad XMC1 header: " + line);
  Mat m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = read_f64_le(in);
  return m;
}

void save_xmc1(const std::string& path, const Mat& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_xmc1(out, m);
}

Mat load_xmc1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return read_xmc1(in);
}

}  // namespace xmoco
