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

#include "xmoco/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace xmoco {

void TransformSpec::validate() const {
  if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
  if (scale_min <= 0.0 || scale_max < scale_min)
    throw std::invalid_argument("scale range must satisfy 0 < min <= max");
  if (mask_fraction < 0.0 || mask_fraction > 1.0)
    throw std::invalid_argument("mask_fraction must be in [0, 1]");
  if (flip_prob < 0.0 || flip_prob > 1.0)
    throw std::invalid_argument("flip_prob must be in [0, 1]");
}

Dataset make_blobs(std::size_t classes, std::size_t per_class, std::size_t d_in,
                   double separation, std::uint64_t seed) {
  if (classes == 0 || per_class == 0 || d_in == 0)
    throw std::invalid_argument("degenerate blob dimensions");
  if (separation <= 0.0) throw std::invalid_argument("separation must be > 0");

  Rng rng(seed);
  // Centroid scale keeps the expected pairwise distance comfortably above
  // the bound, so rejection is rare even in low dimension.
  const double scale =
      std::max(separation, separation / std::sqrt(static_cast<double>(d_in)) * 2.0);
  Mat centroids(d_in, classes);
  constexpr int kMaxAttempts = 100000;
  int attempt = 0;
  for (; attempt < kMaxAttempts; ++attempt) {
    for (std::size_t c = 0; c < classes; ++c)
      for (std::size_t r = 0; r < d_in; ++r) centroids.at(r, c) = rng.normal() * scale;
    bool ok = true;
    for (std::size_t i = 0; i < classes && ok; ++i) {
      for (std::size_t j = i + 1; j < classes && ok; ++j) {
        double ss = 0.0;
        for (std::size_t r = 0; r < d_in; ++r) {
          const double d = centroids.at(r, i) - centroids.at(r, j);
          ss += d * d;
        }
        if (std::sqrt(ss) < separation) ok = false;
      }
    }
    if (ok) break;
  }
  if (attempt == kMaxAttempts)
    throw std::runtime_error("could not place separated centroids");

  Dataset ds;
  ds.samples = Mat(d_in, classes * per_class);
  ds.labels.resize(classes * per_class);
  ds.seed = seed;
  ds.name = "blobs";
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::size_t col = c * per_class + i;
      for (std::size_t r = 0; r < d_in; ++r)
        ds.samples.at(r, col) = centroids.at(r, c) + rng.normal();
      ds.labels[col] = static_cast<int>(c);
    }
  }
  return ds;
}

namespace {

std::vector<double> one_view(std::span<const double> sample,
                             const TransformSpec& spec, Rng& rng) {
  std::vector<double> v(sample.begin(), sample.end());
  const double s = rng.uniform(spec.scale_min, spec.scale_max);
  for (double& x : v) x *= s;
  if (spec.noise_sigma > 0.0)
    for (double& x : v) x += rng.normal() * spec.noise_sigma;
  const std::size_t nmask = static_cast<std::size_t>(
      std::llround(spec.mask_fraction * static_cast<double>(v.size())));
  if (nmask > 0) {
    const auto perm = rng.permutation(v.size());
    for (std::size_t i = 0; i < nmask; ++i) v[perm[i]] = 0.0;
  }
  if (spec.flip_prob > 0.0) {
    for (std::size_t i = 0; i + 1 < v.size(); i += 2) {
      if (rng.uniform() < spec.flip_prob) {
        v[i] = -v[i];
        v[i + 1] = -v[i + 1];
      }
    }
  }
  return v;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> two_views(
    std::span<const double> sample, const TransformSpec& spec, Rng& rng) {
  spec.validate();
  auto vs = one_view(sample, spec, rng);
  auto vt = one_view(sample, spec, rng);
  return {std::move(vs), std::move(vt)};
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t m, std::size_t n,
                                                    Rng& rng) {
  if (n == 0 || n > m) throw std::invalid_argument("batch size exceeds dataset");
  const auto perm = rng.permutation(m);
  const std::size_t batches = m / n;
  std::vector<std::vector<std::size_t>> out(batches);
  for (std::size_t b = 0; b < batches; ++b)
    out[b].assign(perm.begin() + static_cast<long>(b * n),
                  perm.begin() + static_cast<long>((b + 1) * n));
  return out;
}

Dataset load_delimited(const std::string& path, bool has_labels) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t width = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw std::runtime_error("non-numeric cell at line " +
                                 std::to_string(lineno) + ": '" + cell + "'");
      }
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
        ++used;
      if (used != cell.size())
        throw std::runtime_error("non-numeric cell at line " +
                                 std::to_string(lineno) + ": '" + cell + "'");
      fields.push_back(v);
    }
    if (fields.empty()) continue;
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw std::runtime_error("ragged row at line " + std::to_string(lineno));
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw std::runtime_error("empty table: " + path);
  if (has_labels && width < 2)
    throw std::runtime_error("labeled table needs at least two columns");

  const std::size_t m = rows.size();
  const std::size_t d = has_labels ? width - 1 : width;
  Dataset ds;
  ds.samples = Mat(d, m);
  ds.name = path;
  if (has_labels) ds.labels.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t r = 0; r < d; ++r) ds.samples.at(r, i) = rows[i][r];
    if (has_labels) {
      const double lv = rows[i][width - 1];
      const int lab = static_cast<int>(std::llround(lv));
      if (std::fabs(lv - lab) > 1e-9)
        throw std::runtime_error("non-integer label at row " + std::to_string(i + 1));
      ds.labels[i] = lab;
    }
  }

  // Standardize each coordinate to zero mean, unit variance.
  for (std::size_t r = 0; r < d; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < m; ++c) mean += ds.samples.at(r, c);
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const double dv = ds.samples.at(r, c) - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(m);
    const double std_dev = std::sqrt(var);
    const double inv = std_dev > 0.0 ? 1.0 / std_dev : 1.0;
    for (std::size_t c = 0; c < m; ++c)
      ds.samples.at(r, c) = (ds.samples.at(r, c) - mean) * inv;
  }
  return ds;
}

void save_delimited(const std::string& path, const Dataset& ds,
                    const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& h : header) out << "# " << h << "\n";
  char buf[64];
  for (std::size_t c = 0; c < ds.count(); ++c) {
    for (std::size_t r = 0; r < ds.dim(); ++r) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.samples.at(r, c));
      out << (r == 0 ? "" : ",") << buf;
    }
    if (!ds.labels.empty()) out << "," << ds.labels[c];
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::size_t nearest_centroid(std::span<const double> x, const Mat& centroids) {
  if (x.size() != centroids.rows())
    throw std::invalid_argument("dimension mismatch in nearest_centroid");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.cols(); ++c) {
    double ss = 0.0;
    for (std::size_t r = 0; r < x.size(); ++r) {
      const double d = x[r] - centroids.at(r, c);
      ss += d * d;
    }
    if (ss < best_d) {
      best_d = ss;
      best = c;
    }
  }
  return best;
}

Mat class_centroids(const Dataset& ds, std::size_t classes) {
  if (ds.labels.empty()) throw std::invalid_argument("dataset has no labels");
  Mat cent(ds.dim(), classes);
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t c = 0; c < ds.count(); ++c) {
    const int lab = ds.labels[c];
    if (lab < 0 || static_cast<std::size_t>(lab) >= classes)
      throw std::invalid_argument("label out of range");
    for (std::size_t r = 0; r < ds.dim(); ++r)
      cent.at(r, static_cast<std::size_t>(lab)) += ds.samples.at(r, c);
    ++counts[static_cast<std::size_t>(lab)];
  }
  for (std::size_t k = 0; k < classes; ++k) {
    if (counts[k] == 0) throw std::invalid_argument("empty class in centroids");
    for (std::size_t r = 0; r < ds.dim(); ++r)
      cent.at(r, k) /= static_cast<double>(counts[k]);
  }
  return cent;
}

}  // namespace xmoco
