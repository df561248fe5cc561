#pragma once

// CSV ingestion, standardization against training statistics, split plans
// for the benchmark protocols, and the input-corruption generators used by
// the out-of-distribution study.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "anchor/linalg.hpp"

namespace anchor {

enum class Schema { Regression, Classification };

struct Dataset {
  std::string name;
  Matrix features;       // N x D
  Vector targets;        // regression targets
  std::vector<int> labels;  // classification labels
  Matrix labels_onehot;  // N x C
  Schema schema = Schema::Regression;
  int n_classes = 0;

  // Standardization statistics (identity until standardize() fills them).
  Vector feat_mean, feat_std;
  double target_mean = 0.0;
  double target_std = 1.0;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  std::stringstream ss(line);
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace detail

// Numeric CSV, target in the last column. A non-numeric first line is
// treated as a header and skipped.
inline Dataset load_csv(const std::string& path, Schema schema) {
  std::ifstream in(path);
  if (!in) throw EmptyData("load_csv: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto toks = detail::split_csv_line(line);
    std::vector<double> row(toks.size());
    bool all_numeric = true;
    for (std::size_t c = 0; c < toks.size(); ++c) {
      if (!detail::parse_double(toks[c], row[c])) {
        if (first) {
          all_numeric = false;
          break;
        }
        throw ParseError("load_csv: non-numeric value '" + toks[c] + "'",
                         line_no, static_cast<long>(c) + 1);
      }
      if (!std::isfinite(row[c]))
        throw ParseError("load_csv: non-finite value", line_no,
                         static_cast<long>(c) + 1);
    }
    first = false;
    if (!all_numeric) continue;  // header line
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("load_csv: ragged row", line_no,
                       static_cast<long>(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw EmptyData("load_csv: no data rows in " + path);
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto w = static_cast<Eigen::Index>(rows.front().size());
  if (w < 2) throw EmptyData("load_csv: need at least one feature column");

  Dataset ds;
  ds.name = path;
  ds.schema = schema;
  ds.features.resize(n, w - 1);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < w - 1; ++j) ds.features(i, j) = rows[i][j];

  if (schema == Schema::Regression) {
    ds.targets.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) ds.targets[i] = rows[i][w - 1];
  } else {
    ds.labels.resize(n);
    int max_label = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = rows[i][w - 1];
      int lab = static_cast<int>(std::lround(v));
      if (std::abs(v - lab) > 1e-9 || lab < 0)
        throw ParseError("load_csv: class label must be a nonnegative integer",
                         i + 1, w);
      ds.labels[i] = lab;
      max_label = std::max(max_label, lab);
    }
    ds.n_classes = max_label + 1;
    ds.labels_onehot = Matrix::Zero(n, ds.n_classes);
    for (Eigen::Index i = 0; i < n; ++i) ds.labels_onehot(i, ds.labels[i]) = 1.0;
  }
  ds.feat_mean = Vector::Zero(w - 1);
  ds.feat_std = Vector::Ones(w - 1);
  return ds;
}

// Zero-mean/unit-std features (and regression targets) using statistics of
// the training rows only. Constant columns keep std 1 with a warning.
inline Dataset standardize(const Dataset& ds,
                           const std::vector<Eigen::Index>& train_idx) {
  if (train_idx.empty()) throw EmptyData("standardize: empty training index");
  Dataset out = ds;
  const auto d = ds.dim();
  const double n = static_cast<double>(train_idx.size());

  Vector mean = Vector::Zero(d), var = Vector::Zero(d);
  for (auto i : train_idx) mean += ds.features.row(i).transpose();
  mean /= n;
  for (auto i : train_idx) {
    Vector c = ds.features.row(i).transpose() - mean;
    var += c.cwiseProduct(c);
  }
  var /= n;
  Vector std = var.cwiseSqrt();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (std[j] <= 0.0) {
      std::cerr << "standardize: constant feature column " << j
                << ", leaving scale at 1\n";
      std[j] = 1.0;
    }
  }
  out.features = (ds.features.rowwise() - mean.transpose()).array().rowwise() /
                 std.transpose().array();
  out.feat_mean = mean;
  out.feat_std = std;

  if (ds.schema == Schema::Regression) {
    double tm = 0.0, tv = 0.0;
    for (auto i : train_idx) tm += ds.targets[i];
    tm /= n;
    for (auto i : train_idx) tv += (ds.targets[i] - tm) * (ds.targets[i] - tm);
    tv /= n;
    double tsd = std::sqrt(tv);
    if (tsd <= 0.0) {
      std::cerr << "standardize: constant target, leaving scale at 1\n";
      tsd = 1.0;
    }
    out.targets = (ds.targets.array() - tm) / tsd;
    out.target_mean = tm;
    out.target_std = tsd;
  }
  return out;
}

inline double unstandardize_mean(const Dataset& ds, double standardized) {
  return standardized * ds.target_std + ds.target_mean;
}

inline double unstandardize_var(const Dataset& ds, double standardized) {
  return standardized * ds.target_std * ds.target_std;
}

enum class SplitProtocol { Benchmark, Kl };

struct SplitPlan {
  std::vector<Eigen::Index> train_idx;
  std::vector<Eigen::Index> test_idx;
  int repeat_index = 0;
  std::uint64_t seed = 0;
};

// Benchmark protocol: 90/10 train/test. Kl protocol: 50/50.
inline std::vector<SplitPlan> make_splits(Eigen::Index n, SplitProtocol protocol,
                                          int repeats, std::uint64_t seed) {
  if (n < 10) throw EmptyData("make_splits: need at least 10 rows");
  double test_frac = protocol == SplitProtocol::Benchmark ? 0.10 : 0.50;
  std::vector<SplitPlan> plans;
  for (int r = 0; r < repeats; ++r) {
    std::uint64_t s = derive_seed(seed, "split", r);
    Rng rng(s);
    std::vector<Eigen::Index> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (Eigen::Index i = n - 1; i > 0; --i)
      std::swap(idx[i], idx[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    auto n_test = static_cast<Eigen::Index>(
        std::max(1.0, std::floor(test_frac * static_cast<double>(n) + 0.5)));
    SplitPlan p;
    p.repeat_index = r;
    p.seed = s;
    p.test_idx.assign(idx.begin(), idx.begin() + n_test);
    p.train_idx.assign(idx.begin() + n_test, idx.end());
    plans.push_back(std::move(p));
  }
  return plans;
}

inline Matrix take_rows(const Matrix& m, const std::vector<Eigen::Index>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = m.row(idx[i]);
  return out;
}

inline Vector take(const Vector& v, const std::vector<Eigen::Index>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

enum class CorruptKind { GaussianNoise, SparseNoise, Rotate, Flip, Invert };

// Corruption generators for the confidence study. Gaussian/sparse produce
// pure noise images; the geometric kinds need square images.
inline Dataset corrupt_inputs(const Dataset& base, CorruptKind kind, Rng& rng) {
  Dataset out = base;
  const auto n = base.size();
  const auto d = base.dim();
  auto side = static_cast<Eigen::Index>(std::lround(std::sqrt(double(d))));
  bool square = side * side == d;

  switch (kind) {
    case CorruptKind::GaussianNoise:
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
          out.features(i, j) = 2.0 * rng.normal();
      break;
    case CorruptKind::SparseNoise:
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
          out.features(i, j) = rng.uniform() < 0.005 ? 50.0 : 0.0;
      break;
    case CorruptKind::Rotate: {
      if (!square)
        throw NotImageShaped("corrupt_inputs: rotate needs square images");
      // Pixels are row-major within the flattened feature vector.
      for (Eigen::Index i = 0; i < n; ++i) {
        int quarter_turns = 1 + static_cast<int>(i % 3);  // 90, 180, 270
        Vector img = base.features.row(i).transpose();
        for (int q = 0; q < quarter_turns; ++q) {
          Vector rot(d);
          for (Eigen::Index r = 0; r < side; ++r)
            for (Eigen::Index c = 0; c < side; ++c)
              rot[r * side + c] = img[(side - 1 - c) * side + r];
          img = rot;
        }
        out.features.row(i) = img.transpose();
      }
      break;
    }
    case CorruptKind::Flip: {
      if (!square)
        throw NotImageShaped("corrupt_inputs: flip needs square images");
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index r = 0; r < side; ++r)
          for (Eigen::Index c = 0; c < side; ++c)
            out.features(i, r * side + c) =
                base.features(i, r * side + side - 1 - c);
      break;
    }
    case CorruptKind::Invert:
      if (!square)
        throw NotImageShaped("corrupt_inputs: invert needs square images");
      out.features = 1.0 - base.features.array();
      break;
  }
  return out;
}

}  // namespace anchor
