#pragma once

// Offline datasets: z-score normalization, train/validation and OOD splits,
// ranked-list augmentation and the x0..x{d-1},y CSV format.

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rankmbo/diffnet.hpp"
#include "rankmbo/error.hpp"
#include "rankmbo/rng.hpp"

namespace rankmbo {

struct NormStats {
  Vector design_mean;
  Vector design_std;
  double score_mean = 0.0;
  double score_std = 1.0;

  static NormStats identity(Eigen::Index dim) {
    return {Vector::Zero(dim), Vector::Ones(dim), 0.0, 1.0};
  }
};

struct OfflineDataset {
  Matrix designs;  // N x d, one design per row
  Vector scores;   // N
  NormStats stats;
  bool normalized = false;

  Eigen::Index size() const { return designs.rows(); }
  Eigen::Index dim() const { return designs.cols(); }

  void validate() const {
    require(designs.rows() == scores.size(), "design rows must equal score count");
    require(designs.allFinite() && scores.allFinite(), "dataset values must be finite");
  }
};

inline OfflineDataset make_dataset(Matrix designs, Vector scores) {
  OfflineDataset ds;
  ds.designs = std::move(designs);
  ds.scores = std::move(scores);
  ds.stats = NormStats::identity(ds.designs.cols());
  ds.validate();
  return ds;
}

inline OfflineDataset subset(const OfflineDataset& ds, const std::vector<std::size_t>& rows) {
  OfflineDataset out;
  out.designs.resize(static_cast<Eigen::Index>(rows.size()), ds.dim());
  out.scores.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < static_cast<std::size_t>(ds.size()), "subset row out of range");
    out.designs.row(static_cast<Eigen::Index>(i)) = ds.designs.row(static_cast<Eigen::Index>(rows[i]));
    out.scores(static_cast<Eigen::Index>(i)) = ds.scores(static_cast<Eigen::Index>(rows[i]));
  }
  out.stats = ds.stats;
  out.normalized = ds.normalized;
  return out;
}

inline constexpr double kStdFloor = 1e-12;

// Population mean and std per design column and for the scores. Columns
// with zero spread get mean 0 and std 1 so they pass through untouched.
inline NormStats fit_zscore(const OfflineDataset& raw) {
  raw.validate();
  require(raw.size() >= 2, "normalization needs at least two samples");
  NormStats s;
  const double n = static_cast<double>(raw.size());
  s.design_mean = raw.designs.colwise().mean().transpose();
  s.design_std.resize(raw.dim());
  for (Eigen::Index c = 0; c < raw.dim(); ++c) {
    const double var = (raw.designs.col(c).array() - s.design_mean(c)).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd < kStdFloor) {
      s.design_mean(c) = 0.0;
      s.design_std(c) = 1.0;
    } else {
      s.design_std(c) = sd;
    }
  }
  s.score_mean = raw.scores.mean();
  const double sd = std::sqrt((raw.scores.array() - s.score_mean).square().sum() / n);
  if (sd < kStdFloor) {
    s.score_mean = 0.0;
    s.score_std = 1.0;
  } else {
    s.score_std = sd;
  }
  return s;
}

inline Matrix normalize_designs(const Eigen::Ref<const Matrix>& designs, const NormStats& s) {
  require(designs.cols() == s.design_mean.size(), "design width does not match normalization stats");
  Matrix out = designs;
  out.rowwise() -= s.design_mean.transpose();
  out.array().rowwise() /= s.design_std.transpose().array();
  return out;
}

inline Matrix denormalize_designs(const Eigen::Ref<const Matrix>& designs, const NormStats& s) {
  require(designs.cols() == s.design_mean.size(), "design width does not match normalization stats");
  Matrix out = designs;
  out.array().rowwise() *= s.design_std.transpose().array();
  out.rowwise() += s.design_mean.transpose();
  return out;
}

inline Vector normalize_scores(const Eigen::Ref<const Vector>& scores, const NormStats& s) {
  return (scores.array() - s.score_mean) / s.score_std;
}

inline Vector denormalize_scores(const Eigen::Ref<const Vector>& scores, const NormStats& s) {
  return scores.array() * s.score_std + s.score_mean;
}

// Normalizes a raw dataset with externally fitted statistics.
inline OfflineDataset apply_zscore(const OfflineDataset& raw, const NormStats& s) {
  raw.validate();
  require(!raw.normalized, "dataset is already normalized");
  OfflineDataset out;
  out.designs = normalize_designs(raw.designs, s);
  out.scores = normalize_scores(raw.scores, s);
  out.stats = s;
  out.normalized = true;
  return out;
}

inline OfflineDataset zscore_fit_transform(const OfflineDataset& raw) {
  return apply_zscore(raw, fit_zscore(raw));
}

inline OfflineDataset inverse_zscore(const OfflineDataset& normalized) {
  require(normalized.normalized, "dataset is not normalized");
  OfflineDataset out;
  out.designs = denormalize_designs(normalized.designs, normalized.stats);
  out.scores = denormalize_scores(normalized.scores, normalized.stats);
  out.stats = NormStats::identity(normalized.dim());
  out.normalized = false;
  return out;
}

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

inline SplitIndices split_indices(std::size_t n, double ratio, std::uint64_t seed) {
  require(ratio > 0.0 && ratio < 1.0, "split ratio must lie in (0, 1)");
  const auto train_count = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  require(train_count >= 1 && train_count < n, "dataset too small to give both splits an element");
  Rng rng(seed);
  auto order = rng.permutation(n);
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
  out.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());
  return out;
}

struct TrainValidation {
  OfflineDataset train;
  OfflineDataset validation;
  SplitIndices indices;
};

// Random partition of a raw dataset; both parts are normalized with
// statistics fitted on the training part only.
inline TrainValidation split(const OfflineDataset& raw, double ratio, std::uint64_t seed) {
  raw.validate();
  auto idx = split_indices(static_cast<std::size_t>(raw.size()), ratio, seed);
  const OfflineDataset train_raw = subset(raw, idx.train);
  const NormStats stats = fit_zscore(train_raw);
  return {apply_zscore(train_raw, stats), apply_zscore(subset(raw, idx.validation), stats),
          std::move(idx)};
}

struct OodSplit {
  OfflineDataset train;  // lowest-scoring x%
  OfflineDataset ood;    // the rest
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> ood_rows;
};

// Sorts by (score, index) ascending and keeps the first round(N * x / 100)
// rows for training.
inline OodSplit ood_split(const OfflineDataset& full, double percentile) {
  full.validate();
  require(percentile > 0.0 && percentile < 100.0, "percentile must lie in (0, 100)");
  const auto n = static_cast<std::size_t>(full.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return full.scores(static_cast<Eigen::Index>(a)) < full.scores(static_cast<Eigen::Index>(b));
  });
  const auto cut = static_cast<std::size_t>(std::llround(static_cast<double>(n) * percentile / 100.0));
  require(cut >= 1 && cut < n, "percentile split leaves one side empty");
  OodSplit out;
  out.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  out.ood_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  std::sort(out.train_rows.begin(), out.train_rows.end());
  std::sort(out.ood_rows.begin(), out.ood_rows.end());
  out.train = subset(full, out.train_rows);
  out.ood = subset(full, out.ood_rows);
  return out;
}

// n lists of m row indices into a shared source dataset.
struct RankTrainSet {
  std::shared_ptr<const OfflineDataset> source;
  std::vector<std::vector<std::size_t>> lists;
  std::size_t list_length = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return lists.size(); }

  Matrix list_designs(std::size_t i) const {
    const auto& rows = lists.at(i);
    Matrix out(static_cast<Eigen::Index>(rows.size()), source->dim());
    for (std::size_t r = 0; r < rows.size(); ++r)
      out.row(static_cast<Eigen::Index>(r)) = source->designs.row(static_cast<Eigen::Index>(rows[r]));
    return out;
  }

  Vector list_scores(std::size_t i) const {
    const auto& rows = lists.at(i);
    Vector out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      out(static_cast<Eigen::Index>(r)) = source->scores(static_cast<Eigen::Index>(rows[r]));
    return out;
  }

  void validate() const {
    require(source != nullptr, "rank train set has no source dataset");
    require(!lists.empty(), "rank train set has no lists");
    require(list_length >= 1, "list length must be positive");
    for (const auto& l : lists) {
      require(l.size() == list_length, "all lists must share one length");
      for (auto r : l) require(r < static_cast<std::size_t>(source->size()), "list row out of range");
    }
  }
};

// Each list samples m distinct rows uniformly (with replacement only when
// m exceeds the dataset size).
inline RankTrainSet augment(std::shared_ptr<const OfflineDataset> source, std::size_t n,
                            std::size_t m, std::uint64_t seed) {
  require(source != nullptr, "augment needs a dataset");
  require(n >= 1, "augment needs at least one list");
  require(m >= 2, "list length must be at least 2");
  const auto size = static_cast<std::size_t>(source->size());
  require(size >= 1, "augment needs a nonempty dataset");
  RankTrainSet out;
  out.source = std::move(source);
  out.list_length = m;
  out.seed = seed;
  out.lists.reserve(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    if (m <= size) {
      out.lists.push_back(rng.sample_without_replacement(size, m));
    } else {
      std::vector<std::size_t> rows(m);
      for (auto& r : rows) r = rng.index(size);
      out.lists.push_back(std::move(rows));
    }
  }
  return out;
}

// CSV with header x0,...,x{d-1},y.
inline void write_csv(std::ostream& os, const Eigen::Ref<const Matrix>& designs,
                      const Eigen::Ref<const Vector>& scores) {
  require(designs.rows() == scores.size(), "design rows must equal score count");
  for (Eigen::Index c = 0; c < designs.cols(); ++c) os << "x" << c << ",";
  os << "y\n";
  const auto old = os.precision(17);
  for (Eigen::Index r = 0; r < designs.rows(); ++r) {
    for (Eigen::Index c = 0; c < designs.cols(); ++c) os << designs(r, c) << ",";
    os << scores(r) << "\n";
  }
  os.precision(old);
}

inline void write_csv_file(const std::string& path, const OfflineDataset& ds) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_csv(os, ds.designs, ds.scores);
  if (!os) throw IoError("failed writing '" + path + "'");
}

// Designs only, header x0..x{d-1}.
inline void write_designs_csv(std::ostream& os, const Eigen::Ref<const Matrix>& designs) {
  for (Eigen::Index c = 0; c < designs.cols(); ++c) os << (c ? "," : "") << "x" << c;
  os << "\n";
  const auto old = os.precision(17);
  for (Eigen::Index r = 0; r < designs.rows(); ++r) {
    for (Eigen::Index c = 0; c < designs.cols(); ++c) os << (c ? "," : "") << designs(r, c);
    os << "\n";
  }
  os.precision(old);
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline double parse_number(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw InvalidInput("not a number '" + text + "' at " + where);
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (used != text.size()) throw InvalidInput("not a number '" + text + "' at " + where);
  return value;
}

}  // namespace detail

inline OfflineDataset read_csv(std::istream& is, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput(name + ": empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_fields(line);
  require(header.size() >= 2, name + ": header needs at least one design column and y");
  for (std::size_t c = 0; c + 1 < header.size(); ++c)
    require(header[c] == "x" + std::to_string(c), name + ": expected column x" + std::to_string(c));
  require(header.back() == "y", name + ": last column must be y");
  const auto d = static_cast<Eigen::Index>(header.size() - 1);
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    require(fields.size() == header.size(),
            name + ":" + std::to_string(line_no) + ": wrong field count");
    for (const auto& f : fields)
      values.push_back(detail::parse_number(f, name + ":" + std::to_string(line_no)));
    ++rows;
  }
  Matrix designs(static_cast<Eigen::Index>(rows), d);
  Vector scores(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < d; ++c)
      designs(static_cast<Eigen::Index>(r), c) = values[r * (static_cast<std::size_t>(d) + 1) + static_cast<std::size_t>(c)];
    scores(static_cast<Eigen::Index>(r)) = values[r * (static_cast<std::size_t>(d) + 1) + static_cast<std::size_t>(d)];
  }
  return make_dataset(std::move(designs), std::move(scores));
}

inline OfflineDataset read_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_csv(is, path);
}

// Plain-text normalization statistics:
//   rankmbo-normstats 1
//   dim <d>
//   design_mean <d values>
//   design_std <d values>
//   score <mean> <std>
inline void save_stats(std::ostream& os, const NormStats& s) {
  const auto old = os.precision(17);
  os << "rankmbo-normstats 1\ndim " << s.design_mean.size() << "\ndesign_mean";
  for (Eigen::Index i = 0; i < s.design_mean.size(); ++i) os << " " << s.design_mean(i);
  os << "\ndesign_std";
  for (Eigen::Index i = 0; i < s.design_std.size(); ++i) os << " " << s.design_std(i);
  os << "\nscore " << s.score_mean << " " << s.score_std << "\n";
  os.precision(old);
}

inline NormStats load_stats(std::istream& is) {
  std::string magic, token;
  int version = 0;
  Eigen::Index dim = 0;
  is >> magic >> version >> token >> dim;
  require(is && magic == "rankmbo-normstats" && version == 1 && token == "dim" && dim >= 1,
          "malformed normalization stats header");
  NormStats s;
  s.design_mean.resize(dim);
  s.design_std.resize(dim);
  is >> token;
  require(token == "design_mean", "malformed normalization stats");
  for (Eigen::Index i = 0; i < dim; ++i) is >> s.design_mean(i);
  is >> token;
  require(token == "design_std", "malformed normalization stats");
  for (Eigen::Index i = 0; i < dim; ++i) is >> s.design_std(i);
  is >> token >> s.score_mean >> s.score_std;
  require(is && token == "score", "malformed normalization stats");
  require((s.design_std.array() > 0.0).all() && s.score_std > 0.0,
          "normalization stds must be positive");
  return s;
}

}  // namespace rankmbo
