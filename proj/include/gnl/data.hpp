// SPDX-License-Identifier: Apache-2.0
//
// Wide-CSV datasets, z-score normalisation, chronological splits and
// sliding windows.
//
// CSV layout: the header is `<label>,<node>,<node>,...`; every later row is
// `<timestamp>,<value>,...`. A node with d_x > 1 features spans d_x adjacent
// columns named `<node>:<feature>`.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gnl/attention.hpp"
#include "gnl/config.hpp"
#include "gnl/errors.hpp"
#include "gnl/tensor.hpp"

namespace gnl {

struct Dataset {
  std::vector<std::string> timestamps;
  std::vector<std::string> node_ids;
  std::size_t features = 1;     // d_x
  std::vector<double> values;   // T x N x d_x, row-major
  std::optional<EdgeSet> prior;

  std::size_t length() const { return timestamps.size(); }
  std::size_t nodes() const { return node_ids.size(); }

  double& at(std::size_t t, std::size_t node, std::size_t f = 0) {
    return values[(t * nodes() + node) * features + f];
  }
  double at(std::size_t t, std::size_t node, std::size_t f = 0) const {
    return values[(t * nodes() + node) * features + f];
  }

  /// Snapshot at timestamp t as an N x d_x matrix.
  Tensor snapshot(std::size_t t) const {
    const std::size_t width = nodes() * features;
    const auto begin = values.begin() + static_cast<std::ptrdiff_t>(t * width);
    return Tensor::matrix(nodes(), features,
                          std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(width)));
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

inline Dataset parse_csv(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw LoadError(source + ": empty file");
  const auto header = detail::split_csv_line(detail::trim(line));
  if (header.size() < 2) throw LoadError(source + ": header needs a timestamp column and at least one node");

  Dataset ds;
  std::vector<std::size_t> group_sizes;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto& name = header[c];
    if (name.empty()) throw LoadError(source + ": empty node id in header column " + std::to_string(c + 1));
    const std::string id = name.substr(0, name.find(':'));
    if (!ds.node_ids.empty() && ds.node_ids.back() == id && name.find(':') != std::string::npos) {
      ++group_sizes.back();
      continue;
    }
    if (std::find(ds.node_ids.begin(), ds.node_ids.end(), id) != ds.node_ids.end()) {
      throw LoadError(source + ": duplicate node id '" + id + "'");
    }
    ds.node_ids.push_back(id);
    group_sizes.push_back(1);
  }
  ds.features = group_sizes.front();
  for (std::size_t k = 0; k < group_sizes.size(); ++k) {
    if (group_sizes[k] != ds.features) {
      throw LoadError(source + ": node '" + ds.node_ids[k] + "' has " +
                      std::to_string(group_sizes[k]) + " feature columns, expected " +
                      std::to_string(ds.features));
    }
  }

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw LoadError(source + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, expected " + std::to_string(header.size()));
    }
    ds.timestamps.push_back(cells[0]);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const auto& cell = cells[c];
      if (cell.empty()) {
        throw LoadError(source + ": missing value at row " + std::to_string(row) + ", column " +
                        std::to_string(c + 1) + " ('" + header[c] + "')");
      }
      double v = 0.0;
      try {
        std::size_t pos = 0;
        v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw LoadError(source + ": non-numeric value '" + cell + "' at row " + std::to_string(row) +
                        ", column " + std::to_string(c + 1) + " ('" + header[c] + "')");
      }
      if (!std::isfinite(v)) {
        throw LoadError(source + ": non-finite value at row " + std::to_string(row) + ", column " +
                        std::to_string(c + 1) + " ('" + header[c] + "')");
      }
      ds.values.push_back(v);
    }
  }
  if (ds.timestamps.empty()) throw LoadError(source + ": no data rows");
  return ds;
}

inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file '" + path + "'");
  return parse_csv(in, path);
}

inline void write_csv(std::ostream& out, const Dataset& ds, const std::string& label = "timestamp") {
  out << label;
  for (const auto& id : ds.node_ids) {
    if (ds.features == 1) {
      out << ',' << id;
    } else {
      for (std::size_t f = 0; f < ds.features; ++f) out << ',' << id << ':' << f;
    }
  }
  out << '\n';
  for (std::size_t t = 0; t < ds.length(); ++t) {
    out << ds.timestamps[t];
    for (std::size_t k = 0; k < ds.nodes() * ds.features; ++k) {
      out << ',' << detail::format_double(ds.values[t * ds.nodes() * ds.features + k]);
    }
    out << '\n';
  }
}

/// Edge list: one `source target` pair of node ids per line; `#` starts a comment.
inline EdgeSet parse_edge_list(std::istream& in, const std::vector<std::string>& node_ids,
                               const std::string& source = "<stream>") {
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < node_ids.size(); ++k) index[node_ids[k]] = k;
  std::vector<EdgeSet::Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string src, dst, extra;
    if (!(fields >> src)) continue;
    if (!(fields >> dst) || (fields >> extra)) {
      throw LoadError(source + ": line " + std::to_string(lineno) + ": expected 'source target'");
    }
    const auto s = index.find(src);
    const auto d = index.find(dst);
    if (s == index.end() || d == index.end()) {
      throw LoadError(source + ": line " + std::to_string(lineno) + ": unknown node id '" +
                      (s == index.end() ? src : dst) + "'");
    }
    edges.emplace_back(s->second, d->second);
  }
  return EdgeSet(node_ids.size(), std::move(edges));
}

inline EdgeSet load_edge_list(const std::string& path, const std::vector<std::string>& node_ids) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path + "'");
  return parse_edge_list(in, node_ids, path);
}

/// Half-open range [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool empty() const { return size() == 0; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Per-(node, feature) mean and population standard deviation.
struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  double forward(std::size_t column, double v) const { return (v - mean[column]) / stddev[column]; }
  double inverse(std::size_t column, double v) const { return v * stddev[column] + mean[column]; }

  /// Maps a normalised N x d_x snapshot back to original units.
  Tensor inverse(const Tensor& snapshot) const {
    Tensor out = snapshot;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = inverse(k, out[k]);
    return out;
  }
};

/// Fits statistics on rows in `fit_range` only.
inline NormalizationStats fit_zscore(const Dataset& ds, IndexRange fit_range) {
  if (fit_range.empty() || fit_range.end > ds.length()) {
    throw ArgumentError("fit_zscore: fit range [" + std::to_string(fit_range.begin) + ", " +
                        std::to_string(fit_range.end) + ") is empty or exceeds " +
                        std::to_string(ds.length()) + " rows");
  }
  const std::size_t width = ds.nodes() * ds.features;
  NormalizationStats s{std::vector<double>(width, 0.0), std::vector<double>(width, 0.0)};
  const double count = static_cast<double>(fit_range.size());
  for (std::size_t t = fit_range.begin; t < fit_range.end; ++t)
    for (std::size_t c = 0; c < width; ++c) s.mean[c] += ds.values[t * width + c];
  for (auto& m : s.mean) m /= count;
  for (std::size_t t = fit_range.begin; t < fit_range.end; ++t)
    for (std::size_t c = 0; c < width; ++c) {
      const double d = ds.values[t * width + c] - s.mean[c];
      s.stddev[c] += d * d;
    }
  for (std::size_t c = 0; c < width; ++c) {
    s.stddev[c] = std::sqrt(s.stddev[c] / count);
    if (!(s.stddev[c] > 0.0)) {
      std::string name = ds.node_ids[c / ds.features];
      if (ds.features > 1) name += ":" + std::to_string(c % ds.features);
      throw NormalizationError("node '" + name + "' has zero standard deviation on the fit range");
    }
  }
  return s;
}

inline Dataset apply_zscore(const Dataset& ds, const NormalizationStats& stats) {
  Dataset out = ds;
  const std::size_t width = ds.nodes() * ds.features;
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = stats.forward(k % width, out.values[k]);
  return out;
}

inline Dataset invert_zscore(const Dataset& ds, const NormalizationStats& stats) {
  Dataset out = ds;
  const std::size_t width = ds.nodes() * ds.features;
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = stats.inverse(k % width, out.values[k]);
  return out;
}

struct ZScoreResult {
  Dataset normalized;
  NormalizationStats stats;
};

inline ZScoreResult zscore(const Dataset& ds, IndexRange fit_range) {
  auto stats = fit_zscore(ds, fit_range);
  return {apply_zscore(ds, stats), std::move(stats)};
}

/// Chronological split over window start indices.
struct Split {
  IndexRange train;
  IndexRange validation;
  IndexRange test;
};

inline std::size_t window_count(std::size_t length, std::size_t window, std::size_t horizon) {
  if (window < 1 || horizon < 1) throw ArgumentError("window and horizon must be at least 1");
  if (length < window + horizon) {
    throw ArgumentError("series of length " + std::to_string(length) + " is shorter than window " +
                        std::to_string(window) + " + horizon " + std::to_string(horizon));
  }
  return length - window - horizon + 1;
}

/// Train/validation/test ranges of window starts by fraction. The first
/// horizon - 1 starts of the validation and test ranges are dropped so no
/// target of a later split lies inside an earlier split's windows.
inline Split make_split(std::size_t samples, std::size_t horizon, double train_fraction = 0.7,
                        double validation_fraction = 0.1) {
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(samples)));
  const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(samples)));
  const std::size_t gap = horizon - 1;
  Split s;
  s.train = {0, n_train};
  s.validation = {std::min(n_train + gap, n_train + n_val), n_train + n_val};
  s.test = {std::min(n_train + n_val + gap, samples), samples};
  return s;
}

/// Rows used by the windows of a range: [first start, last start + window + horizon).
inline IndexRange rows_covered(IndexRange starts, std::size_t window, std::size_t horizon) {
  if (starts.empty()) return {starts.begin, starts.begin};
  return {starts.begin, starts.end - 1 + window + horizon};
}

struct WindowSample {
  std::size_t start = 0;
  std::vector<Tensor> inputs;   // window snapshots, each N x d_x
  std::vector<Tensor> targets;  // horizon snapshots
};

inline std::vector<WindowSample> make_windows(const Dataset& ds, std::size_t window,
                                              std::size_t horizon, IndexRange starts) {
  const std::size_t count = window_count(ds.length(), window, horizon);
  if (starts.end > count) {
    throw ArgumentError("make_windows: start range ends at " + std::to_string(starts.end) +
                        " but only " + std::to_string(count) + " windows fit");
  }
  std::vector<WindowSample> out;
  out.reserve(starts.size());
  for (std::size_t s = starts.begin; s < starts.end; ++s) {
    WindowSample w;
    w.start = s;
    for (std::size_t t = s; t < s + window; ++t) w.inputs.push_back(ds.snapshot(t));
    for (std::size_t t = s + window; t < s + window + horizon; ++t) w.targets.push_back(ds.snapshot(t));
    out.push_back(std::move(w));
  }
  return out;
}

inline std::vector<WindowSample> make_windows(const Dataset& ds, std::size_t window,
                                              std::size_t horizon) {
  return make_windows(ds, window, horizon, {0, window_count(ds.length(), window, horizon)});
}

}  // namespace gnl
