// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gnl/config.hpp"
#include "gnl/errors.hpp"
#include "gnl/model.hpp"

namespace gnl {

/// Delimited N x N matrix: a header `source,<id>,...` then one row per
/// source node j, columns are targets i.
inline void write_influence(std::ostream& out, const InfluenceMatrix& alpha,
                            std::span<const std::string> node_ids) {
  if (node_ids.size() != alpha.nodes) {
    throw ShapeError("write_influence: " + std::to_string(node_ids.size()) + " node ids for a " +
                     std::to_string(alpha.nodes) + "-node matrix");
  }
  out << "source";
  for (const auto& id : node_ids) out << ',' << id;
  out << '\n';
  for (std::size_t j = 0; j < alpha.nodes; ++j) {
    out << node_ids[j];
    for (std::size_t i = 0; i < alpha.nodes; ++i) out << ',' << detail::format_double(alpha(j, i));
    out << '\n';
  }
}

/// File names used by export_attention: alpha_t1 .. alpha_t<tau>, alpha_final.
inline std::vector<std::string> attention_file_names(std::size_t window) {
  std::vector<std::string> names;
  for (std::size_t t = 1; t <= window; ++t) names.push_back("alpha_t" + std::to_string(t) + ".csv");
  names.push_back("alpha_final.csv");
  return names;
}

/// Writes the tau per-step influence matrices and the one inferred from the
/// final hidden states into `dir`. Returns the written paths.
inline std::vector<std::string> export_attention(const GnlModel& model,
                                                 std::span<const Tensor> window,
                                                 std::span<const std::string> node_ids,
                                                 const std::string& dir) {
  const auto forecast = forward_window(model, window, ForwardOptions{true});
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  const auto names = attention_file_names(model.config.window);
  std::vector<std::string> paths;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto path = (std::filesystem::path(dir) / names[k]).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write attention matrix '" + path + "'");
    write_influence(out, forecast.alpha_history.at(k), node_ids);
    if (!out) throw IoError("write failed for attention matrix '" + path + "'");
    paths.push_back(path);
  }
  return paths;
}

}  // namespace gnl
