// SPDX-License-Identifier: Apache-2.0
//
// Versioned text checkpoint. Layout:
//
//   GNL-CHECKPOINT 1
//   config <line count>
//   <key = value lines>
//   nodes <N>
//   <one id per line>
//   edges <count>
//   <source target>            (node indices)
//   stats <width> | stats none
//   <mean stddev>              (one line per column)
//   array <name> <rank> <dims...>
//   <values, space separated>  (one array per canonical parameter, then initial_hidden)
//   end
//
// Reals are written with 17 significant digits so a save/load round trip is
// exact.
#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gnl/config.hpp"
#include "gnl/data.hpp"
#include "gnl/errors.hpp"
#include "gnl/model.hpp"

namespace gnl {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  GnlModel model;
  std::vector<std::string> node_ids;
  std::optional<NormalizationStats> stats;
};

namespace detail {

inline void write_array(std::ostream& out, const std::string& name, const Tensor& t) {
  out << "array " << name << ' ' << t.rank();
  for (auto d : t.shape()) out << ' ' << d;
  out << '\n';
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (k) out << ' ';
    out << format_double(t[k]);
  }
  out << '\n';
}

class CheckpointReader {
 public:
  CheckpointReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::string line() {
    std::string s;
    if (!std::getline(in_, s)) fail("unexpected end of file");
    ++lineno_;
    return s;
  }

  /// Reads a line `<keyword> ...` and returns the remainder as a stream.
  std::istringstream expect(const std::string& keyword) {
    std::istringstream fields(line());
    std::string word;
    fields >> word;
    if (word != keyword) fail("expected '" + keyword + "', found '" + word + "'");
    return fields;
  }

  template <typename T>
  T read(std::istringstream& fields, const std::string& what) {
    T v{};
    if (!(fields >> v)) fail("malformed " + what);
    return v;
  }

  double read_real(std::istringstream& fields, const std::string& what) {
    std::string tok;
    if (!(fields >> tok)) fail("malformed " + what);
    try {
      std::size_t pos = 0;
      const double v = std::stod(tok, &pos);
      if (pos == tok.size()) return v;
    } catch (const std::exception&) {
    }
    fail("malformed " + what + " value '" + tok + "'");
  }

  Tensor array(const std::string& name) {
    auto fields = expect("array");
    const auto got = read<std::string>(fields, "array header");
    if (got != name) fail("expected array '" + name + "', found '" + got + "'");
    const auto rank = read<std::size_t>(fields, "array rank");
    Shape shape;
    for (std::size_t r = 0; r < rank; ++r) shape.push_back(read<std::size_t>(fields, "array shape"));
    std::istringstream body(line());
    std::vector<double> values(shape_size(shape));
    for (auto& v : values) v = read_real(body, "array '" + name + "'");
    std::string extra;
    if (body >> extra) fail("array '" + name + "' has more values than its shape allows");
    return Tensor(shape, std::move(values));
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw LoadError(source_ + ": line " + std::to_string(lineno_) + ": " + msg);
  }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t lineno_ = 0;
};

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const auto& m = ckpt.model;
  m.validate();
  if (ckpt.node_ids.size() != m.nodes()) {
    throw ShapeError("checkpoint: " + std::to_string(ckpt.node_ids.size()) + " node ids for " +
                     std::to_string(m.nodes()) + " nodes");
  }
  out << "GNL-CHECKPOINT " << kCheckpointVersion << '\n';
  const std::string cfg = format_config(m.config);
  out << "config " << std::count(cfg.begin(), cfg.end(), '\n') << '\n' << cfg;
  out << "nodes " << ckpt.node_ids.size() << '\n';
  for (const auto& id : ckpt.node_ids) out << id << '\n';
  out << "edges " << m.edges.size() << '\n';
  for (const auto& [j, i] : m.edges.edges()) out << j << ' ' << i << '\n';
  if (ckpt.stats) {
    out << "stats " << ckpt.stats->mean.size() << '\n';
    for (std::size_t c = 0; c < ckpt.stats->mean.size(); ++c) {
      out << detail::format_double(ckpt.stats->mean[c]) << ' '
          << detail::format_double(ckpt.stats->stddev[c]) << '\n';
    }
  } else {
    out << "stats none\n";
  }
  const auto params = m.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) detail::write_array(out, kParameterNames[p], params[p]);
  detail::write_array(out, "initial_hidden", m.initial_hidden);
  out << "end\n";
}

inline Checkpoint read_checkpoint(std::istream& in, const std::string& source = "<stream>") {
  detail::CheckpointReader r(in, source);
  {
    auto fields = r.expect("GNL-CHECKPOINT");
    const int version = r.read<int>(fields, "version");
    if (version != kCheckpointVersion) {
      r.fail("unsupported checkpoint version " + std::to_string(version));
    }
  }
  Checkpoint ckpt;
  {
    auto fields = r.expect("config");
    const auto count = r.read<std::size_t>(fields, "config line count");
    std::string text;
    for (std::size_t k = 0; k < count; ++k) text += r.line() + '\n';
    std::istringstream cfg(text);
    ckpt.model.config = parse_config(cfg);
  }
  {
    auto fields = r.expect("nodes");
    const auto n = r.read<std::size_t>(fields, "node count");
    for (std::size_t k = 0; k < n; ++k) ckpt.node_ids.push_back(detail::trim(r.line()));
  }
  {
    auto fields = r.expect("edges");
    const auto count = r.read<std::size_t>(fields, "edge count");
    std::vector<EdgeSet::Edge> edges;
    for (std::size_t k = 0; k < count; ++k) {
      std::istringstream e(r.line());
      const auto j = r.read<std::size_t>(e, "edge");
      const auto i = r.read<std::size_t>(e, "edge");
      edges.emplace_back(j, i);
    }
    ckpt.model.edges = EdgeSet(ckpt.node_ids.size(), std::move(edges));
  }
  {
    auto fields = r.expect("stats");
    const auto width = r.read<std::string>(fields, "stats header");
    if (width != "none") {
      std::size_t count = 0;
      try {
        count = std::stoul(width);
      } catch (const std::exception&) {
        r.fail("malformed stats width '" + width + "'");
      }
      NormalizationStats s;
      for (std::size_t c = 0; c < count; ++c) {
        std::istringstream row(r.line());
        s.mean.push_back(r.read_real(row, "stats mean"));
        s.stddev.push_back(r.read_real(row, "stats stddev"));
      }
      ckpt.stats = std::move(s);
    }
  }
  ParamSet params;
  for (const char* name : kParameterNames) params.push_back(r.array(name));
  ckpt.model.initial_hidden = r.array("initial_hidden");
  {
    // set_parameters checks shapes against the current arrays; seed them
    // from the loaded ones directly and validate afterwards.
    auto& m = ckpt.model;
    m.gdu = {params[0], params[1], params[2], params[3], params[4]};
    m.attention = {params[5], params[6]};
    m.fc_weight = params[7];
    m.fc_bias = params[8];
  }
  r.expect("end");
  try {
    ckpt.model.validate();
  } catch (const Error& e) {
    r.fail(std::string("inconsistent checkpoint: ") + e.what());
  }
  return ckpt;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  write_checkpoint(out, ckpt);
  if (!out) throw IoError("write failed for checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in, path);
}

}  // namespace gnl
