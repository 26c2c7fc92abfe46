// SPDX-License-Identifier: Apache-2.0
//
// Model/training configuration and its flat `key = value` text form.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "gnl/attention.hpp"
#include "gnl/errors.hpp"
#include "gnl/gdu.hpp"

namespace gnl {

enum class OptimizerKind { kAdamPw, kAdamF, kPg, kApg };
enum class Regularizer { kL1, kFro, kNone };

inline std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kAdamPw: return "adam_pw";
    case OptimizerKind::kAdamF: return "adam_f";
    case OptimizerKind::kPg: return "pg";
    case OptimizerKind::kApg: return "apg";
  }
  return "?";
}

inline std::string to_string(Aggregator a) {
  switch (a) {
    case Aggregator::kAttention: return "attention";
    case Aggregator::kNone: return "none";
    case Aggregator::kFixedMean: return "fixed_mean";
  }
  return "?";
}

inline std::string to_string(Normalization n) {
  return n == Normalization::kPerSourceOut ? "per_source_out" : "per_target_in";
}

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam_pw") return OptimizerKind::kAdamPw;
  if (s == "adam_f") return OptimizerKind::kAdamF;
  if (s == "pg") return OptimizerKind::kPg;
  if (s == "apg") return OptimizerKind::kApg;
  throw ArgumentError("unknown optimizer '" + s + "' (expected adam_pw, adam_f, pg or apg)");
}

inline Aggregator parse_aggregator(const std::string& s) {
  if (s == "attention") return Aggregator::kAttention;
  if (s == "none") return Aggregator::kNone;
  if (s == "fixed_mean") return Aggregator::kFixedMean;
  throw ArgumentError("unknown aggregator '" + s + "' (expected attention, none or fixed_mean)");
}

inline Normalization parse_normalization(const std::string& s) {
  if (s == "per_source_out") return Normalization::kPerSourceOut;
  if (s == "per_target_in") return Normalization::kPerTargetIn;
  throw ArgumentError("unknown normalization '" + s + "'");
}

/// Regulariser implied by the learning scheme: the F-norm surrogate for
/// adam_f, the L1 norm otherwise.
inline Regularizer regularizer_for(OptimizerKind k) {
  return k == OptimizerKind::kAdamF ? Regularizer::kFro : Regularizer::kL1;
}

struct ModelConfig {
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 32;
  std::size_t aggregate_dim = 16;
  std::size_t window = 5;
  std::size_t horizon = 1;
  double beta = 2e-5;
  double negative_slope = 0.5;
  double learning_rate = 1e-3;
  std::size_t epochs = 50;
  OptimizerKind optimizer = OptimizerKind::kAdamPw;
  Aggregator aggregator = Aggregator::kAttention;
  Normalization normalization = Normalization::kPerSourceOut;
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  double validation_fraction = 0.1;
  /// Restart the apg iteration counter at the start of every epoch; with a
  /// single counter over all per-window steps the momentum tends to 1.
  bool apg_epoch_restart = true;

  GduDims dims() const { return {input_dim, hidden_dim, aggregate_dim}; }

  void validate() const {
    dims().validate();
    if (window == 0) throw ConfigError("window must be at least 1");
    if (horizon == 0) throw ConfigError("horizon must be at least 1");
    if (!(beta >= 0.0)) throw ConfigError("beta must be non-negative");
    if (!(negative_slope > 0.0)) throw ConfigError("negative_slope must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(train_fraction > 0.0) || !(validation_fraction >= 0.0) ||
        train_fraction + validation_fraction >= 1.0) {
      throw ConfigError("train/validation fractions must be positive and sum below 1");
    }
    if (aggregator == Aggregator::kNone && aggregate_dim != hidden_dim) {
      throw ConfigError("aggregator 'none' requires aggregate_dim == hidden_dim");
    }
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::size_t parse_size(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long n = std::stoll(v, &pos);
    if (pos != v.size() || n < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

}  // namespace detail

/// Serialises every field as `key = value`, one per line, in a fixed order.
inline std::string format_config(const ModelConfig& c) {
  std::ostringstream out;
  out << "input_dim = " << c.input_dim << '\n'
      << "hidden_dim = " << c.hidden_dim << '\n'
      << "aggregate_dim = " << c.aggregate_dim << '\n'
      << "window = " << c.window << '\n'
      << "horizon = " << c.horizon << '\n'
      << "beta = " << detail::format_double(c.beta) << '\n'
      << "negative_slope = " << detail::format_double(c.negative_slope) << '\n'
      << "learning_rate = " << detail::format_double(c.learning_rate) << '\n'
      << "epochs = " << c.epochs << '\n'
      << "optimizer = " << to_string(c.optimizer) << '\n'
      << "aggregator = " << to_string(c.aggregator) << '\n'
      << "normalization = " << to_string(c.normalization) << '\n'
      << "seed = " << c.seed << '\n'
      << "train_fraction = " << detail::format_double(c.train_fraction) << '\n'
      << "validation_fraction = " << detail::format_double(c.validation_fraction) << '\n'
      << "apg_epoch_restart = " << (c.apg_epoch_restart ? "true" : "false") << '\n';
  return out.str();
}

/// Parses `key = value` lines. Blank lines and `#` comments are ignored;
/// keys not present keep their defaults.
inline ModelConfig parse_config(std::istream& in) {
  ModelConfig c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    // Enum parsers report ArgumentError; in a file that is a config error.
    const auto choice = [&](auto parse) {
      try {
        return parse(value);
      } catch (const ArgumentError& e) {
        throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
      }
    };
    if (key == "input_dim") c.input_dim = detail::parse_size(key, value);
    else if (key == "hidden_dim") c.hidden_dim = detail::parse_size(key, value);
    else if (key == "aggregate_dim") c.aggregate_dim = detail::parse_size(key, value);
    else if (key == "window") c.window = detail::parse_size(key, value);
    else if (key == "horizon") c.horizon = detail::parse_size(key, value);
    else if (key == "beta") c.beta = detail::parse_real(key, value);
    else if (key == "negative_slope") c.negative_slope = detail::parse_real(key, value);
    else if (key == "learning_rate") c.learning_rate = detail::parse_real(key, value);
    else if (key == "epochs") c.epochs = detail::parse_size(key, value);
    else if (key == "optimizer") c.optimizer = choice(parse_optimizer);
    else if (key == "aggregator") c.aggregator = choice(parse_aggregator);
    else if (key == "normalization") c.normalization = choice(parse_normalization);
    else if (key == "seed") c.seed = detail::parse_size(key, value);
    else if (key == "train_fraction") c.train_fraction = detail::parse_real(key, value);
    else if (key == "validation_fraction") c.validation_fraction = detail::parse_real(key, value);
    else if (key == "apg_epoch_restart") c.apg_epoch_restart = detail::parse_bool(key, value);
    else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

inline ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace gnl
