#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>

#include "vsrn/errors.hpp"
#include "vsrn/global_reasoning.hpp"

namespace vsrn {

struct TrainConfig {
  std::size_t joint_dim = 32;
  std::size_t feature_dim = 0;  // 0: take from the corpus
  std::size_t word_dim = 300;
  std::size_t rrr_layers = 4;
  OrderingKind ordering = OrderingKind::confidence;
  double margin = 0.2;
  std::size_t batch_size = 16;
  std::size_t epochs = 30;
  double lr_initial = 0.0002;
  double lr_decayed = 0.00002;
  std::size_t decay_epoch = 15;
  bool use_generation_loss = true;
  bool normalize_embeddings = false;
  double grad_clip = 2.0;  // global norm; 0 disables
  std::uint64_t seed = 0;

  void validate() const {
    if (joint_dim == 0 || word_dim == 0 || batch_size == 0 || epochs == 0) {
      throw ParameterError("config: dimensions, batch_size and epochs must be positive");
    }
    if (rrr_layers > 8) throw ParameterError("config: rrr_layers must be in [0, 8]");
    if (decay_epoch > epochs) throw ParameterError("config: decay_epoch exceeds epochs");
    if (!(margin >= 0.0)) throw ParameterError("config: margin must be non-negative");
    if (!(lr_initial >= 0.0) || !(lr_decayed >= 0.0)) {
      throw ParameterError("config: learning rates must be non-negative");
    }
    if (!(grad_clip >= 0.0)) throw ParameterError("config: grad_clip must be non-negative");
  }

  // Learning rate for a 1-based epoch.
  double learning_rate(std::size_t epoch) const {
    return epoch <= decay_epoch ? lr_initial : lr_decayed;
  }

  bool operator==(const TrainConfig&) const = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ParameterError("config: invalid value '" + value + "' for " + key);
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ParameterError("config: invalid boolean '" + value + "' for " + key);
}

}  // namespace detail

inline std::string to_text(const TrainConfig& c) {
  std::ostringstream out;
  out << "joint_dim = " << c.joint_dim << '\n'
      << "feature_dim = " << c.feature_dim << '\n'
      << "word_dim = " << c.word_dim << '\n'
      << "rrr_layers = " << c.rrr_layers << '\n'
      << "ordering = " << to_string(c.ordering) << '\n'
      << "margin = " << detail::format_double(c.margin) << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "epochs = " << c.epochs << '\n'
      << "lr_initial = " << detail::format_double(c.lr_initial) << '\n'
      << "lr_decayed = " << detail::format_double(c.lr_decayed) << '\n'
      << "decay_epoch = " << c.decay_epoch << '\n'
      << "use_generation_loss = " << (c.use_generation_loss ? "true" : "false") << '\n'
      << "normalize_embeddings = " << (c.normalize_embeddings ? "true" : "false") << '\n'
      << "grad_clip = " << detail::format_double(c.grad_clip) << '\n'
      << "seed = " << c.seed << '\n';
  return out.str();
}

// Parses `key = value` lines; '#' starts a comment. Keys not listed in
// TrainConfig are rejected. Missing keys keep their defaults.
inline TrainConfig parse_config(std::string_view text) {
  TrainConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ParameterError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    using detail::parse_number;
    if (key == "joint_dim") c.joint_dim = parse_number<std::size_t>(key, value);
    else if (key == "feature_dim") c.feature_dim = parse_number<std::size_t>(key, value);
    else if (key == "word_dim") c.word_dim = parse_number<std::size_t>(key, value);
    else if (key == "rrr_layers") c.rrr_layers = parse_number<std::size_t>(key, value);
    else if (key == "ordering") c.ordering = parse_ordering(value);
    else if (key == "margin") c.margin = parse_number<double>(key, value);
    else if (key == "batch_size") c.batch_size = parse_number<std::size_t>(key, value);
    else if (key == "epochs") c.epochs = parse_number<std::size_t>(key, value);
    else if (key == "lr_initial") c.lr_initial = parse_number<double>(key, value);
    else if (key == "lr_decayed") c.lr_decayed = parse_number<double>(key, value);
    else if (key == "decay_epoch") c.decay_epoch = parse_number<std::size_t>(key, value);
    else if (key == "use_generation_loss") c.use_generation_loss = detail::parse_bool(key, value);
    else if (key == "normalize_embeddings") c.normalize_embeddings = detail::parse_bool(key, value);
    else if (key == "grad_clip") c.grad_clip = parse_number<double>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else {
      throw ParameterError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

}  // namespace vsrn
