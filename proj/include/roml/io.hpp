#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "roml/classification.hpp"
#include "roml/constrained.hpp"
#include "roml/core.hpp"

namespace roml {

// Shortest round-trip-exact decimal form of a double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = std::strtod(buf, nullptr);
  if (back == v) {  // prefer the shortest representation that survives
    for (int prec = 1; prec <= 16; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      if (std::strtod(shorter, nullptr) == v) return shorter;
    }
  }
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline double parse_double(const std::string& s, const char* what) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw std::invalid_argument(std::string("csv: bad number in ") + what);
  return v;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write " + path);
  return out;
}

}  // namespace detail

// Loss instance files: header `t,a1,...,ak`, one row per h_t.
inline void save_instance_csv(const LossInstance& instance, const std::string& path) {
  auto out = detail::open_output(path);
  out << "t";
  for (int a = 1; a <= instance.actions; ++a) out << ",a" << a;
  out << "\n";
  for (int t = 0; t < instance.horizon; ++t) {
    out << (t + 1);
    for (int a = 0; a < instance.actions; ++a) out << "," << format_double(instance.at(t, a));
    out << "\n";
  }
}

inline LossInstance load_instance_csv(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty instance file " + path);
  auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header[0] != "t")
    throw std::runtime_error("csv: instance header must be t,a1,...,ak");
  LossInstance instance;
  instance.actions = static_cast<int>(header.size()) - 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("csv: ragged instance row in " + path);
    for (size_t i = 1; i < fields.size(); ++i)
      instance.losses.push_back(detail::parse_double(fields[i], "instance loss"));
    ++instance.horizon;
  }
  instance.validate();
  return instance;
}

// Constrained instance files: header `t,r_1,...,r_k,c_1_1,...,c_m_k`
// (resource-major cost columns). Budget and the null-action index are
// experiment configuration, not part of the file.
inline void save_constrained_csv(const ConstrainedInstance& instance, const std::string& path) {
  auto out = detail::open_output(path);
  out << "t";
  for (int a = 1; a <= instance.actions; ++a) out << ",r_" << a;
  for (int j = 1; j <= instance.resources; ++j)
    for (int a = 1; a <= instance.actions; ++a) out << ",c_" << j << "_" << a;
  out << "\n";
  for (int t = 0; t < instance.horizon; ++t) {
    out << (t + 1);
    for (int a = 0; a < instance.actions; ++a)
      out << "," << format_double(instance.reward_at(t, a));
    for (int j = 0; j < instance.resources; ++j)
      for (int a = 0; a < instance.actions; ++a)
        out << "," << format_double(instance.cost_at(t, j, a));
    out << "\n";
  }
}

inline ConstrainedInstance load_constrained_csv(const std::string& path, double budget,
                                                int null_action) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty constrained file " + path);
  auto header = detail::split_csv_line(line);
  int k = 0;
  while (k + 1 < static_cast<int>(header.size()) && !header[k + 1].empty() &&
         header[k + 1][0] == 'r')
    ++k;
  if (k == 0 || header[0] != "t")
    throw std::runtime_error("csv: constrained header must be t,r_1..r_k,c_1_1..c_m_k");
  int cost_cols = static_cast<int>(header.size()) - 1 - k;
  if (cost_cols <= 0 || cost_cols % k != 0)
    throw std::runtime_error("csv: constrained cost columns must be a multiple of k");
  ConstrainedInstance instance;
  instance.actions = k;
  instance.resources = cost_cols / k;
  instance.null_action = null_action;
  instance.budget = budget;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("csv: ragged constrained row in " + path);
    size_t i = 1;
    for (int a = 0; a < k; ++a)
      instance.rewards.push_back(detail::parse_double(fields[i++], "reward"));
    for (int c = 0; c < cost_cols; ++c)
      instance.costs.push_back(detail::parse_double(fields[i++], "cost"));
    ++instance.horizon;
  }
  instance.validate();
  return instance;
}

// Dataset files: header `x,y`.
inline void save_dataset_csv(const LabeledDataset& data, const std::string& path) {
  auto out = detail::open_output(path);
  out << "x,y\n";
  for (int t = 0; t < data.size(); ++t)
    out << format_double(data.x[t]) << "," << data.y[t] << "\n";
}

inline LabeledDataset load_dataset_csv(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line) || line != "x,y")
    throw std::runtime_error("csv: dataset header must be x,y");
  LabeledDataset data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 2) throw std::runtime_error("csv: ragged dataset row in " + path);
    data.x.push_back(detail::parse_double(fields[0], "feature"));
    data.y.push_back(static_cast<int>(detail::parse_double(fields[1], "label")));
  }
  data.validate();
  return data;
}

}  // namespace roml
