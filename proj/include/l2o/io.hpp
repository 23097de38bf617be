#pragma once

// Text formats: batch container, weight checkpoint, CSV logs, key-value
// theory report. Floats are written with 17 significant digits so every
// value round-trips exactly.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "l2o/model.hpp"
#include "l2o/problem.hpp"
#include "l2o/theory.hpp"
#include "l2o/train.hpp"

namespace l2o {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return in;
}

inline void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << body;
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

inline double parse_double(const std::string& tok, const std::string& where) {
  // strtod rather than stod: subnormals must parse, not throw out_of_range
  const char* begin = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (tok.empty() || end != begin + tok.size()) throw FormatError(where + ": bad number '" + tok + "'");
  return v;
}

inline void append_row(std::string& out, std::span<const double> v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += fmt_double(v[i]);
  }
  out += '\n';
}

}  // namespace detail

// L2OQB v1 N d b seed
// then per problem: b lines of d entries (M row-major), one line of b entries (y).
inline std::string format_batch(const QuadraticBatch& batch) {
  std::string out = "L2OQB v1 " + std::to_string(batch.N()) + ' ' + std::to_string(batch.d()) + ' ' +
                    std::to_string(batch.b()) + ' ' + std::to_string(batch.seed()) + '\n';
  for (const auto& p : batch.problems()) {
    for (std::size_t i = 0; i < p.b(); ++i) detail::append_row(out, p.M.row(i));
    detail::append_row(out, p.y);
  }
  return out;
}

inline QuadraticBatch parse_batch(std::istream& in, const std::string& where = "batch") {
  std::string magic, version;
  std::size_t N = 0, d = 0, b = 0;
  std::uint64_t seed = 0;
  if (!(in >> magic >> version >> N >> d >> b >> seed) || magic != "L2OQB" || version != "v1")
    throw FormatError(where + ": missing 'L2OQB v1 N d b seed' header");
  if (N == 0 || !(d > b && b >= 1)) throw FormatError(where + ": header dimensions invalid");
  std::vector<QuadraticProblem> problems;
  std::string tok;
  auto next = [&]() {
    if (!(in >> tok)) throw FormatError(where + ": truncated after problem " + std::to_string(problems.size()));
    return detail::parse_double(tok, where);
  };
  for (std::size_t i = 0; i < N; ++i) {
    QuadraticProblem p{Matrix(b, d), Vector(b)};
    for (auto& v : p.M.entries()) v = next();
    for (auto& v : p.y) v = next();
    problems.push_back(std::move(p));
  }
  if (in >> tok) throw FormatError(where + ": trailing data");
  return QuadraticBatch(std::move(problems), seed);
}

inline void save_batch(const std::string& path, const QuadraticBatch& batch) {
  detail::write_file(path, format_batch(batch));
}

inline QuadraticBatch load_batch(const std::string& path) {
  auto in = detail::open_in(path);
  return parse_batch(in, path);
}

// L2OCK v1 L seed e
// dims n_0 .. n_L
// then each W_l as n_l lines of n_{l-1} entries.
inline std::string format_weights(const L2OWeights& w) {
  std::string out = "L2OCK v1 " + std::to_string(w.L()) + ' ' + std::to_string(w.seed) + ' ' + fmt_double(w.e) + '\n';
  out += "dims";
  for (auto n : w.dims) out += ' ' + std::to_string(n);
  out += '\n';
  for (const auto& W : w.W)
    for (std::size_t i = 0; i < W.rows(); ++i) detail::append_row(out, W.row(i));
  return out;
}

inline L2OWeights parse_weights(std::istream& in, const std::string& where = "checkpoint") {
  std::string magic, version, tok;
  std::size_t L = 0;
  L2OWeights w;
  if (!(in >> magic >> version >> L >> w.seed >> tok) || magic != "L2OCK" || version != "v1")
    throw FormatError(where + ": missing 'L2OCK v1 L seed e' header");
  w.e = detail::parse_double(tok, where);
  if (!(in >> tok) || tok != "dims") throw FormatError(where + ": missing dims line");
  for (std::size_t l = 0; l <= L; ++l) {
    std::size_t n = 0;
    if (!(in >> n)) throw FormatError(where + ": truncated dims");
    w.dims.push_back(n);
  }
  for (std::size_t l = 1; l <= L; ++l) {
    Matrix W(w.dims[l], w.dims[l - 1]);
    for (auto& v : W.entries()) {
      if (!(in >> tok)) throw FormatError(where + ": truncated layer " + std::to_string(l));
      v = detail::parse_double(tok, where);
    }
    w.W.push_back(std::move(W));
  }
  if (in >> tok) throw FormatError(where + ": trailing data");
  try {
    w.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(where + ": " + e.what());
  }
  return w;
}

inline void save_weights(const std::string& path, const L2OWeights& w) { detail::write_file(path, format_weights(w)); }

inline L2OWeights load_weights(const std::string& path) {
  auto in = detail::open_in(path);
  return parse_weights(in, path);
}

// '#'-prefixed comment lines (key=value), one header line, numeric rows.
struct CsvTable {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw FormatError("csv: no column '" + name + "'");
  }
  bool has_column(const std::string& name) const {
    for (const auto& c : columns)
      if (c == name) return true;
    return false;
  }
  std::vector<double> series(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }
  std::string meta_value(const std::string& key) const {
    for (const auto& [k, v] : meta)
      if (k == key) return v;
    return {};
  }
};

inline std::string format_csv(const CsvTable& t) {
  std::string out;
  for (const auto& [k, v] : t.meta) out += "# " + k + "=" + v + '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& r : t.rows) {
    if (r.size() != t.columns.size()) throw std::invalid_argument("csv: row width differs from header");
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + fmt_double(r[i]);
    out += '\n';
  }
  return out;
}

inline CsvTable parse_csv(std::istream& in, const std::string& where = "csv") {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto body = line.substr(1);
      if (!body.empty() && body[0] == ' ') body.erase(0, 1);
      const auto eq = body.find('=');
      if (eq == std::string::npos)
        t.meta.emplace_back(body, "");
      else
        t.meta.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (t.columns.empty()) {
      t.columns = std::move(cells);
      continue;
    }
    if (cells.size() != t.columns.size())
      throw FormatError(where + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                        " fields, got " + std::to_string(cells.size()));
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(detail::parse_double(c, where + ":" + std::to_string(lineno)));
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw FormatError(where + ": empty csv");
  return t;
}

inline void save_csv(const std::string& path, const CsvTable& t) { detail::write_file(path, format_csv(t)); }

inline CsvTable load_csv(const std::string& path) {
  auto in = detail::open_in(path);
  return parse_csv(in, path);
}

// Columns: epoch,loss,gd_loss,grad_norm_l1..lL,unstable,bound_violations,wall_ms
inline CsvTable train_log_table(const TrainLog& log, std::size_t L) {
  CsvTable t;
  t.columns = {"epoch", "loss", "gd_loss"};
  for (std::size_t l = 1; l <= L; ++l) t.columns.push_back("grad_norm_l" + std::to_string(l));
  t.columns.insert(t.columns.end(), {"unstable", "bound_violations", "wall_ms"});
  for (const auto& r : log.rows) {
    std::vector<double> row{static_cast<double>(r.epoch), r.loss, log.gd_loss};
    for (std::size_t l = 0; l < L; ++l) row.push_back(l < r.grad_norms.size() ? r.grad_norms[l] : 0.0);
    row.push_back(r.unstable ? 1.0 : 0.0);
    row.push_back(static_cast<double>(r.bound_violations));
    row.push_back(r.wall_ms);
    t.rows.push_back(std::move(row));
  }
  return t;
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline KeyValues theory_key_values(const TheoryQuantities& q, const ConditionReport& r) {
  KeyValues kv;
  auto put = [&](const std::string& k, double v) { kv.emplace_back(k, fmt_double(v)); };
  auto put_flag = [&](const std::string& k, bool v) { kv.emplace_back(k, v ? "1" : "0"); };
  put("T", static_cast<double>(q.T));
  put("L", static_cast<double>(q.L));
  put("beta", q.beta);
  put("beta0", q.beta0);
  put("x0_norm", q.x0_norm);
  put("mty_norm", q.mty_norm);
  put("y_norm", q.y_norm);
  for (std::size_t l = 0; l < q.L; ++l) put("lambda_bar_" + std::to_string(l + 1), q.lambda_bar[l]);
  put("Theta_L", q.Theta_L);
  put("log_Theta_L", q.log_Theta_L);
  put("Theta_Lm1", q.Theta_Lm1);
  put("S_Lambda_T", q.S_Lambda_T);
  put("S_lambda_L", q.S_lambda_L);
  put("zeta1", q.zeta1);
  put("zeta2", q.zeta2);
  put("delta1_T", q.delta1.back());
  put("log_delta1_T", q.log_delta1.back());
  put("delta2", q.delta2);
  put("log_delta2", q.log_delta2);
  put("delta3", q.delta3);
  put("delta4", q.delta4);
  put("log_delta4", q.log_delta4);
  put("alpha0", q.alpha0);
  put_flag("overflow_log_space", q.overflow);
  const std::pair<const char*, const ConditionCheck*> conds[] = {
      {"cond_11a", &r.c11a}, {"cond_11b", &r.c11b}, {"cond_11c", &r.c11c}, {"cond_11d", &r.c11d}};
  for (const auto& [name, c] : conds) {
    const std::string n = name;
    kv.emplace_back(n + "_pass", c->vacuous ? "vacuous" : (c->pass ? "1" : "0"));
    put(n + "_log_lhs", c->log_lhs);
    put(n + "_log_rhs", c->log_rhs);
  }
  put("eta_max_12a", r.eta_max_12a);
  put("log_eta_max_12a", r.log_eta_max_12a);
  put("eta_max_12b", r.eta_max_12b);
  put("log_eta_max_12b", r.log_eta_max_12b);
  put("eta_admissible", r.eta_admissible);
  if (r.eta) put("eta", *r.eta);
  if (r.rate_base) put("rate_base", *r.rate_base);
  put_flag("conditions_hold", r.all_pass());
  return kv;
}

inline std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + '\n';
  return out;
}

}  // namespace l2o
