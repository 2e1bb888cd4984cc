#include "progdec/io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace progdec::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw, const std::string& what, int line) {
  const std::string tok = trim(raw);
  if (tok.empty()) throw ParseError(what + ": empty field on line " + std::to_string(line));
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(what + ": cannot parse '" + tok + "' on line " + std::to_string(line));
  }
}

std::vector<double> split_row(const std::string& row, const std::string& what, int line) {
  std::vector<double> out;
  std::stringstream ss(row);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(parse_number(field, what, line));
  if (!row.empty() && row.back() == ',') throw ParseError(what + ": trailing comma on line " + std::to_string(line));
  return out;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void append_vector(std::ostream& out, const VectorXd& v, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) out << ',' << (i < v.size() ? fmt17(v(i)) : "");
}

nlohmann::json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::json vec(const VectorXd& v) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(num(v(i)));
  return arr;
}

Eigen::Index trace_dim(const IterateTraceXd& t) {
  if (!t.rows.empty()) return t.rows.front().x.size();
  return t.final_x.size();
}

}  // namespace

MatrixXd parse_matrix(std::istream& in, const std::string& what) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    rows.push_back(split_row(t, what, lineno));
    if (rows.back().size() != rows.front().size()) {
      throw ParseError(what + ": ragged row on line " + std::to_string(lineno));
    }
  }
  if (rows.empty()) throw ParseError(what + ": no data");
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

MatrixXd read_matrix(const std::string& path) {
  auto in = open(path);
  return parse_matrix(in, path);
}

VectorXd read_vector(const std::string& path) {
  const MatrixXd m = read_matrix(path);
  if (m.rows() == 1) return m.row(0).transpose();
  if (m.cols() == 1) return m.col(0);
  throw ParseError(path + ": expected a single row or column");
}

VectorXd parse_vector(const std::string& text) {
  const std::vector<double> v = split_row(trim(text), "vector", 1);
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

SubspaceXd read_subspace(const std::string& path) {
  const MatrixXd rows = read_matrix(path);
  return SubspaceXd::from_columns(rows.transpose());
}

void write_trace_csv(std::ostream& out, const IterateTraceXd& trace, const Metadata& meta) {
  const Eigen::Index n = trace_dim(trace);
  const bool z = trace.space == TraceSpace::ZSpace;
  out << "k,res,lyapunov,alpha,gap";
  auto names = [&](const char* p) {
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << p << '_' << i;
  };
  if (z) {
    names("z");
    names("zbar");
  } else {
    names("x");
    names("y");
    names("xbar");
    names("ybar");
  }
  out << '\n';
  for (const auto& r : trace.rows) {
    out << r.k << ',' << fmt17(r.res) << ',' << fmt17(r.lyapunov) << ',' << fmt17(r.alpha) << ','
        << fmt17(r.gap);
    append_vector(out, r.x, n);
    if (!z) append_vector(out, r.y, n);
    append_vector(out, r.xbar, n);
    if (!z) append_vector(out, r.ybar, n);
    out << '\n';
  }
  out << "# status=" << to_string(trace.status) << " iterations=" << trace.rows.size();
  if (!std::isnan(trace.alpha_bar)) out << " alpha_bar=" << fmt17(trace.alpha_bar);
  if (trace.left_region) out << " left_region=true";
  for (const auto& [k, v] : meta) out << ' ' << k << '=' << v;
  if (!trace.message.empty()) out << " message=\"" << trace.message << '"';
  out << '\n';
}

void write_trace_json(std::ostream& out, const IterateTraceXd& trace, const Metadata& meta) {
  const bool z = trace.space == TraceSpace::ZSpace;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : trace.rows) {
    nlohmann::json row{{"k", r.k}, {"res", num(r.res)}, {"lyapunov", num(r.lyapunov)},
                       {"alpha", num(r.alpha)}, {"gap", num(r.gap)}};
    if (z) {
      row["z"] = vec(r.x);
      row["zbar"] = vec(r.xbar);
    } else {
      row["x"] = vec(r.x);
      row["y"] = vec(r.y);
      row["xbar"] = vec(r.xbar);
      row["ybar"] = vec(r.ybar);
    }
    if (r.left_region) row["left_region"] = true;
    rows.push_back(std::move(row));
  }
  nlohmann::json md{{"status", std::string(to_string(trace.status))},
                    {"iterations", trace.rows.size()},
                    {"space", z ? "z" : "linkage"},
                    {"alpha_bar", num(trace.alpha_bar)},
                    {"left_region", trace.left_region},
                    {"warnings", trace.warnings}};
  if (!trace.message.empty()) md["message"] = trace.message;
  for (const auto& [k, v] : meta) md[k] = v;
  nlohmann::json doc{{"rows", std::move(rows)}, {"metadata", std::move(md)}};
  doc["final_x"] = vec(trace.final_x);
  if (!z) doc["final_y"] = vec(trace.final_y);
  out << doc.dump(2) << '\n';
}

}  // namespace progdec::io
