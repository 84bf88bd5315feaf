#include "lsstream/io.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace lsstream::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(s);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

const std::string& require(const KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw DataError("metadata is missing key '" + key + "'");
  return it->second;
}

int require_int(const KeyValues& kv, const std::string& key) {
  return static_cast<int>(parse_double(require(kv, key)));
}

Vector parse_vector(const std::string& text) {
  const Matrix m = parse_matrix(text);
  return Eigen::Map<const Vector>(m.data(), m.size());
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

double parse_double(const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "nan" || text == "NaN") return std::nan("");
  if (text == "inf" || text == "+inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError("cannot parse '" + text + "' as a number");
  }
  return value;
}

KeyValues read_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("line " + std::to_string(lineno) + ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_key_values(in);
}

void write_key_values(std::ostream& out, const KeyValues& kv) {
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

std::string format_matrix(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i > 0) out += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ' ';
      out += format_double(m(i, j));
    }
  }
  return out;
}

Matrix parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  for (const auto& row_text : split(text, ';')) {
    std::vector<double> row;
    std::istringstream in(row_text);
    std::string tok;
    while (in >> tok) row.push_back(parse_double(tok));
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix();
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw DataError("ragged matrix text");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

KeyValues spec_to_key_values(const VarxSpec& spec) {
  KeyValues kv;
  kv["model"] = "varx";
  kv["K"] = std::to_string(spec.K);
  kv["p1"] = std::to_string(spec.p1);
  kv["p2"] = std::to_string(spec.p2);
  for (int i = 0; i < spec.p1; ++i) kv["phi_" + std::to_string(i + 1)] = format_matrix(spec.phi[i]);
  for (int j = 0; j < spec.p2; ++j) kv["psi_" + std::to_string(j + 1)] = format_matrix(spec.psi[j]);
  kv["omega"] = format_matrix(spec.omega);
  kv["mu_y"] = format_matrix(spec.mu_y.transpose());
  kv["mu_v"] = format_matrix(spec.mu_v.transpose());
  return kv;
}

VarxSpec spec_from_key_values(const KeyValues& kv) {
  VarxSpec spec;
  spec.K = require_int(kv, "K");
  spec.p1 = require_int(kv, "p1");
  spec.p2 = require_int(kv, "p2");
  for (int i = 0; i < spec.p1; ++i) spec.phi.push_back(parse_matrix(require(kv, "phi_" + std::to_string(i + 1))));
  for (int j = 0; j < spec.p2; ++j) spec.psi.push_back(parse_matrix(require(kv, "psi_" + std::to_string(j + 1))));
  spec.omega = parse_matrix(require(kv, "omega"));
  spec.mu_y = kv.count("mu_y") ? parse_vector(kv.at("mu_y")) : Vector::Zero(spec.K);
  spec.mu_v = kv.count("mu_v") ? parse_vector(kv.at("mu_v")) : Vector::Zero(spec.K);
  return validate_spec(spec);
}

KeyValues spec_to_key_values(const SeasonalVarxSpec& spec) {
  KeyValues kv;
  kv["model"] = "seasonal_varx";
  kv["K"] = std::to_string(spec.K);
  kv["p1"] = std::to_string(spec.p1);
  kv["p2_seasonal"] = std::to_string(spec.p2_seasonal);
  kv["period"] = std::to_string(spec.period);
  for (int i = 0; i < spec.p1; ++i) kv["phi_" + std::to_string(i + 1)] = format_matrix(spec.phi[i]);
  for (int j = 0; j < spec.p2_seasonal; ++j) kv["theta_" + std::to_string(j + 1)] = format_matrix(spec.theta[j]);
  kv["omega"] = format_matrix(spec.omega);
  kv["mu_y"] = format_matrix(spec.mu_y.transpose());
  return kv;
}

SeasonalVarxSpec seasonal_spec_from_key_values(const KeyValues& kv) {
  SeasonalVarxSpec spec;
  spec.K = require_int(kv, "K");
  spec.p1 = require_int(kv, "p1");
  spec.p2_seasonal = require_int(kv, "p2_seasonal");
  spec.period = require_int(kv, "period");
  for (int i = 0; i < spec.p1; ++i) spec.phi.push_back(parse_matrix(require(kv, "phi_" + std::to_string(i + 1))));
  for (int j = 0; j < spec.p2_seasonal; ++j) spec.theta.push_back(parse_matrix(require(kv, "theta_" + std::to_string(j + 1))));
  spec.omega = parse_matrix(require(kv, "omega"));
  spec.mu_y = kv.count("mu_y") ? parse_vector(kv.at("mu_y")) : Vector::Zero(spec.K);
  return validate_spec(spec);
}

void write_stream_csv(std::ostream& out, std::span<const StreamPoint> points) {
  if (points.empty()) {
    out << "t\n";
    return;
  }
  const Eigen::Index K = points.front().y.size();
  const bool exog = points.front().v.size() > 0;
  out << 't';
  for (Eigen::Index k = 0; k < K; ++k) out << ",y" << k + 1;
  if (exog) {
    for (Eigen::Index k = 0; k < K; ++k) out << ",v" << k + 1;
  }
  out << '\n';
  for (const auto& pt : points) {
    out << pt.t;
    for (Eigen::Index k = 0; k < K; ++k) out << ',' << format_double(pt.y[k]);
    if (exog) {
      for (Eigen::Index k = 0; k < K; ++k) out << ',' << format_double(pt.v[k]);
    }
    out << '\n';
  }
}

std::vector<StreamPoint> read_stream_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("stream CSV is empty");
  const auto header = split(trim(line), ',');
  if (header.empty() || trim(header[0]) != "t") throw DataError("stream CSV must start with column t");
  Eigen::Index K = 0;
  Eigen::Index V = 0;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const std::string h = trim(header[i]);
    if (!h.empty() && h[0] == 'y') ++K;
    else if (!h.empty() && h[0] == 'v') ++V;
    else throw DataError("unexpected stream column '" + h + "'");
  }
  if (K == 0 || (V != 0 && V != K)) throw DataError("stream CSV needs y1..yK and optionally v1..vK");
  std::vector<StreamPoint> points;
  long row = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (static_cast<Eigen::Index>(fields.size()) != 1 + K + V) {
      throw DataError("stream row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields");
    }
    StreamPoint pt;
    pt.t = static_cast<long>(parse_double(fields[0]));
    pt.y.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) pt.y[k] = parse_double(fields[1 + k]);
    if (V > 0) {
      pt.v.resize(V);
      for (Eigen::Index k = 0; k < V; ++k) pt.v[k] = parse_double(fields[1 + K + k]);
    }
    if (!points.empty() && pt.t <= points.back().t) {
      throw DataError("stream row " + std::to_string(row) + ": t is not increasing");
    }
    points.push_back(std::move(pt));
    ++row;
  }
  return points;
}

std::vector<StreamPoint> read_stream_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_stream_csv(in);
}

void write_decision_header(std::ostream& out) {
  out << "t,selected,branch,leverage,threshold,s_hat,uniform_draw\n";
}

void write_decision_row(std::ostream& out, const Decision& d) {
  out << d.t << ',' << (d.selected ? 1 : 0) << ',' << to_string(d.branch) << ','
      << format_double(d.leverage) << ',' << format_double(d.threshold) << ','
      << format_double(d.s_hat) << ',' << format_double(d.uniform_draw) << '\n';
}

void write_metric_header(std::ostream& out) {
  out << "tau,t,est_error,pred_error,n_selected\n";
}

void write_metric_row(std::ostream& out, const MetricRecord& r) {
  out << r.tau << ',' << r.t << ',' << format_double(r.est_error) << ','
      << format_double(r.pred_error) << ',' << r.n_selected << '\n';
}

void write_snapshot_json(std::ostream& out, long tau, const RlsState& state) {
  auto rows = [](const Matrix& m) {
    nlohmann::json j = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
      j.push_back(std::move(row));
    }
    return j;
  };
  nlohmann::json j;
  j["tau"] = tau;
  j["n_selected"] = state.n_selected;
  j["b_hat"] = rows(state.b_hat);
  j["omega_hat"] = rows(state.omega_hat);
  out << j.dump() << '\n';
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace lsstream::io
