#include "lsstream/ingest.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace lsstream {

std::string to_string(MissingMode mode) {
  switch (mode) {
    case MissingMode::kFail: return "fail";
    case MissingMode::kDropRow: return "drop_row";
    case MissingMode::kForwardFill: return "forward_fill";
  }
  return "unknown";
}

MissingMode parse_missing_mode(const std::string& name) {
  if (name == "fail") return MissingMode::kFail;
  if (name == "drop_row" || name == "drop") return MissingMode::kDropRow;
  if (name == "forward_fill" || name == "ffill") return MissingMode::kForwardFill;
  throw ValidationError("unknown missing policy '" + name + "'");
}

std::string format_missing_event(const MissingEvent& event) {
  return "missing row=" + std::to_string(event.row) + " column=" + event.column +
         " action=" + to_string(event.action);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool read_int(const std::string& s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const char* first = s.data() + pos;
  const char* last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

/// Returns nullopt for a missing cell; throws on garbage.
std::optional<double> parse_cell(const std::string& raw, long row,
                                 const std::string& column) {
  const std::string s = trim(raw);
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null") {
    return std::nullopt;
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IngestError("row " + std::to_string(row) + " column " + column +
                          ": cannot parse '" + s + "' as a number",
                      row);
  }
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

std::optional<std::int64_t> parse_utc_timestamp(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.size() < 19) return std::nullopt;
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!read_int(s, 0, 4, year) || s[4] != '-' || !read_int(s, 5, 2, month) ||
      s[7] != '-' || !read_int(s, 8, 2, day) || (s[10] != 'T' && s[10] != ' ') ||
      !read_int(s, 11, 2, hour) || s[13] != ':' || !read_int(s, 14, 2, minute) ||
      s[16] != ':' || !read_int(s, 17, 2, second)) {
    return std::nullopt;
  }
  const std::string suffix = s.substr(19);
  if (!(suffix.empty() || suffix == "Z" || suffix == "+00:00" || suffix == "+0000")) {
    return std::nullopt;
  }
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_utc_timestamp(std::int64_t seconds) {
  using namespace std::chrono;
  std::int64_t days = seconds / 86400;
  std::int64_t rem = seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
  return buf;
}

LoadTable parse_wide_csv(std::istream& in, const std::string& timestamp_column,
                         const std::vector<std::string>& selected_columns,
                         MissingPolicy policy) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError("missing header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB &&
      static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  const auto header = split_csv_line(line);
  auto column_index = [&header](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    throw IngestError("unknown column '" + name + "'");
  };
  if (selected_columns.empty()) throw ValidationError("no columns selected");
  const std::size_t ts_idx = column_index(timestamp_column);
  std::vector<std::size_t> idx;
  for (const auto& c : selected_columns) idx.push_back(column_index(c));
  const std::size_t K = idx.size();

  LoadTable table;
  table.series_names = selected_columns;
  std::vector<long> source_rows;
  std::vector<std::vector<double>> rows;
  std::vector<double> previous;
  long row = -1;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line == "\r") continue;
    ++row;
    const auto fields = split_csv_line(line);
    auto field = [&](std::size_t i) -> const std::string& {
      static const std::string empty;
      return i < fields.size() ? fields[i] : empty;
    };
    const auto ts = parse_utc_timestamp(field(ts_idx));
    if (!ts) {
      throw IngestError("row " + std::to_string(row) + ": unparseable timestamp '" +
                            field(ts_idx) + "'",
                        row);
    }
    std::vector<double> values(K);
    std::vector<std::size_t> missing;
    for (std::size_t k = 0; k < K; ++k) {
      const auto v = parse_cell(field(idx[k]), row, selected_columns[k]);
      if (v) {
        values[k] = *v;
      } else {
        missing.push_back(k);
      }
    }
    if (!missing.empty()) {
      switch (policy.mode) {
        case MissingMode::kFail:
          throw IngestError("row " + std::to_string(row) + " column " +
                                selected_columns[missing.front()] + ": missing value",
                            row);
        case MissingMode::kDropRow:
          for (auto k : missing) {
            table.missing_log.push_back({row, selected_columns[k], MissingMode::kDropRow});
          }
          continue;
        case MissingMode::kForwardFill:
          if (previous.empty()) {
            throw IngestError("row " + std::to_string(row) + " column " +
                                  selected_columns[missing.front()] +
                                  ": cannot forward-fill the first row",
                              row);
          }
          for (auto k : missing) {
            values[k] = previous[k];
            table.missing_log.push_back(
                {row, selected_columns[k], MissingMode::kForwardFill});
          }
          break;
      }
    }
    table.timestamps.push_back(*ts);
    source_rows.push_back(row);
    previous = values;
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw IngestError("no data rows");

  if (rows.size() >= 2) {
    table.step_seconds = table.timestamps[1] - table.timestamps[0];
    if (table.step_seconds <= 0) {
      throw IngestError("row " + std::to_string(source_rows[1]) +
                            ": timestamps are not strictly increasing",
                        source_rows[1]);
    }
    for (std::size_t i = 2; i < rows.size(); ++i) {
      const auto gap = table.timestamps[i] - table.timestamps[i - 1];
      if (gap != table.step_seconds) {
        throw IngestError("row " + std::to_string(source_rows[i]) +
                              ": irregular spacing (gap " + std::to_string(gap) +
                              "s, expected " + std::to_string(table.step_seconds) +
                              "s)",
                          source_rows[i]);
      }
    }
  }

  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(K));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < K; ++k) table.values(i, k) = rows[i][k];
  }
  return table;
}

LoadTable parse_wide_csv(const std::filesystem::path& path,
                         const std::string& timestamp_column,
                         const std::vector<std::string>& selected_columns,
                         MissingPolicy policy) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  return parse_wide_csv(in, timestamp_column, selected_columns, policy);
}

void write_wide_csv(std::ostream& out, const LoadTable& table,
                    const std::string& timestamp_column) {
  out << timestamp_column;
  for (const auto& name : table.series_names) out << ',' << name;
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out << format_utc_timestamp(table.timestamps[i]);
    for (Eigen::Index k = 0; k < table.values.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", table.values(static_cast<Eigen::Index>(i), k));
      out << ',' << buf;
    }
    out << '\n';
  }
}

LoadTable table_from_stream(const std::vector<StreamPoint>& points,
                            std::int64_t start, std::int64_t step) {
  if (points.empty()) throw ValidationError("empty stream");
  const Eigen::Index K = points.front().y.size();
  LoadTable table;
  for (Eigen::Index k = 0; k < K; ++k) table.series_names.push_back("y" + std::to_string(k + 1));
  table.values.resize(static_cast<Eigen::Index>(points.size()), K);
  table.step_seconds = step;
  for (std::size_t i = 0; i < points.size(); ++i) {
    table.timestamps.push_back(start + static_cast<std::int64_t>(i) * step);
    table.values.row(static_cast<Eigen::Index>(i)) = points[i].y.transpose();
  }
  return table;
}

Replay::Replay(const LoadTable& table, const LagLayout& layout)
    : table_(&table), embedder_(layout) {
  if (layout.has_exogenous()) {
    throw ValidationError("table replay supports response lags only");
  }
  if (layout.K != table.series()) {
    throw ValidationError("model dimension " + std::to_string(layout.K) +
                          " does not match the table's " +
                          std::to_string(table.series()) + " series");
  }
  if (table.rows() <= static_cast<std::size_t>(layout.max_lag())) {
    throw DataError("table has " + std::to_string(table.rows()) +
                    " rows; the lag structure needs more than " +
                    std::to_string(layout.max_lag()));
  }
}

Replay::Replay(const LoadTable& table, const SeasonalVarxSpec& spec)
    : Replay(table, spec.layout()) {}

std::size_t Replay::total() const {
  return table_->rows() - embedder_.capacity();
}

std::optional<std::pair<StreamPoint, Covariate>> Replay::next() {
  const std::size_t n = table_->rows();
  while (cursor_ < n) {
    const auto i = static_cast<Eigen::Index>(cursor_);
    StreamPoint point{static_cast<long>(cursor_),
                      table_->values.row(i).transpose(), Vector()};
    ++cursor_;
    if (embedder_.ready()) {
      Covariate x = embedder_.next();
      embedder_.push(point);
      return std::make_pair(std::move(point), std::move(x));
    }
    embedder_.push(std::move(point));
  }
  return std::nullopt;
}

std::vector<std::pair<StreamPoint, Covariate>> replay_all(
    const LoadTable& table, const SeasonalVarxSpec& spec) {
  Replay replay(table, spec);
  std::vector<std::pair<StreamPoint, Covariate>> out;
  out.reserve(replay.total());
  while (auto item = replay.next()) out.push_back(std::move(*item));
  return out;
}

}  // namespace lsstream
