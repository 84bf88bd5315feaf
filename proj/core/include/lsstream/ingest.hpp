#ifndef LSSTREAM_INGEST_HPP
#define LSSTREAM_INGEST_HPP

#include "lsstream/error.hpp"
#include "lsstream/linalg.hpp"
#include "lsstream/model.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lsstream {

enum class MissingMode { kFail, kDropRow, kForwardFill };

struct MissingPolicy {
  MissingMode mode = MissingMode::kFail;
};

std::string to_string(MissingMode mode);
MissingMode parse_missing_mode(const std::string& name);

/// One action taken by the missing-value policy.
struct MissingEvent {
  long row = 0;  // 0-based data row in the source file
  std::string column;
  MissingMode action = MissingMode::kFail;
};

std::string format_missing_event(const MissingEvent& event);

/// Ingestion failure that can be tied to a data row (-1 when it cannot).
class IngestError : public DataError {
 public:
  IngestError(const std::string& what, long row = -1)
      : DataError(what), row_(row) {}
  long row() const { return row_; }

 private:
  long row_;
};

struct LoadTable {
  std::vector<std::int64_t> timestamps;  // UTC seconds since the epoch
  std::vector<std::string> series_names;
  Matrix values;  // rows x series
  std::int64_t step_seconds = 0;
  std::vector<MissingEvent> missing_log;

  std::size_t rows() const { return timestamps.size(); }
  int series() const { return static_cast<int>(series_names.size()); }
};

/// Parses "YYYY-MM-DDTHH:MM:SS" with an optional "Z" or "+00:00" suffix (a
/// space may replace the 'T'). Non-UTC offsets are rejected.
std::optional<std::int64_t> parse_utc_timestamp(const std::string& text);
std::string format_utc_timestamp(std::int64_t seconds);

/// Reads a wide CSV (header row, comma separated), keeps `selected_columns`
/// in the given order, applies the missing policy and validates that the
/// timestamps are evenly spaced at the first observed step.
LoadTable parse_wide_csv(std::istream& in, const std::string& timestamp_column,
                         const std::vector<std::string>& selected_columns,
                         MissingPolicy policy);
LoadTable parse_wide_csv(const std::filesystem::path& path,
                         const std::string& timestamp_column,
                         const std::vector<std::string>& selected_columns,
                         MissingPolicy policy);

/// Writes the table back out with 17 significant digits.
void write_wide_csv(std::ostream& out, const LoadTable& table,
                    const std::string& timestamp_column = "utc_timestamp");

/// Builds a table from a simulated stream (hourly spacing from `start`).
LoadTable table_from_stream(const std::vector<StreamPoint>& points,
                            std::int64_t start = 0, std::int64_t step = 3600);

/// Streams (y_t, x_t) pairs out of a table under a lag layout, holding only
/// the last max_lag rows. The first yielded pair is for row max_lag.
class Replay {
 public:
  Replay(const LoadTable& table, const LagLayout& layout);
  Replay(const LoadTable& table, const SeasonalVarxSpec& spec);

  std::optional<std::pair<StreamPoint, Covariate>> next();

  /// Number of pairs a full pass yields: rows - max_lag.
  std::size_t total() const;
  std::size_t buffer_size() const { return embedder_.buffered(); }
  std::size_t buffer_capacity() const { return embedder_.capacity(); }

 private:
  const LoadTable* table_;
  CovariateEmbedder embedder_;
  std::size_t cursor_ = 0;
};

/// Full pass of Replay into a vector.
std::vector<std::pair<StreamPoint, Covariate>> replay_all(
    const LoadTable& table, const SeasonalVarxSpec& spec);

}  // namespace lsstream

#endif  // LSSTREAM_INGEST_HPP
