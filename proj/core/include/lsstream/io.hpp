#ifndef LSSTREAM_IO_HPP
#define LSSTREAM_IO_HPP

#include "lsstream/diagnostics.hpp"
#include "lsstream/estimator.hpp"
#include "lsstream/model.hpp"
#include "lsstream/samplers.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lsstream::io {

/// Shortest text that round-trips the double (17 significant digits);
/// "inf", "-inf", "nan" for non-finite values.
std::string format_double(double value);
double parse_double(const std::string& text);

/// Ordered key/value pairs in "key = value" lines; '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;

KeyValues read_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(std::ostream& out, const KeyValues& kv);

/// Matrix text form: rows separated by ';', entries by spaces.
std::string format_matrix(const Matrix& m);
Matrix parse_matrix(const std::string& text);

KeyValues spec_to_key_values(const VarxSpec& spec);
VarxSpec spec_from_key_values(const KeyValues& kv);
KeyValues spec_to_key_values(const SeasonalVarxSpec& spec);
SeasonalVarxSpec seasonal_spec_from_key_values(const KeyValues& kv);

/// Stream CSV with header t,y1..yK[,v1..vK].
void write_stream_csv(std::ostream& out, std::span<const StreamPoint> points);
std::vector<StreamPoint> read_stream_csv(std::istream& in);
std::vector<StreamPoint> read_stream_csv(const std::filesystem::path& path);

/// Decision log: t,selected,branch,leverage,threshold,s_hat,uniform_draw.
void write_decision_header(std::ostream& out);
void write_decision_row(std::ostream& out, const Decision& d);

/// Metrics: tau,t,est_error,pred_error,n_selected.
void write_metric_header(std::ostream& out);
void write_metric_row(std::ostream& out, const MetricRecord& r);

/// One JSON object per line: tau, n_selected, b_hat, omega_hat.
void write_snapshot_json(std::ostream& out, long tau, const RlsState& state);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace lsstream::io

#endif  // LSSTREAM_IO_HPP
