#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "semiflow/interval_maps.hpp"
#include "semiflow/numeric.hpp"
#include "semiflow/return_time.hpp"
#include "semiflow/transfer_operator.hpp"

namespace semiflow {

/// Shortest round-trip decimal form used in every CSV we write.
std::string format_double(double x);

/// Nonzero entries as (row, col, re, im), column-major order.
void write_matrix_csv(std::ostream& out, const OperatorMatrix& m);
/// "GBVTOP01", rows and cols as little-endian uint64, then row-major complex<double> pairs.
void write_matrix_binary(std::ostream& out, const OperatorMatrix& m);
void write_matrix_binary(const std::string& path, const OperatorMatrix& m);
Eigen::MatrixXcd read_matrix_binary(std::istream& in);
Eigen::MatrixXcd read_matrix_binary(const std::string& path);

/// (index, re, im, modulus).
void write_spectrum_csv(std::ostream& out, const std::vector<Complex>& values);

/// {"family": "doubling" | "tent" | "lueroth" | "lorenz" | "explicit", ...}.
/// explicit: {"omega": [lo, hi], "branches": [{"domain": [a, b], "slope": s, "intercept": c}, ...]}.
PiecewiseMap map_from_json(const nlohmann::json& j);
/// {"kind": "constant", "value": v} | {"kind": "lorenz_log", "lambda": l} |
/// {"kind": "affine", "pieces": [{"domain": [a, b], "slope": s, "intercept": c}, ...]}.
ReturnTime return_time_from_json(const PiecewiseMap& map, const nlohmann::json& j);

/// Config access that names the offending field on failure.
const nlohmann::json& require_field(const nlohmann::json& j, const std::string& key, const std::string& path);
double number_field(const nlohmann::json& j, const std::string& key, const std::string& path);
double number_field(const nlohmann::json& j, const std::string& key, const std::string& path, double fallback);
long integer_field(const nlohmann::json& j, const std::string& key, const std::string& path, long fallback);
Complex complex_value(const nlohmann::json& j, const std::string& path);

} // namespace semiflow
