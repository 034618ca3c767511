#include "semiflow/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>

#include "semiflow/error.hpp"

namespace semiflow {

namespace {

constexpr char magic[8] = {'G', 'B', 'V', 'T', 'O', 'P', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v)
{
    unsigned char b[8];
    for (int k = 0; k < 8; ++k)
        b[k] = static_cast<unsigned char>(v >> (8 * k));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in)
{
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8))
        throw Error(ErrorKind::io, "truncated matrix dump");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k)
        v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    return v;
}

void put_f64(std::ostream& out, double x)
{
    put_u64(out, std::bit_cast<std::uint64_t>(x));
}

Interval interval_field(const nlohmann::json& j, const std::string& key, const std::string& path)
{
    const auto& v = require_field(j, key, path);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw Error(ErrorKind::config, "field '" + path + "." + key + "' must be [lo, hi]");
    return make_interval(v[0].get<double>(), v[1].get<double>());
}

std::string string_field(const nlohmann::json& j, const std::string& key, const std::string& path)
{
    const auto& v = require_field(j, key, path);
    if (!v.is_string())
        throw Error(ErrorKind::config, "field '" + path + "." + key + "' must be a string");
    return v.get<std::string>();
}

} // namespace

std::string format_double(double x)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_matrix_csv(std::ostream& out, const OperatorMatrix& m)
{
    out << "row,col,re,im\n";
    for (int k = 0; k < m.entries.outerSize(); ++k)
        for (Eigen::SparseMatrix<Complex>::InnerIterator it(m.entries, k); it; ++it)
            out << it.row() << ',' << it.col() << ',' << format_double(it.value().real()) << ','
                << format_double(it.value().imag()) << '\n';
}

void write_matrix_binary(std::ostream& out, const OperatorMatrix& m)
{
    out.write(magic, 8);
    const Eigen::MatrixXcd d = m.dense();
    put_u64(out, static_cast<std::uint64_t>(d.rows()));
    put_u64(out, static_cast<std::uint64_t>(d.cols()));
    for (Eigen::Index r = 0; r < d.rows(); ++r)
        for (Eigen::Index c = 0; c < d.cols(); ++c) {
            put_f64(out, d(r, c).real());
            put_f64(out, d(r, c).imag());
        }
    if (!out)
        throw Error(ErrorKind::io, "failed writing matrix dump");
}

void write_matrix_binary(const std::string& path, const OperatorMatrix& m)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::io, "cannot open " + path);
    write_matrix_binary(out, m);
}

Eigen::MatrixXcd read_matrix_binary(std::istream& in)
{
    char head[8];
    if (!in.read(head, 8) || std::memcmp(head, magic, 8) != 0)
        throw Error(ErrorKind::io, "not a GBVTOP01 matrix dump");
    const auto rows = get_u64(in);
    const auto cols = get_u64(in);
    if (rows > (1u << 20) || cols > (1u << 20))
        throw Error(ErrorKind::io, "matrix dump dimensions are implausible");
    Eigen::MatrixXcd d(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < d.rows(); ++r)
        for (Eigen::Index c = 0; c < d.cols(); ++c) {
            const double re = std::bit_cast<double>(get_u64(in));
            const double im = std::bit_cast<double>(get_u64(in));
            d(r, c) = Complex(re, im);
        }
    return d;
}

Eigen::MatrixXcd read_matrix_binary(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::io, "cannot open " + path);
    return read_matrix_binary(in);
}

void write_spectrum_csv(std::ostream& out, const std::vector<Complex>& values)
{
    out << "index,re,im,modulus\n";
    for (std::size_t k = 0; k < values.size(); ++k)
        out << k << ',' << format_double(values[k].real()) << ',' << format_double(values[k].imag()) << ','
            << format_double(std::abs(values[k])) << '\n';
}

const nlohmann::json& require_field(const nlohmann::json& j, const std::string& key, const std::string& path)
{
    if (!j.is_object() || !j.contains(key))
        throw Error(ErrorKind::config, "missing field '" + path + "." + key + "'");
    return j.at(key);
}

double number_field(const nlohmann::json& j, const std::string& key, const std::string& path)
{
    const auto& v = require_field(j, key, path);
    if (!v.is_number())
        throw Error(ErrorKind::config, "field '" + path + "." + key + "' must be a number");
    return v.get<double>();
}

double number_field(const nlohmann::json& j, const std::string& key, const std::string& path, double fallback)
{
    return j.is_object() && j.contains(key) ? number_field(j, key, path) : fallback;
}

long integer_field(const nlohmann::json& j, const std::string& key, const std::string& path, long fallback)
{
    if (!j.is_object() || !j.contains(key))
        return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer())
        throw Error(ErrorKind::config, "field '" + path + "." + key + "' must be an integer");
    return v.get<long>();
}

Complex complex_value(const nlohmann::json& j, const std::string& path)
{
    if (j.is_number())
        return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw Error(ErrorKind::config, "field '" + path + "' must be a number or [re, im]");
}

PiecewiseMap map_from_json(const nlohmann::json& j)
{
    const std::string path = "system.map";
    const std::string family = string_field(j, "family", path);
    if (family == "doubling")
        return make_doubling_map(static_cast<int>(integer_field(j, "k", path, 2)));
    if (family == "tent")
        return make_tent_map(static_cast<int>(integer_field(j, "slope", path, 2)));
    if (family == "lueroth")
        return make_lueroth_map(static_cast<int>(integer_field(j, "branches", path, 40)));
    if (family == "lorenz")
        return make_lorenz_map(number_field(j, "lambda", path, 1.0), number_field(j, "beta", path),
                               static_cast<int>(integer_field(j, "i_max", path, 40)));
    if (family == "explicit") {
        const Interval omega = interval_field(j, "omega", path);
        const auto& list = require_field(j, "branches", path);
        if (!list.is_array() || list.empty())
            throw Error(ErrorKind::config, "field '" + path + ".branches' must be a non-empty array");
        std::vector<Branch> branches;
        for (std::size_t k = 0; k < list.size(); ++k) {
            const std::string p = path + ".branches[" + std::to_string(k) + "]";
            branches.push_back(affine_branch(interval_field(list[k], "domain", p), number_field(list[k], "slope", p),
                                             number_field(list[k], "intercept", p)));
        }
        return PiecewiseMap(omega, std::move(branches));
    }
    throw Error(ErrorKind::config, "field '" + path + ".family' has unknown value '" + family + "'");
}

ReturnTime return_time_from_json(const PiecewiseMap& map, const nlohmann::json& j)
{
    const std::string path = "system.tau";
    const std::string kind = string_field(j, "kind", path);
    if (kind == "constant")
        return ReturnTime::constant(map, number_field(j, "value", path, 1.0));
    if (kind == "lorenz_log")
        return ReturnTime::lorenz_log(map, number_field(j, "lambda", path, 1.0));
    if (kind == "affine") {
        const auto& list = require_field(j, "pieces", path);
        if (!list.is_array() || list.empty())
            throw Error(ErrorKind::config, "field '" + path + ".pieces' must be a non-empty array");
        std::vector<AffinePiece> pieces;
        for (std::size_t k = 0; k < list.size(); ++k) {
            const std::string p = path + ".pieces[" + std::to_string(k) + "]";
            pieces.push_back({interval_field(list[k], "domain", p), number_field(list[k], "slope", p),
                              number_field(list[k], "intercept", p)});
        }
        return ReturnTime::explicit_affine(map, std::move(pieces));
    }
    throw Error(ErrorKind::config, "field '" + path + ".kind' has unknown value '" + kind + "'");
}

} // namespace semiflow
