#include "glassmem/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "glassmem/error.hpp"

namespace glassmem::io {

namespace {

constexpr char kMagic[4] = {'G', 'M', 'J', '1'};

double parse_double(std::string_view token) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r')) token.remove_suffix(1);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ValidationError("could not parse number '" + std::string(token) + "'");
  }
  return v;
}

std::vector<double> parse_row(std::string_view line) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= line.size()) {
    const std::size_t comma = line.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? line.size() : comma;
    out.push_back(parse_double(line.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "binary container assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("binary matrix: truncated input");
  return value;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_spin_config(const SpinConfig& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ',';
    const double v = s[i];
    if (v == 1.0) {
      out += "+1";
    } else if (v == -1.0) {
      out += "-1";
    } else {
      if (v >= 0.0) out += '+';
      out += format_double(v);
    }
  }
  return out;
}

SpinConfig parse_spin_config(std::string_view line) { return SpinConfig(parse_row(line)); }

void write_matrix_csv(std::ostream& out, const CouplingMatrix& J) {
  const std::size_t n = J.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j) out << ',';
      out << format_double(J(i, j));
    }
    out << '\n';
  }
}

CouplingMatrix read_matrix_csv(std::istream& in, DiagonalPolicy policy) {
  std::vector<double> entries;
  std::size_t n = 0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    auto row = parse_row(line);
    if (rows == 0) n = row.size();
    if (row.size() != n) throw SizeError("matrix CSV: ragged row");
    entries.insert(entries.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows != n) throw SizeError("matrix CSV: not square");
  return CouplingMatrix(n, std::move(entries), policy);
}

void write_matrix_binary(std::ostream& out, const CouplingMatrix& J) {
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, J.diagonal_policy() == DiagonalPolicy::Zeroed ? 0U : 1U);
  put_le<std::uint64_t>(out, J.size());
  for (double v : J.entries()) put_le<double>(out, v);
}

CouplingMatrix read_matrix_binary(std::istream& in) {
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) throw ValidationError("binary matrix: bad magic");
  const auto policy = get_le<std::uint32_t>(in) == 0U ? DiagonalPolicy::Zeroed : DiagonalPolicy::Retained;
  const auto n = get_le<std::uint64_t>(in);
  if (n == 0 || n > (1U << 16)) throw ValidationError("binary matrix: implausible dimension");
  std::vector<double> entries(n * n);
  for (auto& v : entries) v = get_le<double>(in);
  return CouplingMatrix(n, std::move(entries), policy);
}

void save_matrix(const std::filesystem::path& path, const CouplingMatrix& J) {
  const bool binary = path.extension() == ".bin";
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  if (binary) {
    write_matrix_binary(out, J);
  } else {
    write_matrix_csv(out, J);
  }
}

CouplingMatrix load_matrix(const std::filesystem::path& path, DiagonalPolicy csv_policy) {
  const bool binary = path.extension() == ".bin";
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error("cannot open " + path.string());
  return binary ? read_matrix_binary(in) : read_matrix_csv(in, csv_policy);
}

}  // namespace glassmem::io
