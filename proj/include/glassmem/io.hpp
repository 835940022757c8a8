#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "glassmem/spin.hpp"

namespace glassmem::io {

/// One line of comma-separated signed values ("+1,-1,..." for binary configurations).
std::string format_spin_config(const SpinConfig& s);
SpinConfig parse_spin_config(std::string_view line);

/// Dense CSV, one row per line, shortest round-trip decimal representation.
void write_matrix_csv(std::ostream& out, const CouplingMatrix& J);
CouplingMatrix read_matrix_csv(std::istream& in, DiagonalPolicy policy);

/// Binary container: magic "GMJ1", u32 policy, u64 n, n*n little-endian IEEE doubles.
void write_matrix_binary(std::ostream& out, const CouplingMatrix& J);
CouplingMatrix read_matrix_binary(std::istream& in);

void save_matrix(const std::filesystem::path& path, const CouplingMatrix& J);
CouplingMatrix load_matrix(const std::filesystem::path& path, DiagonalPolicy csv_policy = DiagonalPolicy::Retained);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace glassmem::io
