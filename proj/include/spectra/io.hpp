#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spectra/matrix.hpp"

namespace spectra {

// Matrix CSV: one row per line, 17 significant digits.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);

void write_labels_csv(const std::vector<std::size_t>& labels,
                      const std::filesystem::path& path);
std::vector<std::size_t> read_labels_csv(const std::filesystem::path& path);

// Write-temp-then-rename so readers never observe partial files.
void atomic_write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// FNV-1a 64-bit as a 16-hex-digit string; used for content-addressed run ids
// and manifest checksums.
std::string fnv1a_hex(const std::string& text);

} // namespace spectra
