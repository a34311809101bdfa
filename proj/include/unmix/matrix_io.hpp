#pragma once

#include <filesystem>

#include "unmix/core.hpp"

namespace unmix {

/// Reads a matrix from `.hsm` (binary) or any other extension (CSV).
///
/// Binary layout: ASCII "HSM1", rows and cols as little-endian uint64, then
/// rows*cols little-endian IEEE-754 doubles in column-major order.
/// CSV: one matrix row per line, comma separated, '#' lines are comments.
/// Throws FormatError on malformed content.
Matrix read_matrix(const std::filesystem::path& path);

/// Writes by extension, as read_matrix. CSV values use round-trip precision.
void write_matrix(const std::filesystem::path& path, const Matrix& m);

Matrix read_binary_matrix(const std::filesystem::path& path);
void write_binary_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const Matrix& m);

} // namespace unmix
