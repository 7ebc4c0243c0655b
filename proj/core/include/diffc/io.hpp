#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace diffc {

/// Value formatted with 12 significant digits, the curve-file convention.
std::string format_sig(double value);

/// Write via temp file + rename so readers never observe partial output.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

/// SHA-256 digest (32 bytes) of a byte buffer.
std::array<unsigned char, 32> sha256(const std::vector<unsigned char>& data);

/// Thread count for internal parallelism: DIFFC_THREADS if set, otherwise
/// hardware concurrency.
unsigned thread_budget();

}  // namespace diffc
