#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fmlm {

// FNV-1a 64-bit, used for provenance hashes of manifests and vocab files.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& s);

std::string read_file(const std::filesystem::path& path);

// write-temp-then-rename so partially written artifacts are never observed
void atomic_write(const std::filesystem::path& path, const std::string& content);
void atomic_write_bytes(const std::filesystem::path& path, const void* data,
                        std::size_t len);

// Fixed-format float rendering for CSV/JSON artifacts. Round-trippable
// (17 significant digits) and identical across reruns of the same build.
std::string fmt_double(double v);

std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& field);

}  // namespace fmlm
