#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qtune {

std::vector<std::uint8_t> read_file(const std::string& path);
std::string read_text_file(const std::string& path);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::string& path, std::string_view text);

/// Exclusive lock file inside an output directory, released on destruction.
/// Throws Error{Busy} if another invocation holds it.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace qtune
