#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace logcorr {

// Runs body(i) for i in [0, count) on up to `threads` workers. Work is
// handed out through an atomic counter; the first exception is rethrown.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

std::size_t default_threads();

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
void ensure_dir(const std::string& path);

// FNV-1a 64 rendered as 16 hex digits
std::string content_hash(const std::string& s);

}  // namespace logcorr
