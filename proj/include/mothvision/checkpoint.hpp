#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mothvision/tensor.hpp"

namespace moth {

// Versioned parameter container. Little-endian on disk regardless of host.
// meta carries small text fields (model kind, arch, class names, ...);
// config_hash is checked against the caller's expectation on load.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t config_hash = 0;
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Tensor>> arrays;

  const Tensor& array(const std::string& name) const;
  std::string meta_or(const std::string& key, const std::string& fallback) const;
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws std::invalid_argument naming the file when hashes differ.
void require_config_hash(const Checkpoint& ck, std::uint64_t expected,
                         const std::filesystem::path& path);

}  // namespace moth
