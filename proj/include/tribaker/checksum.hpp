#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace tribaker {

using Sha256Digest = std::array<std::uint8_t, 32>;

Sha256Digest sha256(std::string_view bytes);
std::string to_hex(const Sha256Digest& digest);
std::string sha256_hex(std::string_view bytes);

/// Checksum of a whole file; throws std::runtime_error if unreadable.
std::string sha256_file(const std::filesystem::path& path);

} // namespace tribaker
