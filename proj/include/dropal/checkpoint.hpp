#pragma once

#include <filesystem>
#include <optional>

#include "dropal/data.hpp"
#include "dropal/network.hpp"

namespace dropal {

/// A network plus the input/target scaling it was trained under.
struct Checkpoint {
  Network network;
  std::optional<Standardizer> standardizer;
};

/// JSON file holding the spec and every parameter. Doubles are written in
/// shortest round-trip form, so load(save(x)) reproduces x exactly.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dropal
