#pragma once

#include <filesystem>

#include "sfcn/net.hpp"
#include "sfcn/params.hpp"

namespace sfcn {

// Little-endian binary record: magic "SFCNCKPT", u32 version, architecture
// header (variant, attach, input extent, base width, dropout, seed), u32
// parameter count, then per parameter: id, role, shape, raw 64-bit floats for
// value and momentum. Round trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const ArchConfig& arch);

// Fills the store (created fresh) and returns the architecture header.
ArchConfig load_checkpoint(const std::filesystem::path& path, ParameterStore& store);

}  // namespace sfcn
