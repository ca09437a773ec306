#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "g2p/model.h"

namespace g2p {

// Model file layout, all integers little-endian:
//
//   "G2PM"                magic, 4 bytes
//   u32 version           kModelFormatVersion
//   u32 header_bytes
//   header                UTF-8 "key=value\n" lines sorted by key: dims,
//                         id-ordered token lists (space separated),
//                         payload_floats, and the model's metadata
//   payload               payload_floats IEEE-754 binary32 values, each block
//                         row-major, in ModelParams::for_each order
//
// Loading checks the magic and version before touching anything else and
// throws FormatError for any inconsistency.
inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const Model& model, std::ostream& out);
void save_model(const Model& model, const std::filesystem::path& path);
std::string serialize_model(const Model& model);

Model load_model(std::istream& in);
Model load_model(const std::filesystem::path& path);
Model deserialize_model(const std::string& bytes);

}  // namespace g2p
