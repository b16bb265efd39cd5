#pragma once

#include <filesystem>
#include <iosfwd>

#include "misr/volume.hpp"

namespace misr {

/// MVOL1 container: one ASCII header line
///   MVOL1 nx ny nz sx sy sz\n
/// followed by nx*ny*nz little-endian IEEE-754 binary64 values in x-fastest
/// order. Spacing is printed with 17 significant digits so the round-trip is
/// bit-exact.
void write_mvol(std::ostream& os, const Volume& v);
void write_mvol(const std::filesystem::path& path, const Volume& v);

Volume read_mvol(std::istream& is, const std::string& name = "<stream>");
Volume read_mvol(const std::filesystem::path& path);

}  // namespace misr
