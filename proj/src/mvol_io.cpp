#include "misr/mvol_io.hpp"

#include <bit>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace misr {

namespace {

void put_le64(std::uint64_t bits, unsigned char out[8]) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(bits >> (8 * i));
}

std::uint64_t get_le64(const unsigned char in[8]) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return bits;
}

}  // namespace

void write_mvol(std::ostream& os, const Volume& v) {
  char header[192];
  std::snprintf(header, sizeof(header), "MVOL1 %d %d %d %.17g %.17g %.17g\n", v.dims().nx,
                v.dims().ny, v.dims().nz, v.spacing().sx, v.spacing().sy, v.spacing().sz);
  os << header;

  std::vector<unsigned char> buf(v.size() * 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    put_le64(std::bit_cast<std::uint64_t>(v[i]), &buf[i * 8]);
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw std::runtime_error("write_mvol: stream write failed");
}

void write_mvol(const std::filesystem::path& path, const Volume& v) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_mvol: cannot open '" + path.string() + "' for writing");
  write_mvol(os, v);
}

Volume read_mvol(std::istream& is, const std::string& name) {
  std::string header;
  if (!std::getline(is, header)) {
    throw std::runtime_error("read_mvol: " + name + ": missing header line");
  }
  std::istringstream hs(header);
  std::string magic;
  Dims dims;
  Spacing sp;
  hs >> magic >> dims.nx >> dims.ny >> dims.nz >> sp.sx >> sp.sy >> sp.sz;
  if (!hs || magic != "MVOL1") {
    throw std::runtime_error("read_mvol: " + name + ": malformed MVOL1 header: '" + header + "'");
  }
  if (!dims.valid() || !sp.valid()) {
    throw std::runtime_error("read_mvol: " + name + ": invalid dims/spacing in header");
  }

  const std::size_t n = dims.count();
  std::vector<unsigned char> buf(n * 8);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(is.gcount()) != buf.size()) {
    throw std::runtime_error("read_mvol: " + name + ": truncated payload (expected " +
                             std::to_string(n) + " samples)");
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = std::bit_cast<double>(get_le64(&buf[i * 8]));
  }
  return Volume::from_data(dims, sp, std::move(data));
}

Volume read_mvol(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_mvol: cannot open '" + path.string() + "'");
  return read_mvol(is, path.filename().string());
}

}  // namespace misr
