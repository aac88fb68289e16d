#include "p4rec/num/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace p4rec::num {

namespace {

constexpr char kMagic[4] = {'P', '4', 'T', '1'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated u32");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("checkpoint: truncated u64");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const ParamStore& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  for (size_t i = 0; i < params.count(); ++i) {
    const std::string& name = params.names()[i];
    const Tensor& t = params.value(i);
    write_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<uint32_t>(t.rank()));
    for (int d = 0; d < t.rank(); ++d) write_u64(os, static_cast<uint64_t>(t.dim(d)));
    // f64 payload; this targets little-endian hosts.
    for (int j = 0; j < t.size(); ++j) {
      uint64_t bits;
      const double v = t.at(j);
      std::memcpy(&bits, &v, 8);
      write_u64(os, bits);
    }
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

ParamStore load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const uint32_t version = read_u32(is);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  ParamStore store;
  while (true) {
    const int peek = is.peek();
    if (peek == std::char_traits<char>::eof()) break;
    const uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw std::runtime_error("checkpoint: truncated name");
    const uint32_t rank = read_u32(is);
    std::vector<int> shape;
    size_t total = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      const uint64_t dim = read_u64(is);
      shape.push_back(static_cast<int>(dim));
      total *= dim;
    }
    std::vector<double> data(total);
    for (size_t j = 0; j < total; ++j) {
      const uint64_t bits = read_u64(is);
      std::memcpy(&data[j], &bits, 8);
    }
    store.add(name, Tensor::from(std::move(shape), std::move(data)));
  }
  return store;
}

}  // namespace p4rec::num
