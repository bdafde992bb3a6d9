#include "mothvision/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace moth {

namespace {

constexpr char kMagic[4] = {'M', 'V', 'C', 'K'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string get_string(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

}  // namespace

const Tensor& Checkpoint::array(const std::string& name) const {
  for (const auto& [n, t] : arrays) {
    if (n == name) return t;
  }
  throw std::runtime_error("checkpoint: missing array '" + name + "'");
}

std::string Checkpoint::meta_or(const std::string& key, const std::string& fallback) const {
  const auto it = meta.find(key);
  return it == meta.end() ? fallback : it->second;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out.write(kMagic, 4);
  put_u32(out, Checkpoint::kVersion);
  put_u64(out, ck.config_hash);
  put_u32(out, static_cast<std::uint32_t>(ck.meta.size()));
  for (const auto& [k, v] : ck.meta) {
    put_string(out, k);
    put_string(out, v);
  }
  put_u32(out, static_cast<std::uint32_t>(ck.arrays.size()));
  for (const auto& [name, t] : ck.arrays) {
    put_string(out, name);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (int d = 0; d < t.rank(); ++d) put_u32(out, static_cast<std::uint32_t>(t.dim(d)));
    for (std::int64_t i = 0; i < t.size(); ++i) put_f64(out, t[i]);
  }
  if (!out) throw std::runtime_error("short checkpoint write: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::invalid_argument("not a checkpoint file: " + path.string());
  }
  const std::uint32_t version = get_u32(in);
  if (version != Checkpoint::kVersion) {
    throw std::invalid_argument("unsupported checkpoint version " + std::to_string(version) +
                                ": " + path.string());
  }
  Checkpoint ck;
  ck.config_hash = get_u64(in);
  const std::uint32_t n_meta = get_u32(in);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = get_string(in);
    std::string v = get_string(in);
    ck.meta.emplace(std::move(k), std::move(v));
  }
  const std::uint32_t n_arrays = get_u32(in);
  for (std::uint32_t i = 0; i < n_arrays; ++i) {
    std::string name = get_string(in);
    const std::uint32_t rank = get_u32(in);
    std::vector<int> shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int>(get_u32(in)));
    Tensor t(shape);
    for (std::int64_t j = 0; j < t.size(); ++j) t[j] = get_f64(in);
    ck.arrays.emplace_back(std::move(name), std::move(t));
  }
  if (!in) throw std::invalid_argument("truncated checkpoint: " + path.string());
  return ck;
}

void require_config_hash(const Checkpoint& ck, std::uint64_t expected,
                         const std::filesystem::path& path) {
  if (ck.config_hash != expected) {
    throw std::invalid_argument("checkpoint " + path.string() +
                                " was trained with a different model config (hash mismatch)");
  }
}

}  // namespace moth
