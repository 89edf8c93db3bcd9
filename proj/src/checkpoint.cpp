#include "sfcn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "sfcn/image_io.hpp"

namespace sfcn {
namespace {

constexpr char kMagic[8] = {'S', 'F', 'C', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

// On-disk integers are little-endian; this code assumes a little-endian host
// (checked at startup below) and writes raw bytes.
static_assert(std::endian::native == std::endian::little,
              "checkpoint format requires a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("checkpoint: truncated file");
  return v;
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            std::streamsize(v.size() * sizeof(double)));
}

void get_doubles(std::istream& in, std::vector<double>& v) {
  in.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
  if (!in) throw IoError("checkpoint: truncated parameter data");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const ArchConfig& arch) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, 8);
  put(out, kVersion);
  put(out, std::uint8_t(arch.variant));
  put(out, std::uint8_t(arch.attach));
  put(out, std::uint32_t(arch.input));
  put(out, std::uint32_t(arch.width));
  put(out, arch.dropout);
  put(out, std::uint64_t(arch.seed));
  put(out, std::uint32_t(store.count()));
  for (const auto& [id, p] : store) {
    put(out, std::uint32_t(id.size()));
    out.write(id.data(), std::streamsize(id.size()));
    put(out, std::uint8_t(p.role == ParamRole::Bias ? 1 : 0));
    put(out, std::uint32_t(p.shape.n));
    put(out, std::uint32_t(p.shape.c));
    put(out, std::uint32_t(p.shape.h));
    put(out, std::uint32_t(p.shape.w));
    put_doubles(out, p.value);
    put_doubles(out, p.momentum);
  }
  if (!out) throw IoError("short write to " + path.string());
}

ArchConfig load_checkpoint(const std::filesystem::path& path, ParameterStore& store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw IoError(path.string() + " is not a checkpoint file");
  if (get<std::uint32_t>(in) != kVersion)
    throw IoError(path.string() + ": unsupported checkpoint version");

  ArchConfig arch;
  arch.variant = Variant(get<std::uint8_t>(in));
  arch.attach = AttachPoint(get<std::uint8_t>(in));
  arch.input = get<std::uint32_t>(in);
  arch.width = get<std::uint32_t>(in);
  arch.dropout = get<double>(in);
  arch.seed = get<std::uint64_t>(in);

  const std::uint32_t count = get<std::uint32_t>(in);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t len = get<std::uint32_t>(in);
    std::string id(len, '\0');
    in.read(id.data(), len);
    const ParamRole role = get<std::uint8_t>(in) ? ParamRole::Bias : ParamRole::Weight;
    Shape shape;
    shape.n = get<std::uint32_t>(in);
    shape.c = get<std::uint32_t>(in);
    shape.h = get<std::uint32_t>(in);
    shape.w = get<std::uint32_t>(in);
    Param& p = store.create(id, shape, role);
    get_doubles(in, p.value);
    get_doubles(in, p.momentum);
  }
  return arch;
}

}  // namespace sfcn
