#include "cogrid/image_blob.hpp"

#include <cstring>

#include "cogrid/error.hpp"

namespace cogrid {

namespace {
constexpr char kMagic[4] = {'C', 'G', 'I', 'M'};

void put_u32(std::string& out, uint32_t v) {
  char b[4];
  b[0] = static_cast<char>(v & 0xff);
  b[1] = static_cast<char>((v >> 8) & 0xff);
  b[2] = static_cast<char>((v >> 16) & 0xff);
  b[3] = static_cast<char>((v >> 24) & 0xff);
  out.append(b, 4);
}

uint32_t get_u32(std::string_view in, size_t off) {
  const auto* p = reinterpret_cast<const unsigned char*>(in.data() + off);
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
}  // namespace

uint64_t ImageBlob::voxel_count() const {
  uint64_t n = 1;
  for (uint32_t d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

std::string ImageBlob::encode() const {
  if (dims.empty()) throw ValidationError("image blob must have rank >= 1");
  if (voxel_count() != voxels.size())
    throw ValidationError("voxel buffer does not match dims product");
  std::string out;
  out.reserve(encoded_size());
  out.append(kMagic, 4);
  put_u32(out, static_cast<uint32_t>(dims.size()));
  for (uint32_t d : dims) put_u32(out, d);
  for (float v : voxels) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
  }
  return out;
}

ImageBlob ImageBlob::decode(std::string_view bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ValidationError("not a CGIM blob");
  uint32_t rank = get_u32(bytes, 4);
  if (rank == 0 || rank > 8) throw ValidationError("CGIM rank out of range");
  if (bytes.size() < 8 + 4ull * rank) throw ValidationError("CGIM header truncated");
  ImageBlob img;
  img.dims.resize(rank);
  uint64_t count = 1;
  for (uint32_t i = 0; i < rank; ++i) {
    img.dims[i] = get_u32(bytes, 8 + 4ull * i);
    count *= img.dims[i];
  }
  size_t payload = 8 + 4ull * rank;
  if (bytes.size() != payload + 4 * count) throw ValidationError("CGIM payload size mismatch");
  img.voxels.resize(count);
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t bits = get_u32(bytes, payload + 4 * i);
    std::memcpy(&img.voxels[i], &bits, 4);
  }
  return img;
}

}  // namespace cogrid
