#ifndef COGRID_IMAGE_BLOB_HPP
#define COGRID_IMAGE_BLOB_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cogrid {

// Volumetric image blob. Wire format (little-endian):
//   magic "CGIM", u32 rank, rank x u32 dims, dims-product x f32 voxels.
struct ImageBlob {
  std::vector<uint32_t> dims;
  std::vector<float> voxels;

  uint64_t voxel_count() const;
  std::string encode() const;
  static ImageBlob decode(std::string_view bytes);

  // Size in bytes of the encoded form without materializing it.
  uint64_t encoded_size() const { return 4 + 4 + 4 * dims.size() + 4 * voxels.size(); }
};

}  // namespace cogrid

#endif  // COGRID_IMAGE_BLOB_HPP
