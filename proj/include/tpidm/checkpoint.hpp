#ifndef TPIDM_CHECKPOINT_HPP
#define TPIDM_CHECKPOINT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tpidm/config.hpp"

namespace tpidm {

// Binary layout, all integers little-endian:
//   magic "TPIDM\0" | u16 version | u32 metadata length | metadata UTF-8 |
//   u64 parameter count | f32 parameters | u64 FNV-1a checksum over the blob.
struct Checkpoint {
    ExperimentConfig config;
    std::uint64_t training_steps = 0;
    std::uint64_t seed = 0;
    std::vector<float> params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::uint64_t fnv1a64(const unsigned char* data, std::size_t len);

}  // namespace tpidm

#endif
