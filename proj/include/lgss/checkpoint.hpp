#pragma once

#include <filesystem>

#include "lgss/bnet.hpp"
#include "lgss/sequence.hpp"

namespace lgss {

// Model checkpoint: versioned header, named tensors with shapes, values
// stored as 32-bit floats. BNet and sequence parameters share one file.
void save_checkpoint(const BNetParams& bnet, const SeqParams& seq,
                     const std::filesystem::path& path);

struct Checkpoint {
  BNetParams bnet;
  SeqParams seq;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lgss
