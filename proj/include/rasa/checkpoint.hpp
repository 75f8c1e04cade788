#pragma once

#include <string>
#include <vector>

#include "rasa/tensor.hpp"

namespace rasa {

// Binary parameter snapshot. Layout: 8-byte magic "RASACKP1", u32 record
// count, then per record: u32 id length, id bytes, u32 rank, u32 dims,
// raw little-endian f64 data. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const std::vector<Parameter*>& params);

// Restores values into an existing parameter list, matched by id. Throws
// CheckpointMismatch when ids, shapes, or record counts disagree, or when
// the file is not a checkpoint.
void load_checkpoint(const std::string& path, const std::vector<Parameter*>& params);

}  // namespace rasa
