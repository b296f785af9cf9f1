#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stablegrasp/nn/params.hpp"

namespace sg::sac {

/// Checkpoint files: magic "TGL1", u16 format version, then repeated
/// records [u32 name length | UTF-8 name | u8 rank | u32 dims... |
/// little-endian f32 payload]. Record names are "<group>/<param name>".

inline constexpr uint16_t kCheckpointVersion = 1;

using CheckpointGroups = std::vector<std::pair<std::string, const nn::ParameterSet*>>;

void save_checkpoint(const CheckpointGroups& groups, const std::string& path);

/// All records, in file order.
std::vector<std::pair<std::string, nn::Tensor>> read_checkpoint(const std::string& path);

/// Group names present in the file, in first-appearance order.
std::vector<std::string> checkpoint_groups(const std::string& path);

/// Loads every record of `group` into `dst`. Errors name the offending
/// record: unknown parameter, shape mismatch, or parameter missing from
/// the file.
void load_group(const std::string& path, const std::string& group, nn::ParameterSet& dst);

}  // namespace sg::sac
