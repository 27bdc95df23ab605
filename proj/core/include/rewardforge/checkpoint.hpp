#pragma once

#include <filesystem>

#include "rewardforge/model.hpp"

namespace rewardforge::model {

// Versioned checkpoint container.
//
// Layout (all integers little-endian):
//   magic "RFCK" | u32 format version | u32 config length | config JSON
//   (canonical, sorted keys) | u32 blob count | blobs.
// Each blob: u16 name length | name bytes | u8 dtype (0 = f32, 1 = f64,
// 2 = i64) | u64 element count | raw little-endian data.
//
// Parameters are stored as f32 blobs and round-trip bit-exactly. Adam
// moments are stored as f64 blobs ("<name>.adam_m", "<name>.adam_v") and the
// step counter as an i64 blob ("__step") so a resumed run continues
// bit-identically to an uninterrupted one.
void save_checkpoint(const std::filesystem::path& path,
                     const ModelState& state);

ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace rewardforge::model
