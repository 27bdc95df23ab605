#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rewardforge::data {

// One (inputs, targets, mask) block ready for the model: all three are
// flattened (batch_size x context_len). Targets are inputs shifted by one;
// the mask excludes every pair whose input or target is PAD or SEP, so each
// document contributes exactly len-1 supervised pairs.
struct Batch {
  std::vector<std::int32_t> inputs;
  std::vector<std::int32_t> targets;
  std::vector<std::uint8_t> mask;
  int batch_size = 0;
  int context_len = 0;
};

// Deterministic epoch-based batch stream. Documents are shuffled per epoch
// (seed + epoch), joined with single SEP tokens into one stream, and cut
// into windows of context_len+1 with stride context_len, so adjacent pairs
// survive window boundaries. The final window is PAD-padded.
//
// batch_at(step) is a pure function of (documents, seed, step): any step of
// a run can be replayed without iterating from the start.
class BatchStream {
 public:
  BatchStream(std::vector<std::string> documents, int context_len,
              int batch_size, std::uint64_t seed);

  Batch batch_at(std::int64_t step) const;

  std::int64_t windows_per_epoch() const { return windows_per_epoch_; }
  std::int64_t batches_per_epoch() const;
  // Supervised (unmasked) pairs in one epoch: total tokens - document count.
  std::int64_t supervised_pairs_per_epoch() const;

 private:
  std::vector<std::int32_t> epoch_stream(std::int64_t epoch) const;

  std::vector<std::string> documents_;
  int context_len_;
  int batch_size_;
  std::uint64_t seed_;
  std::int64_t stream_len_ = 0;
  std::int64_t windows_per_epoch_ = 0;

  mutable std::int64_t cached_epoch_ = -1;
  mutable std::vector<std::int32_t> cached_stream_;
};

}  // namespace rewardforge::data
