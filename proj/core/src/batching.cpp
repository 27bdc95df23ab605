#include "rewardforge/batching.hpp"

#include <numeric>
#include <stdexcept>

#include "rewardforge/rng.hpp"
#include "rewardforge/tokenizer.hpp"

namespace rewardforge::data {

BatchStream::BatchStream(std::vector<std::string> documents, int context_len,
                         int batch_size, std::uint64_t seed)
    : documents_(std::move(documents)),
      context_len_(context_len),
      batch_size_(batch_size),
      seed_(seed) {
  if (context_len_ < 2) throw std::invalid_argument("context_len must be >= 2");
  if (batch_size_ < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (documents_.empty()) throw std::invalid_argument("empty corpus");

  std::int64_t total_tokens = 0;
  for (const std::string& doc : documents_) {
    if (doc.empty()) throw std::invalid_argument("empty document in corpus");
    total_tokens += static_cast<std::int64_t>(doc.size());
  }
  stream_len_ =
      total_tokens + static_cast<std::int64_t>(documents_.size()) - 1;
  windows_per_epoch_ = (stream_len_ - 1 + context_len_ - 1) / context_len_;
}

std::int64_t BatchStream::batches_per_epoch() const {
  return (windows_per_epoch_ + batch_size_ - 1) / batch_size_;
}

std::int64_t BatchStream::supervised_pairs_per_epoch() const {
  std::int64_t total = 0;
  for (const std::string& doc : documents_) {
    total += static_cast<std::int64_t>(doc.size());
  }
  return total - static_cast<std::int64_t>(documents_.size());
}

std::vector<std::int32_t> BatchStream::epoch_stream(std::int64_t epoch) const {
  std::vector<std::int32_t> order(documents_.size());
  std::iota(order.begin(), order.end(), 0);
  RngState rng(derive_seed(seed_, "epoch-" + std::to_string(epoch)));
  for (size_t i = order.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(order[i - 1], order[j]);
  }

  std::vector<std::int32_t> stream;
  stream.reserve(static_cast<size_t>(stream_len_));
  for (size_t d = 0; d < order.size(); ++d) {
    if (d > 0) stream.push_back(tok::kSep);
    for (std::int32_t id : encode(documents_[static_cast<size_t>(order[d])])) {
      stream.push_back(id);
    }
  }
  return stream;
}

Batch BatchStream::batch_at(std::int64_t step) const {
  if (step < 0) throw std::invalid_argument("step must be >= 0");
  const std::int64_t bpe = batches_per_epoch();
  const std::int64_t epoch = step / bpe;
  const std::int64_t batch_in_epoch = step % bpe;

  if (epoch != cached_epoch_) {
    cached_stream_ = epoch_stream(epoch);
    cached_epoch_ = epoch;
  }
  const std::vector<std::int32_t>& stream = cached_stream_;

  Batch batch;
  batch.batch_size = batch_size_;
  batch.context_len = context_len_;
  const size_t cells = static_cast<size_t>(batch_size_) * context_len_;
  batch.inputs.assign(cells, tok::kPad);
  batch.targets.assign(cells, tok::kPad);
  batch.mask.assign(cells, 0);

  for (int row = 0; row < batch_size_; ++row) {
    const std::int64_t window = batch_in_epoch * batch_size_ + row;
    if (window >= windows_per_epoch_) break;  // trailing rows stay PAD+masked
    const std::int64_t start = window * context_len_;
    for (int t = 0; t < context_len_; ++t) {
      const std::int64_t pos = start + t;
      if (pos + 1 >= static_cast<std::int64_t>(stream.size())) break;
      const std::int32_t in = stream[static_cast<size_t>(pos)];
      const std::int32_t target = stream[static_cast<size_t>(pos) + 1];
      const size_t cell = static_cast<size_t>(row) * context_len_ +
                          static_cast<size_t>(t);
      batch.inputs[cell] = in;
      batch.targets[cell] = target;
      batch.mask[cell] =
          (in != tok::kSep && in != tok::kPad && target != tok::kSep &&
           target != tok::kPad)
              ? 1
              : 0;
    }
  }
  return batch;
}

}  // namespace rewardforge::data
