#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rewardforge/schedule.hpp"

namespace rewardforge::model {

struct ModelConfig {
  int vocab_size = 260;
  int context_len = 48;
  int n_layer = 1;
  int d_model = 32;
  int n_head = 2;
  int d_ff = 64;
  bool tie_output = true;
  bool rope = false;  // rotary position encoding on q/k, off by default
  std::uint64_t seed = 1;
  double embed_init_std = 0.02;

  int head_dim() const { return d_model / n_head; }
  void validate() const;  // throws std::invalid_argument
};

// One named parameter tensor: float32 storage with float64 Adam moments.
// All forward/backward arithmetic is done in double; only the stored
// parameters are single precision.
struct Tensor {
  std::string name;
  int rows = 0;
  int cols = 1;
  std::vector<float> w;
  std::vector<double> m;
  std::vector<double> v;

  size_t size() const { return w.size(); }
  bool is_vector() const { return cols == 1; }
};

struct ModelState {
  ModelConfig cfg;
  std::vector<Tensor> params;
  std::int64_t step = 0;

  Tensor& param(std::string_view name);
  const Tensor& param(std::string_view name) const;
  std::int64_t num_params() const;
};

// Deterministic init: embeddings N(0, embed_init_std), linear layers
// N(0, 1/sqrt(fan_in)), norm gains 1.
ModelState init_model(const ModelConfig& cfg);

// Activation cache from one forward pass, consumed by backward().
struct ForwardCache {
  int batch = 0;
  int seq = 0;
  std::vector<std::int32_t> tokens;
  std::vector<double> embed_out;  // (B,S,d) input to the first block
  struct Layer {
    std::vector<double> ln1_out;
    std::vector<double> inv_rms1;  // (B,S)
    std::vector<double> q, k, v;   // (B,S,d), post-rotation when rope is on
    std::vector<double> att_probs; // (B,H,S,S)
    std::vector<double> att_ctx;   // (B,S,d)
    std::vector<double> ln2_in;    // (B,S,d) residual after attention
    std::vector<double> ln2_out;
    std::vector<double> inv_rms2;
    std::vector<double> mlp_pre;   // (B,S,ff)
    std::vector<double> mlp_act;   // (B,S,ff)
    std::vector<double> block_out; // (B,S,d) residual after the MLP
  };
  std::vector<Layer> layers;
  std::vector<double> final_norm_out;  // (B,S,d)
  std::vector<double> inv_rms_final;   // (B,S)
};

struct ForwardResult {
  std::vector<double> logits;  // (B,S,V) flattened
  ForwardCache cache;
};

// Causal forward pass over a (batch x seq) block of token ids.
ForwardResult forward(const ModelState& state,
                      std::span<const std::int32_t> tokens, int batch,
                      int seq);

// Gradient buffers aligned index-for-index with ModelState::params.
using GradBuffers = std::vector<std::vector<double>>;

GradBuffers zero_grads(const ModelState& state);

// Exact gradients of <dlogits, logits> with respect to every parameter.
// The cache must come from a forward() on the same state.
GradBuffers backward(const ModelState& state, const ForwardCache& cache,
                     std::span<const double> dlogits);

struct StepOutcome {
  bool applied = false;   // false when a non-finite gradient skipped the step
  double grad_norm = 0.0; // pre-clip global norm
  double lr = 0.0;
};

// Global-norm clip followed by one AdamW update with decoupled weight decay.
// Increments state.step and draws the learning rate from the schedule.
StepOutcome clip_and_step(ModelState& state, const GradBuffers& grads,
                          const LrSchedule& schedule, const OptimConfig& optim);

// Convenience for sampling loops: logits of the last position of a single
// sequence, as a double row.
std::vector<double> last_logits(const ModelState& state,
                                std::span<const std::int32_t> tokens);

}  // namespace rewardforge::model
