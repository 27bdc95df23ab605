#include "rewardforge/model.hpp"

#include <cmath>
#include <stdexcept>

#include "rewardforge/rng.hpp"

namespace rewardforge::model {

namespace {

constexpr double kNormEps = 1e-6;
constexpr double kRopeBase = 1e4;

// y (N,O) = x (N,I) * W^T, W stored row-major (O,I) in float32.
void matmul(std::span<double> y, std::span<const double> x,
            std::span<const float> w, int n, int o_dim, int i_dim) {
  for (int n_i = 0; n_i < n; ++n_i) {
    const double* xr = &x[static_cast<size_t>(n_i) * i_dim];
    double* yr = &y[static_cast<size_t>(n_i) * o_dim];
    for (int o = 0; o < o_dim; ++o) {
      const float* wr = &w[static_cast<size_t>(o) * i_dim];
      double acc = 0.0;
      for (int i = 0; i < i_dim; ++i) acc += xr[i] * static_cast<double>(wr[i]);
      yr[o] = acc;
    }
  }
}

// dW (O,I) += dy^T (N,O) * x (N,I)
void matmul_dw(std::span<double> dw, std::span<const double> dy,
               std::span<const double> x, int n, int o_dim, int i_dim) {
  for (int n_i = 0; n_i < n; ++n_i) {
    const double* xr = &x[static_cast<size_t>(n_i) * i_dim];
    const double* dyr = &dy[static_cast<size_t>(n_i) * o_dim];
    for (int o = 0; o < o_dim; ++o) {
      const double c = dyr[o];
      if (c == 0.0) continue;
      double* dwr = &dw[static_cast<size_t>(o) * i_dim];
      for (int i = 0; i < i_dim; ++i) dwr[i] += c * xr[i];
    }
  }
}

// dx (N,I) += dy (N,O) * W (O,I)
void matmul_dx(std::span<double> dx, std::span<const double> dy,
               std::span<const float> w, int n, int o_dim, int i_dim) {
  for (int n_i = 0; n_i < n; ++n_i) {
    const double* dyr = &dy[static_cast<size_t>(n_i) * o_dim];
    double* dxr = &dx[static_cast<size_t>(n_i) * i_dim];
    for (int o = 0; o < o_dim; ++o) {
      const double c = dyr[o];
      if (c == 0.0) continue;
      const float* wr = &w[static_cast<size_t>(o) * i_dim];
      for (int i = 0; i < i_dim; ++i) dxr[i] += c * static_cast<double>(wr[i]);
    }
  }
}

void rmsnorm_forward(std::span<const double> x, std::span<const float> gain,
                     std::span<double> y, std::span<double> inv_rms, int n,
                     int d) {
  for (int r = 0; r < n; ++r) {
    const double* xr = &x[static_cast<size_t>(r) * d];
    double* yr = &y[static_cast<size_t>(r) * d];
    double ms = 0.0;
    for (int i = 0; i < d; ++i) ms += xr[i] * xr[i];
    const double inv = 1.0 / std::sqrt(ms / d + kNormEps);
    inv_rms[r] = inv;
    for (int i = 0; i < d; ++i) yr[i] = static_cast<double>(gain[i]) * xr[i] * inv;
  }
}

void rmsnorm_backward(std::span<const double> x, std::span<const float> gain,
                      std::span<const double> inv_rms,
                      std::span<const double> dy, std::span<double> dx,
                      std::span<double> dgain, int n, int d) {
  for (int r = 0; r < n; ++r) {
    const double* xr = &x[static_cast<size_t>(r) * d];
    const double* dyr = &dy[static_cast<size_t>(r) * d];
    double* dxr = &dx[static_cast<size_t>(r) * d];
    const double inv = inv_rms[r];
    double dot = 0.0;
    for (int i = 0; i < d; ++i) {
      dot += dyr[i] * static_cast<double>(gain[i]) * xr[i];
      dgain[i] += dyr[i] * xr[i] * inv;
    }
    const double scale = dot * inv * inv * inv / d;
    for (int i = 0; i < d; ++i) {
      dxr[i] += static_cast<double>(gain[i]) * dyr[i] * inv - xr[i] * scale;
    }
  }
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_grad(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

// In-place rotary rotation of q or k rows; direction -1 applies the inverse
// rotation (used in backward).
void apply_rope(std::span<double> qk, int batch, int seq, int n_head,
                int head_dim, double direction) {
  const int d = n_head * head_dim;
  const int half = head_dim / 2;
  for (int b = 0; b < batch; ++b) {
    for (int s = 0; s < seq; ++s) {
      double* row = &qk[(static_cast<size_t>(b) * seq + s) * d];
      for (int h = 0; h < n_head; ++h) {
        double* hr = row + static_cast<size_t>(h) * head_dim;
        for (int i = 0; i < half; ++i) {
          const double theta =
              direction * s *
              std::pow(kRopeBase, -2.0 * i / static_cast<double>(head_dim));
          const double c = std::cos(theta);
          const double sn = std::sin(theta);
          const double x0 = hr[2 * i];
          const double x1 = hr[2 * i + 1];
          hr[2 * i] = x0 * c - x1 * sn;
          hr[2 * i + 1] = x0 * sn + x1 * c;
        }
      }
    }
  }
}

Tensor make_tensor(std::string name, int rows, int cols) {
  Tensor t;
  t.name = std::move(name);
  t.rows = rows;
  t.cols = cols;
  t.w.assign(static_cast<size_t>(rows) * cols, 0.0f);
  t.m.assign(t.w.size(), 0.0);
  t.v.assign(t.w.size(), 0.0);
  return t;
}

void fill_gaussian(Tensor& t, RngState& rng, double std_dev) {
  for (float& x : t.w) x = static_cast<float>(rng.next_gaussian() * std_dev);
}

// Fixed parameter layout; lookup by name stays available for tools/tests.
struct ParamIndex {
  int tok_emb = 0;
  int pos_emb = 1;
  int layer_base(int l) const { return 2 + l * 8; }
  int attn_norm(int l) const { return layer_base(l) + 0; }
  int wq(int l) const { return layer_base(l) + 1; }
  int wk(int l) const { return layer_base(l) + 2; }
  int wv(int l) const { return layer_base(l) + 3; }
  int wo(int l) const { return layer_base(l) + 4; }
  int mlp_norm(int l) const { return layer_base(l) + 5; }
  int w_up(int l) const { return layer_base(l) + 6; }
  int w_down(int l) const { return layer_base(l) + 7; }
  int final_norm(int n_layer) const { return 2 + n_layer * 8; }
  int head(int n_layer) const { return final_norm(n_layer) + 1; }
};

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size < 2) throw std::invalid_argument("vocab_size must be >= 2");
  if (context_len < 2) throw std::invalid_argument("context_len must be >= 2");
  if (n_layer < 1 || d_model < 1 || n_head < 1 || d_ff < 1) {
    throw std::invalid_argument("model dims must be >= 1");
  }
  if (d_model % n_head != 0) {
    throw std::invalid_argument("d_model must be divisible by n_head");
  }
  if (rope && head_dim() % 2 != 0) {
    throw std::invalid_argument("rope requires an even head dim");
  }
}

Tensor& ModelState::param(std::string_view name) {
  for (Tensor& t : params) {
    if (t.name == name) return t;
  }
  throw std::invalid_argument("unknown parameter: " + std::string(name));
}

const Tensor& ModelState::param(std::string_view name) const {
  return const_cast<ModelState*>(this)->param(name);
}

std::int64_t ModelState::num_params() const {
  std::int64_t n = 0;
  for (const Tensor& t : params) n += static_cast<std::int64_t>(t.size());
  return n;
}

ModelState init_model(const ModelConfig& cfg) {
  cfg.validate();
  ModelState state;
  state.cfg = cfg;
  const int d = cfg.d_model;

  state.params.push_back(make_tensor("tok_emb", cfg.vocab_size, d));
  state.params.push_back(make_tensor("pos_emb", cfg.context_len, d));
  for (int l = 0; l < cfg.n_layer; ++l) {
    const std::string p = "l" + std::to_string(l) + ".";
    state.params.push_back(make_tensor(p + "attn_norm", d, 1));
    state.params.push_back(make_tensor(p + "wq", d, d));
    state.params.push_back(make_tensor(p + "wk", d, d));
    state.params.push_back(make_tensor(p + "wv", d, d));
    state.params.push_back(make_tensor(p + "wo", d, d));
    state.params.push_back(make_tensor(p + "mlp_norm", d, 1));
    state.params.push_back(make_tensor(p + "w_up", cfg.d_ff, d));
    state.params.push_back(make_tensor(p + "w_down", d, cfg.d_ff));
  }
  state.params.push_back(make_tensor("final_norm", d, 1));
  if (!cfg.tie_output) {
    state.params.push_back(make_tensor("head", cfg.vocab_size, d));
  }

  RngState rng(derive_seed(cfg.seed, "model-init"));
  for (Tensor& t : state.params) {
    if (t.is_vector()) {
      for (float& x : t.w) x = 1.0f;  // norm gains
    } else if (t.name == "tok_emb" || t.name == "pos_emb") {
      fill_gaussian(t, rng, cfg.embed_init_std);
    } else {
      fill_gaussian(t, rng, 1.0 / std::sqrt(static_cast<double>(t.cols)));
    }
  }
  return state;
}

ForwardResult forward(const ModelState& state,
                      std::span<const std::int32_t> tokens, int batch,
                      int seq) {
  const ModelConfig& cfg = state.cfg;
  if (batch < 1 || seq < 1 || seq > cfg.context_len) {
    throw std::invalid_argument("forward: bad batch/seq shape");
  }
  if (tokens.size() != static_cast<size_t>(batch) * seq) {
    throw std::invalid_argument("forward: token buffer size mismatch");
  }
  for (std::int32_t t : tokens) {
    if (t < 0 || t >= cfg.vocab_size) {
      throw std::invalid_argument("forward: token id out of range");
    }
  }

  const int d = cfg.d_model;
  const int h_dim = cfg.head_dim();
  const int n = batch * seq;
  const ParamIndex ix;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(h_dim));

  ForwardResult res;
  ForwardCache& cache = res.cache;
  cache.batch = batch;
  cache.seq = seq;
  cache.tokens.assign(tokens.begin(), tokens.end());
  cache.layers.resize(cfg.n_layer);

  const std::vector<float>& tok_emb = state.params[ix.tok_emb].w;
  const std::vector<float>& pos_emb = state.params[ix.pos_emb].w;

  cache.embed_out.resize(static_cast<size_t>(n) * d);
  for (int b = 0; b < batch; ++b) {
    for (int s = 0; s < seq; ++s) {
      const std::int32_t tok = tokens[static_cast<size_t>(b) * seq + s];
      double* row = &cache.embed_out[(static_cast<size_t>(b) * seq + s) * d];
      const float* te = &tok_emb[static_cast<size_t>(tok) * d];
      const float* pe = &pos_emb[static_cast<size_t>(s) * d];
      for (int i = 0; i < d; ++i) {
        row[i] = static_cast<double>(te[i]) + static_cast<double>(pe[i]);
      }
    }
  }

  const std::vector<double>* x = &cache.embed_out;
  for (int l = 0; l < cfg.n_layer; ++l) {
    ForwardCache::Layer& lc = cache.layers[l];
    const size_t nd = static_cast<size_t>(n) * d;
    lc.ln1_out.resize(nd);
    lc.inv_rms1.resize(static_cast<size_t>(n));
    rmsnorm_forward(*x, state.params[ix.attn_norm(l)].w, lc.ln1_out,
                    lc.inv_rms1, n, d);

    lc.q.resize(nd);
    lc.k.resize(nd);
    lc.v.resize(nd);
    matmul(lc.q, lc.ln1_out, state.params[ix.wq(l)].w, n, d, d);
    matmul(lc.k, lc.ln1_out, state.params[ix.wk(l)].w, n, d, d);
    matmul(lc.v, lc.ln1_out, state.params[ix.wv(l)].w, n, d, d);
    if (cfg.rope) {
      apply_rope(lc.q, batch, seq, cfg.n_head, h_dim, 1.0);
      apply_rope(lc.k, batch, seq, cfg.n_head, h_dim, 1.0);
    }

    lc.att_probs.assign(
        static_cast<size_t>(batch) * cfg.n_head * seq * seq, 0.0);
    lc.att_ctx.assign(nd, 0.0);
    std::vector<double> scores(static_cast<size_t>(seq));
    for (int b = 0; b < batch; ++b) {
      for (int h = 0; h < cfg.n_head; ++h) {
        const int hoff = h * h_dim;
        for (int s = 0; s < seq; ++s) {
          const double* qr =
              &lc.q[(static_cast<size_t>(b) * seq + s) * d + hoff];
          double smax = -1e300;
          for (int t = 0; t <= s; ++t) {
            const double* kr =
                &lc.k[(static_cast<size_t>(b) * seq + t) * d + hoff];
            double acc = 0.0;
            for (int j = 0; j < h_dim; ++j) acc += qr[j] * kr[j];
            scores[static_cast<size_t>(t)] = acc * att_scale;
            if (scores[static_cast<size_t>(t)] > smax) {
              smax = scores[static_cast<size_t>(t)];
            }
          }
          double denom = 0.0;
          for (int t = 0; t <= s; ++t) {
            scores[static_cast<size_t>(t)] =
                std::exp(scores[static_cast<size_t>(t)] - smax);
            denom += scores[static_cast<size_t>(t)];
          }
          double* prow =
              &lc.att_probs[((static_cast<size_t>(b) * cfg.n_head + h) * seq +
                             s) *
                            seq];
          double* ctx =
              &lc.att_ctx[(static_cast<size_t>(b) * seq + s) * d + hoff];
          for (int t = 0; t <= s; ++t) {
            const double p = scores[static_cast<size_t>(t)] / denom;
            prow[t] = p;
            const double* vr =
                &lc.v[(static_cast<size_t>(b) * seq + t) * d + hoff];
            for (int j = 0; j < h_dim; ++j) ctx[j] += p * vr[j];
          }
        }
      }
    }

    lc.ln2_in.resize(nd);
    {
      std::vector<double> att_out(nd);
      matmul(att_out, lc.att_ctx, state.params[ix.wo(l)].w, n, d, d);
      for (size_t i = 0; i < nd; ++i) lc.ln2_in[i] = (*x)[i] + att_out[i];
    }

    lc.ln2_out.resize(nd);
    lc.inv_rms2.resize(static_cast<size_t>(n));
    rmsnorm_forward(lc.ln2_in, state.params[ix.mlp_norm(l)].w, lc.ln2_out,
                    lc.inv_rms2, n, d);

    const size_t nf = static_cast<size_t>(n) * cfg.d_ff;
    lc.mlp_pre.resize(nf);
    matmul(lc.mlp_pre, lc.ln2_out, state.params[ix.w_up(l)].w, n, cfg.d_ff, d);
    lc.mlp_act.resize(nf);
    for (size_t i = 0; i < nf; ++i) lc.mlp_act[i] = silu(lc.mlp_pre[i]);

    lc.block_out.resize(nd);
    {
      std::vector<double> mlp_out(nd);
      matmul(mlp_out, lc.mlp_act, state.params[ix.w_down(l)].w, n, d, cfg.d_ff);
      for (size_t i = 0; i < nd; ++i) lc.block_out[i] = lc.ln2_in[i] + mlp_out[i];
    }
    x = &lc.block_out;
  }

  cache.final_norm_out.resize(static_cast<size_t>(n) * d);
  cache.inv_rms_final.resize(static_cast<size_t>(n));
  rmsnorm_forward(*x, state.params[ix.final_norm(cfg.n_layer)].w,
                  cache.final_norm_out, cache.inv_rms_final, n, d);

  const Tensor& head = cfg.tie_output ? state.params[ix.tok_emb]
                                      : state.params[ix.head(cfg.n_layer)];
  res.logits.resize(static_cast<size_t>(n) * cfg.vocab_size);
  matmul(res.logits, cache.final_norm_out, head.w, n, cfg.vocab_size, d);
  return res;
}

GradBuffers zero_grads(const ModelState& state) {
  GradBuffers grads(state.params.size());
  for (size_t i = 0; i < state.params.size(); ++i) {
    grads[i].assign(state.params[i].size(), 0.0);
  }
  return grads;
}

GradBuffers backward(const ModelState& state, const ForwardCache& cache,
                     std::span<const double> dlogits) {
  const ModelConfig& cfg = state.cfg;
  const int batch = cache.batch;
  const int seq = cache.seq;
  const int d = cfg.d_model;
  const int h_dim = cfg.head_dim();
  const int n = batch * seq;
  const size_t nd = static_cast<size_t>(n) * d;
  const ParamIndex ix;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(h_dim));

  if (dlogits.size() != static_cast<size_t>(n) * cfg.vocab_size) {
    throw std::invalid_argument("backward: dlogits shape mismatch");
  }

  GradBuffers grads = zero_grads(state);

  const int head_ix =
      cfg.tie_output ? ix.tok_emb : ix.head(cfg.n_layer);
  const Tensor& head = state.params[head_ix];

  // Head: logits = final_norm_out * W_head^T
  matmul_dw(grads[static_cast<size_t>(head_ix)], dlogits, cache.final_norm_out,
            n, cfg.vocab_size, d);
  std::vector<double> dx(nd, 0.0);
  matmul_dx(dx, dlogits, head.w, n, cfg.vocab_size, d);

  // Final norm
  const std::vector<double>& last_x = cfg.n_layer > 0
                                          ? cache.layers.back().block_out
                                          : cache.embed_out;
  {
    std::vector<double> dx_in(nd, 0.0);
    rmsnorm_backward(last_x, state.params[ix.final_norm(cfg.n_layer)].w,
                     cache.inv_rms_final, dx,
                     dx_in, grads[static_cast<size_t>(ix.final_norm(cfg.n_layer))],
                     n, d);
    dx.swap(dx_in);
  }

  std::vector<double> scratch_dn(nd);
  for (int l = cfg.n_layer - 1; l >= 0; --l) {
    const ForwardCache::Layer& lc = cache.layers[l];
    const std::vector<double>& x_in =
        l == 0 ? cache.embed_out : cache.layers[static_cast<size_t>(l) - 1].block_out;

    // MLP: block_out = ln2_in + W_down(silu(W_up(ln2_out)))
    const size_t nf = static_cast<size_t>(n) * cfg.d_ff;
    std::vector<double> dact(nf, 0.0);
    matmul_dx(dact, dx, state.params[ix.w_down(l)].w, n, d, cfg.d_ff);
    matmul_dw(grads[static_cast<size_t>(ix.w_down(l))], dx, lc.mlp_act, n, d,
              cfg.d_ff);
    for (size_t i = 0; i < nf; ++i) dact[i] *= silu_grad(lc.mlp_pre[i]);
    matmul_dw(grads[static_cast<size_t>(ix.w_up(l))], dact, lc.ln2_out, n,
              cfg.d_ff, d);
    std::fill(scratch_dn.begin(), scratch_dn.end(), 0.0);
    matmul_dx(scratch_dn, dact, state.params[ix.w_up(l)].w, n, cfg.d_ff, d);

    // dx becomes the gradient at ln2_in (residual + norm path)
    rmsnorm_backward(lc.ln2_in, state.params[ix.mlp_norm(l)].w, lc.inv_rms2,
                     scratch_dn, dx,
                     grads[static_cast<size_t>(ix.mlp_norm(l))], n, d);

    // Attention: ln2_in = x_in + Wo(ctx)
    std::vector<double> dctx(nd, 0.0);
    matmul_dx(dctx, dx, state.params[ix.wo(l)].w, n, d, d);
    matmul_dw(grads[static_cast<size_t>(ix.wo(l))], dx, lc.att_ctx, n, d, d);

    std::vector<double> dq(nd, 0.0), dk(nd, 0.0), dv(nd, 0.0);
    std::vector<double> dprobs(static_cast<size_t>(seq));
    for (int b = 0; b < batch; ++b) {
      for (int h = 0; h < cfg.n_head; ++h) {
        const int hoff = h * h_dim;
        for (int s = 0; s < seq; ++s) {
          const double* prow =
              &lc.att_probs[((static_cast<size_t>(b) * cfg.n_head + h) * seq +
                             s) *
                            seq];
          const double* dctx_r =
              &dctx[(static_cast<size_t>(b) * seq + s) * d + hoff];
          double dot = 0.0;
          for (int t = 0; t <= s; ++t) {
            const double* vr =
                &lc.v[(static_cast<size_t>(b) * seq + t) * d + hoff];
            double acc = 0.0;
            for (int j = 0; j < h_dim; ++j) acc += dctx_r[j] * vr[j];
            dprobs[static_cast<size_t>(t)] = acc;
            dot += acc * prow[t];
            double* dvr = &dv[(static_cast<size_t>(b) * seq + t) * d + hoff];
            for (int j = 0; j < h_dim; ++j) dvr[j] += prow[t] * dctx_r[j];
          }
          const double* qr =
              &lc.q[(static_cast<size_t>(b) * seq + s) * d + hoff];
          double* dqr = &dq[(static_cast<size_t>(b) * seq + s) * d + hoff];
          for (int t = 0; t <= s; ++t) {
            const double dscore =
                prow[t] * (dprobs[static_cast<size_t>(t)] - dot) * att_scale;
            if (dscore == 0.0) continue;
            const double* kr =
                &lc.k[(static_cast<size_t>(b) * seq + t) * d + hoff];
            double* dkr = &dk[(static_cast<size_t>(b) * seq + t) * d + hoff];
            for (int j = 0; j < h_dim; ++j) {
              dqr[j] += dscore * kr[j];
              dkr[j] += dscore * qr[j];
            }
          }
        }
      }
    }
    if (cfg.rope) {
      apply_rope(dq, batch, seq, cfg.n_head, h_dim, -1.0);
      apply_rope(dk, batch, seq, cfg.n_head, h_dim, -1.0);
    }

    matmul_dw(grads[static_cast<size_t>(ix.wq(l))], dq, lc.ln1_out, n, d, d);
    matmul_dw(grads[static_cast<size_t>(ix.wk(l))], dk, lc.ln1_out, n, d, d);
    matmul_dw(grads[static_cast<size_t>(ix.wv(l))], dv, lc.ln1_out, n, d, d);
    std::fill(scratch_dn.begin(), scratch_dn.end(), 0.0);
    matmul_dx(scratch_dn, dq, state.params[ix.wq(l)].w, n, d, d);
    matmul_dx(scratch_dn, dk, state.params[ix.wk(l)].w, n, d, d);
    matmul_dx(scratch_dn, dv, state.params[ix.wv(l)].w, n, d, d);

    rmsnorm_backward(x_in, state.params[ix.attn_norm(l)].w, lc.inv_rms1,
                     scratch_dn, dx,
                     grads[static_cast<size_t>(ix.attn_norm(l))], n, d);
  }

  // Embeddings
  std::vector<double>& d_tok = grads[static_cast<size_t>(ix.tok_emb)];
  std::vector<double>& d_pos = grads[static_cast<size_t>(ix.pos_emb)];
  for (int b = 0; b < batch; ++b) {
    for (int s = 0; s < seq; ++s) {
      const std::int32_t tok = cache.tokens[static_cast<size_t>(b) * seq + s];
      const double* row = &dx[(static_cast<size_t>(b) * seq + s) * d];
      double* te = &d_tok[static_cast<size_t>(tok) * d];
      double* pe = &d_pos[static_cast<size_t>(s) * d];
      for (int i = 0; i < d; ++i) {
        te[i] += row[i];
        pe[i] += row[i];
      }
    }
  }
  return grads;
}

StepOutcome clip_and_step(ModelState& state, const GradBuffers& grads,
                          const LrSchedule& schedule,
                          const OptimConfig& optim) {
  if (grads.size() != state.params.size()) {
    throw std::invalid_argument("clip_and_step: grad buffer count mismatch");
  }
  StepOutcome out;

  double sq_sum = 0.0;
  for (size_t p = 0; p < grads.size(); ++p) {
    if (grads[p].size() != state.params[p].size()) {
      throw std::invalid_argument("clip_and_step: grad buffer size mismatch");
    }
    for (double g : grads[p]) {
      if (!std::isfinite(g)) return out;  // skip step, caller sees applied=false
      sq_sum += g * g;
    }
  }
  out.grad_norm = std::sqrt(sq_sum);

  const double scale =
      (optim.grad_clip > 0.0 && out.grad_norm > optim.grad_clip)
          ? optim.grad_clip / out.grad_norm
          : 1.0;

  const std::int64_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(optim.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(optim.beta2, static_cast<double>(t));
  const double lr = schedule.lr_at(t);

  for (size_t p = 0; p < state.params.size(); ++p) {
    Tensor& tensor = state.params[p];
    const bool decay =
        optim.weight_decay != 0.0 && (optim.decay_vectors || !tensor.is_vector());
    const double wd = decay ? optim.weight_decay : 0.0;
    for (size_t i = 0; i < tensor.size(); ++i) {
      const double g = grads[p][i] * scale;
      tensor.m[i] = optim.beta1 * tensor.m[i] + (1.0 - optim.beta1) * g;
      tensor.v[i] = optim.beta2 * tensor.v[i] + (1.0 - optim.beta2) * g * g;
      const double m_hat = tensor.m[i] / bc1;
      const double v_hat = tensor.v[i] / bc2;
      const double w = static_cast<double>(tensor.w[i]);
      tensor.w[i] = static_cast<float>(
          w - lr * (m_hat / (std::sqrt(v_hat) + optim.eps) + wd * w));
    }
  }
  state.step = t;
  out.applied = true;
  out.lr = lr;
  return out;
}

std::vector<double> last_logits(const ModelState& state,
                                std::span<const std::int32_t> tokens) {
  const int seq = static_cast<int>(tokens.size());
  ForwardResult res = forward(state, tokens, 1, seq);
  const int v = state.cfg.vocab_size;
  return std::vector<double>(
      res.logits.begin() + static_cast<size_t>(seq - 1) * v,
      res.logits.begin() + static_cast<size_t>(seq) * v);
}

}  // namespace rewardforge::model
