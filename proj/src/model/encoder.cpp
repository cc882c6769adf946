#include "ogb/model/encoder.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "ogb/errors.hpp"
#include "ogb/util/rng.hpp"

namespace ogb::model {

using nlohmann::json;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Eigen::VectorXd;

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace {

constexpr double kInitSigma = 0.02;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

// Enumerates every tensor of the architecture in construction order; the
// analytic inventory and the live model share this single definition.
template <typename Fn>
void for_each_tensor(const EncoderArch& arch, std::size_t vocab_size, Fn&& fn) {
  const auto H = static_cast<std::size_t>(arch.hidden_size);
  const auto I = static_cast<std::size_t>(arch.intermediate_size);
  const auto P = static_cast<std::size_t>(arch.max_positions);
  const auto V = vocab_size;

  fn("embeddings.word_embeddings.weight", ParamClass::WordEmbedding,
     std::vector<std::size_t>{V, H});
  fn("embeddings.position_embeddings.weight", ParamClass::PositionalEmbedding,
     std::vector<std::size_t>{P, H});
  if (arch.type_vocab_size > 0) {
    fn("embeddings.token_type_embeddings.weight", ParamClass::Other,
       std::vector<std::size_t>{static_cast<std::size_t>(arch.type_vocab_size), H});
  }
  fn("embeddings.layer_norm.gain", ParamClass::LayerNorm,
     std::vector<std::size_t>{H});
  fn("embeddings.layer_norm.bias", ParamClass::LayerNorm,
     std::vector<std::size_t>{H});

  for (int l = 0; l < arch.num_layers; ++l) {
    const std::string prefix = "encoder.layer." + std::to_string(l) + ".";
    for (const char* proj : {"query", "key", "value"}) {
      fn(prefix + "attention." + proj + ".weight", ParamClass::Other,
         std::vector<std::size_t>{H, H});
      fn(prefix + "attention." + proj + ".bias", ParamClass::Other,
         std::vector<std::size_t>{H});
    }
    fn(prefix + "attention.output.weight", ParamClass::Other,
       std::vector<std::size_t>{H, H});
    fn(prefix + "attention.output.bias", ParamClass::Other,
       std::vector<std::size_t>{H});
    fn(prefix + "attention.layer_norm.gain", ParamClass::LayerNorm,
       std::vector<std::size_t>{H});
    fn(prefix + "attention.layer_norm.bias", ParamClass::LayerNorm,
       std::vector<std::size_t>{H});
    fn(prefix + "ffn.intermediate.weight", ParamClass::Other,
       std::vector<std::size_t>{H, I});
    fn(prefix + "ffn.intermediate.bias", ParamClass::Other,
       std::vector<std::size_t>{I});
    fn(prefix + "ffn.output.weight", ParamClass::Other,
       std::vector<std::size_t>{I, H});
    fn(prefix + "ffn.output.bias", ParamClass::Other,
       std::vector<std::size_t>{H});
    fn(prefix + "ffn.layer_norm.gain", ParamClass::LayerNorm,
       std::vector<std::size_t>{H});
    fn(prefix + "ffn.layer_norm.bias", ParamClass::LayerNorm,
       std::vector<std::size_t>{H});
  }

  fn("head.transform.weight", ParamClass::Other, std::vector<std::size_t>{H, H});
  fn("head.transform.bias", ParamClass::Other, std::vector<std::size_t>{H});
  fn("head.layer_norm.gain", ParamClass::LayerNorm, std::vector<std::size_t>{H});
  fn("head.layer_norm.bias", ParamClass::LayerNorm, std::vector<std::size_t>{H});
  // decoder weight is tied to the word embeddings; only its bias is a tensor
  fn("head.decoder.bias", ParamClass::Other, std::vector<std::size_t>{V});
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

struct LayerNormCache {
  RowMat xhat;     // normalized input
  VectorXd inv_std;
};

// y = gain (.) xhat + bias, row-wise statistics.
RowMat layer_norm_forward(const RowMat& x, const VectorXd& gain,
                          const VectorXd& bias, double eps,
                          LayerNormCache& cache) {
  const auto rows = x.rows();
  cache.xhat.resize(rows, x.cols());
  cache.inv_std.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + eps);
    cache.inv_std(r) = inv;
    cache.xhat.row(r) = (x.row(r).array() - mean) * inv;
  }
  RowMat y = cache.xhat;
  y.array().rowwise() *= gain.transpose().array();
  y.array().rowwise() += bias.transpose().array();
  return y;
}

RowMat layer_norm_backward(const RowMat& dy, const LayerNormCache& cache,
                           const VectorXd& gain, VectorXd& dgain,
                           VectorXd& dbias) {
  const auto rows = dy.rows();
  const auto cols = dy.cols();
  RowMat dx(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    dgain.array() += (dy.row(r).array() * cache.xhat.row(r).array()).transpose();
    dbias.array() += dy.row(r).array().transpose();
    const Eigen::ArrayXd dxhat = dy.row(r).array().transpose() * gain.array();
    const double m1 = dxhat.mean();
    const double m2 = (dxhat * cache.xhat.row(r).array().transpose()).mean();
    dx.row(r) = (cache.inv_std(r) *
                 (dxhat - m1 - cache.xhat.row(r).array().transpose() * m2))
                    .transpose();
  }
  return dx;
}

void softmax_rows_inplace(RowMat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp();
    m.row(r) /= m.row(r).sum();
  }
}

}  // namespace

std::vector<ParamInfo> encoder_inventory(const EncoderArch& arch,
                                         std::size_t vocab_size) {
  std::vector<ParamInfo> inv;
  for_each_tensor(arch, vocab_size,
                  [&](const std::string& name, ParamClass cls,
                      const std::vector<std::size_t>& shape) {
                    inv.push_back(ParamInfo{name, cls, element_count(shape)});
                  });
  return inv;
}

EncoderArch muril_base_arch() {
  EncoderArch arch;
  arch.hidden_size = 768;
  arch.num_layers = 12;
  arch.num_heads = 12;
  arch.intermediate_size = 3072;
  arch.max_positions = 512;
  arch.type_vocab_size = 2;
  return arch;
}

struct TinyEncoder::Workspace {
  std::vector<int> ids;
  RowMat x0;  // embedding sum, pre-norm
  LayerNormCache emb_ln;
  RowMat x_in;  // encoder input

  struct Layer {
    RowMat x;  // layer input
    RowMat q, k, v;
    std::vector<RowMat> attn;  // per-head probabilities
    RowMat ctx;
    RowMat r1;
    LayerNormCache ln1;
    RowMat x1;
    RowMat ffn_pre;
    RowMat ffn_act;
    RowMat r2;
    LayerNormCache ln2;
    RowMat x2;
  };
  std::vector<Layer> layers;

  const RowMat& final_hidden() const {
    return layers.empty() ? x_in : layers.back().x2;
  }
};

TinyEncoder::TinyEncoder(EncoderArch arch, Vocabulary vocab,
                         std::string model_id)
    : arch_(arch), tokenizer_(std::move(vocab)), model_id_(std::move(model_id)) {
  if (arch_.hidden_size <= 0 || arch_.num_layers < 0 || arch_.num_heads <= 0 ||
      arch_.intermediate_size <= 0 || arch_.max_positions <= 0) {
    raise(ErrorKind::BackendFailure, "invalid encoder architecture");
  }
  if (arch_.hidden_size % arch_.num_heads != 0) {
    raise(ErrorKind::BackendFailure,
          "hidden_size must be divisible by num_heads");
  }
  build_tensors();
}

void TinyEncoder::build_tensors() {
  for_each_tensor(arch_, tokenizer_.vocab().size(),
                  [&](const std::string& name, ParamClass cls,
                      const std::vector<std::size_t>& shape) {
                    Tensor t;
                    t.name = name;
                    t.cls = cls;
                    t.shape = shape;
                    t.data.assign(element_count(shape), 0.0);
                    t.grad.assign(element_count(shape), 0.0);
                    tensor_index_.emplace(name, tensors_.size());
                    tensors_.push_back(std::move(t));
                  });
  // norms start as identity
  for (auto& t : tensors_) {
    if (t.cls == ParamClass::LayerNorm && t.name.ends_with(".gain")) {
      std::fill(t.data.begin(), t.data.end(), 1.0);
    }
  }
}

std::unique_ptr<TinyEncoder> TinyEncoder::random_init(const EncoderArch& arch,
                                                      Vocabulary vocab,
                                                      std::string model_id,
                                                      std::uint64_t seed) {
  auto model = std::make_unique<TinyEncoder>(arch, std::move(vocab),
                                             std::move(model_id));
  auto eng = rng::make_engine(seed);
  rng::NormalSource normal(eng);
  for (auto& t : model->tensors_) {
    const bool is_table = t.name.ends_with("embeddings.weight");
    const bool is_weight = t.shape.size() == 2;
    if (t.cls == ParamClass::LayerNorm) continue;  // gain 1 / bias 0 already
    if (is_table || (is_weight && t.name.ends_with(".weight"))) {
      for (auto& x : t.data) x = kInitSigma * normal.next();
    }
    // biases stay zero
  }
  return model;
}

Tensor& TinyEncoder::tensor(const std::string& name) {
  auto it = tensor_index_.find(name);
  if (it == tensor_index_.end()) {
    raise(ErrorKind::BackendFailure, "no tensor named '" + name + "'");
  }
  return tensors_[it->second];
}

const Tensor& TinyEncoder::tensor(const std::string& name) const {
  return const_cast<TinyEncoder*>(this)->tensor(name);
}

namespace {

Eigen::Map<const RowMat> as_matrix(const Tensor& t) {
  return {t.data.data(), static_cast<Eigen::Index>(t.shape[0]),
          static_cast<Eigen::Index>(t.shape[1])};
}

Eigen::Map<RowMat> grad_matrix(Tensor& t) {
  return {t.grad.data(), static_cast<Eigen::Index>(t.shape[0]),
          static_cast<Eigen::Index>(t.shape[1])};
}

Eigen::Map<const VectorXd> as_vector(const Tensor& t) {
  return {t.data.data(), static_cast<Eigen::Index>(t.data.size())};
}

Eigen::Map<VectorXd> grad_vector(Tensor& t) {
  return {t.grad.data(), static_cast<Eigen::Index>(t.grad.size())};
}

}  // namespace

Encoding TinyEncoder::tokenize(std::string_view text) const {
  return tokenizer_.encode(text);
}

void TinyEncoder::encode_sequence(const std::vector<int>& ids, Workspace& ws,
                                  bool keep_cache) const {
  const auto S = static_cast<Eigen::Index>(ids.size());
  const auto H = static_cast<Eigen::Index>(arch_.hidden_size);
  if (ids.empty()) {
    raise(ErrorKind::EmptyTokenization, "cannot encode an empty sequence");
  }
  if (ids.size() > static_cast<std::size_t>(arch_.max_positions)) {
    raise(ErrorKind::BackendFailure,
          "sequence length " + std::to_string(ids.size()) +
              " exceeds max_positions " + std::to_string(arch_.max_positions));
  }
  const auto V = tokenizer_.vocab().size();
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= V) {
      raise(ErrorKind::BackendFailure,
            "token id " + std::to_string(id) + " outside vocabulary");
    }
  }

  ws.ids = ids;
  const auto word = as_matrix(tensor("embeddings.word_embeddings.weight"));
  const auto pos = as_matrix(tensor("embeddings.position_embeddings.weight"));

  ws.x0.resize(S, H);
  for (Eigen::Index s = 0; s < S; ++s) {
    ws.x0.row(s) = word.row(ids[static_cast<std::size_t>(s)]) + pos.row(s);
  }
  if (arch_.type_vocab_size > 0) {
    const auto type = as_matrix(tensor("embeddings.token_type_embeddings.weight"));
    ws.x0.rowwise() += type.row(0);
  }

  ws.x_in = layer_norm_forward(ws.x0, as_vector(tensor("embeddings.layer_norm.gain")),
                               as_vector(tensor("embeddings.layer_norm.bias")),
                               arch_.layer_norm_eps, ws.emb_ln);

  const int heads = arch_.num_heads;
  const Eigen::Index dh = H / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ws.layers.resize(static_cast<std::size_t>(arch_.num_layers));
  RowMat x = ws.x_in;
  for (int l = 0; l < arch_.num_layers; ++l) {
    auto& cache = ws.layers[static_cast<std::size_t>(l)];
    const std::string prefix = "encoder.layer." + std::to_string(l) + ".";
    cache.x = x;

    cache.q = (x * as_matrix(tensor(prefix + "attention.query.weight"))).rowwise() +
              as_vector(tensor(prefix + "attention.query.bias")).transpose();
    cache.k = (x * as_matrix(tensor(prefix + "attention.key.weight"))).rowwise() +
              as_vector(tensor(prefix + "attention.key.bias")).transpose();
    cache.v = (x * as_matrix(tensor(prefix + "attention.value.weight"))).rowwise() +
              as_vector(tensor(prefix + "attention.value.bias")).transpose();

    cache.attn.resize(static_cast<std::size_t>(heads));
    cache.ctx.resize(S, H);
    for (int h = 0; h < heads; ++h) {
      const auto qh = cache.q.middleCols(h * dh, dh);
      const auto kh = cache.k.middleCols(h * dh, dh);
      const auto vh = cache.v.middleCols(h * dh, dh);
      RowMat scores = (qh * kh.transpose()) * scale;
      softmax_rows_inplace(scores);
      cache.ctx.middleCols(h * dh, dh) = scores * vh;
      cache.attn[static_cast<std::size_t>(h)] = std::move(scores);
    }

    const RowMat attn_out =
        (cache.ctx * as_matrix(tensor(prefix + "attention.output.weight"))).rowwise() +
        as_vector(tensor(prefix + "attention.output.bias")).transpose();
    cache.r1 = x + attn_out;
    cache.x1 = layer_norm_forward(
        cache.r1, as_vector(tensor(prefix + "attention.layer_norm.gain")),
        as_vector(tensor(prefix + "attention.layer_norm.bias")),
        arch_.layer_norm_eps, cache.ln1);

    cache.ffn_pre =
        (cache.x1 * as_matrix(tensor(prefix + "ffn.intermediate.weight"))).rowwise() +
        as_vector(tensor(prefix + "ffn.intermediate.bias")).transpose();
    cache.ffn_act = cache.ffn_pre.unaryExpr([](double v) { return gelu(v); });
    const RowMat ffn_out =
        (cache.ffn_act * as_matrix(tensor(prefix + "ffn.output.weight"))).rowwise() +
        as_vector(tensor(prefix + "ffn.output.bias")).transpose();
    cache.r2 = cache.x1 + ffn_out;
    cache.x2 = layer_norm_forward(
        cache.r2, as_vector(tensor(prefix + "ffn.layer_norm.gain")),
        as_vector(tensor(prefix + "ffn.layer_norm.bias")),
        arch_.layer_norm_eps, cache.ln2);

    x = cache.x2;
    if (!keep_cache) {
      // drop what backward would need; forward-only callers keep memory flat
      cache.attn.clear();
    }
  }
}

std::vector<MaskedScores> TinyEncoder::score_masked(
    const std::vector<std::vector<int>>& batch) const {
  const auto H = static_cast<Eigen::Index>(arch_.hidden_size);
  const auto word = as_matrix(tensor("embeddings.word_embeddings.weight"));
  const auto wd = as_matrix(tensor("head.transform.weight"));
  const auto bd = as_vector(tensor("head.transform.bias"));
  const auto dec_bias = as_vector(tensor("head.decoder.bias"));

  std::vector<MaskedScores> out;
  out.reserve(batch.size());
  for (const auto& seq : batch) {
    Workspace ws;
    encode_sequence(seq, ws, /*keep_cache=*/false);

    MaskedScores scores;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (seq[i] == kMaskId) scores.positions.push_back(i);
    }
    if (!scores.positions.empty()) {
      const auto R = static_cast<Eigen::Index>(scores.positions.size());
      RowMat hs(R, H);
      for (Eigen::Index r = 0; r < R; ++r) {
        hs.row(r) = ws.final_hidden().row(
            static_cast<Eigen::Index>(scores.positions[static_cast<std::size_t>(r)]));
      }
      RowMat t_pre = (hs * wd).rowwise() + bd.transpose();
      RowMat t_act = t_pre.unaryExpr([](double v) { return gelu(v); });
      LayerNormCache ln;
      RowMat t = layer_norm_forward(t_act, as_vector(tensor("head.layer_norm.gain")),
                                    as_vector(tensor("head.layer_norm.bias")),
                                    arch_.layer_norm_eps, ln);
      RowMat logits = (t * word.transpose()).rowwise() + dec_bias.transpose();
      softmax_rows_inplace(logits);
      scores.probs.reserve(static_cast<std::size_t>(R));
      for (Eigen::Index r = 0; r < R; ++r) {
        scores.probs.emplace_back(logits.row(r).data(),
                                  logits.row(r).data() + logits.cols());
      }
    }
    out.push_back(std::move(scores));
  }
  return out;
}

std::pair<double, std::size_t> TinyEncoder::mlm_loss_backward(
    const std::vector<int>& input_ids, const std::vector<int>& labels) {
  if (input_ids.size() != labels.size()) {
    raise(ErrorKind::BackendFailure, "labels length mismatch");
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) rows.push_back(i);
  }
  if (rows.empty()) return {0.0, 0};

  Workspace ws;
  encode_sequence(input_ids, ws, /*keep_cache=*/true);

  const auto H = static_cast<Eigen::Index>(arch_.hidden_size);
  const auto S = static_cast<Eigen::Index>(input_ids.size());
  const auto R = static_cast<Eigen::Index>(rows.size());

  auto& word_t = tensor("embeddings.word_embeddings.weight");
  const auto word = as_matrix(word_t);
  auto g_word = grad_matrix(word_t);

  // MLM head forward on labeled rows
  RowMat hs(R, H);
  for (Eigen::Index r = 0; r < R; ++r) {
    hs.row(r) = ws.final_hidden().row(
        static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]));
  }
  auto& wd_t = tensor("head.transform.weight");
  auto& bd_t = tensor("head.transform.bias");
  RowMat t_pre = (hs * as_matrix(wd_t)).rowwise() + as_vector(bd_t).transpose();
  RowMat t_act = t_pre.unaryExpr([](double v) { return gelu(v); });
  LayerNormCache head_ln;
  auto& head_gain_t = tensor("head.layer_norm.gain");
  auto& head_bias_t = tensor("head.layer_norm.bias");
  RowMat t = layer_norm_forward(t_act, as_vector(head_gain_t),
                                as_vector(head_bias_t), arch_.layer_norm_eps,
                                head_ln);
  auto& dec_bias_t = tensor("head.decoder.bias");
  RowMat probs = (t * word.transpose()).rowwise() + as_vector(dec_bias_t).transpose();
  softmax_rows_inplace(probs);

  double loss = 0.0;
  RowMat dlogits = probs;
  for (Eigen::Index r = 0; r < R; ++r) {
    const int label = labels[rows[static_cast<std::size_t>(r)]];
    loss -= std::log(probs(r, label));
    dlogits(r, label) -= 1.0;
  }

  // head backward
  RowMat dt = dlogits * word;
  g_word += dlogits.transpose() * t;
  grad_vector(dec_bias_t) += dlogits.colwise().sum().transpose();

  VectorXd d_head_gain = VectorXd::Zero(H), d_head_bias = VectorXd::Zero(H);
  RowMat dt_act = layer_norm_backward(dt, head_ln, as_vector(head_gain_t),
                                      d_head_gain, d_head_bias);
  grad_vector(head_gain_t) += d_head_gain;
  grad_vector(head_bias_t) += d_head_bias;

  RowMat dt_pre =
      dt_act.array() * t_pre.unaryExpr([](double v) { return gelu_grad(v); }).array();
  grad_matrix(wd_t) += hs.transpose() * dt_pre;
  grad_vector(bd_t) += dt_pre.colwise().sum().transpose();
  RowMat dhs = dt_pre * as_matrix(wd_t).transpose();

  RowMat dx = RowMat::Zero(S, H);
  for (Eigen::Index r = 0; r < R; ++r) {
    dx.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)])) +=
        dhs.row(r);
  }

  // encoder layers, in reverse
  const int heads = arch_.num_heads;
  const Eigen::Index dh = H / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int l = arch_.num_layers - 1; l >= 0; --l) {
    auto& cache = ws.layers[static_cast<std::size_t>(l)];
    const std::string prefix = "encoder.layer." + std::to_string(l) + ".";

    auto& ln2_gain = tensor(prefix + "ffn.layer_norm.gain");
    auto& ln2_bias = tensor(prefix + "ffn.layer_norm.bias");
    VectorXd dg2 = VectorXd::Zero(H), db2v = VectorXd::Zero(H);
    RowMat dr2 = layer_norm_backward(dx, cache.ln2, as_vector(ln2_gain), dg2, db2v);
    grad_vector(ln2_gain) += dg2;
    grad_vector(ln2_bias) += db2v;

    RowMat dx1 = dr2;  // residual branch
    auto& w2_t = tensor(prefix + "ffn.output.weight");
    grad_matrix(w2_t) += cache.ffn_act.transpose() * dr2;
    grad_vector(tensor(prefix + "ffn.output.bias")) +=
        dr2.colwise().sum().transpose();
    RowMat dact = dr2 * as_matrix(w2_t).transpose();
    RowMat dpre = dact.array() *
                  cache.ffn_pre.unaryExpr([](double v) { return gelu_grad(v); }).array();
    auto& w1_t = tensor(prefix + "ffn.intermediate.weight");
    grad_matrix(w1_t) += cache.x1.transpose() * dpre;
    grad_vector(tensor(prefix + "ffn.intermediate.bias")) +=
        dpre.colwise().sum().transpose();
    dx1 += dpre * as_matrix(w1_t).transpose();

    auto& ln1_gain = tensor(prefix + "attention.layer_norm.gain");
    auto& ln1_bias = tensor(prefix + "attention.layer_norm.bias");
    VectorXd dg1 = VectorXd::Zero(H), db1v = VectorXd::Zero(H);
    RowMat dr1 = layer_norm_backward(dx1, cache.ln1, as_vector(ln1_gain), dg1, db1v);
    grad_vector(ln1_gain) += dg1;
    grad_vector(ln1_bias) += db1v;

    dx = dr1;  // residual branch
    auto& wo_t = tensor(prefix + "attention.output.weight");
    grad_matrix(wo_t) += cache.ctx.transpose() * dr1;
    grad_vector(tensor(prefix + "attention.output.bias")) +=
        dr1.colwise().sum().transpose();
    RowMat dctx = dr1 * as_matrix(wo_t).transpose();

    RowMat dq = RowMat::Zero(S, H), dk = RowMat::Zero(S, H), dv = RowMat::Zero(S, H);
    for (int h = 0; h < heads; ++h) {
      const auto qh = cache.q.middleCols(h * dh, dh);
      const auto kh = cache.k.middleCols(h * dh, dh);
      const auto vh = cache.v.middleCols(h * dh, dh);
      const RowMat& attn = cache.attn[static_cast<std::size_t>(h)];
      const auto dctx_h = dctx.middleCols(h * dh, dh);

      RowMat dattn = dctx_h * vh.transpose();
      dv.middleCols(h * dh, dh) = attn.transpose() * dctx_h;
      RowMat dscores(S, S);
      for (Eigen::Index r = 0; r < S; ++r) {
        const double dot = dattn.row(r).dot(attn.row(r));
        dscores.row(r) = attn.row(r).array() * (dattn.row(r).array() - dot);
      }
      dq.middleCols(h * dh, dh) = (dscores * kh) * scale;
      dk.middleCols(h * dh, dh) = (dscores.transpose() * qh) * scale;
    }

    auto& wq_t = tensor(prefix + "attention.query.weight");
    auto& wk_t = tensor(prefix + "attention.key.weight");
    auto& wv_t = tensor(prefix + "attention.value.weight");
    grad_matrix(wq_t) += cache.x.transpose() * dq;
    grad_matrix(wk_t) += cache.x.transpose() * dk;
    grad_matrix(wv_t) += cache.x.transpose() * dv;
    grad_vector(tensor(prefix + "attention.query.bias")) +=
        dq.colwise().sum().transpose();
    grad_vector(tensor(prefix + "attention.key.bias")) +=
        dk.colwise().sum().transpose();
    grad_vector(tensor(prefix + "attention.value.bias")) +=
        dv.colwise().sum().transpose();
    dx += dq * as_matrix(wq_t).transpose() + dk * as_matrix(wk_t).transpose() +
          dv * as_matrix(wv_t).transpose();
  }

  // embedding norm and tables
  auto& emb_gain = tensor("embeddings.layer_norm.gain");
  auto& emb_bias = tensor("embeddings.layer_norm.bias");
  VectorXd dge = VectorXd::Zero(H), dbe = VectorXd::Zero(H);
  RowMat dx0 = layer_norm_backward(dx, ws.emb_ln, as_vector(emb_gain), dge, dbe);
  grad_vector(emb_gain) += dge;
  grad_vector(emb_bias) += dbe;

  auto g_pos = grad_matrix(tensor("embeddings.position_embeddings.weight"));
  for (Eigen::Index s = 0; s < S; ++s) {
    g_word.row(input_ids[static_cast<std::size_t>(s)]) += dx0.row(s);
    g_pos.row(s) += dx0.row(s);
  }
  if (arch_.type_vocab_size > 0) {
    grad_matrix(tensor("embeddings.token_type_embeddings.weight")).row(0) +=
        dx0.colwise().sum();
  }

  return {loss, rows.size()};
}

std::vector<ParamInfo> TinyEncoder::parameter_inventory() const {
  std::vector<ParamInfo> inv;
  inv.reserve(tensors_.size());
  for (const auto& t : tensors_) {
    inv.push_back(ParamInfo{t.name, t.cls, t.count()});
  }
  return inv;
}

std::vector<ParamTensor> TinyEncoder::parameter_tensors() {
  std::vector<ParamTensor> out;
  out.reserve(tensors_.size());
  for (auto& t : tensors_) {
    out.push_back(ParamTensor{t.name, t.cls, t.data.data(), t.grad.data(),
                              t.count()});
  }
  return out;
}

void TinyEncoder::zero_grad() {
  for (auto& t : tensors_) std::fill(t.grad.begin(), t.grad.end(), 0.0);
}

void TinyEncoder::scale_grad(double factor) {
  for (auto& t : tensors_) {
    for (auto& g : t.grad) g *= factor;
  }
}

void TinyEncoder::save(const std::string& path) const {
  json header;
  header["model_id"] = model_id_;
  header["arch"] = {{"hidden_size", arch_.hidden_size},
                    {"num_layers", arch_.num_layers},
                    {"num_heads", arch_.num_heads},
                    {"intermediate_size", arch_.intermediate_size},
                    {"max_positions", arch_.max_positions},
                    {"type_vocab_size", arch_.type_vocab_size},
                    {"layer_norm_eps", arch_.layer_norm_eps}};
  header["vocab"] = tokenizer_.vocab().tokens();
  header["tensors"] = json::array();
  for (const auto& t : tensors_) {
    header["tensors"].push_back({{"name", t.name}, {"count", t.count()}});
  }
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    raise(ErrorKind::FileMissing, "cannot write checkpoint '" + path + "'");
  }
  out.write("OGBCKPT1", 8);
  const std::uint64_t len = header_text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& t : tensors_) {
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!out) {
    raise(ErrorKind::BackendFailure, "short write to checkpoint '" + path + "'");
  }
}

std::unique_ptr<TinyEncoder> TinyEncoder::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(ErrorKind::FileMissing, "checkpoint '" + path + "' does not exist");
  }
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "OGBCKPT1", 8) != 0) {
    raise(ErrorKind::MalformedFile,
          "'" + path + "' is not an encoder checkpoint");
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_text(len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(len));
  if (!in) {
    raise(ErrorKind::MalformedFile, "truncated checkpoint header");
  }

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    raise(ErrorKind::MalformedFile, std::string("checkpoint header: ") + e.what());
  }

  EncoderArch arch;
  const auto& a = header.at("arch");
  arch.hidden_size = a.at("hidden_size").get<int>();
  arch.num_layers = a.at("num_layers").get<int>();
  arch.num_heads = a.at("num_heads").get<int>();
  arch.intermediate_size = a.at("intermediate_size").get<int>();
  arch.max_positions = a.at("max_positions").get<int>();
  arch.type_vocab_size = a.at("type_vocab_size").get<int>();
  arch.layer_norm_eps = a.at("layer_norm_eps").get<double>();

  Vocabulary vocab(header.at("vocab").get<std::vector<std::string>>());
  auto model = std::make_unique<TinyEncoder>(
      arch, std::move(vocab), header.at("model_id").get<std::string>());

  const auto& tensor_list = header.at("tensors");
  if (tensor_list.size() != model->tensors_.size()) {
    raise(ErrorKind::MalformedFile, "checkpoint tensor list does not match architecture");
  }
  for (std::size_t i = 0; i < model->tensors_.size(); ++i) {
    auto& t = model->tensors_[i];
    if (tensor_list[i].at("name").get<std::string>() != t.name ||
        tensor_list[i].at("count").get<std::size_t>() != t.count()) {
      raise(ErrorKind::MalformedFile,
            "checkpoint tensor '" + t.name + "' does not match architecture");
    }
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!in) {
    raise(ErrorKind::MalformedFile, "truncated checkpoint tensor data");
  }
  return model;
}

}  // namespace ogb::model
