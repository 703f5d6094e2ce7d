// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "omvae/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "omvae/error.hpp"
#include "omvae/losses.hpp"

namespace omvae {
namespace {

constexpr std::size_t kAutoencoderLayers = 5;

Matrix ones(std::size_t rows, std::size_t cols) { return Matrix(rows, cols, 1.0); }

void add_into(Matrix& acc, const Matrix& term) {
  auto a = acc.data();
  auto t = term.data();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += t[i];
}

}  // namespace

MultiTaskVae::MultiTaskVae(const MaskPair& masks, std::size_t tasks, std::size_t hidden) {
  if (tasks == 0) throw ValidationError("model needs at least one task");
  if (hidden == 0) throw ValidationError("classifier hidden width must be positive");
  if (masks.site_gene.cols() != masks.gene_pathway.rows()) {
    throw ShapeError(fmt::format("site-gene mask {} and gene-pathway mask {} disagree on genes",
                                 masks.site_gene.shape_string(), masks.gene_pathway.shape_string()));
  }
  dims_ = {masks.site_gene.rows(), masks.site_gene.cols(), masks.gene_pathway.cols(), tasks, hidden};
  layers_.reserve(kAutoencoderLayers + 2 * tasks);
  layers_.emplace_back(masks.site_gene);
  layers_.emplace_back(masks.gene_pathway);
  layers_.emplace_back(masks.gene_pathway);
  layers_.emplace_back(transpose(masks.gene_pathway));
  layers_.emplace_back(transpose(masks.site_gene));
  for (std::size_t t = 0; t < tasks; ++t) {
    layers_.emplace_back(ones(dims_.pathways, hidden));
    layers_.emplace_back(ones(hidden, 1));
  }
}

MultiTaskVae MultiTaskVae::from_layers(std::vector<MaskedLinear> layers) {
  if (layers.size() < kAutoencoderLayers + 2 || (layers.size() - kAutoencoderLayers) % 2 != 0) {
    throw ValidationError(fmt::format("model needs 5 autoencoder layers plus two per head, got {}",
                                      layers.size()));
  }
  MultiTaskVae model;
  model.layers_ = std::move(layers);
  const auto& l = model.layers_;
  model.dims_ = {l[0].in_features(), l[0].out_features(), l[1].out_features(),
                 (l.size() - kAutoencoderLayers) / 2, l[kAutoencoderLayers].out_features()};
  model.check_structure();
  return model;
}

void MultiTaskVae::check_structure() const {
  const auto& l = layers_;
  if (!(l[1].mask() == l[2].mask())) throw ValidationError("mu and logvar heads must share one mask");
  if (l[1].in_features() != dims_.genes) throw ValidationError("gene-pathway layer width mismatch");
  if (!(l[3].mask() == transpose(l[1].mask()))) {
    throw ValidationError("pathway→gene decoder mask must be the transpose of the encoder mask");
  }
  if (!(l[4].mask() == transpose(l[0].mask()))) {
    throw ValidationError("gene→site decoder mask must be the transpose of the encoder mask");
  }
  for (std::size_t t = 0; t < dims_.tasks; ++t) {
    const auto& h = l[kAutoencoderLayers + 2 * t];
    const auto& o = l[kAutoencoderLayers + 2 * t + 1];
    if (h.in_features() != dims_.pathways || h.out_features() != dims_.hidden ||
        o.in_features() != dims_.hidden || o.out_features() != 1) {
      throw ValidationError(fmt::format("classifier {} has inconsistent shapes", t));
    }
  }
}

void MultiTaskVae::initialize(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Rng rng = Rng::derive(seed, {stream::kInit, i});
    layers_[i].init_effective_glorot(rng);
  }
  for (double& b : layers_[2].mutable_bias().data()) b = kLogvarBiasInit;
}

const MaskedLinear& MultiTaskVae::classifier_hidden(std::size_t task) const {
  if (task >= dims_.tasks) throw ValidationError(fmt::format("task {} out of range ({} tasks)", task, dims_.tasks));
  return layers_[kAutoencoderLayers + 2 * task];
}

const MaskedLinear& MultiTaskVae::classifier_output(std::size_t task) const {
  if (task >= dims_.tasks) throw ValidationError(fmt::format("task {} out of range ({} tasks)", task, dims_.tasks));
  return layers_[kAutoencoderLayers + 2 * task + 1];
}

std::string MultiTaskVae::layer_name(std::size_t index) {
  static const char* const kNames[] = {"enc_site_gene", "enc_mu", "enc_logvar", "dec_pathway_gene",
                                       "dec_gene_site"};
  if (index < kAutoencoderLayers) return kNames[index];
  const std::size_t k = index - kAutoencoderLayers;
  return fmt::format("classifier{}.{}", k / 2, k % 2 == 0 ? "hidden" : "output");
}

ParamGroup MultiTaskVae::layer_group(std::size_t index) {
  if (index < 3) return {ParamGroup::Kind::encoder, 0};
  if (index < kAutoencoderLayers) return {ParamGroup::Kind::decoder, 0};
  return {ParamGroup::Kind::classifier, (index - kAutoencoderLayers) / 2};
}

std::vector<std::string> MultiTaskVae::layer_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < layers_.size(); ++i) names.push_back(layer_name(i));
  return names;
}

const MaskedLinear& MultiTaskVae::layer(std::string_view name) const {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layer_name(i) == name) return layers_[i];
  throw ValidationError(fmt::format("unknown layer '{}'", name));
}

MaskedLinear& MultiTaskVae::mutable_layer(std::string_view name) {
  return const_cast<MaskedLinear&>(std::as_const(*this).layer(name));
}

std::vector<ParamRef> MultiTaskVae::parameters() {
  std::vector<ParamRef> params;
  params.reserve(2 * layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    MaskedLinear& layer = layers_[i];
    const std::string name = layer_name(i);
    const ParamGroup group = layer_group(i);
    std::uint64_t* generation = layer.generation_counter();
    params.push_back({name + ".weight", group, &layer.mutable_weight(), &layer.mask(), generation});
    params.push_back({name + ".bias", group, &layer.mutable_bias(), nullptr, generation});
  }
  return params;
}

std::vector<const Matrix*> MultiTaskVae::parameter_values() const {
  std::vector<const Matrix*> values;
  for (const MaskedLinear& layer : layers_) {
    values.push_back(&layer.weight());
    values.push_back(&layer.bias());
  }
  return values;
}

std::vector<std::string> MultiTaskVae::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    names.push_back(layer_name(i) + ".weight");
    names.push_back(layer_name(i) + ".bias");
  }
  return names;
}

Encoding encode(const MultiTaskVae& model, const Matrix& x) {
  Encoding enc;
  enc.gene_activation = sigmoid_forward(model.enc_site_gene().forward(x));
  enc.mu = model.enc_mu().forward(enc.gene_activation);
  enc.logvar = model.enc_logvar().forward(enc.gene_activation);
  for (double& v : enc.logvar.data()) v = std::clamp(v, kLogvarMin, kLogvarMax);
  return enc;
}

Matrix reparameterize(const Matrix& mu, const Matrix& logvar, Rng* rng, LatentMode mode) {
  if (!mu.same_shape(logvar)) {
    throw ShapeError(fmt::format("reparameterize: mu {} vs logvar {}", mu.shape_string(), logvar.shape_string()));
  }
  if (mode == LatentMode::mean) return mu;
  if (rng == nullptr) throw Error("reparameterize: sample mode needs a random stream");
  const Matrix eps = gaussian_sample(*rng, mu.rows(), mu.cols());
  Matrix z(mu.rows(), mu.cols());
  for (std::size_t i = 0; i < z.size(); ++i)
    z.data()[i] = mu.data()[i] + std::exp(0.5 * logvar.data()[i]) * eps.data()[i];
  return z;
}

KlValue kl_divergence(const Matrix& mu, const Matrix& logvar) {
  if (!mu.same_shape(logvar)) {
    throw ShapeError(fmt::format("kl_divergence: mu {} vs logvar {}", mu.shape_string(), logvar.shape_string()));
  }
  if (mu.rows() == 0) throw ShapeError("kl_divergence: empty batch");
  const double batch = static_cast<double>(mu.rows());
  KlValue out{0.0, Matrix(mu.rows(), mu.cols()), Matrix(mu.rows(), mu.cols())};
  long double sum = 0.0L;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double m = mu.data()[i];
    const double lv = logvar.data()[i];
    // -(1 + lv - m² - e^lv) written as m² + (e^lv - 1 - lv); both parts >= 0.
    const double em1 = std::expm1(lv);
    sum += static_cast<long double>(m) * m + (static_cast<long double>(em1) - lv);
    out.grad_mu.data()[i] = m / batch;
    out.grad_logvar.data()[i] = 0.5 * em1 / batch;
  }
  out.value = static_cast<double>(0.5L * sum / batch);
  return out;
}

Matrix decode(const MultiTaskVae& model, const Matrix& z) {
  const Matrix genes = sigmoid_forward(model.dec_pathway_gene().forward(z));
  return sigmoid_forward(model.dec_gene_site().forward(genes));
}

Matrix classify(const MultiTaskVae& model, const Matrix& z, std::size_t task) {
  const Matrix hidden = relu_forward(model.classifier_hidden(task).forward(z));
  return sigmoid_forward(model.classifier_output(task).forward(hidden));
}

void LossWeights::validate(std::size_t tasks) const {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!ok(alpha) || !ok(beta)) {
    throw ValidationError(fmt::format("loss weights must be finite and nonnegative (alpha={}, beta={})", alpha, beta));
  }
  if (gamma.size() != tasks) {
    throw ValidationError(fmt::format("gamma has {} entries for {} tasks", gamma.size(), tasks));
  }
  for (double g : gamma)
    if (!ok(g)) throw ValidationError(fmt::format("gamma entry {} must be finite and nonnegative", g));
}

LossEvaluation composite_loss(const MultiTaskVae& model, const Matrix& x,
                              std::span<const double> labels, std::size_t task,
                              const LossWeights& weights, Rng* rng, LatentMode mode,
                              GradientScope scope) {
  const ModelDims& dims = model.dims();
  if (task >= dims.tasks) throw ValidationError(fmt::format("task {} out of range ({} tasks)", task, dims.tasks));
  if (labels.size() != x.rows()) {
    throw ShapeError(fmt::format("composite_loss: {} labels for a batch of {} rows", labels.size(), x.rows()));
  }
  weights.validate(dims.tasks);

  // Forward, keeping the tapes for backward.
  LinearTape t_site_gene, t_mu, t_logvar, t_path_gene, t_gene_site, t_hidden, t_output;
  const MaskedLinear& hidden_layer = model.classifier_hidden(task);
  const MaskedLinear& output_layer = model.classifier_output(task);

  const Matrix gene = sigmoid_forward(model.enc_site_gene().forward(x, t_site_gene));
  const Matrix mu = model.enc_mu().forward(gene, t_mu);
  const Matrix logvar_raw = model.enc_logvar().forward(gene, t_logvar);
  Matrix logvar = logvar_raw;
  for (double& v : logvar.data()) v = std::clamp(v, kLogvarMin, kLogvarMax);

  Matrix eps;
  Matrix z = mu;
  if (mode == LatentMode::sample) {
    if (rng == nullptr) throw Error("composite_loss: sample mode needs a random stream");
    eps = gaussian_sample(*rng, mu.rows(), mu.cols());
    for (std::size_t i = 0; i < z.size(); ++i)
      z.data()[i] += std::exp(0.5 * logvar.data()[i]) * eps.data()[i];
  }

  const Matrix dec_gene = sigmoid_forward(model.dec_pathway_gene().forward(z, t_path_gene));
  const Matrix x_hat = sigmoid_forward(model.dec_gene_site().forward(dec_gene, t_gene_site));
  const Matrix pre_hidden = model.classifier_hidden(task).forward(z, t_hidden);
  const Matrix hidden = relu_forward(pre_hidden);
  const Matrix prob = sigmoid_forward(output_layer.forward(hidden, t_output));

  const LossValue recon = mse(x, x_hat);
  const KlValue kl = kl_divergence(mu, logvar);
  const LossValue cls = bce(prob, Matrix(labels.size(), 1, std::vector<double>(labels.begin(), labels.end())));
  const double gamma = weights.gamma[task];

  LossEvaluation result;
  LossBreakdown& b = result.breakdown;
  b.recon_mse = recon.value;
  b.kl = kl.value;
  b.bce.assign(dims.tasks, 0.0);
  b.bce[task] = cls.value;
  b.total = weights.alpha * recon.value + weights.beta * kl.value + gamma * cls.value;

  // Backward.
  const std::vector<const Matrix*> values = model.parameter_values();
  result.gradients.reserve(values.size());
  for (const Matrix* v : values) result.gradients.emplace_back(v->rows(), v->cols());
  auto store = [&](std::size_t layer_index, LinearGrads& g) {
    result.gradients[2 * layer_index] = std::move(g.weight);
    result.gradients[2 * layer_index + 1] = std::move(g.bias);
  };

  const std::size_t head_index = kAutoencoderLayers + 2 * task;
  const Matrix d_prob = scaled(cls.grad, gamma);
  const Matrix d_logit = sigmoid_backward(prob, d_prob);
  LinearGrads g_output = output_layer.backward(t_output, d_logit);
  const Matrix d_pre_hidden = relu_backward(pre_hidden, g_output.input);
  LinearGrads g_hidden = hidden_layer.backward(t_hidden, d_pre_hidden);
  Matrix d_z = std::move(g_hidden.input);
  store(head_index + 1, g_output);
  store(head_index, g_hidden);
  if (scope == GradientScope::classifier_only) return result;

  const Matrix d_x_hat = scaled(recon.grad, weights.alpha);
  LinearGrads g_gene_site = model.dec_gene_site().backward(t_gene_site, sigmoid_backward(x_hat, d_x_hat));
  LinearGrads g_path_gene =
      model.dec_pathway_gene().backward(t_path_gene, sigmoid_backward(dec_gene, g_gene_site.input));
  add_into(d_z, g_path_gene.input);
  store(4, g_gene_site);
  store(3, g_path_gene);

  Matrix d_mu = d_z;
  Matrix d_logvar(mu.rows(), mu.cols());
  for (std::size_t i = 0; i < d_mu.size(); ++i) {
    d_mu.data()[i] += weights.beta * kl.grad_mu.data()[i];
    double dl = weights.beta * kl.grad_logvar.data()[i];
    if (mode == LatentMode::sample)
      dl += d_z.data()[i] * 0.5 * std::exp(0.5 * logvar.data()[i]) * eps.data()[i];
    const double raw = logvar_raw.data()[i];
    d_logvar.data()[i] = (raw > kLogvarMin && raw < kLogvarMax) ? dl : 0.0;
  }
  LinearGrads g_mu = model.enc_mu().backward(t_mu, d_mu);
  LinearGrads g_logvar = model.enc_logvar().backward(t_logvar, d_logvar);
  Matrix d_gene = std::move(g_mu.input);
  add_into(d_gene, g_logvar.input);
  LinearGrads g_site_gene = model.enc_site_gene().backward(t_site_gene, sigmoid_backward(gene, d_gene));
  store(0, g_site_gene);
  store(1, g_mu);
  store(2, g_logvar);
  return result;
}

}  // namespace omvae
