#include "fluxgate/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fluxgate/errors.hpp"
#include "fluxgate/random.hpp"

namespace fluxgate {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::size_t class_index(int label) { return label > 0 ? 1 : 0; }

/// Per-layer activations for one sample; acts[0] is the input.
struct ForwardTrace {
  std::vector<std::vector<double>> acts;
  std::vector<double> logits;  // pre-activation of the last layer
};

void affine(const DenseLayer& layer, std::span<const double> in, std::vector<double>& out) {
  out.resize(layer.outputs);
  for (std::size_t o = 0; o < layer.outputs; ++o) {
    const double* w = layer.weights.data() + o * layer.inputs;
    double z = layer.bias[o];
    for (std::size_t i = 0; i < layer.inputs; ++i) z += w[i] * in[i];
    out[o] = z;
  }
}

void activate(Activation activation, std::vector<double>& z) {
  switch (activation) {
    case Activation::Sigmoid:
      for (double& v : z) v = sigmoid(v);
      break;
    case Activation::Softmax:
      z = softmax(z);
      break;
    case Activation::Identity:
      break;
  }
}

void forward_trace(const MlpModel& model, std::span<const double> x, ForwardTrace& trace) {
  trace.acts.resize(model.layers.size() + 1);
  trace.acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& out = trace.acts[l + 1];
    affine(model.layers[l], trace.acts[l], out);
    if (l + 1 == model.layers.size()) trace.logits = out;
    activate(model.layers[l].activation, out);
  }
}

double log_sum_exp(std::span<const double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (const double v : z) sum += std::exp(v - top);
  return top + std::log(sum);
}

void check_model(const MlpModel& model) {
  if (model.layers.empty() || model.layers.back().activation != Activation::Softmax) {
    throw Error(ErrorCode::InvalidArgument, "MLP must end in a softmax layer");
  }
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

MlpModel mlp_init(std::size_t input_dim, std::span<const std::size_t> hidden_sizes,
                  std::size_t outputs, std::uint64_t seed) {
  Rng rng(seed);
  MlpModel model;
  std::size_t in = input_dim;
  const auto add_layer = [&](std::size_t out, Activation activation) {
    DenseLayer layer;
    layer.inputs = in;
    layer.outputs = out;
    layer.activation = activation;
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    layer.weights.resize(in * out);
    for (double& w : layer.weights) w = rng.uniform(-limit, limit);
    layer.bias.assign(out, 0.0);
    model.layers.push_back(std::move(layer));
    in = out;
  };
  for (const std::size_t width : hidden_sizes) add_layer(width, Activation::Sigmoid);
  add_layer(outputs, Activation::Softmax);
  return model;
}

std::vector<double> mlp_forward(const MlpModel& model, std::span<const double> x) {
  std::vector<double> current(x.begin(), x.end());
  std::vector<double> next;
  for (const auto& layer : model.layers) {
    affine(layer, current, next);
    activate(layer.activation, next);
    current.swap(next);
  }
  return current;
}

double mlp_decision(const MlpModel& model, std::span<const double> x) {
  const auto p = mlp_forward(model, x);
  return p[1] - p[0];
}

std::vector<double> mlp_parameters(const MlpModel& model) {
  std::vector<double> params;
  params.reserve(model.parameter_count());
  for (const auto& l : model.layers) {
    params.insert(params.end(), l.weights.begin(), l.weights.end());
    params.insert(params.end(), l.bias.begin(), l.bias.end());
  }
  return params;
}

void mlp_set_parameters(MlpModel& model, std::span<const double> params) {
  if (params.size() != model.parameter_count()) {
    throw Error(ErrorCode::InvalidArgument, "parameter vector has the wrong length");
  }
  std::size_t offset = 0;
  for (auto& l : model.layers) {
    std::copy_n(params.begin() + offset, l.weights.size(), l.weights.begin());
    offset += l.weights.size();
    std::copy_n(params.begin() + offset, l.bias.size(), l.bias.begin());
    offset += l.bias.size();
  }
}

LossAndGradient mlp_loss_and_gradient(const MlpModel& model, const LabeledData& data,
                                      std::span<const std::size_t> indices) {
  check_model(model);
  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    indices = all;
  }

  LossAndGradient out;
  out.gradient.assign(model.parameter_count(), 0.0);
  std::vector<std::size_t> layer_offset;
  for (std::size_t off = 0; const auto& l : model.layers) {
    layer_offset.push_back(off);
    off += l.weights.size() + l.bias.size();
  }

  ForwardTrace trace;
  std::vector<double> delta, prev_delta;
  for (const std::size_t s : indices) {
    forward_trace(model, data.row(s), trace);
    const std::size_t target = class_index(data.label(s));
    out.loss += log_sum_exp(trace.logits) - trace.logits[target];

    // Softmax with cross-entropy: dL/dz = p - onehot.
    delta = trace.acts.back();
    delta[target] -= 1.0;
    for (std::size_t l = model.layers.size(); l-- > 0;) {
      const auto& layer = model.layers[l];
      const auto& input = trace.acts[l];
      double* gw = out.gradient.data() + layer_offset[l];
      double* gb = gw + layer.weights.size();
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double d = delta[o];
        gb[o] += d;
        double* row = gw + o * layer.inputs;
        for (std::size_t i = 0; i < layer.inputs; ++i) row[i] += d * input[i];
      }
      if (l == 0) break;
      prev_delta.assign(layer.inputs, 0.0);
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double* w = layer.weights.data() + o * layer.inputs;
        for (std::size_t i = 0; i < layer.inputs; ++i) prev_delta[i] += w[i] * delta[o];
      }
      const Activation below = model.layers[l - 1].activation;
      for (std::size_t i = 0; i < layer.inputs; ++i) {
        if (below == Activation::Sigmoid) prev_delta[i] *= input[i] * (1.0 - input[i]);
      }
      delta.swap(prev_delta);
    }
  }

  const double scale = 1.0 / static_cast<double>(indices.size());
  out.loss *= scale;
  for (double& g : out.gradient) g *= scale;
  return out;
}

double mlp_loss(const MlpModel& model, const LabeledData& data) {
  check_model(model);
  ForwardTrace trace;
  double loss = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    forward_trace(model, data.row(s), trace);
    loss += log_sum_exp(trace.logits) - trace.logits[class_index(data.label(s))];
  }
  return loss / static_cast<double>(data.size());
}

MlpModel mlp_train(const LabeledData& data, const TrainConfig& cfg, MlpTrainLog* log) {
  validate(cfg);
  if (cfg.hidden_sizes.empty()) throw Error(ErrorCode::InvalidArgument, "hidden_sizes is empty");
  if (!data.has_both_classes()) {
    throw Error(ErrorCode::SingleClassData, "MLP training needs examples of both classes");
  }

  MlpModel model = mlp_init(data.dim(), cfg.hidden_sizes, 2, cfg.seed);
  Rng rng(cfg.seed ^ 0x5bd1e995ULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best = mlp_loss(model, data);
  if (!std::isfinite(best)) throw Error(ErrorCode::DivergedLoss, "initial loss is not finite");
  double rate = cfg.learning_rate;
  constexpr double kMinRate = 1e-10;

  for (std::size_t epoch = 0; epoch < cfg.epochs && rate >= kMinRate; ++epoch) {
    MlpModel candidate = model;
    auto params = mlp_parameters(candidate);
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const auto batch = std::span<const std::size_t>(order).subspan(start, end - start);
      const auto step = mlp_loss_and_gradient(candidate, data, batch);
      for (std::size_t p = 0; p < params.size(); ++p) params[p] -= rate * step.gradient[p];
      mlp_set_parameters(candidate, params);
    }
    const double loss = mlp_loss(candidate, data);
    if (!std::isfinite(loss) || loss > best) {
      rate *= 0.5;
      if (log) ++log->rejected_epochs;
      continue;
    }
    model = std::move(candidate);
    best = loss;
    if (log) {
      log->epoch_loss.push_back(loss);
      log->learning_rates.push_back(rate);
    }
  }
  if (!std::isfinite(best)) throw Error(ErrorCode::DivergedLoss, "training loss is not finite");
  return model;
}

}  // namespace fluxgate
