#include "fluxgate/model.hpp"

#include <cstring>

#include <json.hpp>

#include "binary_io.hpp"
#include "fluxgate/errors.hpp"

namespace fluxgate {

namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "FXGM";
constexpr std::size_t kHeaderSize = 4 + 1 + 1 + 4;

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

Activation activation_from(const std::string& s) {
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "softmax") return Activation::Softmax;
  if (s == "identity") return Activation::Identity;
  throw Error(ErrorCode::CorruptModel, "unknown activation '" + s + "'");
}

json kernel_json(const Kernel& k) { return {{"type", to_string(k.type)}, {"gamma", k.gamma}}; }

Kernel kernel_from(const json& j) {
  Kernel k;
  const auto type = j.at("type").get<std::string>();
  if (type == "linear") k.type = KernelType::Linear;
  else if (type == "rbf") k.type = KernelType::Rbf;
  else throw Error(ErrorCode::CorruptModel, "unknown kernel '" + type + "'");
  k.gamma = j.at("gamma").get<double>();
  return k;
}

json to_json(const SvmModel& m) {
  return {{"dim", m.dim},         {"kernel", kernel_json(m.kernel)},
          {"C", m.C},             {"bias", m.bias},
          {"support_vectors", m.support_vectors},
          {"alphas", m.alphas},   {"labels", m.labels},
          {"converged", m.converged}, {"iterations", m.iterations}};
}

json to_json(const MlpModel& m) {
  json layers = json::array();
  for (const auto& l : m.layers) {
    layers.push_back({{"inputs", l.inputs},
                      {"outputs", l.outputs},
                      {"activation", activation_name(l.activation)},
                      {"weights", l.weights},
                      {"bias", l.bias}});
  }
  return {{"layers", layers}};
}

json to_json(const RbfNetModel& m) {
  return {{"dim", m.dim},
          {"outputs", m.outputs},
          {"activation", m.activation == RbfActivation::Gaussian ? "gaussian" : "softmax"},
          {"centers", m.centers},
          {"radii", m.radii},
          {"weights", m.weights}};
}

json to_json(const Scaler& s) {
  json features = json::array();
  for (const auto& f : s.stats()) {
    features.push_back({{"offset", f.offset}, {"scale", f.scale}, {"constant", f.constant}});
  }
  return {{"mode", s.mode() == ScalerMode::MinMax ? "minmax" : "zscore"}, {"features", features}};
}

SvmModel svm_from(const json& j) {
  SvmModel m;
  m.dim = j.at("dim").get<std::size_t>();
  m.kernel = kernel_from(j.at("kernel"));
  m.C = j.at("C").get<double>();
  m.bias = j.at("bias").get<double>();
  m.support_vectors = j.at("support_vectors").get<std::vector<double>>();
  m.alphas = j.at("alphas").get<std::vector<double>>();
  m.labels = j.at("labels").get<std::vector<int>>();
  m.converged = j.at("converged").get<bool>();
  m.iterations = j.at("iterations").get<std::size_t>();
  if (m.labels.size() != m.alphas.size() || m.support_vectors.size() != m.alphas.size() * m.dim) {
    throw Error(ErrorCode::CorruptModel, "SVM arrays disagree in length");
  }
  return m;
}

MlpModel mlp_from(const json& j) {
  MlpModel m;
  for (const auto& lj : j.at("layers")) {
    DenseLayer l;
    l.inputs = lj.at("inputs").get<std::size_t>();
    l.outputs = lj.at("outputs").get<std::size_t>();
    l.activation = activation_from(lj.at("activation").get<std::string>());
    l.weights = lj.at("weights").get<std::vector<double>>();
    l.bias = lj.at("bias").get<std::vector<double>>();
    if (l.weights.size() != l.inputs * l.outputs || l.bias.size() != l.outputs) {
      throw Error(ErrorCode::CorruptModel, "MLP layer shape mismatch");
    }
    if (!m.layers.empty() && m.layers.back().outputs != l.inputs) {
      throw Error(ErrorCode::CorruptModel, "MLP layers are not chained");
    }
    m.layers.push_back(std::move(l));
  }
  if (m.layers.empty()) throw Error(ErrorCode::CorruptModel, "MLP without layers");
  return m;
}

RbfNetModel rbfnet_from(const json& j) {
  RbfNetModel m;
  m.dim = j.at("dim").get<std::size_t>();
  m.outputs = j.at("outputs").get<std::size_t>();
  const auto act = j.at("activation").get<std::string>();
  if (act == "gaussian") m.activation = RbfActivation::Gaussian;
  else if (act == "softmax") m.activation = RbfActivation::Softmax;
  else throw Error(ErrorCode::CorruptModel, "unknown RBF activation '" + act + "'");
  m.centers = j.at("centers").get<std::vector<double>>();
  m.radii = j.at("radii").get<std::vector<double>>();
  m.weights = j.at("weights").get<std::vector<double>>();
  const std::size_t k = m.radii.size();
  if (m.centers.size() != k * m.dim || m.weights.size() != k * m.outputs) {
    throw Error(ErrorCode::CorruptModel, "RBF network arrays disagree in length");
  }
  for (const double r : m.radii) {
    if (!(r > 0.0)) throw Error(ErrorCode::CorruptModel, "non-positive RBF radius");
  }
  return m;
}

Scaler scaler_from(const json& j) {
  const auto mode_name = j.at("mode").get<std::string>();
  ScalerMode mode;
  if (mode_name == "minmax") mode = ScalerMode::MinMax;
  else if (mode_name == "zscore") mode = ScalerMode::ZScore;
  else throw Error(ErrorCode::CorruptModel, "unknown scaler mode '" + mode_name + "'");
  const auto& features = j.at("features");
  if (features.size() != kFeatureCount) throw Error(ErrorCode::CorruptModel, "scaler needs 8 features");
  std::array<Scaler::FeatureStats, kFeatureCount> stats{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    stats[f].offset = features[f].at("offset").get<double>();
    stats[f].scale = features[f].at("scale").get<double>();
    stats[f].constant = features[f].at("constant").get<bool>();
  }
  return Scaler::from_stats(mode, stats);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[at + static_cast<std::size_t>(i)];
  return v;
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Svm: return "svm";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::RbfNet: return "rbfnet";
  }
  return "svm";
}

std::optional<ModelKind> parse_model_kind(std::string_view text) {
  if (text == "svm") return ModelKind::Svm;
  if (text == "mlp") return ModelKind::Mlp;
  if (text == "rbfnet") return ModelKind::RbfNet;
  return std::nullopt;
}

ModelKind kind_of(const Model& model) noexcept {
  switch (model.index()) {
    case 0: return ModelKind::Svm;
    case 1: return ModelKind::Mlp;
    default: return ModelKind::RbfNet;
  }
}

Model train_model(ModelKind kind, const LabeledData& data, const TrainConfig& cfg) {
  switch (kind) {
    case ModelKind::Svm: return svm_train(data, cfg);
    case ModelKind::Mlp: return mlp_train(data, cfg);
    case ModelKind::RbfNet: return rbfnet_train(data, cfg);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

double decision_value(const Model& model, std::span<const double> x) {
  struct Visitor {
    std::span<const double> x;
    double operator()(const SvmModel& m) const { return svm_decision(m, x); }
    double operator()(const MlpModel& m) const { return mlp_decision(m, x); }
    double operator()(const RbfNetModel& m) const { return rbfnet_decision(m, x); }
  };
  return std::visit(Visitor{x}, model);
}

std::vector<std::uint8_t> serialize_model(const ModelBundle& bundle) {
  json payload;
  payload["kind"] = to_string(kind_of(bundle.model));
  payload["model"] = std::visit([](const auto& m) { return to_json(m); }, bundle.model);
  payload["scaler"] = bundle.scaler ? to_json(*bundle.scaler) : json(nullptr);
  const std::string text = payload.dump();

  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  out.push_back(kModelFormatVersion);
  out.push_back(static_cast<std::uint8_t>(kind_of(bundle.model)));
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  const auto body = std::span<const std::uint8_t>(out).subspan(kHeaderSize, text.size());
  put_u32(out, detail::crc32_of(body));
  return out;
}

ModelBundle deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw Error(ErrorCode::CorruptModel, "missing model magic");
  }
  if (bytes.size() < kMagic.size() + 1) throw Error(ErrorCode::CorruptModel, "truncated header");
  if (bytes[kMagic.size()] != kModelFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "model format version " +
                                                std::to_string(bytes[kMagic.size()]) + ", expected " +
                                                std::to_string(kModelFormatVersion));
  }
  if (bytes.size() < kHeaderSize) throw Error(ErrorCode::CorruptModel, "truncated header");
  const std::uint8_t kind_byte = bytes[kMagic.size() + 1];
  const std::uint32_t length = get_u32(bytes, kMagic.size() + 2);
  if (bytes.size() != kHeaderSize + std::size_t{length} + 4) {
    throw Error(ErrorCode::CorruptModel, "payload length does not match file size");
  }
  const auto body = bytes.subspan(kHeaderSize, length);
  if (get_u32(bytes, kHeaderSize + length) != detail::crc32_of(body)) {
    throw Error(ErrorCode::CorruptModel, "checksum mismatch");
  }

  try {
    const json payload = json::parse(body.begin(), body.end());
    const auto kind = parse_model_kind(payload.at("kind").get<std::string>());
    if (!kind || static_cast<std::uint8_t>(*kind) != kind_byte) {
      throw Error(ErrorCode::CorruptModel, "model kind tag mismatch");
    }
    const auto& mj = payload.at("model");
    ModelBundle bundle{
        *kind == ModelKind::Svm   ? Model{svm_from(mj)}
        : *kind == ModelKind::Mlp ? Model{mlp_from(mj)}
                                  : Model{rbfnet_from(mj)},
        std::nullopt};
    if (!payload.at("scaler").is_null()) bundle.scaler = scaler_from(payload.at("scaler"));
    return bundle;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptModel, e.what());
  }
}

void save_model(const ModelBundle& bundle, const std::filesystem::path& path) {
  detail::write_binary_file(path, serialize_model(bundle));
}

ModelBundle load_model(const std::filesystem::path& path) {
  return deserialize_model(detail::read_binary_file(path));
}

}  // namespace fluxgate
