#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fluxgate/features.hpp"
#include "fluxgate/mlp.hpp"
#include "fluxgate/rbfnet.hpp"
#include "fluxgate/svm.hpp"

namespace fluxgate {

enum class ModelKind : std::uint8_t { Svm = 1, Mlp = 2, RbfNet = 3 };

std::string_view to_string(ModelKind kind) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view text);

using Model = std::variant<SvmModel, MlpModel, RbfNetModel>;

ModelKind kind_of(const Model& model) noexcept;

Model train_model(ModelKind kind, const LabeledData& data, const TrainConfig& cfg);

/// Real-valued score; positive means legitimate.
double decision_value(const Model& model, std::span<const double> x);

/// Sign rule with ties resolved to -1 (fast flux).
constexpr int classify_decision(double decision) noexcept { return decision > 0.0 ? 1 : -1; }

/// Trained classifier plus the scaler its inputs were fitted with.
struct ModelBundle {
  Model model;
  std::optional<Scaler> scaler;
};

inline constexpr std::uint8_t kModelFormatVersion = 1;

/// File layout: "FXGM" magic, format version byte, kind byte, little-endian
/// u32 payload length, canonical JSON payload, little-endian u32 CRC-32 of
/// the payload.
std::vector<std::uint8_t> serialize_model(const ModelBundle& bundle);

/// Throws Error(VersionMismatch) or Error(CorruptModel).
ModelBundle deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace fluxgate
