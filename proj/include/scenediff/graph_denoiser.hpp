#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "json.hpp"
#include "scenediff/denoiser.hpp"
#include "scenediff/nn/tape.hpp"

namespace scenediff {

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double clip_norm = 1.0;  // global gradient-norm clip, 0 disables
  int batch_size = 4;
  int steps = 2000;
  std::uint64_t seed = 0;
  int d = 64;
  int layers = 2;
  int heads = 4;
  int n_geo = 8;
  int m_train = 256;
  int diffusion_steps = 1000;
  double position_scale = 4.0;

  /// Throws ConfigError.
  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

inline constexpr int kEdgeDim = 32;
inline constexpr int kShapeTokens = 4;
inline constexpr int kTimeEmbedDim = 64;
inline constexpr int kPosEncodingDim = 18;

/// Sinusoidal embedding of the timestep.
Matrix time_embedding(int t);
/// sin/cos of each normalized position coordinate at frequencies 1, 2, 4.
/// Depends on the state only, so object order never leaks into the network.
Matrix position_encoding(const Matrix& x_t);

/// Graph-attention noise predictor: node encoding, then per block
/// cross-attention to shape tokens, cross-attention to perceiver geometry
/// tokens and graph self-attention with edge-feature logit bias, each
/// pre-normalized with timestep-conditioned scale and shift.
class GraphDenoiser : public Denoiser {
 public:
  /// Random initialization seeded from cfg.seed.
  explicit GraphDenoiser(const TrainConfig& cfg);

  Matrix predict_eps(const DenoiserInput& in) const override;
  int geometry_points() const override { return cfg_.m_train; }
  int steps() const override { return cfg_.diffusion_steps; }

  /// Records the forward pass; returns the N x 9 output node.
  nn::Var forward(nn::Tape& tape, const Matrix& x_t, int t, const Scene& scene, const GeometryFeatures& geo) const;
  /// Edge features (N*N) x kEdgeDim, row i * N + j for the pair (i, j).
  Matrix embed_edges(const RelationGraphs& graphs) const;

  const TrainConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

 private:
  nn::Var edges(nn::Tape& tape, const RelationGraphs& graphs) const;
  nn::Var perceiver(nn::Tape& tape, const GeometryFeatures& geo) const;
  nn::Var p(nn::Tape& tape, const std::string& name) const;

  TrainConfig cfg_;
  nn::ParamStore params_;
};

/// Mean noise-prediction loss of one sample, recorded on `tape`.
nn::Var sample_loss(nn::Tape& tape, const GraphDenoiser& model, const Scene& scene, int t, const Matrix& eps,
                    const NoiseSchedule& schedule, std::uint64_t geometry_seed);

/// AdamW on random (scene, t, eps) draws; returns the per-step mean batch
/// loss. Deterministic given cfg.seed. Throws DivergedTraining.
std::vector<double> train(GraphDenoiser& model, const std::vector<Scene>& data,
                          const std::function<void(int, double)>& progress = {});

/// JSON container with the config and every named tensor.
void save_checkpoint(const GraphDenoiser& model, const std::filesystem::path& path);
/// Throws IoError, or ShapeMismatch when a tensor is missing, extra or misshaped.
GraphDenoiser load_checkpoint(const std::filesystem::path& path);
/// Copies tensors from a checkpoint into a model built for `cfg`.
void load_weights(GraphDenoiser& model, const std::filesystem::path& path);

}  // namespace scenediff
