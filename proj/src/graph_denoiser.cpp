#include "scenediff/graph_denoiser.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "scenediff/errors.hpp"
#include "scenediff/log.hpp"
#include "scenediff/sampler.hpp"
#include "scenediff/scene_io.hpp"

namespace scenediff {

using nn::Tape;
using nn::Var;

namespace {

constexpr double kMasked = -1e9;
constexpr int kPointHidden = 16;
constexpr int kLabelDim = 16;
constexpr const char* kSubLayers[] = {"shape", "geo", "graph", "ffn"};

std::string blk(int l, const char* sub, const char* what) {
  return "blk" + std::to_string(l) + "." + sub + "." + what;
}

}  // namespace

// ---- config --------------------------------------------------------------------

void TrainConfig::validate() const {
  auto positive = [](bool ok, const char* key) {
    if (!ok) throw ConfigError(std::string("train.") + key + " must be positive");
  };
  positive(lr > 0.0 && std::isfinite(lr), "lr");
  positive(weight_decay >= 0.0 && std::isfinite(weight_decay), "weight_decay");
  positive(clip_norm >= 0.0 && std::isfinite(clip_norm), "clip_norm");
  positive(batch_size > 0, "batch_size");
  positive(steps > 0, "steps");
  positive(d > 0, "d");
  positive(layers > 0, "layers");
  positive(heads > 0, "heads");
  positive(n_geo > 0, "n_geo");
  positive(m_train > 0, "m_train");
  positive(diffusion_steps >= 2, "diffusion_steps");
  positive(position_scale > 0.0 && std::isfinite(position_scale), "position_scale");
  if (d % heads != 0) throw ConfigError("train.d must be divisible by train.heads");
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"clip_norm", c.clip_norm},
          {"batch_size", c.batch_size},
          {"steps", c.steps},
          {"seed", c.seed},
          {"d", c.d},
          {"layers", c.layers},
          {"heads", c.heads},
          {"n_geo", c.n_geo},
          {"m_train", c.m_train},
          {"diffusion_steps", c.diffusion_steps},
          {"position_scale", c.position_scale}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.lr = j.at("lr").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.clip_norm = j.at("clip_norm").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.steps = j.at("steps").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.d = j.at("d").get<int>();
    c.layers = j.at("layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.n_geo = j.at("n_geo").get<int>();
    c.m_train = j.at("m_train").get<int>();
    c.diffusion_steps = j.at("diffusion_steps").get<int>();
    c.position_scale = j.at("position_scale").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad train config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---- fixed encodings -----------------------------------------------------------

Matrix time_embedding(int t) {
  Matrix e(1, kTimeEmbedDim);
  const int half = kTimeEmbedDim / 2;
  for (int k = 0; k < half; ++k) {
    const double f = std::exp(-std::log(10000.0) * k / half);
    e(0, k) = std::sin(t * f);
    e(0, half + k) = std::cos(t * f);
  }
  return e;
}

Matrix position_encoding(const Matrix& x_t) {
  Matrix e(x_t.rows(), kPosEncodingDim);
  for (int i = 0; i < x_t.rows(); ++i) {
    int col = 0;
    for (int c = 0; c < 3; ++c) {
      for (double f : {1.0, 2.0, 4.0}) {
        e(i, col++) = std::sin(f * x_t(i, c));
        e(i, col++) = std::cos(f * x_t(i, c));
      }
    }
  }
  return e;
}

// ---- model ---------------------------------------------------------------------

GraphDenoiser::GraphDenoiser(const TrainConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(cfg_.seed ^ 0xd1b54a32d192ed03ULL);
  const int d = cfg_.d;
  auto linear = [&](const std::string& name, int in, int out, double gain = 1.0) {
    params_.add(name + ".w", in, out, gain / std::sqrt(static_cast<double>(in)), rng);
    params_.add_zeros(name + ".b", 1, out);
  };
  auto weight = [&](const std::string& name, int in, int out) {
    params_.add(name, in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  };
  auto adaln = [&](const std::string& prefix) {
    linear(prefix + ".ada_scale", d, d, 0.1);
    linear(prefix + ".ada_shift", d, d, 0.1);
  };

  linear("node_in", kStateWidth + kPosEncodingDim, d);
  linear("time1", kTimeEmbedDim, d);
  linear("time2", d, d);
  linear("shape", static_cast<int>(kShapeDescriptorSize), kShapeTokens * d);
  params_.add("edge.spatial", kSpatialLabelCount, kLabelDim, 1.0, rng);
  params_.add("edge.physical", kPhysicalLabelCount, kLabelDim, 1.0, rng);
  linear("edge.proj", 2 * kLabelDim, kEdgeDim);
  linear("geo.in", 4, kPointHidden);
  params_.add("geo.latents", cfg_.n_geo, d, 1.0, rng);
  weight("geo.q", d, d);
  weight("geo.k", kPointHidden, d);
  weight("geo.v", kPointHidden, d);
  weight("geo.o", d, d);
  for (int l = 0; l < cfg_.layers; ++l) {
    for (const char* sub : kSubLayers) {
      adaln("blk" + std::to_string(l) + "." + sub);
      if (std::string(sub) == "ffn") {
        linear(blk(l, sub, "fc1"), d, 2 * d);
        linear(blk(l, sub, "fc2"), 2 * d, d, 0.5);
        continue;
      }
      weight(blk(l, sub, "q"), d, d);
      weight(blk(l, sub, "k"), d, d);
      weight(blk(l, sub, "v"), d, d);
      params_.add(blk(l, sub, "o"), d, d, 0.5 / std::sqrt(static_cast<double>(d)), rng);
      if (std::string(sub) == "graph") linear(blk(l, sub, "edge"), kEdgeDim, cfg_.heads);
    }
  }
  adaln("out");
  linear("out1", d, d);
  linear("out2", d, kStateWidth, 0.01);
}

Var GraphDenoiser::p(Tape& tape, const std::string& name) const {
  const nn::Param* param = params_.find(name);
  if (!param) throw Error("missing parameter " + name);
  return tape.param(*param);
}

Var GraphDenoiser::edges(Tape& tape, const RelationGraphs& graphs) const {
  const int n = graphs.size();
  std::vector<int> spatial, physical;
  spatial.reserve(static_cast<std::size_t>(n) * n);
  physical.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      spatial.push_back(static_cast<int>(graphs.spatial(i, j)));
      physical.push_back(static_cast<int>(graphs.physical(i, j)));
    }
  }
  const Var s = tape.gather_rows(p(tape, "edge.spatial"), spatial);
  const Var k = tape.gather_rows(p(tape, "edge.physical"), physical);
  const Var cat = tape.concat_cols({s, k});
  return tape.silu(tape.add_row(tape.matmul(cat, p(tape, "edge.proj.w")), p(tape, "edge.proj.b")));
}

Matrix GraphDenoiser::embed_edges(const RelationGraphs& graphs) const {
  Tape tape(false);
  return tape.value(edges(tape, graphs));
}

Var GraphDenoiser::perceiver(Tape& tape, const GeometryFeatures& geo) const {
  auto lin = [&](Var x, const std::string& name) {
    return tape.add_row(tape.matmul(x, p(tape, name + ".w")), p(tape, name + ".b"));
  };
  const int n = geo.objects;
  const int heads = cfg_.heads;
  const int m = geo.points;
  Matrix pts(geo.data.rows(), 4);
  pts.leftCols(3) = geo.data.leftCols(3) / cfg_.position_scale;
  pts.col(3) = (4.0 * geo.data.col(3).array()).tanh().matrix();
  const Var hidden = tape.silu(lin(tape.input(pts), "geo.in"));
  const Var keys = tape.matmul(hidden, p(tape, "geo.k"));
  const Var vals = tape.matmul(hidden, p(tape, "geo.v"));
  // Shared latent queries attend to each object's point features.
  const Var queries = tape.matmul(p(tape, "geo.latents"), p(tape, "geo.q"));
  std::vector<Var> per_object;
  per_object.reserve(n);
  for (int i = 0; i < n; ++i) {
    per_object.push_back(
        tape.attention(queries, tape.slice_rows(keys, i * m, m), tape.slice_rows(vals, i * m, m), heads));
  }
  return tape.matmul(tape.concat_rows(per_object), p(tape, "geo.o"));
}

Var GraphDenoiser::forward(Tape& tape, const Matrix& x_t, int t, const Scene& scene, const GeometryFeatures& geo) const {
  const int n = scene.size();
  const int d = cfg_.d;
  const int heads = cfg_.heads;
  if (x_t.rows() != n || x_t.cols() != kStateWidth) throw ShapeMismatch("state must be N x 9");
  if (scene.graphs.size() != n) throw GraphSizeMismatch("graphs do not match the object count");
  if (geo.objects != n || geo.points != cfg_.m_train || geo.data.rows() != static_cast<long>(n) * geo.points) {
    throw ShapeMismatch("geometry features do not match the scene or the model");
  }
  auto lin = [&](Var x, const std::string& name) {
    return tape.add_row(tape.matmul(x, p(tape, name + ".w")), p(tape, name + ".b"));
  };

  // Node encoding.
  Matrix node_in(n, kStateWidth + kPosEncodingDim);
  node_in << x_t, position_encoding(x_t);
  Var h = lin(tape.input(node_in), "node_in");

  // Time conditioning.
  const Var temb = tape.silu(lin(tape.silu(lin(tape.input(time_embedding(t)), "time1")), "time2"));

  // Shape tokens: kShapeTokens rows per object.
  Matrix desc(n, static_cast<int>(kShapeDescriptorSize));
  for (int i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < kShapeDescriptorSize; ++k) desc(i, static_cast<int>(k)) = scene.objects[i].shape_desc[k];
  }
  const Var shape_tokens = tape.reshape(lin(tape.input(desc), "shape"), d);

  // Geometry tokens from a non-recording tape are reusable until the features change.
  Var geo_tokens;
  if (tape.recording()) {
    geo_tokens = perceiver(tape, geo);
  } else {
    const std::uint64_t h = geo.hash();
    if (geo.encoded_by != this || geo.encoded_hash != h) {
      Tape scratch(false);
      geo.encoded = scratch.value(perceiver(scratch, geo));
      geo.encoded_by = this;
      geo.encoded_hash = h;
    }
    geo_tokens = tape.input(geo.encoded);
  }

  // Each object reads only its own shape and geometry tokens.
  Matrix shape_mask = Matrix::Constant(n, n * kShapeTokens, kMasked);
  Matrix geo_mask = Matrix::Constant(n, n * cfg_.n_geo, kMasked);
  for (int i = 0; i < n; ++i) {
    shape_mask.block(i, i * kShapeTokens, 1, kShapeTokens).setZero();
    geo_mask.block(i, i * cfg_.n_geo, 1, cfg_.n_geo).setZero();
  }

  const Var edge_feat = edges(tape, scene.graphs);
  auto norm = [&](Var x, const std::string& prefix) {
    return tape.modulate(tape.layernorm(x), lin(temb, prefix + ".ada_scale"), lin(temb, prefix + ".ada_shift"));
  };
  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string pre = "blk" + std::to_string(l);
    auto cross = [&](const char* sub, Var tokens, const Matrix& mask) {
      const Var u = norm(h, pre + "." + sub);
      const Var a = tape.attention(tape.matmul(u, p(tape, blk(l, sub, "q"))), tape.matmul(tokens, p(tape, blk(l, sub, "k"))),
                                   tape.matmul(tokens, p(tape, blk(l, sub, "v"))), heads, -1, &mask);
      h = tape.add(h, tape.matmul(a, p(tape, blk(l, sub, "o"))));
    };
    cross("shape", shape_tokens, shape_mask);
    cross("geo", geo_tokens, geo_mask);

    const Var u = norm(h, pre + ".graph");
    const Var bias = tape.edge_bias_layout(lin(edge_feat, blk(l, "graph", "edge")), n);
    const Var a = tape.attention(tape.matmul(u, p(tape, blk(l, "graph", "q"))), tape.matmul(u, p(tape, blk(l, "graph", "k"))),
                                 tape.matmul(u, p(tape, blk(l, "graph", "v"))), heads, bias);
    h = tape.add(h, tape.matmul(a, p(tape, blk(l, "graph", "o"))));

    const Var f = norm(h, pre + ".ffn");
    h = tape.add(h, lin(tape.silu(lin(f, blk(l, "ffn", "fc1"))), blk(l, "ffn", "fc2")));
  }
  return lin(tape.silu(lin(norm(h, "out"), "out1")), "out2");
}

Matrix GraphDenoiser::predict_eps(const DenoiserInput& in) const {
  if (!in.geometry) throw ShapeMismatch("graph denoiser needs geometry features");
  Tape tape(false);
  return tape.value(forward(tape, in.x_t, in.t, in.scene, *in.geometry));
}

// ---- training ------------------------------------------------------------------

Var sample_loss(Tape& tape, const GraphDenoiser& model, const Scene& scene, int t, const Matrix& eps,
                const NoiseSchedule& schedule, std::uint64_t geometry_seed) {
  const double scale = model.config().position_scale;
  const Matrix x0 = normalize_state(flatten_scene(scene), scale);
  const Matrix xt = forward_sample(x0, t, eps, schedule);
  const GeometryFeatures geo =
      geometry_features(unflatten(denormalize_state(xt, scale), scene), model.config().m_train, geometry_seed);
  return tape.mse(model.forward(tape, xt, t, scene, geo), eps);
}

std::vector<double> train(GraphDenoiser& model, const std::vector<Scene>& data,
                          const std::function<void(int, double)>& progress) {
  if (data.empty()) throw Error("training needs at least one scene");
  const TrainConfig& cfg = model.config();
  const NoiseSchedule schedule = make_schedule(cfg.diffusion_steps);
  nn::AdamW opt;
  opt.lr = cfg.lr;
  opt.weight_decay = cfg.weight_decay;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::uniform_int_distribution<int> pick_t(1, cfg.diffusion_steps);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> losses;
  losses.reserve(cfg.steps);
  for (int step = 0; step < cfg.steps; ++step) {
    model.params().zero_grad();
    Tape tape;
    std::vector<Var> terms;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const Scene& scene = data[pick(rng)];
      const int t = pick_t(rng);
      Matrix eps(scene.size(), kStateWidth);
      for (int i = 0; i < eps.size(); ++i) eps.data()[i] = normal(rng);
      terms.push_back(sample_loss(tape, model, scene, t, eps, schedule, rng()));
    }
    Var total = terms.front();
    for (std::size_t b = 1; b < terms.size(); ++b) total = tape.add(total, terms[b]);
    total = tape.scale(total, 1.0 / cfg.batch_size);
    const double loss = tape.value(total)(0, 0);
    if (!std::isfinite(loss)) throw DivergedTraining("loss became non-finite at step " + std::to_string(step));
    tape.backward(total);

    double norm2 = 0.0;
    for (const auto& prm : model.params().all()) norm2 += prm->grad.squaredNorm();
    if (!std::isfinite(norm2)) throw DivergedTraining("gradient became non-finite at step " + std::to_string(step));
    const double norm = std::sqrt(norm2);
    if (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) {
      for (auto& prm : model.params().all()) prm->grad *= cfg.clip_norm / norm;
    }
    opt.step(model.params());
    losses.push_back(loss);
    if (progress) progress(step, loss);
  }
  return losses;
}

// ---- checkpoint ----------------------------------------------------------------

void save_checkpoint(const GraphDenoiser& model, const std::filesystem::path& path) {
  nlohmann::json tensors = nlohmann::json::object();
  for (const auto& prm : model.params().all()) {
    std::vector<double> data(prm->value.data(), prm->value.data() + prm->value.size());
    tensors[prm->name] = {{"rows", prm->value.rows()}, {"cols", prm->value.cols()}, {"data", data}};
  }
  write_json(path, {{"format", "scenediff-denoiser"},
                    {"version", 1},
                    {"config", train_config_to_json(model.config())},
                    {"tensors", tensors}});
}

namespace {

nlohmann::json read_checkpoint_json(const std::filesystem::path& path) {
  nlohmann::json j = read_json(path);
  if (!j.is_object() || j.value("format", "") != "scenediff-denoiser" || j.value("version", 0) != 1) {
    throw IoError(path.string() + " is not a version 1 denoiser checkpoint");
  }
  return j;
}

void copy_tensors(GraphDenoiser& model, const nlohmann::json& tensors) {
  if (!tensors.is_object() || tensors.size() != model.params().all().size()) {
    throw ShapeMismatch("checkpoint tensor set does not match the model");
  }
  for (auto& prm : model.params().all()) {
    if (!tensors.contains(prm->name)) throw ShapeMismatch("checkpoint lacks tensor " + prm->name);
    const auto& t = tensors.at(prm->name);
    const auto data = t.at("data").get<std::vector<double>>();
    if (t.at("rows").get<long>() != prm->value.rows() || t.at("cols").get<long>() != prm->value.cols() ||
        static_cast<long>(data.size()) != prm->value.size()) {
      throw ShapeMismatch("tensor " + prm->name + " has the wrong shape");
    }
    prm->value = Eigen::Map<const Matrix>(data.data(), prm->value.rows(), prm->value.cols());
  }
}

}  // namespace

GraphDenoiser load_checkpoint(const std::filesystem::path& path) {
  const nlohmann::json j = read_checkpoint_json(path);
  GraphDenoiser model(train_config_from_json(j.at("config")));
  try {
    copy_tensors(model, j.at("tensors"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return model;
}

void load_weights(GraphDenoiser& model, const std::filesystem::path& path) {
  const nlohmann::json j = read_checkpoint_json(path);
  try {
    copy_tensors(model, j.at("tensors"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace scenediff
