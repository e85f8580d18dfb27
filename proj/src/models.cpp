#include "smra/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "smra/errors.hpp"

namespace smra {

namespace fs = std::filesystem;
using ad::Mat;
using nlohmann::json;

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::transformer: return "transformer";
    case ModelKind::bow: return "bow";
    case ModelKind::cnn: return "cnn";
    case ModelKind::birnn_max: return "birnn_max";
    case ModelKind::birnn_attn: return "birnn_attn";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "transformer") return ModelKind::transformer;
  if (s == "bow") return ModelKind::bow;
  if (s == "cnn") return ModelKind::cnn;
  if (s == "birnn_max") return ModelKind::birnn_max;
  if (s == "birnn_attn") return ModelKind::birnn_attn;
  throw ValueError("unknown model kind: " + s);
}

std::string model_config_to_json(const ModelConfig& cfg) {
  json j;
  j["kind"] = to_string(cfg.kind);
  j["encoder_id"] = cfg.encoder_id;
  j["num_classes"] = cfg.num_classes;
  j["max_len"] = cfg.max_len;
  j["hidden_dim"] = cfg.hidden_dim;
  j["embed_dim"] = cfg.embed_dim;
  j["vocab_size"] = cfg.vocab_size;
  j["cnn_filters"] = cfg.cnn_filters;
  j["cnn_widths"] = cfg.cnn_widths;
  j["attn_dim"] = cfg.attn_dim;
  j["tf_layers"] = cfg.tf_layers;
  j["tf_heads"] = cfg.tf_heads;
  return j.dump(2);
}

ModelConfig model_config_from_json(const std::string& text) {
  json j = json::parse(text);
  ModelConfig cfg;
  cfg.kind = model_kind_from_string(j.at("kind").get<std::string>());
  cfg.encoder_id = j.value("encoder_id", std::string{});
  cfg.num_classes = j.at("num_classes").get<int>();
  cfg.max_len = j.at("max_len").get<int>();
  cfg.hidden_dim = j.at("hidden_dim").get<int>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.cnn_filters = j.value("cnn_filters", 100);
  cfg.cnn_widths = j.value("cnn_widths", std::vector<int>{3, 4, 5});
  cfg.attn_dim = j.value("attn_dim", 64);
  cfg.tf_layers = j.value("tf_layers", 2);
  cfg.tf_heads = j.value("tf_heads", 4);
  return cfg;
}

namespace {

Mat glorot(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Mat out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = dist(rng);
  return out;
}

Mat normal_init(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Mat out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = dist(rng);
  return out;
}

std::vector<int> content_ids(const TokenizedText& tok, std::vector<int>* positions) {
  std::vector<int> ids;
  for (int i = 0; i < tok.length(); ++i) {
    if (tok.validity[i]) {
      ids.push_back(tok.token_ids[i]);
      if (positions) positions->push_back(i);
    }
  }
  return ids;
}

class BowModel final : public Model {
 public:
  BowModel(ModelConfig cfg, std::uint64_t seed) : Model(std::move(cfg)) {
    std::mt19937_64 rng(seed);
    params_.add("embed", normal_init(rng, config_.vocab_size, config_.embed_dim, 0.1));
    params_.add("head.W", glorot(rng, config_.embed_dim, config_.num_classes));
    params_.add("head.b", Mat::Zero(1, config_.num_classes));
  }

  bool has_attention() const override { return false; }

  GraphOutput build_graph(ad::Tape& tape, const TokenizedText& tok) override {
    GraphOutput out;
    auto ids = content_ids(tok, &out.content_positions);
    int h;
    if (ids.empty()) {
      h = tape.input(Mat::Zero(1, config_.embed_dim));
    } else {
      h = tape.mean_over_rows(tape.embedding(params_.get("embed"), ids));
    }
    out.hidden_cls = h;
    out.logits = tape.add_rowvec_param(tape.matmul_param(h, params_.get("head.W")),
                                       params_.get("head.b"));
    return out;
  }
};

class CnnModel final : public Model {
 public:
  CnnModel(ModelConfig cfg, std::uint64_t seed) : Model(std::move(cfg)) {
    std::mt19937_64 rng(seed);
    params_.add("embed", normal_init(rng, config_.vocab_size, config_.embed_dim, 0.1));
    for (int w : config_.cnn_widths) {
      for (int k = 0; k < w; ++k) {
        params_.add("conv" + std::to_string(w) + ".W" + std::to_string(k),
                    glorot(rng, config_.embed_dim, config_.cnn_filters));
      }
      params_.add("conv" + std::to_string(w) + ".b", Mat::Zero(1, config_.cnn_filters));
    }
    const int pooled = config_.cnn_filters * static_cast<int>(config_.cnn_widths.size());
    params_.add("head.W", glorot(rng, pooled, config_.num_classes));
    params_.add("head.b", Mat::Zero(1, config_.num_classes));
  }

  bool has_attention() const override { return false; }

  GraphOutput build_graph(ad::Tape& tape, const TokenizedText& tok) override {
    GraphOutput out;
    auto ids = content_ids(tok, &out.content_positions);
    const int max_width = *std::max_element(config_.cnn_widths.begin(), config_.cnn_widths.end());
    int emb;
    int rows_avail = static_cast<int>(ids.size());
    if (ids.empty()) {
      emb = tape.input(Mat::Zero(max_width, config_.embed_dim));
      rows_avail = max_width;
    } else {
      emb = tape.embedding(params_.get("embed"), ids);
      if (rows_avail < max_width) {
        // short sequences are zero-padded up to the widest filter
        const int pad = max_width - rows_avail;
        emb = tape.concat_rows({emb, tape.input(Mat::Zero(pad, config_.embed_dim))});
        rows_avail = max_width;
      }
    }
    std::vector<int> pooled;
    for (int w : config_.cnn_widths) {
      const int windows = rows_avail - w + 1;
      int acc = -1;
      for (int k = 0; k < w; ++k) {
        const int part = tape.matmul_param(
            tape.rows(emb, k, windows),
            params_.get("conv" + std::to_string(w) + ".W" + std::to_string(k)));
        acc = (acc < 0) ? part : tape.add(acc, part);
      }
      acc = tape.add_rowvec_param(acc, params_.get("conv" + std::to_string(w) + ".b"));
      pooled.push_back(tape.max_over_rows(tape.relu_(acc)));
    }
    int h = pooled[0];
    for (std::size_t i = 1; i < pooled.size(); ++i) h = tape.concat_cols(h, pooled[i]);
    out.hidden_cls = h;
    out.logits = tape.add_rowvec_param(tape.matmul_param(h, params_.get("head.W")),
                                       params_.get("head.b"));
    return out;
  }
};

class BiRnnModel final : public Model {
 public:
  BiRnnModel(ModelConfig cfg, std::uint64_t seed, bool with_attention)
      : Model(std::move(cfg)), with_attention_(with_attention) {
    std::mt19937_64 rng(seed);
    const int e = config_.embed_dim;
    const int h = config_.hidden_dim;
    params_.add("embed", normal_init(rng, config_.vocab_size, e, 0.1));
    for (const char* dir : {"fwd", "bwd"}) {
      params_.add(std::string("rnn.") + dir + ".Wx", glorot(rng, e, h));
      params_.add(std::string("rnn.") + dir + ".Wh", glorot(rng, h, h));
      params_.add(std::string("rnn.") + dir + ".b", Mat::Zero(1, h));
    }
    if (with_attention_) {
      params_.add("attn.W", glorot(rng, 2 * h, config_.attn_dim));
      params_.add("attn.b", Mat::Zero(1, config_.attn_dim));
      params_.add("attn.v", glorot(rng, config_.attn_dim, 1));
    }
    params_.add("head.W", glorot(rng, 2 * h, config_.num_classes));
    params_.add("head.b", Mat::Zero(1, config_.num_classes));
  }

  bool has_attention() const override { return with_attention_; }

  GraphOutput build_graph(ad::Tape& tape, const TokenizedText& tok) override {
    GraphOutput out;
    auto ids = content_ids(tok, &out.content_positions);
    const int V = static_cast<int>(ids.size());
    const int h = config_.hidden_dim;
    int pooled;
    if (V == 0) {
      pooled = tape.input(Mat::Zero(1, 2 * h));
      out.content_positions.clear();
    } else {
      const int emb = tape.embedding(params_.get("embed"), ids);
      auto run_direction = [&](bool forward) {
        auto& wx = params_.get(forward ? "rnn.fwd.Wx" : "rnn.bwd.Wx");
        auto& wh = params_.get(forward ? "rnn.fwd.Wh" : "rnn.bwd.Wh");
        auto& b = params_.get(forward ? "rnn.fwd.b" : "rnn.bwd.b");
        std::vector<int> states(V);
        int prev = tape.input(Mat::Zero(1, h));
        for (int step = 0; step < V; ++step) {
          const int t = forward ? step : V - 1 - step;
          const int x = tape.rows(emb, t, 1);
          const int pre = tape.add_rowvec_param(
              tape.add(tape.matmul_param(x, wx), tape.matmul_param(prev, wh)), b);
          prev = tape.tanh_(pre);
          states[t] = prev;
        }
        return tape.concat_rows(states);
      };
      const int H = tape.concat_cols(run_direction(true), run_direction(false));
      if (with_attention_) {
        const int scores = tape.matmul_param(
            tape.tanh_(tape.add_rowvec_param(tape.matmul_param(H, params_.get("attn.W")),
                                             params_.get("attn.b"))),
            params_.get("attn.v"));
        const int a = tape.softmax_masked(scores, std::vector<std::uint8_t>(V, 1));
        out.attention = a;
        pooled = tape.matmul(tape.transpose(a), H);
      } else {
        pooled = tape.max_over_rows(H);
      }
    }
    out.hidden_cls = pooled;
    out.logits = tape.add_rowvec_param(tape.matmul_param(pooled, params_.get("head.W")),
                                       params_.get("head.b"));
    return out;
  }

 private:
  bool with_attention_;
};

class TransformerModel final : public Model {
 public:
  TransformerModel(ModelConfig cfg, std::uint64_t seed) : Model(std::move(cfg)) {
    if (config_.hidden_dim % config_.tf_heads != 0)
      throw ConfigError("transformer width must be divisible by head count");
    std::mt19937_64 rng(seed);
    const int d = config_.hidden_dim;
    params_.add("embed", normal_init(rng, config_.vocab_size, d, 0.02));
    params_.add("pos", normal_init(rng, config_.max_len, d, 0.02));
    for (int l = 0; l < config_.tf_layers; ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      for (const char* name : {"Wq", "Wk", "Wv", "Wo"}) params_.add(p + name, glorot(rng, d, d));
      for (const char* name : {"bq", "bk", "bv", "bo"}) params_.add(p + name, Mat::Zero(1, d));
      params_.add(p + "ln1.g", Mat::Ones(1, d));
      params_.add(p + "ln1.b", Mat::Zero(1, d));
      params_.add(p + "ffn.W1", glorot(rng, d, 4 * d));
      params_.add(p + "ffn.b1", Mat::Zero(1, 4 * d));
      params_.add(p + "ffn.W2", glorot(rng, 4 * d, d));
      params_.add(p + "ffn.b2", Mat::Zero(1, d));
      params_.add(p + "ln2.g", Mat::Ones(1, d));
      params_.add(p + "ln2.b", Mat::Zero(1, d));
    }
    params_.add("head.W", glorot(rng, d, config_.num_classes));
    params_.add("head.b", Mat::Zero(1, config_.num_classes));
  }

  bool has_attention() const override { return true; }

  GraphOutput build_graph(ad::Tape& tape, const TokenizedText& tok) override {
    GraphOutput out;
    // pads contribute nothing; run on [CLS] + content + [SEP] only
    std::vector<int> ids;
    for (int i = 0; i < tok.length(); ++i) {
      if (tok.attendable[i]) {
        ids.push_back(tok.token_ids[i]);
        if (tok.validity[i]) out.content_positions.push_back(i);
      }
    }
    const int L = static_cast<int>(ids.size());
    const int V = static_cast<int>(out.content_positions.size());
    const int d = config_.hidden_dim;
    const int nh = config_.tf_heads;
    const int dk = d / nh;
    const std::vector<std::uint8_t> attend(static_cast<std::size_t>(L), 1);

    int x = tape.add(tape.embedding(params_.get("embed"), ids),
                     tape.param_rows(params_.get("pos"), 0, L));
    std::vector<int> cls_rows;  // per-head [CLS] attention rows, last layer
    for (int l = 0; l < config_.tf_layers; ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      const int q = tape.add_rowvec_param(tape.matmul_param(x, params_.get(p + "Wq")),
                                          params_.get(p + "bq"));
      const int k = tape.add_rowvec_param(tape.matmul_param(x, params_.get(p + "Wk")),
                                          params_.get(p + "bk"));
      const int v = tape.add_rowvec_param(tape.matmul_param(x, params_.get(p + "Wv")),
                                          params_.get(p + "bv"));
      int ctx = -1;
      for (int hh = 0; hh < nh; ++hh) {
        const int qh = tape.cols(q, hh * dk, dk);
        const int kh = tape.cols(k, hh * dk, dk);
        const int vh = tape.cols(v, hh * dk, dk);
        const int scores = tape.scale(tape.matmul_nt(qh, kh), 1.0 / std::sqrt(double(dk)));
        const int attn = tape.row_softmax_masked(scores, attend);
        if (l == config_.tf_layers - 1) cls_rows.push_back(tape.rows(attn, 0, 1));
        const int ctx_h = tape.matmul(attn, vh);
        ctx = (ctx < 0) ? ctx_h : tape.concat_cols(ctx, ctx_h);
      }
      const int o = tape.add_rowvec_param(tape.matmul_param(ctx, params_.get(p + "Wo")),
                                          params_.get(p + "bo"));
      x = tape.layer_norm(tape.add(x, o), params_.get(p + "ln1.g"), params_.get(p + "ln1.b"));
      const int f = tape.add_rowvec_param(
          tape.matmul_param(
              tape.gelu_(tape.add_rowvec_param(tape.matmul_param(x, params_.get(p + "ffn.W1")),
                                               params_.get(p + "ffn.b1"))),
              params_.get(p + "ffn.W2")),
          params_.get(p + "ffn.b2"));
      x = tape.layer_norm(tape.add(x, f), params_.get(p + "ln2.g"), params_.get(p + "ln2.b"));
    }

    if (V > 0) {
      // mean over heads of the [CLS] query row, restricted to content
      // positions and renormalized
      int acc = cls_rows[0];
      for (std::size_t hh = 1; hh < cls_rows.size(); ++hh) acc = tape.add(acc, cls_rows[hh]);
      const int avg = tape.transpose(tape.scale(acc, 1.0 / nh));
      const int content = tape.rows(avg, 1, V);  // content sits at rows 1..V
      const int mass = tape.sum_all(content);
      if (tape.value(mass)(0, 0) > 1e-8) {
        out.attention = tape.div_by_scalar(content, mass);
      } else {
        out.attention = tape.input(Mat::Constant(V, 1, 1.0 / V));
        out.attention_fallback_uniform = true;
      }
    }
    out.hidden_cls = tape.rows(x, 0, 1);
    out.logits = tape.add_rowvec_param(tape.matmul_param(out.hidden_cls, params_.get("head.W")),
                                       params_.get("head.b"));
    return out;
  }
};

struct TransformerPreset {
  int layers;
  int dim;
  int heads;
};

const std::map<std::string, TransformerPreset>& preset_registry() {
  static const std::map<std::string, TransformerPreset> presets = {
      {"tiny-2l-64d", {2, 64, 4}},
      {"mini-4l-128d", {4, 128, 4}},
  };
  return presets;
}

std::unique_ptr<Model> make_model(const ModelConfig& cfg, std::uint64_t seed) {
  switch (cfg.kind) {
    case ModelKind::bow: return std::make_unique<BowModel>(cfg, seed);
    case ModelKind::cnn: return std::make_unique<CnnModel>(cfg, seed);
    case ModelKind::birnn_max: return std::make_unique<BiRnnModel>(cfg, seed, false);
    case ModelKind::birnn_attn: return std::make_unique<BiRnnModel>(cfg, seed, true);
    case ModelKind::transformer: return std::make_unique<TransformerModel>(cfg, seed);
  }
  throw ConfigError("unknown model kind");
}

}  // namespace

std::vector<std::string> transformer_presets() {
  std::vector<std::string> out;
  for (const auto& [name, spec] : preset_registry()) out.push_back(name);
  return out;
}

std::unique_ptr<Model> build_model(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.num_classes != 2 && cfg.num_classes != 6)
    throw ConfigError("num_classes must be 2 or 6");
  if (cfg.max_len < 2) throw ConfigError("max_len must be >= 2");
  if (cfg.vocab_size < Tokenizer::kNumSpecialIds)
    throw ConfigError("vocab_size must cover the reserved special tokens");

  if (cfg.kind != ModelKind::transformer) return make_model(cfg, seed);

  const auto& presets = preset_registry();
  if (auto it = presets.find(cfg.encoder_id); it != presets.end()) {
    ModelConfig resolved = cfg;
    resolved.tf_layers = it->second.layers;
    resolved.hidden_dim = it->second.dim;
    resolved.embed_dim = it->second.dim;
    resolved.tf_heads = it->second.heads;
    return make_model(resolved, seed);
  }
  if (fs::is_directory(cfg.encoder_id)) {
    auto loaded = load_checkpoint(cfg.encoder_id);
    if (loaded.model->config().kind != ModelKind::transformer)
      throw BackendError("encoder_id checkpoint is not a transformer: " + cfg.encoder_id);
    if (loaded.model->config().num_classes != cfg.num_classes)
      throw ConfigError("checkpoint class count does not match requested config");
    return std::move(loaded.model);
  }
  throw BackendError("unknown encoder_id: \"" + cfg.encoder_id + "\" (presets: " +
                     [] {
                       std::string s;
                       for (const auto& [name, spec] : preset_registry()) {
                         if (!s.empty()) s += ", ";
                         s += name;
                       }
                       return s;
                     }() +
                     ", or a checkpoint directory)");
}

ForwardOutput forward_one(Model& model, const TokenizedText& tok) {
  ad::Tape tape;
  const GraphOutput g = model.build_graph(tape, tok);
  ForwardOutput out;
  out.logits = tape.value(g.logits).row(0).transpose();
  Eigen::ArrayXd shifted = (out.logits.array() - out.logits.maxCoeff()).exp();
  out.probs = (shifted / shifted.sum()).matrix();
  out.hidden_cls = tape.value(g.hidden_cls).row(0).transpose();
  int best = 0;
  for (int c = 1; c < out.logits.size(); ++c)
    if (out.logits(c) > out.logits(best)) best = c;
  out.predicted = best;
  if (g.attention >= 0) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(tok.length());
    const Mat& a = tape.value(g.attention);
    for (std::size_t i = 0; i < g.content_positions.size(); ++i)
      full(g.content_positions[i]) = a(static_cast<Eigen::Index>(i), 0);
    out.attention = std::move(full);
  }
  return out;
}

std::vector<ForwardOutput> forward_classify(Model& model,
                                            const std::vector<TokenizedText>& batch) {
  std::vector<ForwardOutput> out;
  out.reserve(batch.size());
  for (const auto& tok : batch) {
    if (!batch.empty() && tok.length() != batch.front().length())
      throw ShapeError("batch members must share one padded length");
    out.push_back(forward_one(model, tok));
  }
  return out;
}

AttentionDistribution extract_attention(const ForwardOutput& out) {
  if (!out.attention) throw NoAttention("model kind exposes no attention distribution");
  return AttentionDistribution{*out.attention};
}

Eigen::VectorXd average_cls_attention(const std::vector<Eigen::VectorXd>& head_rows,
                                      const std::vector<std::uint8_t>& content_mask,
                                      bool* fallback_uniform) {
  if (head_rows.empty()) throw ValueError("need at least one attention head");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(head_rows[0].size());
  for (const auto& row : head_rows) {
    if (row.size() != mean.size()) throw ShapeError("attention head rows disagree on length");
    mean += row;
  }
  mean /= static_cast<double>(head_rows.size());
  if (static_cast<std::size_t>(mean.size()) != content_mask.size())
    throw ShapeError("content mask length mismatch");
  double mass = 0;
  int n_content = 0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    if (!content_mask[static_cast<std::size_t>(i)]) {
      mean(i) = 0;
    } else {
      mass += mean(i);
      ++n_content;
    }
  }
  if (n_content == 0) throw EmptyInput("no content positions to attend to");
  if (fallback_uniform) *fallback_uniform = false;
  if (mass > 1e-8) {
    mean /= mass;
  } else {
    if (fallback_uniform) *fallback_uniform = true;
    for (Eigen::Index i = 0; i < mean.size(); ++i)
      mean(i) = content_mask[static_cast<std::size_t>(i)] ? 1.0 / n_content : 0.0;
  }
  return mean;
}

void save_checkpoint(const Model& model, const std::string& dir, std::uint64_t seed) {
  fs::create_directories(dir);
  {
    std::ofstream meta(fs::path(dir) / "model.json");
    if (!meta) throw IoError("cannot write checkpoint metadata in " + dir);
    json j;
    j["config"] = json::parse(model_config_to_json(model.config()));
    j["seed"] = seed;
    meta << j.dump(2) << '\n';
  }
  std::ofstream bin(fs::path(dir) / "model.bin", std::ios::binary);
  if (!bin) throw IoError("cannot write checkpoint weights in " + dir);
  const char magic[8] = {'S', 'M', 'R', 'A', 'C', 'K', 'P', 'T'};
  bin.write(magic, sizeof(magic));
  const auto& params = model.params().all();
  const auto count = static_cast<std::uint32_t>(params.size());
  bin.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& p : params) {
    const auto name_len = static_cast<std::uint32_t>(p->name.size());
    bin.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
    bin.write(p->name.data(), name_len);
    const std::int64_t rows = p->value.rows();
    const std::int64_t cols = p->value.cols();
    bin.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    bin.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    bin.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * p->value.size()));
  }
}

LoadedCheckpoint load_checkpoint(const std::string& dir,
                                 const std::optional<ModelConfig>& expected) {
  std::ifstream meta(fs::path(dir) / "model.json");
  if (!meta) throw IoError("no checkpoint metadata in " + dir);
  json j = json::parse(meta);
  ModelConfig cfg = model_config_from_json(j.at("config").dump());
  const auto seed = j.at("seed").get<std::uint64_t>();
  if (expected && !(cfg == *expected))
    throw ConfigError("checkpoint config does not match the expected configuration");

  LoadedCheckpoint out;
  out.seed = seed;
  out.model = make_model(cfg, seed);

  std::ifstream bin(fs::path(dir) / "model.bin", std::ios::binary);
  if (!bin) throw IoError("no checkpoint weights in " + dir);
  char magic[8];
  bin.read(magic, sizeof(magic));
  if (std::memcmp(magic, "SMRACKPT", 8) != 0) throw IoError("bad checkpoint magic in " + dir);
  std::uint32_t count = 0;
  bin.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (count != out.model->params().all().size())
    throw IoError("checkpoint parameter count mismatch");
  for (auto& p : out.model->params().all()) {
    std::uint32_t name_len = 0;
    bin.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    std::string name(name_len, '\0');
    bin.read(name.data(), name_len);
    std::int64_t rows = 0, cols = 0;
    bin.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    bin.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols())
      throw IoError("checkpoint parameter layout mismatch at " + name);
    bin.read(reinterpret_cast<char*>(p->value.data()),
             static_cast<std::streamsize>(sizeof(double) * p->value.size()));
  }
  if (!bin) throw IoError("truncated checkpoint weights in " + dir);
  return out;
}

}  // namespace smra
