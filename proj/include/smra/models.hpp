#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smra/tape.hpp"
#include "smra/tokenize.hpp"

namespace smra {

enum class ModelKind { transformer, bow, cnn, birnn_max, birnn_attn };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);  // throws ValueError

struct ModelConfig {
  ModelKind kind = ModelKind::birnn_attn;
  std::string encoder_id;  // transformer only: preset name or checkpoint path
  int num_classes = 2;     // 2 for the hate task, 6 for the moral task
  int max_len = 128;
  int hidden_dim = 128;  // per direction for BiRNN, model width for transformer
  int embed_dim = 64;
  int vocab_size = 0;
  int cnn_filters = 100;
  std::vector<int> cnn_widths = {3, 4, 5};
  int attn_dim = 64;  // additive-attention scorer width (birnn_attn)
  int tf_layers = 2;
  int tf_heads = 4;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

// Per-instance forward graph handles. attention (when present) is a column
// vector over the content tokens listed in content_positions, already
// normalized to sum 1; the alignment loss attaches to it directly.
struct GraphOutput {
  int logits = -1;
  int attention = -1;
  int hidden_cls = -1;
  std::vector<int> content_positions;
  bool attention_fallback_uniform = false;  // degenerate renormalization hit
};

// Probability-normalized attention over the full padded length, zero on
// special and pad positions.
struct AttentionDistribution {
  Eigen::VectorXd a;
};

struct ForwardOutput {
  Eigen::VectorXd logits;
  Eigen::VectorXd probs;
  std::optional<Eigen::VectorXd> attention;  // full padded length
  Eigen::VectorXd hidden_cls;
  int predicted = 0;
};

class Model {
 public:
  explicit Model(ModelConfig cfg) : config_(std::move(cfg)) {}
  virtual ~Model() = default;

  const ModelConfig& config() const { return config_; }
  ad::ParamStore& params() { return params_; }
  const ad::ParamStore& params() const { return params_; }

  virtual bool has_attention() const = 0;
  virtual GraphOutput build_graph(ad::Tape& tape, const TokenizedText& tok) = 0;

 protected:
  ModelConfig config_;
  ad::ParamStore params_;
};

// Validates the config (C in {2,6}, max_len >= 2, known encoder_id for the
// transformer kind) and initializes parameters deterministically from seed.
// Transformer encoder_id resolves against a preset registry or an existing
// checkpoint directory; anything else is a BackendError.
std::unique_ptr<Model> build_model(const ModelConfig& cfg, std::uint64_t seed);

// Preset transformer widths available to encoder_id.
std::vector<std::string> transformer_presets();

ForwardOutput forward_one(Model& model, const TokenizedText& tok);

// All tokenizations must share one padded length; throws ShapeError otherwise.
std::vector<ForwardOutput> forward_classify(Model& model,
                                            const std::vector<TokenizedText>& batch);

// Throws NoAttention when the forward output carries none.
AttentionDistribution extract_attention(const ForwardOutput& out);

// Mean over per-head [CLS] attention rows, zero non-content positions,
// renormalize; falls back to uniform over content when the residual mass
// is below 1e-8. Mirrors the in-graph extraction; kept as a free function
// so tests can cross-check the two routes.
Eigen::VectorXd average_cls_attention(const std::vector<Eigen::VectorXd>& head_rows,
                                      const std::vector<std::uint8_t>& content_mask,
                                      bool* fallback_uniform = nullptr);

void save_checkpoint(const Model& model, const std::string& dir, std::uint64_t seed);

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  std::uint64_t seed = 0;
};

// Loads config + weights; when `expected` is given, the stored config must
// compare equal.
LoadedCheckpoint load_checkpoint(const std::string& dir,
                                 const std::optional<ModelConfig>& expected = std::nullopt);

}  // namespace smra
