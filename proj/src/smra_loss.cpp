#include "smra/smra_loss.hpp"

#include <cmath>

#include "smra/errors.hpp"

namespace smra {

const char* to_string(Task task) { return task == Task::hate ? "hate" : "moral"; }

Task task_from_string(const std::string& s) {
  if (s == "hate") return Task::hate;
  if (s == "moral") return Task::moral;
  throw ValueError("unknown task: " + s);
}

double attention_alignment_loss(const Eigen::VectorXd& attention, const RationaleMask& mask,
                                const std::vector<std::uint8_t>& validity) {
  if (static_cast<std::size_t>(attention.size()) != mask.values.size() ||
      mask.values.size() != validity.size()) {
    throw ShapeError("attention, mask and validity must share one length");
  }
  int total = 0;
  int V = 0;
  for (std::size_t i = 0; i < validity.size(); ++i) {
    if (!validity[i]) continue;
    ++V;
    total += mask.values[i];
  }
  if (total == 0) throw EmptyRationale("alignment loss needs a non-empty rationale");
  // packed into a dense vector so the reduction order matches the graph
  // route bit for bit
  Eigen::VectorXd sq(V);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < validity.size(); ++i) {
    if (!validity[i]) continue;
    const double target = mask.values[i] ? 1.0 / total : 0.0;
    const double diff = attention(static_cast<Eigen::Index>(i)) - target;
    sq(at++) = diff * diff;
  }
  return (1.0 / V) * sq.sum();
}

int alignment_gate(int label_index, Task task, const RationaleMask& mask) {
  const bool label_on = task == Task::moral
                            ? label_index != moral_label_index(MoralLabel::NN)
                            : label_index == 1;  // hate classes: {NonHate=0, Hate=1}
  return (label_on && mask.sum() > 0) ? 1 : 0;
}

namespace {

double cross_entropy(const Eigen::VectorXd& logits, int gold) {
  if (gold < 0 || gold >= logits.size()) throw ValueError("gold class out of range");
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return lse - logits(gold);
}

}  // namespace

LossBreakdown total_loss(const Eigen::VectorXd& logits, int gold,
                         const std::optional<Eigen::VectorXd>& attention,
                         const std::optional<RationaleMask>& mask,
                         const std::vector<std::uint8_t>& validity, double alpha, Task task) {
  if (alpha < 0) throw ValueError("alpha must be >= 0");
  LossBreakdown out;
  out.alpha = alpha;
  out.ce = cross_entropy(logits, gold);
  out.gate = mask ? alignment_gate(gold, task, *mask) : 0;
  if (out.gate == 1 && alpha > 0 && attention) {
    out.aal = attention_alignment_loss(*attention, *mask, validity);
    out.total = out.ce + alpha * out.gate * out.aal;
  } else {
    // keep the reported gate but exclude the term exactly as the graph does
    out.aal = 0.0;
    out.total = out.ce;
  }
  return out;
}

LossNodes attach_loss(ad::Tape& tape, int logits_node, int gold, int attention_node,
                      const std::optional<RationaleMask>& mask,
                      const std::vector<int>& content_positions, double alpha, Task task,
                      bool alignment_enabled) {
  LossNodes out;
  out.ce = tape.cross_entropy_logits(logits_node, gold);
  // gate is reported for logging even when the term is compiled out
  out.gate = mask ? alignment_gate(gold, task, *mask) : 0;
  const bool attach = alignment_enabled && alpha > 0 && out.gate == 1 && attention_node >= 0 &&
                      !content_positions.empty();
  if (!attach) {
    out.total = out.ce;
    return out;
  }
  const auto target_full = normalize_mask(*mask);
  Eigen::MatrixXd target(static_cast<Eigen::Index>(content_positions.size()), 1);
  for (std::size_t row = 0; row < content_positions.size(); ++row) {
    target(static_cast<Eigen::Index>(row), 0) =
        target_full[static_cast<std::size_t>(content_positions[row])];
  }
  const int diff = tape.sub(attention_node, tape.input(std::move(target)));
  const int aal =
      tape.scale(tape.sum_all(tape.mul(diff, diff)),
                 1.0 / static_cast<double>(content_positions.size()));
  out.aal = aal;
  out.total = tape.add(out.ce, tape.scale(aal, alpha));
  return out;
}

}  // namespace smra
