#pragma once

#include <Eigen/Dense>
#include <optional>

#include "smra/span_align.hpp"
#include "smra/tape.hpp"

namespace smra {

enum class Task { hate, moral };

const char* to_string(Task task);
Task task_from_string(const std::string& s);

// One instance's loss decomposition. The identity
//   total == ce + alpha * gate * aal
// holds exactly (same floating-point evaluation order everywhere).
struct LossBreakdown {
  double ce = 0.0;
  double aal = 0.0;
  int gate = 0;
  double alpha = 0.0;
  double total = 0.0;
};

// Mean squared error between the attention distribution and the
// normalized rationale mask, over content positions only:
//   (1/V) * sum_valid (a_i - r_i/sum(r))^2
// `attention` is indexed over the full padded length and must be zero on
// invalid positions (only validity positions enter the sum and V).
// Throws EmptyRationale when sum(r) == 0 and ShapeError on length mismatch.
double attention_alignment_loss(const Eigen::VectorXd& attention, const RationaleMask& mask,
                                const std::vector<std::uint8_t>& validity);

// Supervision gate. Moral task: on iff the label is not NN and the mask is
// non-empty. Hate task: on iff the label is Hate and the mask is non-empty
// (non-hate instances carry no moral rationale in this corpus).
int alignment_gate(int label_index, Task task, const RationaleMask& mask);

// Pure-scalar route used for reporting and as the oracle for the graph
// route in the trainer. `attention` may be absent (attention-free models).
LossBreakdown total_loss(const Eigen::VectorXd& logits, int gold,
                         const std::optional<Eigen::VectorXd>& attention,
                         const std::optional<RationaleMask>& mask,
                         const std::vector<std::uint8_t>& validity, double alpha, Task task);

// Graph route: attaches CE (and, when gated on, the alignment term) to an
// existing forward graph. attention_node is the content-restricted
// distribution (V x 1) or -1. The gate==0 and alpha==0 paths build exactly
// the CE-only graph so baseline trajectories match a build with the
// alignment term compiled out, bit for bit.
struct LossNodes {
  int total = -1;
  int ce = -1;
  int aal = -1;  // -1 when the alignment term is not in the graph
  int gate = 0;
};

LossNodes attach_loss(ad::Tape& tape, int logits_node, int gold, int attention_node,
                      const std::optional<RationaleMask>& mask,
                      const std::vector<int>& content_positions, double alpha, Task task,
                      bool alignment_enabled);

}  // namespace smra
