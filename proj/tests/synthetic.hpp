#pragma once

// Synthetic corpora for trainer and acceptance tests: label-bearing
// "planted" tokens inside filler noise, with the planted words annotated
// as rationale spans.

#include <random>
#include <string>
#include <vector>

#include "smra/corpus.hpp"

namespace synthetic {

struct PlantedSpec {
  int n = 2000;
  std::uint64_t seed = 1;
  int len_min = 16;
  int len_max = 22;
  int planted_per_instance = 2;
  int filler_vocab = 40;
  int class_vocab = 5;  // planted word types per class
  // Correlated distractors: echo tokens predict the label with
  // echo_fidelity but never determine it. They give cross-entropy a
  // cheap shortcut, so unsupervised attention spreads across echoes and
  // planted tokens alike.
  int echo_per_instance = 0;
  int echo_vocab = 10;  // split into two label-leaning halves
  double echo_fidelity = 0.9;
};

// Each instance: filler words plus `planted_per_instance` words drawn from
// the label's class vocabulary at random positions (these determine the
// label and are the annotated rationale), plus optional echo distractors.
// Hate instances carry an HN annotation over the planted words; non-hate
// ones are NN with no spans, matching the corpus schema where only
// moral-bearing instances have rationales.
inline std::vector<smra::Instance> planted_rationale_corpus(const PlantedSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> len_dist(spec.len_min, spec.len_max);
  std::uniform_int_distribution<int> filler_dist(0, spec.filler_vocab - 1);
  std::uniform_int_distribution<int> class_word_dist(0, spec.class_vocab - 1);

  std::vector<smra::Instance> out;
  out.reserve(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    const int label = i % 2;  // balanced
    const int len = len_dist(rng);
    std::vector<std::string> words(static_cast<std::size_t>(len));
    for (auto& w : words) w = "fill" + std::to_string(filler_dist(rng));

    // distinct positions for planted rationale tokens and echo distractors
    std::vector<int> taken;
    auto fresh_position = [&]() {
      while (true) {
        const int p = std::uniform_int_distribution<int>(0, len - 1)(rng);
        if (std::find(taken.begin(), taken.end(), p) == taken.end()) {
          taken.push_back(p);
          return p;
        }
      }
    };
    std::vector<int> positions;
    for (int k = 0; k < spec.planted_per_instance; ++k) positions.push_back(fresh_position());
    for (const int p : positions) {
      words[static_cast<std::size_t>(p)] =
          (label == 1 ? "alarm" : "plain") + std::to_string(class_word_dist(rng));
    }
    if (spec.echo_per_instance > 0) {
      const int half = spec.echo_vocab / 2;
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const int room = len - static_cast<int>(taken.size());
      for (int k = 0; k < std::min(spec.echo_per_instance, room); ++k) {
        const bool leans_label = unit(rng) < spec.echo_fidelity;
        const int side = leans_label ? label : 1 - label;
        const int word = std::uniform_int_distribution<int>(0, half - 1)(rng);
        words[static_cast<std::size_t>(fresh_position())] =
            "echo" + std::to_string(side * half + word);
      }
    }

    std::string text;
    std::vector<int> word_begin(words.size());
    for (std::size_t w = 0; w < words.size(); ++w) {
      if (!text.empty()) text += ' ';
      word_begin[w] = static_cast<int>(text.size());  // ASCII text: bytes == code points
      text += words[w];
    }

    smra::RationaleAnnotation ann;
    ann.label = label == 1 ? smra::MoralLabel::HN : smra::MoralLabel::NN;
    ann.order = 1;
    if (label == 1) {
      std::sort(positions.begin(), positions.end());
      for (const int p : positions) {
        ann.spans.push_back({word_begin[static_cast<std::size_t>(p)],
                             word_begin[static_cast<std::size_t>(p)] +
                                 static_cast<int>(words[static_cast<std::size_t>(p)].size())});
      }
    }

    smra::Instance inst;
    inst.id = "synth-" + std::to_string(i);
    inst.text = std::move(text);
    inst.hate_label = label == 1 ? smra::HateLabel::Hate : smra::HateLabel::NonHate;
    inst.moral_annotations.push_back(std::move(ann));
    out.push_back(std::move(inst));
  }
  return out;
}

inline smra::DatasetSplit planted_split(const PlantedSpec& spec) {
  return smra::split_dataset(planted_rationale_corpus(spec), smra::SplitRatios{}, spec.seed);
}

// Trivially separable two-class corpus (single strong keyword per class).
inline std::vector<smra::Instance> separable_corpus(int n, std::uint64_t seed) {
  PlantedSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.len_min = 6;
  spec.len_max = 10;
  spec.planted_per_instance = 2;
  spec.filler_vocab = 12;
  spec.class_vocab = 2;
  return planted_rationale_corpus(spec);
}

}  // namespace synthetic
