// Synthetic dialogue corpora with planted quadruples and cross-thread
// distractor mentions. Entity tokens come from role-specific word pools and
// sentiment is carried by the opinion token's class, so the task is exactly
// learnable at desk scale while pairing decisions still require thread and
// position information.
#pragma once

#include <string>
#include <vector>

#include "tcda/dialogue.hpp"

namespace tcda {

struct SyntheticSpec {
  int vocab_size = 40;  // filler word pool
  int min_utterances = 6;
  int max_utterances = 10;
  int branching = 3;  // root children; threads are chains
  int speakers = 3;
  int quads_per_dialogue = 2;
  int num_dialogues = 20;
  int min_tokens = 2;  // filler tokens per utterance
  int max_tokens = 4;
  int distractors = 2;  // unpaired entity mentions in other threads
  uint64_t seed = 1;

  void validate() const;
  std::string serialize() const;
  static SyntheticSpec parse(const std::string& json_text);
};

std::vector<Dialogue> gen_synthetic(const SyntheticSpec& spec);

}  // namespace tcda
