// Threaded-dialogue data model: parsing, validation, thread decomposition and
// the dual-scale token coordinate map.
//
// File schema (one JSON object per line, or a single object per file):
//   {"doc_id": str,
//    "sentences": [{"speaker": str, "tokens": [str], "reply": int}],
//    "quadruples": [{"target": [s,e], "aspect": [s,e], "opinion": [s,e],
//                    "sentiment": "pos|neg|neu"}]}
// "reply" is the 0-based index of the replied-to sentence, -1 (or absent) for
// the root. Quadruple spans are 0-based inclusive indices into the flattened
// content tokens. Internally utterances are 1-based and every utterance block
// is wrapped as [CLS] w_1..w_m [SPK]; all internal token indices (including
// quadruple spans) refer to that wrapped flattening.
#pragma once

#include <string>
#include <vector>

#include "tcda/util.hpp"

namespace tcda {

struct Span {
  int start = -1;
  int end = -1;
  bool valid() const { return start >= 0 && end >= start; }
  bool operator==(const Span& o) const = default;
  auto operator<=>(const Span& o) const = default;
};

enum class Sentiment { Pos, Neg, Neu };
const char* sentiment_name(Sentiment s);
Sentiment sentiment_from_name(const std::string& s);

struct Quadruple {
  Span target, aspect, opinion;
  Sentiment sentiment = Sentiment::Neu;
  bool operator==(const Quadruple& o) const = default;
  auto operator<=>(const Quadruple& o) const = default;
};

struct Utterance {
  int id = 0;  // 1-based
  std::string speaker;
  int reply_to = 0;  // 1-based id of the parent, 0 for the root
  std::vector<std::string> tokens;
};

struct Dialogue {
  std::string doc_id;
  std::vector<Utterance> utterances;
  std::vector<Quadruple> gold;  // wrapped-axis spans
  int dropped_null_quads = 0;   // quadruples skipped by strict null handling

  int size() const { return int(utterances.size()); }
  const Utterance& utt(int id) const { return utterances[size_t(id) - 1]; }
  void validate() const;  // throws StructureError on any invariant breach
};

struct ThreadDecomposition {
  // Each thread starts with the root id 1 followed by the full subtree of one
  // root child in ascending id order. thread_of[id] is 1-based; the root maps
  // to 0, the marker that matches every thread.
  std::vector<std::vector<int>> threads;
  std::vector<int> thread_of;  // size N+1, index 0 unused

  int thread_count() const { return int(threads.size()); }
};

struct TokenInfo {
  int utterance_id = 0;
  int offset = 0;  // position inside the wrapped utterance block
  bool is_wrapper = false;
  int thread_id = 0;  // 0 for root-utterance tokens
  int p_tok = 0;      // cumulative topological distance from the global root
  int p_utt = 0;      // reply-path depth of the containing utterance
};

struct TokenIndexMap {
  std::vector<TokenInfo> tokens;  // wrapped flattening, utterance id order
  std::vector<int> block_start;   // size N+1; block_start[id] = first index
  int n_tokens() const { return int(tokens.size()); }

  int wrapped_index(int utt_id, int content_offset) const {
    return block_start[size_t(utt_id)] + 1 + content_offset;
  }
  // -1 for wrapper positions.
  int content_index(int wrapped) const;
};

Dialogue parse_dialogue(const std::string& json_text, bool allow_null_spans = false);
std::vector<Dialogue> load_dialogues(const std::string& path,
                                     bool allow_null_spans = false);
std::string dialogue_to_json(const Dialogue& d);
std::string prediction_to_json(const Dialogue& d, const std::vector<Quadruple>& pred);
void save_dialogues(const std::string& path, const std::vector<Dialogue>& ds);

ThreadDecomposition decompose_threads(const Dialogue& d);
TokenIndexMap build_token_index(const Dialogue& d, const ThreadDecomposition& td);

// True when tokens of threads a and b may interact as same-thread: equal ids,
// or either is the root marker 0.
inline bool same_thread(int tid_a, int tid_b) {
  return tid_a == 0 || tid_b == 0 || tid_a == tid_b;
}

}  // namespace tcda
