// Thread-level feature extraction: vocabulary, lightweight self-attention
// encoder over wrapped threads, dual-branch graph-convolution knowledge
// encoder with root averaging, top-k utterance aggregation and the
// global-local cross-attention fusion.
#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tcda/dialogue.hpp"
#include "tcda/param_store.hpp"
#include "tcda/tensor.hpp"

namespace tcda {

struct Vocab {
  static constexpr int kUnk = 0;
  static constexpr int kCls = 1;
  std::vector<std::string> words;
  std::unordered_map<std::string, int> index;

  Vocab();
  int add(const std::string& w);
  int lookup(const std::string& w) const;  // kUnk when missing
  int size() const { return int(words.size()); }
  static std::string speaker_word(const std::string& speaker);

  std::string serialize() const;
  static Vocab deserialize(const std::string& text);
};

Vocab build_vocab(const std::vector<Dialogue>& dialogues);

// One thread's wrapped token sequence with its global wrapped indices and the
// start offset of every utterance block inside the thread.
struct ThreadLayout {
  std::vector<int> token_ids;        // vocab ids, thread order
  std::vector<int> global_index;     // thread position -> global wrapped index
  std::vector<int> utterance_ids;    // utterances in thread order (root first)
  std::vector<int> block_offset;     // per utterance in thread, local row start
  std::vector<int> block_len;
};

std::vector<ThreadLayout> make_thread_layouts(const Dialogue& d,
                                              const ThreadDecomposition& td,
                                              const TokenIndexMap& tim,
                                              const Vocab& vocab);

struct EncoderConfig {
  int dim = 64;
  int depth = 2;
  int gcn_layers = 3;
  double topk_ratio = 0.8;
};

void register_encoder_params(ParamStore& ps, const EncoderConfig& cfg, int vocab_size);

// Token embeddings + sinusoidal intra-thread positions through a small
// self-attention stack; threads are encoded independently.
Tensor embed_encode(const ThreadLayout& thread, const ParamStore& ps,
                    const EncoderConfig& cfg);

struct ThreadAdjacency {
  std::vector<double> syn;  // L x L binary, no self loops
  std::vector<double> sem;
};

// Parser-free stand-ins: syn links distance-1 content neighbours plus
// wrapper-to-content edges inside each utterance; sem is a symmetrised top-k
// cosine graph over the thread features, ties broken toward lower index.
ThreadAdjacency default_adjacency(const ThreadLayout& thread,
                                  const TokenIndexMap& tim,
                                  const Tensor& features, int k = 3);

// External adjacency override: pairs of global wrapped indices.
struct AdjacencyOverride {
  std::vector<std::pair<int, int>> syn, sem;
};

ThreadAdjacency restrict_override(const AdjacencyOverride& ov,
                                  const ThreadLayout& thread);

// Dual-branch GCN over one thread: sum of syntactic and semantic stacks.
Tensor ck_thread_gcn(const Tensor& h_thread, const ThreadAdjacency& adj,
                     const ParamStore& ps, const EncoderConfig& cfg);

// Reassemble thread-local rows onto the global wrapped axis, averaging the
// root block across threads, then fuse with a residual + layer norm.
struct CkOutputs {
  Tensor h_tok;        // global original features (root averaged)
  Tensor h_tok_fused;  // LN(h_tok + h_knowledge)
};

CkOutputs ck_encode(const Dialogue& d, const TokenIndexMap& tim,
                    const std::vector<ThreadLayout>& layouts,
                    const std::vector<Tensor>& thread_feats,
                    const ParamStore& ps, const EncoderConfig& cfg,
                    const std::optional<AdjacencyOverride>& override_adj);

// Gate-scored top-k mean pooling per utterance (content tokens only).
Tensor topk_aggregate(const Tensor& h_tok, const Dialogue& d,
                      const TokenIndexMap& tim, double ratio,
                      const ParamStore& ps);

// Tokens attend over utterances: scaled single-head cross attention with a
// residual + layer norm.
Tensor global_local_interact(const Tensor& h_tok, const Tensor& h_utt,
                             const ParamStore& ps);

}  // namespace tcda
