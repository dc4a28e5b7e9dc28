#include "tcda/synth.hpp"

#include <algorithm>

#include "json.hpp"

namespace tcda {

using nlohmann::json;

void SyntheticSpec::validate() const {
  if (vocab_size < 1 || min_utterances < 1 || max_utterances < min_utterances ||
      branching < 1 || speakers < 1 || num_dialogues < 1 || min_tokens < 1 ||
      max_tokens < min_tokens || quads_per_dialogue < 0 || distractors < 0)
    throw ConfigError("synthetic spec: inconsistent field values");
  if (quads_per_dialogue > branching)
    throw ConfigError(
        "synthetic spec: quads_per_dialogue exceeds thread capacity (one planted "
        "quadruple per thread)");
  if (min_utterances < 1 + quads_per_dialogue)
    throw ConfigError("synthetic spec: too few utterances for planted quadruples");
}

std::string SyntheticSpec::serialize() const {
  json j;
  j["vocab_size"] = vocab_size;
  j["min_utterances"] = min_utterances;
  j["max_utterances"] = max_utterances;
  j["branching"] = branching;
  j["speakers"] = speakers;
  j["quads_per_dialogue"] = quads_per_dialogue;
  j["num_dialogues"] = num_dialogues;
  j["min_tokens"] = min_tokens;
  j["max_tokens"] = max_tokens;
  j["distractors"] = distractors;
  j["seed"] = seed;
  return j.dump(2);
}

SyntheticSpec SyntheticSpec::parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("synthetic spec: invalid JSON: ") + e.what());
  }
  SyntheticSpec s;
  auto get = [&j](const char* key, auto& dst) {
    if (j.contains(key)) dst = j[key].template get<std::decay_t<decltype(dst)>>();
  };
  get("vocab_size", s.vocab_size);
  get("min_utterances", s.min_utterances);
  get("max_utterances", s.max_utterances);
  get("branching", s.branching);
  get("speakers", s.speakers);
  get("quads_per_dialogue", s.quads_per_dialogue);
  get("num_dialogues", s.num_dialogues);
  get("min_tokens", s.min_tokens);
  get("max_tokens", s.max_tokens);
  get("distractors", s.distractors);
  get("seed", s.seed);
  s.validate();
  return s;
}

namespace {

constexpr int kTargetPool = 8;
constexpr int kAspectPool = 8;
constexpr int kOpinionPool = 4;  // per sentiment class

struct PendingSpan {
  int utt = 0;  // 1-based
  int start = 0, end = 0;  // content offsets inside the utterance
};

struct Builder {
  std::vector<std::vector<std::string>> tokens;  // per utterance
  std::vector<PendingSpan*> recorded;

  // Splice a span into an utterance at a random offset outside every
  // recorded span, shifting the spans that sit to the right of the cut.
  void insert(Rng& rng, int utt, const std::vector<std::string>& words,
              PendingSpan* out) {
    auto& tok = tokens[size_t(utt) - 1];
    std::vector<int> allowed;
    for (int p = 0; p <= int(tok.size()); ++p) {
      bool inside = false;
      for (PendingSpan* s : recorded)
        if (s->utt == utt && p > s->start && p <= s->end) inside = true;
      if (!inside) allowed.push_back(p);
    }
    std::uniform_int_distribution<int> pick(0, int(allowed.size()) - 1);
    const int pos = allowed[size_t(pick(rng))];
    tok.insert(tok.begin() + pos, words.begin(), words.end());
    const int w = int(words.size());
    for (PendingSpan* s : recorded)
      if (s->utt == utt && s->start >= pos) {
        s->start += w;
        s->end += w;
      }
    if (out) {
      out->utt = utt;
      out->start = pos;
      out->end = pos + w - 1;
      recorded.push_back(out);
    }
  }
};

std::vector<std::string> role_span(Rng& rng, const std::string& head_prefix,
                                   int pool) {
  std::uniform_int_distribution<int> pick(0, pool - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int r = pick(rng);
  std::vector<std::string> words{head_prefix + std::to_string(r)};
  if (u(rng) < 0.3) words.push_back(head_prefix + std::to_string(r) + "b");
  return words;
}

}  // namespace

std::vector<Dialogue> gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<Dialogue> out;
  out.reserve(size_t(spec.num_dialogues));

  for (int di = 0; di < spec.num_dialogues; ++di) {
    Rng rng(mix_seed(spec.seed, uint64_t(di)));
    std::uniform_int_distribution<int> utt_count(spec.min_utterances,
                                                 spec.max_utterances);
    std::uniform_int_distribution<int> tok_count(spec.min_tokens, spec.max_tokens);
    std::uniform_int_distribution<int> spk_pick(0, spec.speakers - 1);
    std::uniform_int_distribution<int> filler_pick(0, spec.vocab_size - 1);

    const int n = utt_count(rng);
    const int n_threads = std::min(spec.branching, n - 1);

    // reply tree: the first n_threads non-root utterances open chains, the
    // rest extend a random chain
    std::vector<int> reply(size_t(n) + 1, 0);
    std::vector<std::vector<int>> thread_members(size_t(std::max(n_threads, 1)));
    std::vector<int> tail(size_t(std::max(n_threads, 1)), 1);
    for (int i = 2; i <= n; ++i) {
      int t;
      if (i - 2 < n_threads) {
        t = i - 2;
      } else {
        std::uniform_int_distribution<int> tp(0, n_threads - 1);
        t = tp(rng);
      }
      reply[size_t(i)] = tail[size_t(t)];
      tail[size_t(t)] = i;
      thread_members[size_t(t)].push_back(i);
    }

    Builder b;
    b.tokens.resize(size_t(n));
    std::vector<std::string> speakers(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      speakers[size_t(i)] = "s" + std::to_string(spk_pick(rng));
      const int f = tok_count(rng);
      for (int k = 0; k < f; ++k)
        b.tokens[size_t(i)].push_back("f" + std::to_string(filler_pick(rng)));
    }

    struct PlantedQuad {
      PendingSpan t, a, o;
      std::vector<std::string> t_words, a_words, o_words;
      Sentiment s;
      int thread;
    };
    std::vector<PlantedQuad> planted(static_cast<size_t>(spec.quads_per_dialogue));

    // one quadruple per selected thread: target earlier, aspect + opinion in
    // the same or a later utterance of the same chain
    std::vector<int> thread_order(static_cast<size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) thread_order[size_t(t)] = t;
    std::shuffle(thread_order.begin(), thread_order.end(), rng);

    std::vector<PendingSpan> gated_spans(size_t(spec.quads_per_dialogue) * 2);
    size_t gspan = 0;
    for (int q = 0; q < spec.quads_per_dialogue; ++q) {
      PlantedQuad& pq = planted[size_t(q)];
      pq.thread = thread_order[size_t(q % std::max(n_threads, 1))];
      const auto& members = thread_members[size_t(pq.thread)];
      if (members.empty()) throw StructureError("gen_synthetic: empty thread");
      std::uniform_int_distribution<int> mp(0, int(members.size()) - 1);
      const int ti = mp(rng);
      std::uniform_int_distribution<int> mp2(ti, int(members.size()) - 1);
      const int ai = mp2(rng);
      const int t_utt = members[size_t(ti)];
      const int ao_utt = members[size_t(ai)];
      // the elaboration comes from the target's own speaker
      speakers[size_t(ao_utt) - 1] = speakers[size_t(t_utt) - 1];

      pq.t_words = role_span(rng, "T", kTargetPool);
      pq.a_words = role_span(rng, "A", kAspectPool);
      b.insert(rng, t_utt, pq.t_words, &pq.t);
      b.insert(rng, ao_utt, pq.a_words, &pq.a);
      std::uniform_int_distribution<int> sp(0, 2);
      const int s = sp(rng);
      pq.s = s == 0 ? Sentiment::Pos : s == 1 ? Sentiment::Neg : Sentiment::Neu;
      const char* op_prefix = s == 0 ? "P" : s == 1 ? "N" : "U";
      pq.o_words = role_span(rng, op_prefix, kOpinionPool);
      b.insert(rng, ao_utt, pq.o_words, &pq.o);

      // speaker-gated in-thread distractor: the same aspect and opinion words
      // uttered by someone else in the same thread stay unpaired
      std::vector<int> spare;
      for (int m : members)
        if (m != t_utt && m != ao_utt) spare.push_back(m);
      if (!spare.empty() && spec.speakers > 1) {
        std::uniform_int_distribution<int> dp(0, int(spare.size()) - 1);
        const int du = spare[size_t(dp(rng))];
        std::uniform_int_distribution<int> rs(0, spec.speakers - 1);
        std::string other = speakers[size_t(t_utt) - 1];
        while (other == speakers[size_t(t_utt) - 1])
          other = "s" + std::to_string(rs(rng));
        speakers[size_t(du) - 1] = other;
        b.insert(rng, du, pq.a_words, &gated_spans[gspan++]);
        b.insert(rng, du, pq.o_words, &gated_spans[gspan++]);
      }
    }

    // Cross-thread distractors: verbatim copies of planted entity mentions
    // dropped into a different thread. They must stay unpaired, so lexical
    // identity alone cannot resolve the pairing grid. A copy never includes
    // all three roles of one quadruple in the same foreign thread, which
    // would fabricate a genuinely valid pattern.
    std::vector<PendingSpan> distractor_spans(size_t(spec.distractors) * 2);
    size_t dspan = 0;
    for (int k = 0; k < spec.distractors && !planted.empty(); ++k) {
      const PlantedQuad& src = planted[size_t(k) % planted.size()];
      int t = src.thread;
      if (n_threads > 1) {
        std::uniform_int_distribution<int> tp(0, n_threads - 1);
        do {
          t = tp(rng);
        } while (t == src.thread);
      }
      const auto& members = thread_members[size_t(t)];
      if (members.empty() || t == src.thread) continue;
      std::uniform_int_distribution<int> mp(0, int(members.size()) - 1);
      const int utt = members[size_t(mp(rng))];
      switch (k % 3) {
        case 0:  // aspect + opinion copy, no target nearby
          b.insert(rng, utt, src.a_words, &distractor_spans[dspan++]);
          b.insert(rng, utt, src.o_words, &distractor_spans[dspan++]);
          break;
        case 1:  // lone target copy
          b.insert(rng, utt, src.t_words, &distractor_spans[dspan++]);
          break;
        default:  // lone aspect copy
          b.insert(rng, utt, src.a_words, &distractor_spans[dspan++]);
          break;
      }
    }

    // materialise the record and run it through the regular parse path
    json rec;
    rec["doc_id"] = "synth-" + std::to_string(spec.seed) + "-" + std::to_string(di);
    json sents = json::array();
    std::vector<int> content_base(size_t(n) + 1, 0);
    for (int i = 1; i <= n; ++i)
      content_base[size_t(i)] =
          i == 1 ? 0 : content_base[size_t(i) - 1] + int(b.tokens[size_t(i) - 2].size());
    for (int i = 0; i < n; ++i) {
      json s;
      s["speaker"] = speakers[size_t(i)];
      s["tokens"] = b.tokens[size_t(i)];
      s["reply"] = i == 0 ? -1 : reply[size_t(i) + 1] - 1;
      sents.push_back(s);
    }
    rec["sentences"] = sents;
    json quads = json::array();
    for (const auto& pq : planted) {
      auto flat = [&content_base](const PendingSpan& s) {
        return json::array({content_base[size_t(s.utt)] + s.start,
                            content_base[size_t(s.utt)] + s.end});
      };
      json q;
      q["target"] = flat(pq.t);
      q["aspect"] = flat(pq.a);
      q["opinion"] = flat(pq.o);
      q["sentiment"] = sentiment_name(pq.s);
      quads.push_back(q);
    }
    rec["quadruples"] = quads;
    out.push_back(parse_dialogue(rec.dump()));
  }
  return out;
}

}  // namespace tcda
