#include "tcda/dialogue.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace tcda {

using nlohmann::json;

const char* sentiment_name(Sentiment s) {
  switch (s) {
    case Sentiment::Pos: return "pos";
    case Sentiment::Neg: return "neg";
    default: return "neu";
  }
}

Sentiment sentiment_from_name(const std::string& s) {
  if (s == "pos") return Sentiment::Pos;
  if (s == "neg") return Sentiment::Neg;
  if (s == "neu") return Sentiment::Neu;
  throw ParseError("unknown sentiment label '" + s + "'");
}

void Dialogue::validate() const {
  if (utterances.empty()) throw StructureError(doc_id + ": empty dialogue");
  for (int i = 0; i < size(); ++i) {
    const Utterance& u = utterances[size_t(i)];
    const std::string where = doc_id + ": utterance " + std::to_string(i + 1);
    if (u.id != i + 1) throw StructureError(where + ": ids must be 1..N in order");
    if (u.tokens.empty()) throw StructureError(where + ": no tokens");
    if (u.id == 1) {
      if (u.reply_to != 0) throw StructureError(where + ": root must not reply");
    } else {
      if (u.reply_to < 1 || u.reply_to >= u.id)
        throw StructureError(where + ": forward reply (" + std::to_string(u.id) +
                             " -> " + std::to_string(u.reply_to) + ")");
    }
  }
  // backward replies plus a single root make the relation a tree over 1..N
}

// ------------------------------------------------------------------- parse --

namespace {

Span parse_span(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer())
    throw ParseError(path + ": span must be [start, end]");
  Span s{j[0].get<int>(), j[1].get<int>()};
  if (s.start < 0 || s.end < s.start)
    throw ParseError(path + ": bad span [" + std::to_string(s.start) + "," +
                     std::to_string(s.end) + "]");
  return s;
}

Dialogue dialogue_from_json(const json& j, bool allow_null_spans) {
  Dialogue d;
  if (!j.is_object()) throw ParseError("record: expected JSON object");
  if (!j.contains("doc_id") || !j["doc_id"].is_string())
    throw ParseError("doc_id: missing or not a string");
  d.doc_id = j["doc_id"].get<std::string>();
  if (!j.contains("sentences") || !j["sentences"].is_array() ||
      j["sentences"].empty())
    throw ParseError(d.doc_id + ": sentences: missing or empty");

  const auto& sents = j["sentences"];
  for (size_t i = 0; i < sents.size(); ++i) {
    const std::string path = d.doc_id + ": sentences[" + std::to_string(i) + "]";
    const auto& s = sents[i];
    if (!s.is_object()) throw ParseError(path + ": expected object");
    Utterance u;
    u.id = int(i) + 1;
    if (!s.contains("speaker") || !s["speaker"].is_string())
      throw ParseError(path + ".speaker: missing or not a string");
    u.speaker = s["speaker"].get<std::string>();
    if (!s.contains("tokens") || !s["tokens"].is_array() || s["tokens"].empty())
      throw ParseError(path + ".tokens: missing or empty");
    for (const auto& t : s["tokens"]) {
      if (!t.is_string()) throw ParseError(path + ".tokens: entries must be strings");
      u.tokens.push_back(t.get<std::string>());
    }
    int reply = -1;
    if (s.contains("reply") && !s["reply"].is_null()) {
      if (!s["reply"].is_number_integer())
        throw ParseError(path + ".reply: expected integer");
      reply = s["reply"].get<int>();
    }
    if (i == 0) {
      if (reply != -1)
        throw StructureError(path + ".reply: first sentence must be the root");
      u.reply_to = 0;
    } else {
      if (reply < 0 || size_t(reply) >= i)
        throw StructureError(path + ".reply: forward reply (" +
                             std::to_string(i) + " -> " + std::to_string(reply) +
                             ")");
      u.reply_to = reply + 1;
    }
    d.utterances.push_back(std::move(u));
  }
  d.validate();

  // content-flat index -> (utterance, offset), for span conversion
  std::vector<int> utt_of, off_of;
  for (const auto& u : d.utterances)
    for (size_t k = 0; k < u.tokens.size(); ++k) {
      utt_of.push_back(u.id);
      off_of.push_back(int(k));
    }
  std::vector<int> block_start(d.utterances.size() + 1, 0);
  for (const auto& u : d.utterances)
    block_start[size_t(u.id)] =
        (u.id == 1) ? 0
                    : block_start[size_t(u.id) - 1] +
                          int(d.utt(u.id - 1).tokens.size()) + 2;

  auto to_wrapped = [&](const Span& content, const std::string& path) {
    if (content.end >= int(utt_of.size()))
      throw ParseError(path + ": span exceeds token count");
    if (utt_of[size_t(content.start)] != utt_of[size_t(content.end)])
      throw StructureError(path + ": cross-utterance span rejected");
    const int u = utt_of[size_t(content.start)];
    return Span{block_start[size_t(u)] + 1 + off_of[size_t(content.start)],
                block_start[size_t(u)] + 1 + off_of[size_t(content.end)]};
  };

  if (j.contains("quadruples")) {
    if (!j["quadruples"].is_array())
      throw ParseError(d.doc_id + ": quadruples: expected array");
    const auto& qs = j["quadruples"];
    for (size_t qi = 0; qi < qs.size(); ++qi) {
      const std::string path = d.doc_id + ": quadruples[" + std::to_string(qi) + "]";
      const auto& q = qs[qi];
      if (!q.is_object()) throw ParseError(path + ": expected object");
      bool has_null = false;
      for (const char* role : {"target", "aspect", "opinion"})
        if (!q.contains(role) || q[role].is_null()) has_null = true;
      if (has_null && !allow_null_spans) {
        ++d.dropped_null_quads;
        continue;
      }
      Quadruple quad;
      if (q.contains("target") && !q["target"].is_null())
        quad.target = to_wrapped(parse_span(q["target"], path + ".target"), path);
      if (q.contains("aspect") && !q["aspect"].is_null())
        quad.aspect = to_wrapped(parse_span(q["aspect"], path + ".aspect"), path);
      if (q.contains("opinion") && !q["opinion"].is_null())
        quad.opinion = to_wrapped(parse_span(q["opinion"], path + ".opinion"), path);
      if (!q.contains("sentiment") || !q["sentiment"].is_string())
        throw ParseError(path + ".sentiment: missing");
      quad.sentiment = sentiment_from_name(q["sentiment"].get<std::string>());
      d.gold.push_back(quad);
    }
  }
  return d;
}

}  // namespace

Dialogue parse_dialogue(const std::string& json_text, bool allow_null_spans) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("record: invalid JSON: ") + e.what());
  }
  return dialogue_from_json(j, allow_null_spans);
}

std::vector<Dialogue> load_dialogues(const std::string& path,
                                     bool allow_null_spans) {
  const std::string text = read_text_file(path);
  std::vector<Dialogue> out;
  json whole = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (!whole.is_discarded()) {
    if (whole.is_array()) {
      for (const auto& rec : whole) out.push_back(dialogue_from_json(rec, allow_null_spans));
      return out;
    }
    if (whole.is_object()) {
      out.push_back(dialogue_from_json(whole, allow_null_spans));
      return out;
    }
  }
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_dialogue(line, allow_null_spans));
    } catch (const std::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw ParseError(path + ": no dialogue records found");
  return out;
}

namespace {

json span_to_content_json(const Dialogue& d, const TokenIndexMap& tim, Span s) {
  if (!s.valid()) return nullptr;
  return json::array({tim.content_index(s.start), tim.content_index(s.end)});
}

json quads_to_json(const Dialogue& d, const std::vector<Quadruple>& quads) {
  auto td = decompose_threads(d);
  auto tim = build_token_index(d, td);
  json arr = json::array();
  for (const auto& q : quads) {
    json jq;
    jq["target"] = span_to_content_json(d, tim, q.target);
    jq["aspect"] = span_to_content_json(d, tim, q.aspect);
    jq["opinion"] = span_to_content_json(d, tim, q.opinion);
    jq["sentiment"] = sentiment_name(q.sentiment);
    arr.push_back(jq);
  }
  return arr;
}

}  // namespace

std::string dialogue_to_json(const Dialogue& d) {
  json j;
  j["doc_id"] = d.doc_id;
  json sents = json::array();
  for (const auto& u : d.utterances) {
    json s;
    s["speaker"] = u.speaker;
    s["tokens"] = u.tokens;
    s["reply"] = u.reply_to == 0 ? -1 : u.reply_to - 1;
    sents.push_back(s);
  }
  j["sentences"] = sents;
  j["quadruples"] = quads_to_json(d, d.gold);
  return j.dump();
}

std::string prediction_to_json(const Dialogue& d,
                               const std::vector<Quadruple>& pred) {
  json j;
  j["doc_id"] = d.doc_id;
  j["quadruples"] = quads_to_json(d, pred);
  return j.dump();
}

void save_dialogues(const std::string& path, const std::vector<Dialogue>& ds) {
  std::ostringstream os;
  for (const auto& d : ds) os << dialogue_to_json(d) << "\n";
  write_text_file(path, os.str());
}

// --------------------------------------------------------------- threads --

ThreadDecomposition decompose_threads(const Dialogue& d) {
  d.validate();
  const int n = d.size();
  std::vector<std::vector<int>> children(size_t(n) + 1);
  for (const auto& u : d.utterances)
    if (u.reply_to > 0) children[size_t(u.reply_to)].push_back(u.id);

  ThreadDecomposition td;
  td.thread_of.assign(size_t(n) + 1, 0);
  for (int child : children[1]) {
    std::vector<int> members;
    std::vector<int> stack{child};
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      members.push_back(u);
      for (int c : children[size_t(u)]) stack.push_back(c);
    }
    std::sort(members.begin(), members.end());
    std::vector<int> thread{1};
    thread.insert(thread.end(), members.begin(), members.end());
    const int tid = int(td.threads.size()) + 1;
    for (int u : members) td.thread_of[size_t(u)] = tid;
    td.threads.push_back(std::move(thread));
  }
  if (td.threads.empty()) td.threads.push_back({1});  // root-only dialogue
  return td;
}

// ------------------------------------------------------------ token index --

int TokenIndexMap::content_index(int wrapped) const {
  const TokenInfo& t = tokens[size_t(wrapped)];
  if (t.is_wrapper) return -1;
  int base = 0;
  for (int u = 1; u < t.utterance_id; ++u)
    base += block_start[size_t(u) + 1] - block_start[size_t(u)] - 2;
  return base + t.offset - 1;
}

TokenIndexMap build_token_index(const Dialogue& d, const ThreadDecomposition& td) {
  TokenIndexMap tim;
  const int n = d.size();
  tim.block_start.assign(size_t(n) + 1, 0);

  std::vector<int> p_start(size_t(n) + 1, 0);  // p_tok of each block's first token
  std::vector<int> depth(size_t(n) + 1, 0);
  int next = 0;
  for (const auto& u : d.utterances) {
    const int len = int(u.tokens.size()) + 2;
    tim.block_start[size_t(u.id)] = next;
    next += len;
    if (u.id == 1) {
      p_start[1] = 0;
      depth[1] = 0;
    } else {
      const int parent = u.reply_to;
      const int parent_len = int(d.utt(parent).tokens.size()) + 2;
      p_start[size_t(u.id)] = p_start[size_t(parent)] + parent_len;
      depth[size_t(u.id)] = depth[size_t(parent)] + 1;
    }
  }

  tim.tokens.reserve(size_t(next));
  for (const auto& u : d.utterances) {
    const int len = int(u.tokens.size()) + 2;
    for (int k = 0; k < len; ++k) {
      TokenInfo t;
      t.utterance_id = u.id;
      t.offset = k;
      t.is_wrapper = (k == 0 || k == len - 1);
      t.thread_id = td.thread_of[size_t(u.id)];
      t.p_tok = p_start[size_t(u.id)] + k;
      t.p_utt = depth[size_t(u.id)];
      tim.tokens.push_back(t);
    }
  }
  return tim;
}

}  // namespace tcda
