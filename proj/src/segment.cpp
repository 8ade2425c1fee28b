#include "specs/segment.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "specs/error.hpp"

namespace specs {
namespace {

// One position of a tag pattern such as <JJ.*>* or <NP|PP|CLAUSE>+.
struct PatternElement {
  std::vector<std::string> alternatives;  // a trailing '*' means prefix match
  char quantifier = '1';                  // '1', '?', '*', '+'
};

struct ChunkRule {
  std::string label;
  std::vector<PatternElement> pattern;
  bool anchored_end = false;
};

const std::vector<ChunkRule>& grammar() {
  static const std::vector<ChunkRule> rules = {
      {"NP", {{{"DT"}, '?'}, {{"JJ*"}, '*'}, {{"NN*"}, '+'}}, false},
      {"VP", {{{"VB*"}, '1'}, {{"NP", "PP", "CLAUSE"}, '+'}}, true},
      {"PP", {{{"IN"}, '1'}, {{"NP"}, '1'}}, false},
      {"CLAUSE", {{{"NP"}, '1'}, {{"VP"}, '1'}}, false},
      {"CONJ", {{{"CC"}, '1'}, {{"NP", "VP", "PP", "CLAUSE"}, '1'}}, false},
  };
  return rules;
}

bool element_accepts(const PatternElement& element, std::string_view tag) {
  for (const auto& alt : element.alternatives) {
    if (!alt.empty() && alt.back() == '*') {
      const std::string_view prefix(alt.data(), alt.size() - 1);
      if (tag.substr(0, prefix.size()) == prefix) return true;
    } else if (tag == alt) {
      return true;
    }
  }
  return false;
}

// Greedy backtracking match of pattern[k..] against nodes[pos..]; returns the
// end position of the first (i.e. longest-greedy) successful match.
std::optional<std::size_t> match_from(const ChunkRule& rule, const std::vector<ChunkNode>& nodes,
                                      std::size_t k, std::size_t pos) {
  if (k == rule.pattern.size()) {
    if (rule.anchored_end && pos != nodes.size()) return std::nullopt;
    return pos;
  }
  const PatternElement& element = rule.pattern[k];
  const std::size_t min_count = (element.quantifier == '1' || element.quantifier == '+') ? 1 : 0;
  const bool unbounded = element.quantifier == '*' || element.quantifier == '+';
  std::size_t max_count = 0;
  while (pos + max_count < nodes.size() && element_accepts(element, nodes[pos + max_count].tag) &&
         (unbounded || max_count < 1)) {
    ++max_count;
  }
  for (std::size_t count = max_count + 1; count-- > min_count;) {
    if (auto end = match_from(rule, nodes, k + 1, pos + count)) return end;
  }
  return std::nullopt;
}

bool apply_rule(const ChunkRule& rule, std::vector<ChunkNode>& nodes) {
  bool changed = false;
  std::size_t i = 0;
  while (i < nodes.size()) {
    auto end = match_from(rule, nodes, 0, i);
    if (!end || *end == i) {
      ++i;
      continue;
    }
    ChunkNode phrase;
    phrase.leaf = false;
    phrase.tag = rule.label;
    phrase.tokens = {nodes[i].tokens.begin, nodes[*end - 1].tokens.end};
    phrase.children.assign(std::make_move_iterator(nodes.begin() + static_cast<std::ptrdiff_t>(i)),
                           std::make_move_iterator(nodes.begin() + static_cast<std::ptrdiff_t>(*end)));
    nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                nodes.begin() + static_cast<std::ptrdiff_t>(*end));
    nodes[i] = std::move(phrase);
    changed = true;
    ++i;
  }
  return changed;
}

std::vector<ChunkNode> cascade(std::vector<ChunkNode> nodes) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& rule : grammar()) changed = apply_rule(rule, nodes) || changed;
  }
  return nodes;
}

ChunkLabel label_of(std::string_view tag) {
  if (tag == "NP") return ChunkLabel::NP;
  if (tag == "VP") return ChunkLabel::VP;
  if (tag == "PP") return ChunkLabel::PP;
  if (tag == "CLAUSE") return ChunkLabel::Clause;
  if (tag == "CONJ") return ChunkLabel::Conj;
  return ChunkLabel::O;
}

bool is_terminal(std::string_view pos) { return pos == "."; }
bool is_punct_tag(std::string_view pos) {
  return !pos.empty() && std::none_of(pos.begin(), pos.end(), [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0;
  });
}
bool is_verb_tag(std::string_view pos) { return pos.substr(0, 2) == "VB"; }

void collect(const ChunkNode& node, std::string_view label, std::vector<const ChunkNode*>& out) {
  if (node.leaf) return;
  if (node.tag == label) out.push_back(&node);
  for (const auto& child : node.children) collect(child, label, out);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

enum class Proposal { Sentence, Phrase };

struct SentenceSpan {
  std::size_t begin;
  std::size_t end;
};

std::vector<SentenceSpan> sentences_of(std::span<const TaggedToken> tokens) {
  std::vector<SentenceSpan> spans;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool last = i + 1 == tokens.size();
    // A run of terminal punctuation closes the sentence after its last mark.
    if ((is_terminal(tokens[i].pos) && (last || !is_terminal(tokens[i + 1].pos))) || last) {
      spans.push_back({begin, i + 1});
      begin = i + 1;
    }
  }
  return spans;
}

}  // namespace

std::string_view to_string(ChunkLabel label) {
  switch (label) {
    case ChunkLabel::NP: return "NP";
    case ChunkLabel::VP: return "VP";
    case ChunkLabel::PP: return "PP";
    case ChunkLabel::Clause: return "CLAUSE";
    case ChunkLabel::Conj: return "CONJ";
    case ChunkLabel::O: return "O";
  }
  return "O";
}

bool is_content_tag(std::string_view pos) {
  return pos.substr(0, 2) == "NN" || pos.substr(0, 2) == "JJ" || pos.substr(0, 2) == "VB";
}

std::vector<std::string> SegmentedCaption::unit_texts() const {
  std::vector<std::string> out;
  out.reserve(units.size());
  for (const auto& u : units) out.push_back(u.text);
  return out;
}

std::vector<ChunkNode> parse(std::span<const TaggedToken> tokens) {
  std::vector<ChunkNode> result;
  for (const auto& sentence : sentences_of(tokens)) {
    std::size_t body_end = sentence.end;
    while (body_end > sentence.begin && is_terminal(tokens[body_end - 1].pos)) --body_end;
    std::vector<ChunkNode> nodes;
    for (std::size_t i = sentence.begin; i < body_end; ++i) {
      nodes.push_back({true, tokens[i].pos, {i, i + 1}, {}});
    }
    for (auto& node : cascade(std::move(nodes))) result.push_back(std::move(node));
    for (std::size_t i = body_end; i < sentence.end; ++i) {
      result.push_back({true, tokens[i].pos, {i, i + 1}, {}});
    }
  }
  return result;
}

std::vector<Chunk> chunk(std::span<const TaggedToken> tokens) {
  std::vector<Chunk> chunks;
  for (const auto& node : parse(tokens)) {
    chunks.push_back({node.leaf ? ChunkLabel::O : label_of(node.tag), node.tokens});
  }
  return chunks;
}

SegmentedCaption segment(const CaptionInput& input, const SegmentOptions& options) {
  const std::string normalized = normalize_whitespace(input.caption);
  if (normalized.empty()) throw Error(ErrorCode::EmptyInput, "caption is empty");
  const std::vector<TaggedToken> tokens =
      input.tokens ? align_tokens(normalized, *input.tokens) : tag(normalized);
  const std::vector<ChunkNode> tree = parse(tokens);
  const std::size_t n = tokens.size();

  std::vector<const ChunkNode*> nps, vps, pps, conjs;
  for (const auto& node : tree) {
    collect(node, "NP", nps);
    collect(node, "VP", vps);
    collect(node, "PP", pps);
    collect(node, "CONJ", conjs);
  }
  std::sort(pps.begin(), pps.end(),
            [](const ChunkNode* a, const ChunkNode* b) { return a->tokens.begin < b->tokens.begin; });

  std::set<std::size_t> np_ends;  // index of the last token of every NP
  for (const auto* np : nps) np_ends.insert(np->tokens.end - 1);

  const auto sentences = sentences_of(tokens);
  std::vector<std::size_t> sentence_of(n);
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    for (std::size_t i = sentences[s].begin; i < sentences[s].end; ++i) sentence_of[i] = s;
  }

  // Candidate boundaries, keyed by the token they precede.
  std::map<std::size_t, Proposal> proposals;
  for (std::size_t s = 1; s < sentences.size(); ++s) proposals[sentences[s].begin] = Proposal::Sentence;
  auto propose = [&](std::size_t at) {
    if (at > 0 && at < n) proposals.emplace(at, Proposal::Phrase);
  };
  for (const auto* pp : pps) propose(pp->tokens.begin);
  for (const auto* conj : conjs) propose(conj->tokens.begin);
  for (const auto* vp : vps) {
    // Pull the boundary back over auxiliaries, adverbs and existential "there".
    std::size_t at = vp->tokens.begin;
    const std::size_t floor = sentences[sentence_of[at]].begin;
    while (at > floor) {
      const std::string& prev = tokens[at - 1].pos;
      if (!(is_verb_tag(prev) || prev == "MD" || prev == "RB" || prev == "EX")) break;
      --at;
    }
    propose(at);
  }

  std::set<std::size_t> suppressed;

  if (options.attach_modifier_pps) {
    // Runs of adjacent PPs hanging off a noun or verb head. "of" complements
    // never split; of the rest, only the last PP of the run opens a new unit,
    // and a lone PP right after a verb stays with it.
    std::size_t k = 0;
    while (k < pps.size()) {
      std::size_t run_end = k + 1;
      while (run_end < pps.size() && pps[run_end]->tokens.begin == pps[run_end - 1]->tokens.end) ++run_end;
      const std::size_t start = pps[k]->tokens.begin;
      enum class Head { None, Noun, Verb } head = Head::None;
      if (start > 0 && sentence_of[start - 1] == sentence_of[start]) {
        if (np_ends.contains(start - 1)) {
          head = Head::Noun;
        } else if (is_verb_tag(tokens[start - 1].pos) || tokens[start - 1].pos == "RP") {
          head = Head::Verb;
        }
      }
      if (head != Head::None) {
        std::vector<std::size_t> modifiers;
        for (std::size_t p = k; p < run_end; ++p) {
          const std::size_t at = pps[p]->tokens.begin;
          if (lower(tokens[at].text) == "of") {
            suppressed.insert(at);
          } else {
            modifiers.push_back(at);
          }
        }
        for (std::size_t m = 0; m + 1 < modifiers.size(); ++m) suppressed.insert(modifiers[m]);
        if (!modifiers.empty() && head == Head::Verb && modifiers.back() == start) {
          suppressed.insert(start);
        }
      }
      k = run_end;
    }
  }

  if (options.hold_definite_subject) {
    for (const auto& sentence : sentences) {
      for (const auto* np : nps) {
        if (np->tokens.begin != sentence.begin) continue;
        if (tokens[sentence.begin].text == "The" || tokens[sentence.begin].text == "the") {
          suppressed.insert(np->tokens.end);
        }
      }
    }
  }

  // Word-aligned boundaries only: a boundary before a token moves to the start
  // of its whitespace-delimited word when only punctuation precedes it there.
  std::map<std::size_t, Proposal> kept;
  for (const auto& [at, kind] : proposals) {
    if (kind == Proposal::Phrase && suppressed.contains(at)) continue;
    std::size_t word_start = at;
    while (word_start > 0 && tokens[word_start - 1].end == tokens[word_start].begin &&
           is_punct_tag(tokens[word_start - 1].pos)) {
      --word_start;
    }
    const bool at_word_start = word_start == 0 || tokens[word_start - 1].end < tokens[word_start].begin;
    if (word_start == 0 || !at_word_start) continue;
    auto [it, inserted] = kept.emplace(word_start, kind);
    if (!inserted && kind == Proposal::Sentence) it->second = kind;
  }

  auto has_tag = [&](std::size_t b, std::size_t e, auto pred) {
    for (std::size_t i = b; i < e; ++i) {
      if (pred(std::string_view(tokens[i].pos))) return true;
    }
    return false;
  };

  // Greedy left-to-right pass: a segment closes at a boundary only when it is
  // allowed to stand alone.
  // Leading-PP holds are judged on the proposed segments, so one hold never
  // cascades into the segments after it.
  std::vector<std::size_t> held;
  {
    std::size_t seg_begin = 0;
    for (const auto& [at, kind] : kept) {
      if (at == 0) continue;
      const bool leading_pp = tokens[seg_begin].pos == "IN" || tokens[seg_begin].pos == "TO";
      const bool hold = options.hold_leading_pp && kind == Proposal::Phrase && leading_pp &&
                        !has_tag(seg_begin, at, is_verb_tag);
      seg_begin = at;
      if (!hold) held.push_back(at);
    }
  }

  std::vector<std::size_t> cuts;
  {
    std::size_t seg_begin = 0;
    for (std::size_t at : held) {
      if (!has_tag(seg_begin, at, is_content_tag)) continue;
      cuts.push_back(at);
      seg_begin = at;
    }
    // A trailing segment without content folds into its predecessor.
    if (!cuts.empty() && !has_tag(cuts.back(), n, is_content_tag)) cuts.pop_back();
  }

  SegmentedCaption out;
  out.image_id = input.image_id;
  out.source = normalized;
  std::size_t begin = 0;
  for (std::size_t u = 0; u <= cuts.size(); ++u) {
    const std::size_t end = u < cuts.size() ? cuts[u] : n;
    const std::size_t char_begin = begin == 0 ? 0 : tokens[begin].begin;
    const std::size_t char_end = end == n ? normalized.size() : tokens[end].begin - 1;
    out.units.push_back({normalized.substr(char_begin, char_end - char_begin), {begin, end}, u + 1});
    begin = end;
  }
  return out;
}

}  // namespace specs
