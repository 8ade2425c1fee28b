#include <algorithm>
#include <cctype>
#include <string>
#include <unordered_map>

#include "specs/error.hpp"
#include "specs/segment.hpp"

namespace specs {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_leading_punct(char c) { return c == '"' || c == '\'' || c == '(' || c == '[' || c == '{' || c == '`'; }

bool is_trailing_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '"' ||
         c == '\'' || c == ')' || c == ']' || c == '}';
}

std::string punct_tag(std::string_view p) {
  if (p == "." || p == "!" || p == "?") return ".";
  if (p == ",") return ",";
  if (p == ";" || p == ":" || p.find("..") != std::string_view::npos || p == "-" || p == "--") return ":";
  if (p == "(" || p == "[" || p == "{") return "(";
  if (p == ")" || p == "]" || p == "}") return ")";
  if (p == "``" || p == "`") return "``";
  if (p == "\"" || p == "'" || p == "''") return "''";
  return "SYM";
}

bool all_punct(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
  });
}

const std::unordered_map<std::string, std::string>& lexicon() {
  static const auto* table = [] {
    auto* m = new std::unordered_map<std::string, std::string>;
    auto add = [m](std::string_view tag, std::initializer_list<const char*> words) {
      for (const char* w : words) m->emplace(w, std::string(tag));
    };
    add("DT", {"a", "an", "the", "this", "that", "these", "those", "each", "every", "some", "any",
               "no", "another", "both", "all", "either", "neither", "half"});
    add("PRP", {"i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "itself",
                "themselves", "himself", "herself"});
    add("PRP$", {"my", "your", "his", "her", "its", "our", "their"});
    add("IN", {"of", "in", "on", "at", "by", "with", "from", "into", "onto", "over", "under",
               "above", "below", "behind", "beside", "besides", "between", "among", "through",
               "across", "along", "around", "near", "during", "without", "within", "against",
               "toward", "towards", "upon", "about", "after", "before", "like", "as", "than",
               "since", "while", "off", "past", "inside", "outside", "beneath", "underneath",
               "atop", "throughout", "via", "per", "amid", "despite", "except", "alongside",
               "amongst", "if", "because", "whereas", "although", "though", "whether", "beyond"});
    add("TO", {"to"});
    add("CC", {"and", "or", "but", "nor", "yet", "&", "plus"});
    add("MD", {"can", "could", "will", "would", "may", "might", "must", "should", "shall"});
    add("EX", {"there"});
    add("WDT", {"which", "whose"});
    add("WP", {"who", "what", "whom"});
    add("WRB", {"where", "when", "how", "why"});
    add("RP", {"up", "down", "out"});
    add("RB", {"not", "very", "also", "too", "just", "still", "only", "here", "almost", "quite",
               "rather", "somewhat", "mostly", "nearly", "fully", "really", "often", "always",
               "never", "sometimes", "then", "now", "together", "apart", "away", "even",
               "ever", "well", "so", "slightly", "partially", "partly", "closely", "directly",
               "possibly", "perhaps", "likely", "further", "else", "instead", "n't", "upward",
               "downward", "outward", "forward", "nearby", "overhead", "behind", "ahead",
               "alone", "abroad", "afar", "approximately"});
    add("CD", {"one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
               "eleven", "twelve", "twenty", "thirty", "hundred", "thousand", "dozen"});
    add("VBZ", {"is", "has", "does", "sits", "stands", "lies", "holds", "wears", "shows",
                "features", "appears", "contains", "depicts", "hangs", "rests", "looks", "seems",
                "displays", "includes", "covers", "surrounds", "lays", "leans", "faces", "walks",
                "runs", "plays", "eats", "reads", "rides", "flies", "carries", "casts", "creates",
                "adds", "gives", "reveals", "suggests", "grows", "floats", "extends", "reflects",
                "sleeps", "barks", "swims", "waits", "smiles", "stretches", "perches"});
    add("VBP", {"are", "am", "have", "do"});
    add("VBD", {"was", "were", "had", "did"});
    add("VB", {"be"});
    add("VBN", {"been", "seen", "made", "taken", "worn", "shown", "held", "done", "known",
                "grown", "drawn", "placed", "covered"});
    add("VBG", {"being"});
    add("JJ", {"red", "blue", "green", "yellow", "white", "black", "brown", "gray", "grey",
               "orange", "pink", "purple", "golden", "silver", "beige", "large", "small", "big",
               "little", "tall", "short", "long", "old", "young", "new", "bright", "dark",
               "light", "soft", "fluffy", "wooden", "round", "square", "flat", "thin", "thick",
               "wide", "narrow", "open", "closed", "empty", "full", "clear", "cloudy", "sunny",
               "calm", "busy", "quiet", "modern", "ancient", "vintage", "rustic", "shiny",
               "smooth", "rough", "wet", "dry", "warm", "cold", "hot", "cool", "high", "low",
               "colorful", "several", "many", "few", "other", "various", "same", "different",
               "main", "single", "double", "striped", "spotted", "curly", "straight", "tiny",
               "huge", "giant", "pale", "vivid", "lush", "dense", "sparse", "blurry", "blurred",
               "visible", "distant", "upper", "lower", "inner", "outer", "middle", "central",
               "entire", "whole", "natural", "urban", "rural", "happy", "sad", "cute", "pretty",
               "beautiful", "ornate", "plain", "simple", "intricate", "detailed", "fringed",
               "furry", "grassy", "sandy", "rocky", "snowy", "leafy", "fresh", "ripe", "sliced",
               "metallic", "plastic", "ceramic", "cozy", "dim",
               "sharp", "heavy", "elderly", "adult", "male", "female", "tabby", "sleepy"});
    add("NN", {"front", "back", "left", "right", "top", "bottom", "side", "center", "centre",
               "view", "background", "foreground", "bed", "shed", "sled", "seed", "weed", "speed",
               "bread", "thing", "ceiling", "building", "clothing", "morning", "evening",
               "something", "nothing", "everything", "anything", "string", "ring", "king",
               "wing", "railing", "awning", "painting", "lighting", "wedding", "frosting",
               "icing", "siding", "flooring", "bedding", "pudding", "glass", "grass", "dress",
               "bus", "gas", "lens", "canvas", "cactus", "chess", "fly", "family", "belly",
               "jelly", "lily", "holly", "metal", "animal", "table", "cable", "needle", "bottle",
               "corner", "water", "tower", "flower", "person", "man", "woman", "child", "cat",
               "dog", "blanket", "statue", "cement", "park", "car", "box", "jumper", "edge",
               "scene", "image", "photo", "picture", "sky", "sea", "road", "street", "tree",
               "floor", "wall", "window", "door", "room", "house", "field", "beach", "mountain",
               "city", "area", "surface", "shirt", "hat", "hair", "face", "hand", "head",
               "body", "couch", "sofa", "chair", "plate", "cup", "bowl", "food"});
    add("NNS", {"people", "children", "men", "women", "feet", "teeth", "mice", "geese",
                "clothes", "pants", "jeans", "glasses", "scissors", "shorts", "stairs",
                "edges", "leaves", "trees", "flowers", "clouds"});
    return m;
  }();
  return *table;
}

bool is_number(std::string_view w) {
  bool digit = false;
  for (char c : w) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c != '.' && c != ',' && c != '%' && c != '-' && c != '/') {
      return false;
    }
  }
  return digit;
}

std::string guess_tag(std::string_view word, bool sentence_initial) {
  if (is_number(word)) return "CD";
  const std::string w = lower(word);
  if (auto it = lexicon().find(w); it != lexicon().end()) return it->second;
  if (!sentence_initial && std::isupper(static_cast<unsigned char>(word.front()))) return "NNP";
  if (w.size() > 4 && ends_with(w, "ly")) return "RB";
  if (w.size() > 4 && ends_with(w, "ing")) return "VBG";
  if (w.size() > 3 && ends_with(w, "ed") && !ends_with(w, "eed")) return "VBN";
  if (w.size() > 4 && ends_with(w, "est")) return "JJS";
  for (std::string_view suffix : {"ous", "ful", "ive", "able", "ible", "less", "ish", "ic"}) {
    if (w.size() > suffix.size() + 2 && ends_with(w, suffix)) return "JJ";
  }
  if (w.size() > 3 && ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") &&
      !ends_with(w, "is")) {
    return "NNS";
  }
  return "NN";
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

bool prenominal_context(std::string_view prev) {
  return prev.empty() || prev == "DT" || starts_with(prev, "JJ") || prev == "IN" ||
         prev == "PRP$" || prev == "CC" || prev == "CD" || prev == ",";
}

// Contextual corrections over the lexical guesses. `guessed[i]` is true when
// the tag came from suffix rules rather than the lexicon.
void contextual_fixups(std::vector<TaggedToken>& tokens, const std::vector<bool>& guessed) {
  const auto tag_at = [&](std::size_t i) -> std::string_view {
    return i < tokens.size() ? std::string_view(tokens[i].pos) : std::string_view();
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string_view prev = i == 0 ? std::string_view() : tag_at(i - 1);
    const std::string_view next = tag_at(i + 1);
    std::string& pos = tokens[i].pos;
    // Participles in attributive position: "with fringed edges", "a sleeping cat".
    if ((pos == "VBN" || pos == "VBD" || pos == "VBG") && guessed[i] && prenominal_context(prev) &&
        starts_with(next, "NN")) {
      pos = "JJ";
      continue;
    }
    // Third-person verbs mis-guessed as plurals: "a dog barks", "it sits on".
    if (pos == "NNS" && guessed[i] && (prev == "NN" || prev == "NNP" || prev == "PRP")) {
      if (next.empty() || next == "DT" || next == "IN" || next == "TO" || next == "RB" ||
          next == "PRP$" || next == "CD" || next == "." || next == ",") {
        pos = "VBZ";
        continue;
      }
    }
    if ((pos == "NN" || pos == "VBP") && guessed[i] &&
        (prev == "MD" || (i > 0 && (lower(tokens[i - 1].text) == "do" ||
                                    lower(tokens[i - 1].text) == "does" ||
                                    lower(tokens[i - 1].text) == "did")))) {
      pos = "VB";
    }
  }
}

}  // namespace

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<TaggedToken> tag(std::string_view caption) {
  std::vector<TaggedToken> tokens;
  std::vector<bool> guessed;
  bool sentence_initial = true;

  std::size_t i = 0;
  while (i < caption.size()) {
    while (i < caption.size() && is_space(caption[i])) ++i;
    if (i >= caption.size()) break;
    std::size_t word_end = i;
    while (word_end < caption.size() && !is_space(caption[word_end])) ++word_end;
    const std::string_view word = caption.substr(i, word_end - i);

    auto push = [&](std::size_t b, std::size_t e, std::string pos, bool was_guessed) {
      tokens.push_back({std::string(caption.substr(b, e - b)), std::move(pos), b, e});
      guessed.push_back(was_guessed);
    };

    if (all_punct(word)) {
      push(i, word_end, punct_tag(word), false);
      if (tokens.back().pos == ".") sentence_initial = true;
      i = word_end;
      continue;
    }

    std::size_t core_begin = i;
    while (core_begin < word_end && is_leading_punct(caption[core_begin])) ++core_begin;
    std::size_t core_end = word_end;
    while (core_end > core_begin && is_trailing_punct(caption[core_end - 1])) --core_end;
    // Keep a possessive or contraction apostrophe inside the word.
    if (core_end < word_end && caption[core_end] == '\'' && core_end + 1 < word_end &&
        std::isalpha(static_cast<unsigned char>(caption[core_end + 1]))) {
      ++core_end;
      while (core_end < word_end && std::isalpha(static_cast<unsigned char>(caption[core_end]))) ++core_end;
    }

    for (std::size_t p = i; p < core_begin; ++p) push(p, p + 1, punct_tag(caption.substr(p, 1)), false);
    const std::string_view core = caption.substr(core_begin, core_end - core_begin);
    const bool in_lexicon = lexicon().contains(lower(core)) || is_number(core);
    push(core_begin, core_end, guess_tag(core, sentence_initial), !in_lexicon);
    sentence_initial = false;

    std::size_t p = core_end;
    while (p < word_end) {
      std::size_t q = p + 1;
      if (caption[p] == '.') {
        while (q < word_end && caption[q] == '.') ++q;
      }
      push(p, q, punct_tag(caption.substr(p, q - p)), false);
      if (tokens.back().pos == ".") sentence_initial = true;
      p = q;
    }
    i = word_end;
  }

  if (tokens.empty()) throw Error(ErrorCode::EmptyInput, "caption is empty");
  contextual_fixups(tokens, guessed);
  return tokens;
}

std::vector<TaggedToken> align_tokens(std::string_view caption,
                                      std::span<const ExternalToken> external) {
  if (normalize_whitespace(caption).empty()) throw Error(ErrorCode::EmptyInput, "caption is empty");
  if (external.empty()) throw Error(ErrorCode::BadTokens, "token list is empty");
  std::vector<TaggedToken> tokens;
  tokens.reserve(external.size());
  std::size_t cursor = 0;
  for (const auto& tok : external) {
    if (tok.text.empty() || tok.pos.empty()) {
      throw Error(ErrorCode::BadTokens, "token with empty text or tag");
    }
    while (cursor < caption.size() && is_space(caption[cursor])) ++cursor;
    if (caption.substr(cursor, tok.text.size()) != tok.text) {
      throw Error(ErrorCode::BadTokens, "token '" + tok.text + "' does not align with caption at byte " +
                                            std::to_string(cursor));
    }
    std::string pos = tok.pos;
    for (char& c : pos) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    tokens.push_back({tok.text, std::move(pos), cursor, cursor + tok.text.size()});
    cursor += tok.text.size();
  }
  return tokens;
}

}  // namespace specs
