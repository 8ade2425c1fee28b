#include "specs/triplets.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "specs/error.hpp"

namespace specs {

void ForgeConfig::validate() const {
  if (!(shuffle_rate >= 0.0 && shuffle_rate <= 1.0)) {
    throw Error(ErrorCode::BadConfig, "shuffle_rate must lie in [0, 1]");
  }
  if (pool_size < 2) throw Error(ErrorCode::BadConfig, "pool_size must be at least 2");
}

std::vector<PartialCaption> prefixes(const SegmentedCaption& caption) {
  std::vector<PartialCaption> out;
  out.reserve(caption.units.size());
  std::string text;
  for (std::size_t j = 0; j < caption.units.size(); ++j) {
    if (j > 0) text += ' ';
    text += caption.units[j].text;
    out.push_back({caption.image_id, text, j + 1});
  }
  return out;
}

std::string shuffle_tokens(const std::string& unit, Rng& rng) {
  std::vector<std::string> words;
  std::istringstream in(unit);
  for (std::string w; in >> w;) words.push_back(std::move(w));
  for (std::size_t i = words.size(); i > 1; --i) {
    std::swap(words[i - 1], words[rng.below(i)]);
  }
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ' ';
    out += words[i];
  }
  return out;
}

namespace {

struct UnitRef {
  std::size_t caption;
  std::size_t unit;
};

}  // namespace

std::vector<Triplet> forge_window(std::span<const SegmentedCaption> window, const ForgeConfig& cfg,
                                  std::uint64_t first_ordinal) {
  cfg.validate();
  std::vector<Triplet> out;
  for (std::size_t c = 0; c < window.size(); ++c) {
    const SegmentedCaption& caption = window[c];
    if (caption.units.size() < 2) continue;

    // A sampled detail must come from another image and must not repeat a
    // unit of this caption, which would make the "negative" grounded.
    std::set<std::string_view> own_units;
    for (const auto& u : caption.units) own_units.insert(u.text);
    std::vector<UnitRef> pool;
    for (std::size_t o = 0; o < window.size(); ++o) {
      if (window[o].image_id == caption.image_id) continue;
      for (std::size_t u = 0; u < window[o].units.size(); ++u) {
        if (!own_units.contains(window[o].units[u].text)) pool.push_back({o, u});
      }
    }
    if (pool.empty()) {
      throw Error(ErrorCode::CorpusTooSmall,
                  "no negative detail available for '" + caption.image_id + "' in its pool window");
    }

    Rng rng(derive_seed(cfg.seed, caption.image_id, first_ordinal + c));
    const auto ladder = prefixes(caption);
    for (std::size_t j = 0; j + 1 < ladder.size(); ++j) {
      Triplet pos;
      pos.image_id = caption.image_id;
      pos.base = ladder[j];
      pos.extended = ladder[j + 1].text;
      pos.polarity = Polarity::Positive;
      pos.detail_source = caption.image_id;
      out.push_back(std::move(pos));

      const UnitRef ref = pool[rng.below(pool.size())];
      std::string detail = window[ref.caption].units[ref.unit].text;
      const bool shuffled = rng.bernoulli(cfg.shuffle_rate);
      if (shuffled) detail = shuffle_tokens(detail, rng);

      Triplet neg;
      neg.image_id = caption.image_id;
      neg.base = ladder[j];
      neg.extended = ladder[j].text + ' ' + detail;
      neg.polarity = Polarity::Negative;
      neg.detail_source = window[ref.caption].image_id;
      neg.shuffled = shuffled;
      out.push_back(std::move(neg));
    }
  }
  return out;
}

std::vector<Triplet> forge(std::span<const SegmentedCaption> corpus, const ForgeConfig& cfg) {
  cfg.validate();
  if (corpus.size() < 2) throw Error(ErrorCode::CorpusTooSmall, "need at least two captions");
  std::vector<Triplet> out;
  std::size_t len = 0;
  for (std::size_t start = 0; start < corpus.size(); start += len) {
    len = std::min(cfg.pool_size, corpus.size() - start);
    // A lone trailing caption has nobody to borrow from; fold it in.
    if (corpus.size() - start - len == 1) ++len;
    auto part = forge_window(corpus.subspan(start, len), cfg, start);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace specs
