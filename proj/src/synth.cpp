#include "specs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "specs/error.hpp"
#include "specs/rng.hpp"
#include "specs/toy_model.hpp"

namespace specs {
namespace {

// Pronounceable pseudo-word from an integer: alternating consonants and vowels.
std::string pseudo_word(std::uint64_t n) {
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  std::string w;
  do {
    w += consonants[n % consonants.size()];
    n /= consonants.size();
    w += vowels[n % vowels.size()];
    n /= vowels.size();
  } while (n > 0 || w.size() < 4);
  return w;
}

std::vector<std::vector<double>> make_basis(std::size_t count, std::size_t dim, Rng& rng) {
  std::vector<std::vector<double>> basis;
  for (std::size_t a = 0; a < count; ++a) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal();
    // Gram-Schmidt while there is room, so attributes are exactly separable.
    if (a < dim) {
      for (const auto& b : basis) {
        const double d = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
        for (std::size_t i = 0; i < dim; ++i) v[i] -= d * b[i];
      }
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace

SynthCorpus synth_generate(std::size_t n_images, std::size_t n_attributes, std::uint64_t seed,
                           const SynthOptions& options) {
  if (n_attributes < 4) throw Error(ErrorCode::BadConfig, "synthetic corpus needs at least 4 attributes");
  const std::size_t max_attributes = std::min(options.max_attributes, n_attributes);
  if (options.min_attributes < 1 || options.min_attributes > max_attributes || options.words_per_attribute < 1 ||
      options.feature_dim < 1) {
    throw Error(ErrorCode::BadConfig, "inconsistent synthetic corpus options");
  }
  if (n_attributes * options.words_per_attribute > options.vocab_buckets) {
    throw Error(ErrorCode::BadConfig, "vocabulary does not fit in the hashed buckets");
  }

  Rng rng(derive_seed(seed, "synth"));
  SynthCorpus corpus;
  corpus.basis = make_basis(n_attributes, options.feature_dim, rng);

  std::set<std::size_t> used_buckets;
  std::uint64_t counter = derive_seed(seed, "vocab") % 100000;
  for (std::size_t a = 0; a < n_attributes; ++a) {
    std::vector<std::string> words;
    while (words.size() < options.words_per_attribute) {
      std::string w = pseudo_word(counter++);
      if (used_buckets.insert(token_bucket(w, options.vocab_buckets)).second) words.push_back(std::move(w));
    }
    corpus.vocabulary.push_back(std::move(words));
  }

  corpus.features = EmbeddingTable(static_cast<std::uint32_t>(options.feature_dim));
  std::vector<std::size_t> all(n_attributes);
  std::iota(all.begin(), all.end(), 0);
  const int width = n_images > 1 ? static_cast<int>(std::to_string(n_images - 1).size()) : 1;
  for (std::size_t i = 0; i < n_images; ++i) {
    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "img%0*zu", width, i);
    const std::string image_id = id_buf;

    const std::size_t k =
        options.min_attributes + rng.below(max_attributes - options.min_attributes + 1);
    std::vector<std::size_t> pick = all;
    for (std::size_t s = 0; s < k; ++s) std::swap(pick[s], pick[s + rng.below(n_attributes - s)]);
    pick.resize(k);

    std::vector<float> feat(options.feature_dim);
    for (std::size_t d = 0; d < options.feature_dim; ++d) {
      double v = options.noise * rng.normal();
      for (std::size_t a : pick) v += corpus.basis[a][d];
      feat[d] = static_cast<float>(v);
    }
    corpus.features.add(image_id, std::move(feat));

    SegmentedCaption caption;
    caption.image_id = image_id;
    for (std::size_t u = 0; u < k; ++u) {
      const auto& words = corpus.vocabulary[pick[u]];
      const std::string& word = words[rng.below(words.size())];
      caption.units.push_back({word, {u, u + 1}, u + 1});
      if (u > 0) caption.source += ' ';
      caption.source += word;
    }
    corpus.captions.push_back(std::move(caption));
    corpus.attributes.push_back(std::move(pick));
  }
  return corpus;
}

}  // namespace specs
