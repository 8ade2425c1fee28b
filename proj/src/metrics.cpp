#include "specs/metrics.hpp"

#include <algorithm>

#include "specs/embedding_store.hpp"
#include "specs/error.hpp"

namespace specs {

SpecificityReport specificity_rate(std::span<const ScoredTriplet> scored) {
  std::size_t hits_pos = 0, hits_neg = 0;
  SpecificityReport r;
  for (const auto& s : scored) {
    if (s.polarity == Polarity::Positive) {
      ++r.n_pos;
      hits_pos += s.hit() ? 1 : 0;
    } else {
      ++r.n_neg;
      hits_neg += s.hit() ? 1 : 0;
    }
  }
  if (r.n_pos == 0 || r.n_neg == 0) {
    throw Error(ErrorCode::EmptyClass, "specificity rate needs both positive and negative triplets");
  }
  r.sr_pos = static_cast<double>(hits_pos) / static_cast<double>(r.n_pos);
  r.sr_neg = static_cast<double>(hits_neg) / static_cast<double>(r.n_neg);
  r.average = (r.sr_pos + r.sr_neg) / 2.0;
  return r;
}

double specs_score(std::span<const float> image, std::span<const float> caption) {
  return std::max(0.0, cosine(image, caption));
}

ScoredPair specs_score(std::string image_id, std::string caption_id, std::span<const float> image,
                       std::span<const float> caption) {
  return {std::move(image_id), std::move(caption_id), specs_score(image, caption)};
}

std::vector<ScoredTriplet> score_triplets(std::span<const Triplet> triplets, const SimilarityFn& theta) {
  std::vector<ScoredTriplet> out;
  out.reserve(triplets.size());
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const Triplet& t = triplets[i];
    out.push_back({i, t.polarity, theta(t.image_id, t.base.text), theta(t.image_id, t.extended)});
  }
  return out;
}

void SimilarityTable::add(std::string image_id, std::string text_id, double theta) {
  table_[{std::move(image_id), std::move(text_id)}] = theta;
}

double SimilarityTable::at(const std::string& image_id, const std::string& text_id) const {
  auto it = table_.find({image_id, text_id});
  if (it == table_.end()) {
    throw Error(ErrorCode::DataMissing, "no similarity for image '" + image_id + "' and text '" + text_id + "'");
  }
  return it->second;
}

}  // namespace specs
