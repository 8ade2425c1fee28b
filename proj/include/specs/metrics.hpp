#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "specs/triplets.hpp"

namespace specs {

struct ScoredTriplet {
  std::size_t triplet = 0;  // index into the scored triplet list
  Polarity polarity = Polarity::Positive;
  double theta_base = 0.0;
  double theta_ext = 0.0;

  /// Strict: positives must raise similarity, negatives must lower it.
  bool hit() const {
    return polarity == Polarity::Positive ? theta_ext > theta_base : theta_ext < theta_base;
  }
};

struct SpecificityReport {
  double sr_pos = 0.0;
  double sr_neg = 0.0;
  double average = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

struct ScoredPair {
  std::string image_id;
  std::string caption_id;
  double specs = 0.0;
};

/// Throws Error(EmptyClass) unless both polarities are present.
SpecificityReport specificity_rate(std::span<const ScoredTriplet> scored);

/// Clipped cosine max(0, cos(image, caption)).
double specs_score(std::span<const float> image, std::span<const float> caption);
ScoredPair specs_score(std::string image_id, std::string caption_id, std::span<const float> image,
                       std::span<const float> caption);

/// theta(image_id, text) for any text appearing in a triplet.
using SimilarityFn = std::function<double(const std::string& image_id, const std::string& text)>;

std::vector<ScoredTriplet> score_triplets(std::span<const Triplet> triplets, const SimilarityFn& theta);

/// Precomputed similarities keyed by (image_id, text_id); text ids are the
/// caption strings themselves.
class SimilarityTable {
 public:
  void add(std::string image_id, std::string text_id, double theta);
  /// Throws Error(DataMissing) when the pair is absent.
  double at(const std::string& image_id, const std::string& text_id) const;
  std::size_t size() const { return table_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, double> table_;
};

}  // namespace specs
