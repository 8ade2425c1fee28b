#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specs/embedding_store.hpp"
#include "specs/segment.hpp"

namespace specs {

struct SynthOptions {
  std::size_t feature_dim = 64;
  std::size_t min_attributes = 2;  // per image
  std::size_t max_attributes = 5;  // capped at the attribute count
  std::size_t words_per_attribute = 1;
  double noise = 0.05;  // per-component Gaussian std
  // Words are chosen so that no two attributes share a bucket of this size.
  std::size_t vocab_buckets = 1024;
};

/// Planted-attribute corpus: image i's features are the sum of its attribute
/// basis vectors plus noise, and its caption has one single-word unit per
/// attribute.
struct SynthCorpus {
  EmbeddingTable features;
  std::vector<SegmentedCaption> captions;
  std::vector<std::vector<std::size_t>> attributes;  // per image, in caption order
  std::vector<std::vector<double>> basis;            // per attribute, unit length
  std::vector<std::vector<std::string>> vocabulary;  // per attribute
};

/// Throws Error(BadConfig) if n_attributes < 4 or the options are inconsistent.
SynthCorpus synth_generate(std::size_t n_images, std::size_t n_attributes, std::uint64_t seed,
                           const SynthOptions& options = {});

}  // namespace specs
