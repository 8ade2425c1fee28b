#include "specs/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>

#include "specs/error.hpp"

namespace specs {
namespace {

void require_pairs(std::span<const double> x, std::span<const double> y, std::size_t min_n) {
  if (x.size() != y.size()) throw Error(ErrorCode::DimMismatch, "series lengths differ");
  if (x.size() < min_n) {
    throw Error(ErrorCode::TooFewSamples, "need at least " + std::to_string(min_n) + " samples, got " +
                                              std::to_string(x.size()));
  }
}

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double sum_sq_dev(std::span<const double> v, double m) {
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s;
}

std::int64_t tied_pairs_in_sorted(const std::vector<double>& sorted) {
  std::int64_t ties = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const auto t = static_cast<std::int64_t>(j - i);
    ties += t * (t - 1) / 2;
    i = j;
  }
  return ties;
}

// Sorts v ascending and returns the number of inversions removed.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, scratch, lo, mid) + merge_count(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      scratch[k++] = v[j++];
    } else {
      scratch[k++] = v[i++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

std::vector<double> metric_of(std::span<const JudgedSample> s) {
  std::vector<double> v;
  v.reserve(s.size());
  for (const auto& x : s) v.push_back(x.metric_score);
  return v;
}

std::vector<double> human_of(std::span<const JudgedSample> s) {
  std::vector<double> v;
  v.reserve(s.size());
  for (const auto& x : s) v.push_back(x.human_score);
  return v;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y, 3);
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my);
  const double sxx = sum_sq_dev(x, mx), syy = sum_sq_dev(y, my);
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ZeroVariance, "constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y, 3);
  const auto rx = average_ranks(x), ry = average_ranks(y);
  return pearson(rx, ry);
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y, 2);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });

  std::vector<double> xs(n), ys(n);
  for (std::size_t k = 0; k < n; ++k) {
    xs[k] = x[order[k]];
    ys[k] = y[order[k]];
  }
  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t tx = tied_pairs_in_sorted(xs);

  std::int64_t txy = 0;  // tied in both
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && xs[j] == xs[i] && ys[j] == ys[i]) ++j;
    const auto t = static_cast<std::int64_t>(j - i);
    txy += t * (t - 1) / 2;
    i = j;
  }

  std::vector<double> scratch(n);
  const std::int64_t swaps = merge_count(ys, scratch, 0, n);
  const std::int64_t ty = tied_pairs_in_sorted(ys);

  // concordant - discordant = n0 - tx - ty + txy - 2 * swaps
  const std::int64_t numerator = n0 - tx - ty + txy - 2 * swaps;
  const std::int64_t untied_x = n0 - tx;
  const std::int64_t untied_y = n0 - ty;
  if (untied_x == 0 || untied_y == 0) throw Error(ErrorCode::ZeroVariance, "constant series");
  return static_cast<double>(numerator) /
         std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
}

double one_minus_r2_rescaled(std::span<const double> metric, std::span<const double> human) {
  require_pairs(metric, human, 3);
  const auto [mmin, mmax] = std::minmax_element(metric.begin(), metric.end());
  const auto [hmin, hmax] = std::minmax_element(human.begin(), human.end());
  if (*mmax == *mmin || *hmax == *hmin) throw Error(ErrorCode::ZeroVariance, "constant series");
  const double scale = (*hmax - *hmin) / (*mmax - *mmin);
  const double hbar = mean(human);
  double ss_res = 0.0;
  for (std::size_t i = 0; i < metric.size(); ++i) {
    const double predicted = *hmin + (metric[i] - *mmin) * scale;
    ss_res += (human[i] - predicted) * (human[i] - predicted);
  }
  return ss_res / sum_sq_dev(human, hbar);
}

double one_minus_r2_ols(std::span<const double> metric, std::span<const double> human) {
  require_pairs(metric, human, 3);
  const double mx = mean(metric), my = mean(human);
  const double sxx = sum_sq_dev(metric, mx), syy = sum_sq_dev(human, my);
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ZeroVariance, "constant series");
  double sxy = 0.0;
  for (std::size_t i = 0; i < metric.size(); ++i) sxy += (metric[i] - mx) * (human[i] - my);
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < metric.size(); ++i) {
    const double r = human[i] - (intercept + slope * metric[i]);
    ss_res += r * r;
  }
  return ss_res / syy;
}

CorrelationReport correlate(std::span<const JudgedSample> samples) {
  const auto m = metric_of(samples);
  const auto h = human_of(samples);
  CorrelationReport r;
  r.n = samples.size();
  r.pcc = pearson(m, h);
  r.one_minus_r2 = one_minus_r2_rescaled(m, h);
  r.one_minus_r2_ols = one_minus_r2_ols(m, h);
  r.kendall_tau = kendall_tau_b(m, h);
  r.spearman = spearman(m, h);
  return r;
}

double sample_wise_kendall(std::span<const JudgedSample> samples) {
  std::map<std::string, std::vector<const JudgedSample*>> by_image;
  for (const auto& s : samples) by_image[s.image_id].push_back(&s);
  double total = 0.0;
  std::size_t used = 0;
  for (const auto& [image, group] : by_image) {
    if (group.size() < 2) continue;
    std::vector<double> m, h;
    for (const auto* s : group) {
      m.push_back(s->metric_score);
      h.push_back(s->human_score);
    }
    try {
      total += kendall_tau_b(m, h);
      ++used;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroVariance) throw;
    }
  }
  if (used == 0) throw Error(ErrorCode::TooFewSamples, "no image has two rankable captions");
  return total / static_cast<double>(used);
}

std::vector<BucketResult> bucketed_correlate(std::span<const JudgedSample> samples,
                                             std::span<const std::size_t> edges) {
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] <= edges[i - 1]) throw Error(ErrorCode::BadEdges, "bucket edges must be strictly increasing");
  }
  if (!edges.empty() && edges.front() == 0) throw Error(ErrorCode::BadEdges, "first bucket edge must be positive");

  std::vector<BucketResult> out;
  for (std::size_t b = 0; b <= edges.size(); ++b) {
    TokenBucket bucket{b == 0 ? 0 : edges[b - 1], std::nullopt};
    if (b < edges.size()) bucket.hi = edges[b];
    std::vector<JudgedSample> members;
    for (const auto& s : samples) {
      if (s.token_count >= bucket.lo && (!bucket.hi || s.token_count < *bucket.hi)) members.push_back(s);
    }
    BucketResult result{bucket, members.size(), std::nullopt, {}};
    try {
      result.report = correlate(members);
      if (!edges.empty()) result.report->bucket = bucket;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TooFewSamples && e.code() != ErrorCode::ZeroVariance) throw;
      result.skipped_reason = std::string(to_string(e.code()));
    }
    out.push_back(std::move(result));
  }
  return out;
}

}  // namespace specs
