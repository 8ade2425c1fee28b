#pragma once

// JSONL record formats shared by the CLI stages. Every JSONL output begins
// with a {"_header": {...}} record carrying the resolved configuration; the
// readers skip it.

#include <functional>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "specs/correlation.hpp"
#include "specs/metrics.hpp"
#include "specs/segment.hpp"
#include "specs/triplets.hpp"

namespace specs::io {

using Json = nlohmann::ordered_json;

/// Calls `fn` for every non-blank, non-header line. Malformed JSON or schema
/// errors raise Error(DataMissing) naming the line.
void for_each_record(std::istream& in, const std::function<void(const Json&)>& fn);

void write_header(std::ostream& out, const Json& config);
void write_record(std::ostream& out, const Json& record);

CaptionInput caption_input_from_json(const Json& j);
Json segmented_to_json(const SegmentedCaption& seg);
/// Segmentation output back to units; unit token ranges are not recoverable
/// and are left empty.
SegmentedCaption segmented_from_json(const Json& j);

Json triplet_to_json(const Triplet& t);
Triplet triplet_from_json(const Json& j);

Json report_to_json(const SpecificityReport& r);
Json scored_pair_to_json(const ScoredPair& p);
ScoredPair scored_pair_from_json(const Json& j);

Json correlation_to_json(const CorrelationReport& r);

std::vector<Triplet> read_triplets(std::istream& in);
std::vector<SegmentedCaption> read_segmented(std::istream& in);

}  // namespace specs::io
