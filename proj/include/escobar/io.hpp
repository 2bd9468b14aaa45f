#pragma once

// JSON and CSV persistence. JSON objects keep keys sorted, so dump() of a
// value is canonical.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "escobar/functional.hpp"
#include "escobar/geometry.hpp"
#include "escobar/harness.hpp"
#include "escobar/minimizers.hpp"
#include "escobar/operators.hpp"
#include "escobar/reduction.hpp"

namespace escobar {

using Json = nlohmann::json;

inline constexpr const char* kArtifactVersion = "0.1.0";

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json to_json(const BoundaryField& f);
BoundaryField field_from_json(const Json& j);

/// {n, kind: "flat" | "conformal", w_coeffs?}
Json geometry_to_json(const ModelGeometry& g);
ModelGeometry geometry_from_json(const Json& j);

Json to_json(const BubbleParams& b);
BubbleParams bubble_from_json(const Json& j);

Json to_json(const HessianData& h, bool include_matrix = false);
Json to_json(const DistanceReport& d);
Json to_json(const ReductionResult& r);
Json to_json(const TaylorResult& t);
Json to_json(const FlowTrajectory& t);
Json to_json(const PowerFit& f);
Json to_json(const AspGapResult& a);
Json to_json(const CoercivityReport& c);

/// %.17g, so doubles round-trip through text.
std::string format_double(double v);

extern const char* const kSweepCsvHeader;
extern const char* const kInteriorCsvHeader;
void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records, const std::string& preamble);
void write_interior_csv(std::ostream& os, const std::vector<InteriorRecord>& records, const std::string& preamble);

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace escobar
