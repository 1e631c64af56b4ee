#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sisvive/baselines.hpp"
#include "sisvive/diagnostics.hpp"
#include "sisvive/estimator.hpp"
#include "sisvive/identification.hpp"
#include "sisvive/simulation.hpp"

namespace sisvive::cli {

using Json = nlohmann::ordered_json;

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex_digest(std::string_view bytes);
/// Digest of a file's bytes. Throws Error(kMissingFile) when unreadable.
std::string file_digest(const std::string& path);

/// Non-finite values become null.
Json number(double v);
Json numbers(const Eigen::VectorXd& v);
Json numbers(const std::vector<double>& v);

std::string to_string(OneSeRule rule);
OneSeRule parse_one_se_rule(const std::string& name);

Json cv_to_json(const CvReport& cv);
Json mip_to_json(const MipDiagnostics& m);
Json strength_to_json(const StrengthDiagnostics& s);
Json sargan_to_json(const SarganResult& s);
Json rip_to_json(const RipDiagnostics& r);
Json identification_to_json(const IdentificationReport& r, const ReducedForm& rf,
                            const std::vector<std::string>& names);

Json config_to_json(const SimulationConfig& cfg);
/// Overlays the keys of `j` on `base`. Unknown keys and ill-typed values
/// throw Error(kInvalidArgument).
SimulationConfig config_from_json(const Json& j, SimulationConfig base);

}  // namespace sisvive::cli
