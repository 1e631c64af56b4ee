#include "report.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include "sisvive/error.hpp"

namespace sisvive::cli {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex_digest(std::string_view bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::uint64_t h = fnv1a64(bytes);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
  return out;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot read '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex_digest(bytes);
}

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json numbers(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (const double x : v) a.push_back(number(x));
  return a;
}

std::string to_string(OneSeRule rule) {
  return rule == OneSeRule::kSmallestLambda ? "smallest" : "largest";
}

OneSeRule parse_one_se_rule(const std::string& name) {
  if (name == "smallest") return OneSeRule::kSmallestLambda;
  if (name == "largest") return OneSeRule::kLargestLambda;
  throw Error(ErrorCode::kInvalidArgument, "one-SE rule must be 'smallest' or 'largest'");
}

Json cv_to_json(const CvReport& cv) {
  return Json{{"k", cv.k},
              {"seed", cv.seed},
              {"rule", to_string(cv.rule)},
              {"chosen_lambda", number(cv.chosen_lambda)},
              {"min_loss_lambda", number(cv.lambda_grid[cv.min_index])},
              {"lambda_grid", numbers(cv.lambda_grid)},
              {"mean_loss", numbers(cv.mean_cv_loss)},
              {"se_loss", numbers(cv.se_cv_loss)}};
}

Json mip_to_json(const MipDiagnostics& m) {
  return Json{{"mu", number(m.mu)}, {"rho", number(m.rho)}, {"s_max", number(m.s_max)}};
}

Json strength_to_json(const StrengthDiagnostics& s) {
  return Json{{"first_stage_f", number(s.first_stage_f)},
              {"concentration_scaled", number(s.concentration_scaled)},
              {"infinite", s.infinite}};
}

Json sargan_to_json(const SarganResult& s) {
  return Json{{"statistic", number(s.statistic)}, {"df", s.df}, {"p_value", number(s.p_value)}};
}

Json rip_to_json(const RipDiagnostics& r) {
  return Json{{"matrix", to_string(r.matrix)},
              {"k", r.k},
              {"delta_plus", number(r.delta_plus)},
              {"delta_minus", number(r.delta_minus)}};
}

Json identification_to_json(const IdentificationReport& r, const ReducedForm& rf,
                            const std::vector<std::string>& names) {
  auto members = [&](const std::vector<Eigen::Index>& idx) {
    Json one_based = Json::array();
    Json labels = Json::array();
    for (const Eigen::Index j : idx) {
      one_based.push_back(j + 1);
      labels.push_back(names[static_cast<std::size_t>(j)]);
    }
    return std::pair{one_based, labels};
  };
  Json sets = Json::array();
  for (const auto& s : r.sets) {
    auto [idx, labels] = members(s.members);
    sets.push_back(Json{{"members", idx}, {"names", labels}, {"q", number(s.q)}});
  }
  Json clusters = Json::array();
  for (const auto& c : r.clusters) {
    auto [idx, labels] = members(c.members);
    clusters.push_back(Json{{"members", idx}, {"names", labels}, {"q", number(c.q)}});
  }
  return Json{{"u", r.u},
              {"set_size", r.set_size},
              {"identified", r.identified},
              {"premise_holds", r.premise_holds},
              {"beta_candidates", numbers(r.beta_candidates)},
              {"tolerance", number(r.tolerance)},
              {"boundary_distance", number(r.boundary_distance)},
              {"sets", sets},
              {"sets_truncated", r.sets_truncated},
              {"clusters", clusters},
              {"reduced_form",
               Json{{"source", rf.source == ReducedForm::Source::kGiven ? "given" : "estimated"},
                    {"gamma", numbers(rf.gamma)},
                    {"big_gamma", numbers(rf.big_gamma)}}}};
}

Json config_to_json(const SimulationConfig& cfg) {
  return Json{{"n", cfg.n},
              {"l", cfg.l},
              {"s", cfg.s},
              {"beta_star", cfg.beta_star},
              {"alpha_magnitude", cfg.alpha_magnitude},
              {"endogeneity", cfg.endogeneity},
              {"corr_structure", to_string(cfg.corr_structure)},
              {"mu", cfg.mu},
              {"strength", to_string(cfg.strength)},
              {"concentration_basis", to_string(cfg.concentration_basis)},
              {"relative", to_string(cfg.relative)},
              {"pi_star", cfg.pi_star},
              {"gamma0_star", cfg.gamma0_star},
              {"seed", cfg.seed},
              {"cv_folds", cfg.cv_folds},
              {"one_se_rule", to_string(cfg.one_se_rule)}};
}

SimulationConfig config_from_json(const Json& j, SimulationConfig cfg) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "simulation config must be an object");
  auto get_int = [](const Json& v, const std::string& key) {
    if (!v.is_number_integer()) {
      throw Error(ErrorCode::kInvalidArgument, "config key '" + key + "' must be an integer");
    }
    return v.get<std::int64_t>();
  };
  auto get_real = [](const Json& v, const std::string& key) {
    if (!v.is_number()) throw Error(ErrorCode::kInvalidArgument, "config key '" + key + "' must be a number");
    return v.get<double>();
  };
  auto get_str = [](const Json& v, const std::string& key) {
    if (!v.is_string()) throw Error(ErrorCode::kInvalidArgument, "config key '" + key + "' must be a string");
    return v.get<std::string>();
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "n") cfg.n = get_int(v, key);
    else if (key == "l") cfg.l = get_int(v, key);
    else if (key == "s") cfg.s = get_int(v, key);
    else if (key == "beta_star") cfg.beta_star = get_real(v, key);
    else if (key == "alpha_magnitude") cfg.alpha_magnitude = get_real(v, key);
    else if (key == "endogeneity") cfg.endogeneity = get_real(v, key);
    else if (key == "corr_structure") cfg.corr_structure = parse_corr_structure(get_str(v, key));
    else if (key == "mu") cfg.mu = get_real(v, key);
    else if (key == "strength") cfg.strength = parse_strength(get_str(v, key));
    else if (key == "concentration_basis") cfg.concentration_basis = parse_concentration_basis(get_str(v, key));
    else if (key == "relative") cfg.relative = parse_relative_strength(get_str(v, key));
    else if (key == "pi_star") cfg.pi_star = get_real(v, key);
    else if (key == "gamma0_star") cfg.gamma0_star = get_real(v, key);
    else if (key == "seed") {
      const std::int64_t s = get_int(v, key);
      if (s < 0) throw Error(ErrorCode::kInvalidArgument, "config key 'seed' must be nonnegative");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "cv_folds") cfg.cv_folds = static_cast<int>(get_int(v, key));
    else if (key == "one_se_rule") cfg.one_se_rule = parse_one_se_rule(get_str(v, key));
    else throw Error(ErrorCode::kInvalidArgument, "unknown simulation config key '" + key + "'");
  }
  return cfg;
}

}  // namespace sisvive::cli
