#pragma once

#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gvw/dynamics.hpp"
#include "gvw/model.hpp"

namespace gvw {

/// One observation of a campaign: model time, spend and response (sales or
/// share).
struct CampaignRecord {
  double t = 0.0;
  double budget = 0.0;
  double response = 0.0;

  bool operator==(const CampaignRecord&) const = default;
};

/// Header names of the three required columns. Other columns are ignored.
struct CsvSchema {
  std::string time_column = "t";
  std::string budget_column = "budget";
  std::string response_column = "response";
};

/// Reads comma-separated records. Lines starting with '#' and blank lines
/// are skipped; the first remaining line is the header. Errors name the
/// source and the 1-based line number.
std::vector<CampaignRecord> read_csv(std::istream& in, const CsvSchema& schema = {},
                                     const std::string& source = "<stream>");
std::vector<CampaignRecord> load_csv(const std::string& path, const CsvSchema& schema = {});

/// Writes "t,budget,response" followed by one row per record, every value at
/// 17 significant digits.
void write_csv(std::ostream& out, std::span<const CampaignRecord> records);

/// Shortest-round-trip-safe decimal text for CSV and JSON output.
std::string format_double(double v);

struct NormalizationConfig {
  double market_potential = 1.0;  // M: share = response / M
  double time_origin = 0.0;
  double time_scale = 1.0;        // model time = (t - origin) * scale

  void validate() const;
};

/// 1.05 x the largest response.
double default_market_potential(std::span<const CampaignRecord> records);

/// Converts responses to shares and rescales time. Throws DataError listing
/// every record whose share falls outside [0, 1].
Trajectory normalize(std::span<const CampaignRecord> records,
                     const NormalizationConfig& config);

/// Inverse view of a trajectory: shares become responses.
std::vector<CampaignRecord> to_records(const Trajectory& trajectory);

struct ConstantBudget {
  double level = 1.0;
};

/// Rectangular pulses of length `on` separated by gaps of length `off`.
/// Successive pulses cycle through `levels`; the gaps spend `off_level`.
struct PulseTrainBudget {
  std::vector<double> levels{1.0};
  double on = 10.0;
  double off = 10.0;
  double off_level = 0.0;
};

/// Piecewise-constant reflected Gaussian walk inside [b_min, b_max]; the
/// level changes every `hold` time units by a N(0, step^2) increment.
struct RandomWalkBudget {
  double b_min = 0.5;
  double b_max = 2.0;
  double step = 0.2;
  double hold = 1.0;
};

using BudgetPattern = std::variant<ConstantBudget, PulseTrainBudget, RandomWalkBudget>;

/// Parses "const:LEVEL", "pulse:L1[,L2...]:ON:OFF[:OFF_LEVEL]" or
/// "walk:BMIN:BMAX:STEP:HOLD". Throws DomainError on malformed text.
BudgetPattern parse_budget_pattern(std::string_view text);
std::string describe(const BudgetPattern& pattern);

/// Budget as a function of time over [0, t_end]. Random walks draw their
/// levels from `seed`.
BudgetFn make_budget_fn(const BudgetPattern& pattern, double t_end, std::uint64_t seed);

struct SyntheticSpec {
  GvwParams true_params;
  BudgetPattern budget = ConstantBudget{};
  std::size_t n_samples = 200;
  double t_end = 100.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
  double x0 = 0.0;

  void validate() const;
};

/// Simulates the GVW dynamics under the budget pattern, samples n uniform
/// times on [0, t_end], adds seeded N(0, sigma^2) noise to the shares and
/// clamps them to [0, 1]. The spec is recorded in the trajectory meta.
Trajectory generate_synthetic(const SyntheticSpec& spec);

/// {"meta": {...}, "samples": [[t, b, x], ...]}
nlohmann::json to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const nlohmann::json& doc);

}  // namespace gvw
