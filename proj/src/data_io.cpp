#include "gvw/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "gvw/error.hpp"

namespace gvw {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    cells.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

bool parse_number(std::string_view text, double& value) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

double parse_field(std::string_view text, const char* what) {
  double v = 0.0;
  if (!parse_number(trim(text), v)) {
    throw DomainError(std::string("malformed ") + what + " '" + std::string(text) + "'");
  }
  return v;
}

std::vector<double> parse_list(std::string_view text, const char* what) {
  std::vector<double> out;
  for (auto cell : split(text, ',')) out.push_back(parse_field(cell, what));
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<CampaignRecord> read_csv(std::istream& in, const CsvSchema& schema,
                                     const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t width = 0;
  std::size_t col_t = 0, col_b = 0, col_r = 0;
  std::vector<CampaignRecord> records;

  const auto fail = [&](const std::string& msg) {
    throw DataError(source + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto cells = split(view, ',');
    if (!have_header) {
      const auto find = [&](const std::string& name) {
        const auto it = std::find(cells.begin(), cells.end(), name);
        if (it == cells.end()) fail("missing column '" + name + "' in header");
        return static_cast<std::size_t>(it - cells.begin());
      };
      col_t = find(schema.time_column);
      col_b = find(schema.budget_column);
      col_r = find(schema.response_column);
      width = cells.size();
      have_header = true;
      continue;
    }
    if (cells.size() != width) {
      fail("expected " + std::to_string(width) + " cells, found " +
           std::to_string(cells.size()));
    }
    CampaignRecord rec;
    const auto cell = [&](std::size_t col, const std::string& name) {
      double v = 0.0;
      if (!parse_number(cells[col], v)) {
        fail("non-numeric value '" + std::string(cells[col]) + "' in column '" + name + "'");
      }
      if (!std::isfinite(v)) fail("non-finite value in column '" + name + "'");
      return v;
    };
    rec.t = cell(col_t, schema.time_column);
    rec.budget = cell(col_b, schema.budget_column);
    rec.response = cell(col_r, schema.response_column);
    if (rec.budget < 0.0) fail("negative budget");
    if (rec.response < 0.0) fail("negative response");
    records.push_back(rec);
  }
  if (!have_header) throw DataError(source + ": no header row");
  if (records.empty()) throw DataError(source + ": no data rows");
  return records;
}

std::vector<CampaignRecord> load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_csv(in, schema, path);
}

void write_csv(std::ostream& out, std::span<const CampaignRecord> records) {
  out << "t,budget,response\n";
  for (const auto& r : records) {
    out << format_double(r.t) << ',' << format_double(r.budget) << ','
        << format_double(r.response) << '\n';
  }
}

void NormalizationConfig::validate() const {
  if (!(market_potential > 0.0) || !std::isfinite(market_potential)) {
    throw DomainError("market potential must be > 0");
  }
  if (!(time_scale > 0.0) || !std::isfinite(time_scale)) {
    throw DomainError("time scale must be > 0");
  }
  if (!std::isfinite(time_origin)) throw DomainError("time origin must be finite");
}

double default_market_potential(std::span<const CampaignRecord> records) {
  if (records.empty()) throw DataError("no records");
  double peak = 0.0;
  for (const auto& r : records) peak = std::max(peak, r.response);
  return 1.05 * peak;
}

Trajectory normalize(std::span<const CampaignRecord> records,
                     const NormalizationConfig& config) {
  config.validate();
  Trajectory out;
  std::ostringstream bad;
  std::size_t bad_count = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const double share = r.response / config.market_potential;
    if (!(share >= 0.0 && share <= 1.0)) {
      if (bad_count++ < 20) bad << (bad_count > 1 ? ", " : "") << "#" << i << " (t=" << r.t
                                 << ", share=" << share << ")";
    }
    out.samples.push_back({(r.t - config.time_origin) * config.time_scale, r.budget, share});
  }
  if (bad_count > 0) {
    throw DataError("normalization puts " + std::to_string(bad_count) +
                    " record(s) outside [0, 1]: " + bad.str());
  }
  out.validate();
  out.meta["source"] = "normalize";
  out.meta["market_potential"] = format_double(config.market_potential);
  return out;
}

std::vector<CampaignRecord> to_records(const Trajectory& trajectory) {
  std::vector<CampaignRecord> out;
  out.reserve(trajectory.size());
  for (const auto& s : trajectory.samples) out.push_back({s.t, s.budget, s.share});
  return out;
}

BudgetPattern parse_budget_pattern(std::string_view text) {
  const auto parts = split(text, ':');
  const std::string_view kind = parts.front();
  if (kind == "const" && parts.size() == 2) {
    ConstantBudget c{parse_field(parts[1], "budget level")};
    if (!(c.level >= 0.0)) throw DomainError("budget level must be >= 0");
    return c;
  }
  if (kind == "pulse" && (parts.size() == 4 || parts.size() == 5)) {
    PulseTrainBudget p;
    p.levels = parse_list(parts[1], "pulse level");
    p.on = parse_field(parts[2], "pulse on-duration");
    p.off = parse_field(parts[3], "pulse off-duration");
    if (parts.size() == 5) p.off_level = parse_field(parts[4], "pulse off level");
    if (!(p.on > 0.0) || !(p.off >= 0.0)) throw DomainError("pulse durations must be positive");
    for (double l : p.levels) {
      if (!(l >= 0.0)) throw DomainError("pulse levels must be >= 0");
    }
    if (!(p.off_level >= 0.0)) throw DomainError("pulse off level must be >= 0");
    return p;
  }
  if (kind == "walk" && parts.size() == 5) {
    RandomWalkBudget w{parse_field(parts[1], "walk minimum"), parse_field(parts[2], "walk maximum"),
                       parse_field(parts[3], "walk step"), parse_field(parts[4], "walk hold")};
    if (!(w.b_min >= 0.0 && w.b_max > w.b_min)) throw DomainError("walk needs 0 <= min < max");
    if (!(w.step >= 0.0) || !(w.hold > 0.0)) throw DomainError("walk step/hold invalid");
    return w;
  }
  throw DomainError("unrecognized budget pattern '" + std::string(text) +
                    "' (expected const:L, pulse:L1,L2:ON:OFF[:OFF_LEVEL] or "
                    "walk:MIN:MAX:STEP:HOLD)");
}

std::string describe(const BudgetPattern& pattern) {
  struct Visitor {
    std::string operator()(const ConstantBudget& c) const {
      return "const:" + format_double(c.level);
    }
    std::string operator()(const PulseTrainBudget& p) const {
      std::string levels;
      for (std::size_t i = 0; i < p.levels.size(); ++i) {
        levels += (i ? "," : "") + format_double(p.levels[i]);
      }
      return "pulse:" + levels + ":" + format_double(p.on) + ":" + format_double(p.off) + ":" +
             format_double(p.off_level);
    }
    std::string operator()(const RandomWalkBudget& w) const {
      return "walk:" + format_double(w.b_min) + ":" + format_double(w.b_max) + ":" +
             format_double(w.step) + ":" + format_double(w.hold);
    }
  };
  return std::visit(Visitor{}, pattern);
}

BudgetFn make_budget_fn(const BudgetPattern& pattern, double t_end, std::uint64_t seed) {
  if (const auto* c = std::get_if<ConstantBudget>(&pattern)) {
    const double level = c->level;
    return [level](double) { return level; };
  }
  if (const auto* p = std::get_if<PulseTrainBudget>(&pattern)) {
    if (p->levels.empty()) throw DomainError("pulse train needs at least one level");
    return [p = *p](double t) {
      const double period = p.on + p.off;
      const double k = std::floor(t / period);
      if (t - k * period >= p.on) return p.off_level;
      const auto n = static_cast<long long>(p.levels.size());
      const auto idx = ((static_cast<long long>(k) % n) + n) % n;
      return p.levels[static_cast<std::size_t>(idx)];
    };
  }
  const auto& w = std::get<RandomWalkBudget>(pattern);
  const auto segments = static_cast<std::size_t>(std::ceil(std::max(t_end, 0.0) / w.hold)) + 2;
  std::vector<double> levels;
  levels.reserve(segments);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> step(0.0, w.step);
  double level = 0.5 * (w.b_min + w.b_max);
  const double width = w.b_max - w.b_min;
  for (std::size_t i = 0; i < segments; ++i) {
    levels.push_back(level);
    level += step(rng);
    // Reflect back into [b_min, b_max]; a large step may bounce more than once.
    double offset = std::fmod(level - w.b_min, 2.0 * width);
    if (offset < 0.0) offset += 2.0 * width;
    level = w.b_min + (offset <= width ? offset : 2.0 * width - offset);
  }
  return [levels = std::move(levels), hold = w.hold](double t) {
    const double k = std::floor(std::max(t, 0.0) / hold);
    const auto idx = std::min(static_cast<std::size_t>(k), levels.size() - 1);
    return levels[idx];
  };
}

void SyntheticSpec::validate() const {
  true_params.validate();
  if (n_samples < 2) throw DomainError("synthetic data needs n_samples >= 2");
  if (!(noise_sigma >= 0.0)) throw DomainError("noise sigma must be >= 0");
  if (!(t_end > 0.0)) throw DomainError("t_end must be > 0");
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw DomainError("x0 must lie in [0, 1]");
}

Trajectory generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<double> grid(spec.n_samples);
  for (std::size_t l = 0; l < spec.n_samples; ++l) {
    grid[l] = spec.t_end * static_cast<double>(l) / static_cast<double>(spec.n_samples - 1);
  }
  // The budget pattern and the noise draw from separate streams so that the
  // clean path does not depend on sigma.
  const BudgetFn budget = make_budget_fn(spec.budget, spec.t_end, spec.seed);
  Trajectory out = simulate(spec.true_params, budget, spec.x0, grid);

  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 rng(spec.seed ^ 0x9E3779B97F4A7C15ULL);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (auto& s : out.samples) s.share = std::clamp(s.share + noise(rng), 0.0, 1.0);
  }

  out.meta["source"] = "synthetic";
  out.meta["rho"] = format_double(spec.true_params.rho);
  out.meta["alpha"] = format_double(spec.true_params.alpha);
  out.meta["beta"] = format_double(spec.true_params.beta);
  out.meta["delta"] = format_double(spec.true_params.delta);
  out.meta["budget_pattern"] = describe(spec.budget);
  out.meta["n_samples"] = std::to_string(spec.n_samples);
  out.meta["t_end"] = format_double(spec.t_end);
  out.meta["noise_sigma"] = format_double(spec.noise_sigma);
  out.meta["seed"] = std::to_string(spec.seed);
  out.meta["x0"] = format_double(spec.x0);
  return out;
}

nlohmann::json to_json(const Trajectory& trajectory) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : trajectory.samples) samples.push_back({s.t, s.budget, s.share});
  return {{"meta", trajectory.meta}, {"samples", samples}};
}

Trajectory trajectory_from_json(const nlohmann::json& doc) {
  try {
    Trajectory out;
    if (doc.contains("meta")) {
      out.meta = doc.at("meta").get<std::map<std::string, std::string>>();
    }
    for (const auto& row : doc.at("samples")) {
      if (row.size() != 3) throw DataError("trajectory sample must have 3 entries");
      out.samples.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>()});
    }
    out.validate();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed trajectory document: ") + e.what());
  }
}

}  // namespace gvw
