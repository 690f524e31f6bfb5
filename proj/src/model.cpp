#include "gvw/model.hpp"

#include <cmath>
#include <sstream>

#include "gvw/error.hpp"

namespace gvw {

void GvwParams::validate() const {
  if (!std::isfinite(rho) || !std::isfinite(alpha) || !std::isfinite(beta) ||
      !std::isfinite(delta)) {
    throw DomainError("GVW parameters must be finite");
  }
  if (!(rho > 0.0)) throw DomainError("rho must be > 0");
  if (!(alpha > 0.0 && alpha <= kAlphaMax)) {
    throw DomainError("alpha must lie in (0, 2]");
  }
  if (!(beta >= 0.0 && beta <= kBetaMax)) {
    throw DomainError("beta must lie in [0, 2]");
  }
}

std::vector<double> Trajectory::times() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.t);
  return out;
}

std::vector<double> Trajectory::budgets() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.budget);
  return out;
}

std::vector<double> Trajectory::shares() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.share);
  return out;
}

void Trajectory::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    std::ostringstream where;
    where << "sample " << i << " (t=" << s.t << ")";
    if (!std::isfinite(s.t) || !std::isfinite(s.budget) ||
        !std::isfinite(s.share)) {
      throw DataError("non-finite value in " + where.str());
    }
    if (i > 0 && !(s.t > samples[i - 1].t)) {
      throw DataError("times not strictly increasing at " + where.str());
    }
    if (s.budget < 0.0) throw DataError("negative budget in " + where.str());
    if (s.share < 0.0 || s.share > 1.0) {
      throw DataError("share outside [0, 1] in " + where.str());
    }
  }
}

void PulseSpec::validate() const {
  if (!(b0 > 0.0) || !std::isfinite(b0)) throw DomainError("pulse b0 must be > 0");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) {
    throw DomainError("pulse t_end must be > 0");
  }
  if (!(x0 >= 0.0 && x0 < 1.0)) throw DomainError("pulse x0 must lie in [0, 1)");
}

}  // namespace gvw
