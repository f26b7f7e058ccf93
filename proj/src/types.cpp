#include "rmlmc/types.hpp"

#include <cmath>
#include <string>

namespace rmlmc {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw InputError(msg);
}

} // namespace

CostProfile::CostProfile(std::vector<double> t) : t_(std::move(t)) {
  require(t_.size() >= 2, "cost profile needs at least two entries");
  require(t_.front() == 0.0, "cost profile must start at 0");
  for (std::size_t i = 0; i + 1 < t_.size(); ++i) {
    require(std::isfinite(t_[i + 1]) && t_[i + 1] > t_[i],
            "cost profile must be finite and strictly increasing");
  }
}

MomentProfile::MomentProfile(std::vector<double> gamma) : gamma_(std::move(gamma)) {
  require(gamma_.size() >= 2, "moment profile needs at least two entries");
  for (std::size_t i = 0; i + 1 < gamma_.size(); ++i) {
    require(std::isfinite(gamma_[i]) && gamma_[i] >= 0.0,
            "moment profile entries must be finite and nonnegative");
  }
  // The terminal component is zero by construction of the truncated
  // sequence; it is forced here rather than trusted from input.
  gamma_.back() = 0.0;
}

bool MomentProfile::strictly_positive_head() const {
  for (std::size_t i = 0; i + 1 < gamma_.size(); ++i) {
    if (!(gamma_[i] > 0.0)) return false;
  }
  return true;
}

LevelDistribution::LevelDistribution(std::vector<double> q) : q_(std::move(q)) {
  require(!q_.empty(), "level distribution must be nonempty");
  require(q_.front() == 1.0, "level distribution must start at q_0 = 1");
  for (std::size_t i = 0; i < q_.size(); ++i) {
    require(std::isfinite(q_[i]) && q_[i] > 0.0, "level distribution entries must be positive");
    if (i + 1 < q_.size()) {
      require(q_[i] >= q_[i + 1], "level distribution must be nonincreasing");
    }
  }
}

std::vector<double> LevelDistribution::point_masses() const {
  std::vector<double> p(q_.size());
  for (std::size_t i = 0; i < q_.size(); ++i) {
    const double next = (i + 1 < q_.size()) ? q_[i + 1] : 0.0;
    p[i] = q_[i] - next;
  }
  return p;
}

} // namespace rmlmc
