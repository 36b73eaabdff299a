#include "drglm/family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace drglm {

namespace {
double expit(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double ylog(double y, double mu) { return y > 0 ? y * std::log(y / mu) : 0.0; }
}  // namespace

LinkName Family::canonical_link(FamilyName family) {
  switch (family) {
    case FamilyName::gaussian: return LinkName::identity;
    case FamilyName::binomial: return LinkName::logit;
    case FamilyName::poisson: return LinkName::log;
    case FamilyName::gamma: return LinkName::inverse;
    case FamilyName::inverse_gaussian: return LinkName::inverse_squared;
  }
  throw FitError("unknown family");
}

Family Family::make(FamilyName family, LinkName link) {
  bool ok = link == canonical_link(family) ||
            (family == FamilyName::binomial && link == LinkName::log);
  if (!ok) throw FitError("unsupported family/link combination");
  return Family(family, link);
}

Family Family::parse(const std::string& family, const std::string& link) {
  FamilyName f;
  if (family == "gaussian") f = FamilyName::gaussian;
  else if (family == "binomial") f = FamilyName::binomial;
  else if (family == "poisson") f = FamilyName::poisson;
  else if (family == "gamma") f = FamilyName::gamma;
  else if (family == "inverse_gaussian" || family == "inverse-gaussian")
    f = FamilyName::inverse_gaussian;
  else throw FitError("unknown family: " + family);

  if (link.empty()) return make(f, canonical_link(f));

  LinkName l;
  if (link == "identity") l = LinkName::identity;
  else if (link == "logit") l = LinkName::logit;
  else if (link == "log") l = LinkName::log;
  else if (link == "inverse") l = LinkName::inverse;
  else if (link == "inverse_squared" || link == "1/mu^2") l = LinkName::inverse_squared;
  else throw FitError("unknown link: " + link);
  return make(f, l);
}

double Family::link_fn(double mu) const {
  switch (link_) {
    case LinkName::identity: return mu;
    case LinkName::logit: return std::log(mu / (1.0 - mu));
    case LinkName::log: return std::log(mu);
    case LinkName::inverse: return 1.0 / mu;
    case LinkName::inverse_squared: return 1.0 / (mu * mu);
  }
  throw FitError("unknown link");
}

double Family::inv_link(double eta) const {
  switch (link_) {
    case LinkName::identity: return eta;
    case LinkName::logit: return expit(eta);
    case LinkName::log: return std::exp(eta);
    case LinkName::inverse: return 1.0 / eta;
    case LinkName::inverse_squared: return 1.0 / std::sqrt(eta);
  }
  throw FitError("unknown link");
}

double Family::mu_eta(double eta) const {
  switch (link_) {
    case LinkName::identity: return 1.0;
    case LinkName::logit: {
      double p = expit(eta);
      return p * (1.0 - p);
    }
    case LinkName::log: return std::exp(eta);
    case LinkName::inverse: return -1.0 / (eta * eta);
    case LinkName::inverse_squared: return -0.5 * std::pow(eta, -1.5);
  }
  throw FitError("unknown link");
}

double Family::variance(double mu) const {
  switch (family_) {
    case FamilyName::gaussian: return 1.0;
    case FamilyName::binomial: return mu * (1.0 - mu);
    case FamilyName::poisson: return mu;
    case FamilyName::gamma: return mu * mu;
    case FamilyName::inverse_gaussian: return mu * mu * mu;
  }
  throw FitError("unknown family");
}

bool Family::mu_valid(double mu) const {
  if (!std::isfinite(mu)) return false;
  switch (family_) {
    case FamilyName::gaussian: return true;
    case FamilyName::binomial: return mu > 0.0 && mu < 1.0;
    case FamilyName::poisson:
    case FamilyName::gamma:
    case FamilyName::inverse_gaussian: return mu > 0.0;
  }
  return false;
}

bool Family::eta_valid(double eta) const {
  if (!std::isfinite(eta)) return false;
  switch (link_) {
    case LinkName::identity:
    case LinkName::logit: return true;
    case LinkName::log: return family_ == FamilyName::binomial ? eta < 0.0 : true;
    case LinkName::inverse: return eta > 0.0;
    case LinkName::inverse_squared: return eta > 0.0;
  }
  return false;
}

double Family::init_mu(double y, double prior_weight) const {
  switch (family_) {
    case FamilyName::gaussian: return y;
    case FamilyName::binomial: return (prior_weight * y + 0.5) / (prior_weight + 1.0);
    case FamilyName::poisson: return y + 0.1;
    case FamilyName::gamma:
    case FamilyName::inverse_gaussian: return std::max(y, 0.1);
  }
  throw FitError("unknown family");
}

double Family::deviance_unit(double y, double mu) const {
  switch (family_) {
    case FamilyName::gaussian: {
      double r = y - mu;
      return r * r;
    }
    case FamilyName::binomial:
      return 2.0 * (ylog(y, mu) + ylog(1.0 - y, 1.0 - mu));
    case FamilyName::poisson:
      return 2.0 * (ylog(y, mu) - (y - mu));
    case FamilyName::gamma:
      return -2.0 * (std::log(y > 0 ? y / mu : 1.0) - (y - mu) / mu);
    case FamilyName::inverse_gaussian: {
      double r = y - mu;
      return r * r / (y * mu * mu);
    }
  }
  throw FitError("unknown family");
}

std::string Family::family_name() const {
  switch (family_) {
    case FamilyName::gaussian: return "gaussian";
    case FamilyName::binomial: return "binomial";
    case FamilyName::poisson: return "poisson";
    case FamilyName::gamma: return "gamma";
    case FamilyName::inverse_gaussian: return "inverse_gaussian";
  }
  return "?";
}

std::string Family::link_name() const {
  switch (link_) {
    case LinkName::identity: return "identity";
    case LinkName::logit: return "logit";
    case LinkName::log: return "log";
    case LinkName::inverse: return "inverse";
    case LinkName::inverse_squared: return "inverse_squared";
  }
  return "?";
}

double mu_eta_check(const Family& fam, const Eigen::VectorXd& eta_grid, double h) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < eta_grid.size(); ++i) {
    double eta = eta_grid[i];
    double fd = (fam.inv_link(eta + h) - fam.inv_link(eta - h)) / (2.0 * h);
    worst = std::max(worst, std::abs(fam.mu_eta(eta) - fd));
  }
  return worst;
}

}  // namespace drglm
