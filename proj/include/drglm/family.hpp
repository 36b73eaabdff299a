#pragma once

#include <Eigen/Dense>
#include <string>

#include "drglm/errors.hpp"

namespace drglm {

enum class FamilyName { gaussian, binomial, poisson, gamma, inverse_gaussian };
enum class LinkName { identity, logit, log, inverse, inverse_squared };

/// Exponential-family / link bundle. The canonical pairings are
/// gaussian-identity, binomial-logit, poisson-log, gamma-inverse and
/// inverse_gaussian-inverse_squared; binomial-log is the supported
/// non-canonical combination.
class Family {
 public:
  static Family make(FamilyName family, LinkName link);
  static Family parse(const std::string& family, const std::string& link = "");
  static LinkName canonical_link(FamilyName family);

  FamilyName family() const { return family_; }
  LinkName link() const { return link_; }
  bool canonical() const { return link_ == canonical_link(family_); }

  double link_fn(double mu) const;
  double inv_link(double eta) const;
  /// dmu/deta, the true signed derivative of the inverse link.
  double mu_eta(double eta) const;
  /// Variance function v(mu).
  double variance(double mu) const;

  bool mu_valid(double mu) const;
  bool eta_valid(double eta) const;

  /// Starting mean for IRLS, nudged into the family support.
  double init_mu(double y, double prior_weight) const;
  /// Unit deviance contribution (dispersion 1).
  double deviance_unit(double y, double mu) const;

  std::string family_name() const;
  std::string link_name() const;
  std::string name() const { return family_name() + "/" + link_name(); }

 private:
  Family(FamilyName f, LinkName l) : family_(f), link_(l) {}
  FamilyName family_;
  LinkName link_;
};

/// Max abs deviation between mu_eta and a central finite difference of the
/// inverse link over a grid of linear predictors.
double mu_eta_check(const Family& fam, const Eigen::VectorXd& eta_grid, double h = 1e-5);

}  // namespace drglm
