// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fassim/common.hpp"

namespace fassim {

/// Port layout of a two-dimensional fluid antenna: k1 x k2 ports spread
/// uniformly over an aperture of w1 x w2 carrier wavelengths.
struct FasGeometry {
  int k1 = 1;
  int k2 = 1;
  double w1 = 0.0;
  double w2 = 0.0;

  int ports() const { return k1 * k2; }
  void validate() const;
};

/// Row-major port numbering, k = k1 * K2 + k2.
int port_index(int k1, int k2, const FasGeometry& geom);
std::pair<int, int> port_coords(int k, const FasGeometry& geom);

/// Bessel function of the first kind, order zero.
double bessel_j0(double x);

struct CorrelationMatrix {
  Eigen::MatrixXd entries;
  double sigma_h2 = 1.0;

  int ports() const { return static_cast<int>(entries.rows()); }
};

/// Isotropic-scattering spatial correlation between ports:
/// J0(2*pi*distance) with distance in wavelengths.
CorrelationMatrix build_correlation(const FasGeometry& geom);

/// Eigenpairs of a correlation matrix, eigenvalues non-increasing and
/// clipped at zero. Each eigenvector is sign-normalised so that its first
/// entry with magnitude above 1e-12 is positive.
struct EigenBasis {
  Eigen::MatrixXd vectors;  // columns are eigenvectors
  Eigen::VectorXd values;

  int ports() const { return static_cast<int>(vectors.rows()); }
  /// Number of leading modes carrying non-negligible power.
  int rank(double rel_tol = 1e-12) const;
};

EigenBasis eigen_decompose(const CorrelationMatrix& corr);

/// h_k = sigma_h * sum_l sqrt(lambda_l) u_{k,l} a_l for one vector of i.i.d.
/// CN(0,1) inputs a.
std::vector<cdouble> synth_correlated(const EigenBasis& basis, double sigma_h,
                                      std::span<const cdouble> iid);

}  // namespace fassim
