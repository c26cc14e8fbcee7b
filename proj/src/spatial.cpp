// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#include "fassim/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fassim {

void FasGeometry::validate() const {
  if (k1 < 1 || k2 < 1) raise(ErrorKind::Configuration, "port counts must be >= 1");
  if (!(w1 >= 0.0) || !(w2 >= 0.0) || !std::isfinite(w1) || !std::isfinite(w2))
    raise(ErrorKind::Configuration, "aperture sizes must be finite and non-negative");
  if ((k1 > 1 && w1 <= 0.0) || (k2 > 1 && w2 <= 0.0))
    raise(ErrorKind::Configuration, "multiple ports along a dimension need a positive aperture");
}

int port_index(int k1, int k2, const FasGeometry& geom) {
  if (k1 < 0 || k1 >= geom.k1 || k2 < 0 || k2 >= geom.k2)
    raise(ErrorKind::Bounds, "port coordinates out of range");
  return k1 * geom.k2 + k2;
}

std::pair<int, int> port_coords(int k, const FasGeometry& geom) {
  if (k < 0 || k >= geom.ports()) raise(ErrorKind::Bounds, "port index out of range");
  return {k / geom.k2, k % geom.k2};
}

double bessel_j0(double x) {
  if (!std::isfinite(x)) raise(ErrorKind::Domain, "bessel_j0 needs a finite argument");
  return std::cyl_bessel_j(0.0, std::abs(x));
}

CorrelationMatrix build_correlation(const FasGeometry& geom) {
  geom.validate();
  const int k = geom.ports();
  // Spacing between neighbouring ports in wavelengths; zero for a single port.
  const double d1 = geom.k1 > 1 ? geom.w1 / (geom.k1 - 1) : 0.0;
  const double d2 = geom.k2 > 1 ? geom.w2 / (geom.k2 - 1) : 0.0;
  CorrelationMatrix corr;
  corr.entries.resize(k, k);
  for (int a = 0; a < k; ++a) {
    corr.entries(a, a) = 1.0;
    const auto [a1, a2] = port_coords(a, geom);
    for (int b = a + 1; b < k; ++b) {
      const auto [b1, b2] = port_coords(b, geom);
      const double dx = (a1 - b1) * d1;
      const double dy = (a2 - b2) * d2;
      const double v = bessel_j0(2.0 * kPi * std::sqrt(dx * dx + dy * dy));
      corr.entries(a, b) = v;
      corr.entries(b, a) = v;
    }
  }
  return corr;
}

int EigenBasis::rank(double rel_tol) const {
  if (values.size() == 0) return 0;
  const double cut = rel_tol * std::max(values(0), 1e-300);
  int r = 0;
  while (r < values.size() && values(r) > cut) ++r;
  return std::max(r, 1);
}

EigenBasis eigen_decompose(const CorrelationMatrix& corr) {
  const int k = corr.ports();
  if (k == 0) raise(ErrorKind::Bounds, "empty correlation matrix");
  if (!corr.entries.isApprox(corr.entries.transpose(), 1e-12))
    raise(ErrorKind::Model, "correlation matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(corr.entries);
  if (solver.info() != Eigen::Success) raise(ErrorKind::Model, "eigen-decomposition failed");
  const Eigen::VectorXd& vals = solver.eigenvalues();
  const Eigen::MatrixXd& vecs = solver.eigenvectors();

  // J0 matrices are PSD; only roundoff may push an eigenvalue below zero.
  if (vals.minCoeff() < -1e-6)
    raise(ErrorKind::Model, "correlation matrix is not positive semi-definite");

  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return vals(a) > vals(b); });

  EigenBasis basis;
  basis.vectors.resize(k, k);
  basis.values.resize(k);
  for (int j = 0; j < k; ++j) {
    double v = vals(order[j]);
    if (v < 0.0) v = 0.0;
    basis.values(j) = v;
    Eigen::VectorXd col = vecs.col(order[j]);
    for (int i = 0; i < k; ++i) {
      if (std::abs(col(i)) > 1e-12) {
        if (col(i) < 0.0) col = -col;
        break;
      }
    }
    basis.vectors.col(j) = col;
  }
  return basis;
}

std::vector<cdouble> synth_correlated(const EigenBasis& basis, double sigma_h,
                                      std::span<const cdouble> iid) {
  const int k = basis.ports();
  if (static_cast<int>(iid.size()) != k) raise(ErrorKind::Bounds, "need one i.i.d. draw per port");
  std::vector<cdouble> h(k, cdouble{});
  for (int l = 0; l < k; ++l) {
    const double s = std::sqrt(basis.values(l));
    if (s == 0.0) continue;
    const cdouble a = sigma_h * s * iid[l];
    for (int i = 0; i < k; ++i) h[i] += basis.vectors(i, l) * a;
  }
  return h;
}

}  // namespace fassim
