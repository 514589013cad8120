#include "oracle.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace oracle {
namespace {

using Dense = std::vector<std::vector<Real>>;

Dense shifted(std::span<const double> v, double energy) {
  const std::size_t m = v.size();
  Dense h(m, std::vector<Real>(m, Real(0)));
  for (std::size_t i = 0; i < m; ++i) {
    h[i][i] = Real(v[i]) - Real(energy);
    if (i + 1 < m) h[i][i + 1] = h[i + 1][i] = 1;
  }
  return h;
}

// Gaussian elimination with partial pivoting; also applies the row
// operations to `rhs` when given.
Real eliminate(Dense& a, Dense* rhs) {
  const std::size_t m = a.size();
  Real det = 1;
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < m; ++i) {
      if (abs(a[i][k]) > abs(a[piv][k])) piv = i;
    }
    if (a[piv][k] == 0) return 0;
    if (piv != k) {
      std::swap(a[piv], a[k]);
      if (rhs) std::swap((*rhs)[piv], (*rhs)[k]);
      det = -det;
    }
    det *= a[k][k];
    for (std::size_t i = k + 1; i < m; ++i) {
      const Real f = a[i][k] / a[k][k];
      if (f == 0) continue;
      for (std::size_t j = k; j < m; ++j) a[i][j] -= f * a[k][j];
      if (rhs) {
        for (std::size_t j = 0; j < m; ++j) (*rhs)[i][j] -= f * (*rhs)[k][j];
      }
    }
  }
  return det;
}

}  // namespace

Real dense_det(std::span<const double> v, double energy) {
  Dense a = shifted(v, energy);
  return eliminate(a, nullptr);
}

std::vector<Real> dense_inverse(std::span<const double> v, double energy) {
  const std::size_t m = v.size();
  Dense a = shifted(v, energy);
  Dense x(m, std::vector<Real>(m, Real(0)));
  for (std::size_t i = 0; i < m; ++i) x[i][i] = 1;
  eliminate(a, &x);
  for (std::size_t k = m; k-- > 0;) {
    for (std::size_t j = 0; j < m; ++j) {
      Real s = x[k][j];
      for (std::size_t i = k + 1; i < m; ++i) s -= a[k][i] * x[i][j];
      x[k][j] = s / a[k][k];
    }
  }
  std::vector<Real> out;
  out.reserve(m * m);
  for (const auto& row : x) out.insert(out.end(), row.begin(), row.end());
  return out;
}

std::vector<double> dense_eigenvalues(std::span<const double> v) {
  // Cyclic Jacobi on the full matrix.
  Dense a = shifted(v, 0.0);
  const std::size_t m = a.size();
  const Real tiny = Real("1e-45");
  for (int sweep = 0; sweep < 100; ++sweep) {
    Real off = 0;
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) off += a[p][q] * a[p][q];
    }
    if (off < tiny * tiny) break;
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        if (a[p][q] == 0) continue;
        const Real theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const Real t = (theta >= 0 ? Real(1) : Real(-1)) / (abs(theta) + sqrt(theta * theta + 1));
        const Real c = 1 / sqrt(t * t + 1);
        const Real s = t * c;
        for (std::size_t k = 0; k < m; ++k) {
          const Real akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < m; ++k) {
          const Real apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < m; ++i) out.push_back(static_cast<double>(a[i][i]));
  std::sort(out.begin(), out.end());
  return out;
}

DenseEigen dense_eigen(std::span<const double> v) {
  const auto m = static_cast<Eigen::Index>(v.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    h(i, i) = v[static_cast<std::size_t>(i)];
    if (i + 1 < m) h(i, i + 1) = h(i + 1, i) = 1.0;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  DenseEigen out;
  for (Eigen::Index j = 0; j < m; ++j) {
    out.values.push_back(solver.eigenvalues()(j));
    std::vector<double> col(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) col[static_cast<std::size_t>(i)] = solver.eigenvectors()(i, j);
    out.vectors.push_back(std::move(col));
  }
  return out;
}

std::array<Real, 4> dense_transfer(std::span<const double> v, double energy) {
  std::array<Real, 4> t{1, 0, 0, 1};
  for (double x : v) {
    const Real d = Real(energy) - Real(x);
    t = {d * t[0] - t[2], d * t[1] - t[3], t[0], t[1]};
  }
  return t;
}

Real largest_singular_value(const std::array<Real, 4>& m) {
  // M^T M = [[p, r], [r, q]]
  const Real p = m[0] * m[0] + m[2] * m[2];
  const Real q = m[1] * m[1] + m[3] * m[3];
  const Real r = m[0] * m[1] + m[2] * m[3];
  const Real half = (p + q) / 2;
  const Real disc = sqrt(((p - q) / 2) * ((p - q) / 2) + r * r);
  return sqrt(half + disc);
}

std::vector<Real> recursion_solution(std::span<const double> v, double energy, double psi_before,
                                     double psi_first) {
  std::vector<Real> psi{Real(psi_before), Real(psi_first)};
  for (std::size_t m = 0; m < v.size(); ++m) {
    psi.push_back((Real(energy) - Real(v[m])) * psi[m + 1] - psi[m]);
  }
  return psi;
}

double exact_gamma_moment(std::span<const Atom> atoms, double gamma) {
  double s = 0.0;
  for (const Atom& a : atoms) s += a.probability * std::pow(std::abs(a.value), gamma);
  return s;
}

double exact_truncated_variance(std::span<const Atom> atoms, double k) {
  double m1 = 0.0, m2 = 0.0;
  for (const Atom& a : atoms) {
    const double x = std::clamp(a.value, -k, k);
    m1 += a.probability * x;
    m2 += a.probability * x * x;
  }
  return std::max(0.0, m2 - m1 * m1);
}

}  // namespace oracle
