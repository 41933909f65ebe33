#include "sbm/lanczos.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sbm/error.hpp"
#include "sbm/rng.hpp"

namespace sbm {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Two passes of block classical Gram-Schmidt against the first `cols`
// columns of `basis`. Returns the accumulated projection coefficients.
VectorXd orthogonalize(const Eigen::Map<const MatrixXd>& basis, Index cols,
                       Eigen::Map<VectorXd>& w) {
  VectorXd h = VectorXd::Zero(cols);
  if (cols == 0) return h;
  for (int pass = 0; pass < 2; ++pass) {
    const VectorXd g = basis.leftCols(cols).transpose() * w;
    w.noalias() -= basis.leftCols(cols) * g;
    h += g;
  }
  return h;
}

void fill_random_orthogonal(Rng& rng, const Eigen::Map<const MatrixXd>& basis, Index cols,
                            Eigen::Map<VectorXd> target) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    for (Index i = 0; i < target.size(); ++i) target[i] = rng.normal();
    orthogonalize(basis, cols, target);
    const double norm = target.norm();
    if (norm > 1e-8) {
      target /= norm;
      return;
    }
  }
  throw NumericalFailure("lanczos: could not extend the Krylov basis");
}

std::vector<Index> ranked(const VectorXd& theta, EigenOrder order) {
  std::vector<Index> idx(static_cast<std::size_t>(theta.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    if (order == EigenOrder::kLargestMagnitude) {
      const double ma = std::abs(theta[a]);
      const double mb = std::abs(theta[b]);
      if (ma != mb) return ma > mb;
    }
    return theta[a] > theta[b];
  });
  return idx;
}

}  // namespace

EigenResult top_eigenpairs(const SymmetricOperator& op, std::size_t count, EigenOrder order,
                           const EigenOptions& options) {
  const std::size_t n = op.dim();
  if (count == 0 || count > n) {
    throw InvalidArgument("top_eigenpairs: requested " + std::to_string(count) +
                          " pairs from an operator of dimension " + std::to_string(n));
  }
  std::size_t m = options.basis_size != 0 ? options.basis_size
                                          : std::max<std::size_t>(2 * count + 20, 40);
  m = std::min(std::max(m, count + 1), n);

  const Index dn = static_cast<Index>(n);
  const Index dm = static_cast<Index>(m);
  std::vector<double> storage((m + 1) * n, 0.0);
  Eigen::Map<MatrixXd> basis(storage.data(), dn, dm + 1);
  Eigen::Map<const MatrixXd> cbasis(storage.data(), dn, dm + 1);
  auto column = [&](Index j) { return Eigen::Map<VectorXd>(storage.data() + j * dn, dn); };

  Rng rng(options.seed);
  fill_random_orthogonal(rng, cbasis, 0, column(0));

  MatrixXd h = MatrixXd::Zero(dm, dm);
  std::vector<double> work(n);
  Eigen::Map<VectorXd> w(work.data(), dn);
  EigenResult result;
  Index locked = 0;
  double beta = 0.0;
  double op_scale = 0.0;

  for (std::size_t cycle = 0;; ++cycle) {
    for (Index j = locked; j < dm; ++j) {
      op.apply(std::span<const double>(storage.data() + j * dn, n), work);
      ++result.matvecs;
      op_scale = std::max(op_scale, w.norm());
      const VectorXd coef = orthogonalize(cbasis, j + 1, w);
      for (Index i = 0; i < j; ++i) h(i, j) = h(j, i) = coef[i];
      h(j, j) = coef[j];
      beta = w.norm();
      const bool breakdown = beta <= 1e-12 * std::max(op_scale, 1e-300);
      if (j + 1 == dm) {
        if (breakdown) {
          beta = 0.0;
          column(dm).setZero();
        } else {
          column(dm) = w / beta;
        }
      } else if (breakdown) {
        beta = 0.0;
        fill_random_orthogonal(rng, cbasis, j + 1, column(j + 1));
      } else {
        column(j + 1) = w / beta;
      }
    }

    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(h);
    if (solver.info() != Eigen::Success) throw NumericalFailure("lanczos: projected eigensolve failed");
    const VectorXd& theta = solver.eigenvalues();
    const MatrixXd& s = solver.eigenvectors();
    const auto idx = ranked(theta, order);
    const double scale = theta.cwiseAbs().maxCoeff();

    bool converged = true;
    for (std::size_t l = 0; l < count; ++l) {
      const double estimate = std::abs(beta * s(dm - 1, idx[l]));
      if (estimate > options.tol * scale) converged = false;
    }
    if (m == n) converged = true;

    if (converged || cycle + 1 >= options.max_restarts) {
      if (!converged) {
        throw SolverNotConverged("lanczos: " + std::to_string(count) +
                                 " eigenpairs did not converge after " +
                                 std::to_string(cycle + 1) + " restart cycles");
      }
      result.restarts = cycle;
      result.values.resize(count);
      result.vectors = Matrix(n, count);
      result.residuals.resize(count);
      std::vector<double> x(n), ax(n);
      for (std::size_t l = 0; l < count; ++l) {
        Eigen::Map<VectorXd> xv(x.data(), dn);
        xv.noalias() = basis.leftCols(dm) * s.col(idx[l]);
        xv.normalize();
        Index top = 0;
        for (Index i = 1; i < dn; ++i) {
          if (std::abs(xv[i]) > std::abs(xv[top])) top = i;
        }
        if (xv[top] < 0.0) xv = -xv;
        const double lambda = theta[idx[l]];
        op.apply(x, ax);
        ++result.matvecs;
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = ax[i] - lambda * x[i];
          res += d * d;
          result.vectors(i, l) = x[i];
        }
        result.values[l] = lambda;
        result.residuals[l] = std::sqrt(res);
      }
      return result;
    }

    // Thick restart: keep the leading Ritz vectors plus the residual direction.
    const Index keep =
        static_cast<Index>(std::min<std::size_t>(m - 1, count + (m - count) / 2));
    MatrixXd selected(dm, keep);
    for (Index l = 0; l < keep; ++l) selected.col(l) = s.col(idx[static_cast<std::size_t>(l)]);
    const MatrixXd ritz = basis.leftCols(dm) * selected;
    const VectorXd residual_dir = column(dm);
    basis.leftCols(keep) = ritz;
    h.setZero();
    for (Index l = 0; l < keep; ++l) h(l, l) = theta[idx[static_cast<std::size_t>(l)]];
    if (beta == 0.0) {
      fill_random_orthogonal(rng, cbasis, keep, column(keep));
    } else {
      column(keep) = residual_dir;
    }
    locked = keep;
  }
}

}  // namespace sbm
