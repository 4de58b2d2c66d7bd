#include "holoflow/holonomy.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "holoflow/errors.hpp"
#include "json.hpp"

namespace holoflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Orthonormal spanning set of the given coordinate vectors, with the rank cut
// at tol·σ_max so nearly-dependent directions collapse.
std::vector<VectorXd> orthonormalSpan(int m, const std::vector<VectorXd>& vecs,
                                      double tol) {
  if (vecs.empty()) return {};
  MatrixXd a(m, static_cast<int>(vecs.size()));
  for (int k = 0; k < a.cols(); ++k) {
    if (vecs[k].size() != m)
      throw InvalidInput("orthonormalSpan: vector length does not match basis size");
    a.col(k) = vecs[k];
  }
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return {};
  double cut = tol * sv(0);
  std::vector<VectorXd> out;
  for (int k = 0; k < sv.size(); ++k)
    if (sv(k) > cut) out.push_back(svd.matrixU().col(k));
  return out;
}

VectorXd bracketCoords(const WedgeBasis& w, const VectorXd& u, const VectorXd& v) {
  return w.coords(bracketForms(w.fromCoords(u), w.fromCoords(v)));
}

// Null space of the map X ↦ {[X, h] : h ∈ basis} on n×n matrices, i.e. the
// commutant of the represented algebra. Returned as an orthonormal list of
// matrices (column-major vectorization). Empty basis → all of gl(n).
std::vector<MatrixXd> commutantBasis(const WedgeBasis& w,
                                     const std::vector<VectorXd>& basis,
                                     double tol) {
  const int n = w.n();
  const int nn = n * n;
  std::vector<MatrixXd> out;
  if (basis.empty()) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        MatrixXd e = MatrixXd::Zero(n, n);
        e(i, j) = 1.0;
        out.push_back(e);
      }
    return out;
  }
  MatrixXd l = MatrixXd::Zero(static_cast<int>(basis.size()) * nn, nn);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    MatrixXd h = w.fromCoords(basis[k]);
    int base = static_cast<int>(k) * nn;
    for (int r = 0; r < n; ++r)
      for (int s = 0; s < n; ++s) {
        int row = base + r + s * n;
        for (int p = 0; p < n; ++p) {
          l(row, r + p * n) += h(p, s);  // (XH)_{rs}
          l(row, p + s * n) -= h(r, p);  // −(HX)_{rs}
        }
      }
  }
  Eigen::JacobiSVD<MatrixXd> svd(l, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cut = tol * (sv.size() > 0 ? sv(0) : 0.0);
  int rank = 0;
  for (int k = 0; k < sv.size(); ++k)
    if (sv(k) > cut) ++rank;
  for (int k = rank; k < nn; ++k) {
    Eigen::Map<const MatrixXd> x(svd.matrixV().col(k).data(), n, n);
    out.push_back(x);
  }
  return out;
}

MatrixXd randomCombination(const std::vector<MatrixXd>& mats, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd s = MatrixXd::Zero(mats.front().rows(), mats.front().cols());
  for (const MatrixXd& m : mats) s += gauss(rng) * m;
  return s;
}

}  // namespace

bool is_bracket_closed(const WedgeBasis& w, const std::vector<VectorXd>& basis,
                       double tol) {
  if (tol <= 0.0) throw InvalidInput("is_bracket_closed: tol must be positive");
  std::vector<VectorXd> on = orthonormalSpan(w.m(), basis, 1e-12);
  if (on.size() < 2) return true;
  MatrixXd b(w.m(), static_cast<int>(on.size()));
  for (int k = 0; k < b.cols(); ++k) b.col(k) = on[k];
  for (std::size_t i = 0; i < on.size(); ++i)
    for (std::size_t j = i + 1; j < on.size(); ++j) {
      VectorXd br = bracketCoords(w, on[i], on[j]);
      VectorXd leak = br - b * (b.transpose() * br);
      if (leak.cwiseAbs().maxCoeff() >
          tol * (1.0 + br.cwiseAbs().maxCoeff()))
        return false;
    }
  return true;
}

Subalgebra generate_algebra(const WedgeBasis& w,
                            const std::vector<VectorXd>& seedCoords, double tol) {
  if (tol <= 0.0) throw InvalidInput("generate_algebra: tol must be positive");
  if (seedCoords.empty())
    throw InvalidInput("generate_algebra: need at least one seed");
  std::vector<VectorXd> cur = orthonormalSpan(w.m(), seedCoords, tol);
  int depth = 0;
  // Dimension can grow at most m times, so the loop terminates.
  for (int round = 0; round < w.m() + 1; ++round) {
    std::vector<VectorXd> enlarged = cur;
    for (std::size_t i = 0; i < cur.size(); ++i)
      for (std::size_t j = i + 1; j < cur.size(); ++j)
        enlarged.push_back(bracketCoords(w, cur[i], cur[j]));
    std::vector<VectorXd> next = orthonormalSpan(w.m(), enlarged, tol);
    if (next.size() == cur.size()) break;
    cur = std::move(next);
    ++depth;
  }
  return Subalgebra{w.n(), std::move(cur), depth};
}

Subalgebra generate_algebra(const WedgeBasis& w, const std::vector<TwoForm>& seeds,
                            double tol) {
  std::vector<VectorXd> coords;
  coords.reserve(seeds.size());
  for (const TwoForm& s : seeds) {
    if (s.dim() != w.n())
      throw InvalidInput("generate_algebra: seed dimension does not match basis");
    coords.push_back(w.coords(s.matrix()));
  }
  return generate_algebra(w, coords, tol);
}

ProjectionPair projection_pair(const WedgeBasis& w, const Subalgebra& h) {
  if (h.n != w.n())
    throw InvalidInput("projection_pair: subalgebra dimension does not match basis");
  const int m = w.m();
  MatrixXd pbar = MatrixXd::Zero(m, m);
  if (!h.basis.empty()) {
    MatrixXd b(m, h.dim());
    for (int k = 0; k < h.dim(); ++k) {
      if (h.basis[k].size() != m)
        throw InvalidInput("projection_pair: basis vector of wrong length");
      b.col(k) = h.basis[k];
    }
    MatrixXd gram = b.transpose() * b;
    if ((gram - MatrixXd::Identity(h.dim(), h.dim())).cwiseAbs().maxCoeff() > 1e-10)
      throw InvalidInput("projection_pair: basis is not orthonormal");
    pbar = b * b.transpose();
  }
  return ProjectionPair{pbar, MatrixXd::Identity(m, m) - pbar};
}

double projectionLambdaResidual(const WedgeBasis& w, const ProjectionPair& p) {
  const int n = w.n();
  Tensor4 pbar = w.endoToComponents(p.Pbar);
  Tensor4 phat = w.endoToComponents(p.Phat);
  // Λ^d_c P̂ for every index pair, reused across the (a,b) sweep.
  std::vector<Tensor4> lam;
  lam.reserve(static_cast<std::size_t>(n) * n);
  for (int d = 0; d < n; ++d)
    for (int c = 0; c < n; ++c) lam.push_back(lambdaAct(phat, d, c));
  double worst = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Tensor4 acc(n);
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double coef = pbar(a, b, c, d);
          if (coef == 0.0) continue;
          const Tensor4& t = lam[static_cast<std::size_t>(d) * n + c];
          for (int f = 0; f < acc.size(); ++f) acc.flat(f) += coef * t.flat(f);
        }
      worst = std::max(worst, acc.maxAbs());
    }
  return worst;
}

InvariantSplit invariant_subspaces(const WedgeBasis& w, const Subalgebra& h,
                                   double tol) {
  if (tol <= 0.0) throw InvalidInput("invariant_subspaces: tol must be positive");
  if (h.n != w.n())
    throw InvalidInput("invariant_subspaces: subalgebra dimension mismatch");
  const int n = w.n();
  std::vector<MatrixXd> comm = commutantBasis(w, h.basis, tol);
  std::mt19937_64 rng(0x6b1u);
  MatrixXd s0 = randomCombination(comm, rng);
  MatrixXd s = 0.5 * (s0 + s0.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s);
  const VectorXd& ev = eig.eigenvalues();
  double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  // Consecutive eigenvalues closer than the cluster gap share an invariant
  // block; a generic commutant element separates distinct blocks by O(1).
  double gap = std::max(tol, 1e-12) * scale;
  std::vector<std::pair<int, int>> ranges;  // [begin, end) in eigenvalue order
  int begin = 0;
  for (int k = 1; k <= n; ++k) {
    if (k == n || ev(k) - ev(k - 1) > gap) {
      ranges.emplace_back(begin, k);
      begin = k;
    }
  }
  std::stable_sort(ranges.begin(), ranges.end(),
                   [](const auto& a, const auto& b) {
                     return (a.second - a.first) > (b.second - b.first);
                   });
  InvariantSplit split;
  for (const auto& [lo, hi] : ranges) {
    split.dims.push_back(hi - lo);
    split.blocks.push_back(eig.eigenvectors().middleCols(lo, hi - lo));
  }
  return split;
}

std::optional<MatrixXd> detect_complex_structure(const WedgeBasis& w,
                                                 const Subalgebra& h, double tol) {
  const int n = w.n();
  if (n % 2 != 0)
    throw UnsupportedOrder("detect_complex_structure: dimension must be even");
  if (tol <= 0.0)
    throw InvalidInput("detect_complex_structure: tol must be positive");
  if (h.n != n)
    throw InvalidInput("detect_complex_structure: subalgebra dimension mismatch");

  // Antisymmetric part of the commutant (the commutant is transpose-closed,
  // so this is exactly the set of antisymmetric commuting matrices).
  std::vector<VectorXd> antis;
  for (const MatrixXd& x : commutantBasis(w, h.basis, tol)) {
    MatrixXd a = 0.5 * (x - x.transpose());
    VectorXd v(Eigen::Map<VectorXd>(a.data(), n * n));
    antis.push_back(v);
  }
  std::vector<VectorXd> basis = orthonormalSpan(n * n, antis, 1e-10);
  if (basis.empty()) return std::nullopt;
  std::vector<MatrixXd> mats;
  mats.reserve(basis.size());
  for (const VectorXd& v : basis)
    mats.push_back(Eigen::Map<const MatrixXd>(v.data(), n, n));

  std::mt19937_64 rng(0x6b2u);
  for (int attempt = 0; attempt < 8; ++attempt) {
    MatrixXd k0 = randomCombination(mats, rng);
    MatrixXd k = 0.5 * (k0 - k0.transpose());
    MatrixXd m = -k * k;  // symmetric positive semidefinite
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
    const VectorXd& ev = eig.eigenvalues();
    if (ev(0) <= 1e-10 * std::max(1.0, ev(n - 1))) continue;  // singular draw
    VectorXd invSqrt = ev.cwiseSqrt().cwiseInverse();
    MatrixXd mInvSqrt =
        eig.eigenvectors() * invSqrt.asDiagonal() * eig.eigenvectors().transpose();
    MatrixXd j = k * mInvSqrt;  // polar factor: antisymmetric, J² = −Id
    double res = (j * j + MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (res < tol) return j;
  }
  return std::nullopt;
}

std::vector<std::string> berger_candidates(int dimHol, int n) {
  if (dimHol == 0) return {"trivial"};
  std::vector<std::string> out;
  if (dimHol == n * (n - 1) / 2)
    out.push_back("SO(" + std::to_string(n) + ")");
  if (n % 2 == 0) {
    int m = n / 2;
    if (dimHol == m * m) out.push_back("U(" + std::to_string(m) + ")");
    if (m >= 2 && dimHol == m * m - 1)
      out.push_back("SU(" + std::to_string(m) + ")");
  }
  if (n % 4 == 0) {
    int q = n / 4;
    if (q >= 2) {  // Sp(1) = SU(2) and Sp(1)·Sp(1) covers SO(4) already
      if (dimHol == q * (2 * q + 1))
        out.push_back("Sp(" + std::to_string(q) + ")");
      if (dimHol == q * (2 * q + 1) + 3)
        out.push_back("Sp(" + std::to_string(q) + ")-Sp(1)");
    }
  }
  if (n == 7 && dimHol == 14) out.push_back("G2");
  if (n == 8 && dimHol == 21) out.push_back("Spin(7)");
  if (out.empty()) out.push_back("reducible/symmetric-unresolved");
  return out;
}

HolonomyReport classify_algebra(const WedgeBasis& w, const Subalgebra& h,
                                double tol) {
  HolonomyReport rep;
  rep.dim = h.dim();
  rep.depth = h.depth;
  rep.bergerCandidates = berger_candidates(rep.dim, w.n());
  InvariantSplit split = invariant_subspaces(w, h, tol);
  rep.invariantSubspaces = split.dims;
  if (w.n() % 2 == 0) {
    std::optional<MatrixXd> j = detect_complex_structure(w, h, tol);
    if (j) {
      rep.kaehler = true;
      rep.complexResidual =
          ((*j) * (*j) + MatrixXd::Identity(w.n(), w.n())).cwiseAbs().maxCoeff();
      rep.complexStructure = std::move(j);
    }
  }
  return rep;
}

std::string HolonomyReport::toJson() const {
  nlohmann::json j;
  j["dim"] = dim;
  j["depth"] = depth;
  j["bergerCandidates"] = bergerCandidates;
  j["invariantSubspaces"] = invariantSubspaces;
  j["kaehler"] = kaehler;
  if (complexResidual >= 0.0) j["complexResidual"] = complexResidual;
  if (complexStructure) {
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < complexStructure->rows(); ++r) {
      std::vector<double> row;
      for (int c = 0; c < complexStructure->cols(); ++c)
        row.push_back((*complexStructure)(r, c));
      rows.push_back(std::move(row));
    }
    j["complexStructure"] = rows;
  }
  return j.dump();
}

}  // namespace holoflow
