#include "holoflow/wedge.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace holoflow {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

// --- TwoForm ---

TwoForm TwoForm::wedge(int n, int i, int j) {
  TwoForm f(n);
  f.set(i, j, 0.5);  // V∧W = ½(V⊗W − W⊗V) on basis vectors
  return f;
}

TwoForm TwoForm::fromMatrix(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw InvalidInput("fromMatrix: square matrix required");
  TwoForm f(static_cast<int>(a.rows()));
  for (int i = 0; i < f.n_; ++i)
    for (int j = i + 1; j < f.n_; ++j) f.set(i, j, 0.5 * (a(i, j) - a(j, i)));
  return f;
}

int TwoForm::slot(int i, int j) const {
  // lexicographic position of (i,j), i<j, in the strict upper triangle
  return i * n_ - i * (i + 1) / 2 + (j - i - 1);
}

double TwoForm::operator()(int i, int j) const {
  if (i == j) return 0.0;
  return i < j ? u_[slot(i, j)] : -u_[slot(j, i)];
}

void TwoForm::set(int i, int j, double v) {
  if (i == j) throw InvalidInput("TwoForm::set: diagonal entry must stay zero");
  if (i < j)
    u_[slot(i, j)] = v;
  else
    u_[slot(j, i)] = -v;
}

Eigen::MatrixXd TwoForm::matrix() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) {
      a(i, j) = u_[slot(i, j)];
      a(j, i) = -a(i, j);
    }
  return a;
}

// --- pointwise bracket and inner product ---

double innerForms(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a.array() * b.array()).sum();
}

Eigen::MatrixXd bracketForms(const Eigen::MatrixXd& w, const Eigen::MatrixXd& e) {
  if (w.rows() != e.rows() || w.cols() != e.cols() || w.rows() != w.cols())
    throw InvalidInput("bracketForms: dimension mismatch");
  return w * e - e * w;
}

TwoForm bracket(const TwoForm& w, const TwoForm& e, const Eigen::MatrixXd& g) {
  if (w.dim() != e.dim() || g.rows() != w.dim() || g.cols() != w.dim())
    throw InvalidInput("bracket: dimension mismatch");
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + g.cwiseAbs().maxCoeff()))
    throw InvalidMetric("bracket: metric not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success)
    throw InvalidMetric("bracket: metric not positive definite");
  Eigen::MatrixXd ginv = llt.solve(Eigen::MatrixXd::Identity(w.dim(), w.dim()));
  Eigen::MatrixXd wm = w.matrix(), em = e.matrix();
  // [ω,η]_{ij} = g^{kl}(ω_{ik} η_{lj} − ω_{jk} η_{li})
  return TwoForm::fromMatrix(wm * ginv * em - em * ginv * wm);
}

// --- WedgeBasis ---

WedgeBasis::WedgeBasis(int n) : n_(n), m_(n * (n - 1) / 2) {
  if (n < 2) throw InvalidInput("WedgeBasis: dimension must be at least 2");
  pairs_.reserve(m_);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs_.emplace_back(i, j);
  phi_.reserve(m_);
  for (auto [i, j] : pairs_) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    p(i, j) = 1.0 / kSqrt2;  // √2 · e_i∧e_j, unit norm under full contraction
    p(j, i) = -1.0 / kSqrt2;
    phi_.push_back(std::move(p));
  }
  c_.assign(static_cast<std::size_t>(m_) * m_ * m_, 0.0);
  for (int p = 0; p < m_; ++p)
    for (int q = 0; q < m_; ++q) {
      Eigen::MatrixXd br = bracketForms(phi_[p], phi_[q]);
      for (int r = 0; r < m_; ++r)
        c_[(static_cast<std::size_t>(p) * m_ + q) * m_ + r] = innerForms(br, phi_[r]);
    }
}

int WedgeBasis::index(int i, int j) const {
  if (!(0 <= i && i < j && j < n_)) throw InvalidInput("WedgeBasis::index: need 0 <= i < j < n");
  return i * n_ - i * (i + 1) / 2 + (j - i - 1);
}

Eigen::VectorXd WedgeBasis::coords(const Eigen::MatrixXd& omega) const {
  if (omega.rows() != n_ || omega.cols() != n_)
    throw InvalidInput("WedgeBasis::coords: wrong matrix size");
  Eigen::VectorXd v(m_);
  for (int a = 0; a < m_; ++a) {
    auto [i, j] = pairs_[a];
    v(a) = (omega(i, j) - omega(j, i)) / kSqrt2;
  }
  return v;
}

Eigen::MatrixXd WedgeBasis::fromCoords(const Eigen::VectorXd& v) const {
  if (v.size() != m_) throw InvalidInput("WedgeBasis::fromCoords: wrong length");
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n_, n_);
  for (int a = 0; a < m_; ++a) {
    auto [i, j] = pairs_[a];
    omega(i, j) = v(a) / kSqrt2;
    omega(j, i) = -omega(i, j);
  }
  return omega;
}

Eigen::MatrixXd WedgeBasis::endoFromComponents(const Tensor4& e) const {
  Eigen::MatrixXd mat(m_, m_);
  for (int a = 0; a < m_; ++a) {
    auto [i, j] = pairs_[a];
    for (int b = 0; b < m_; ++b) {
      auto [k, l] = pairs_[b];
      mat(b, a) = 0.5 * (e(i, j, k, l) - e(j, i, k, l) - e(i, j, l, k) + e(j, i, l, k));
    }
  }
  return mat;
}

Tensor4 WedgeBasis::endoToComponents(const Eigen::MatrixXd& mat) const {
  Tensor4 e(n_);
  for (int a = 0; a < m_; ++a) {
    auto [i, j] = pairs_[a];
    for (int b = 0; b < m_; ++b) {
      auto [k, l] = pairs_[b];
      const double v = 0.5 * mat(b, a);
      e(i, j, k, l) += v;
      e(j, i, k, l) -= v;
      e(i, j, l, k) -= v;
      e(j, i, l, k) += v;
    }
  }
  return e;
}

Eigen::MatrixXd WedgeBasis::curvatureOperator(const Tensor4& r) const {
  Tensor4 neg = r;
  neg *= -1.0;  // Rm(ω)_{cd} = −R_{abcd} ω_{ab}
  return endoFromComponents(neg);
}

Tensor4 WedgeBasis::curvatureFromOperator(const Eigen::MatrixXd& mat) const {
  Tensor4 r = endoToComponents(mat);
  r *= -1.0;
  return r;
}

double projectionPairResidual(const ProjectionPair& p) {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(p.Pbar.rows(), p.Pbar.cols());
  double res = 0.0;
  auto upd = [&res](const Eigen::MatrixXd& m) {
    res = std::max(res, m.cwiseAbs().maxCoeff());
  };
  upd(p.Pbar + p.Phat - id);
  upd(p.Pbar * p.Pbar - p.Pbar);
  upd(p.Phat * p.Phat - p.Phat);
  upd(p.Pbar * p.Phat);
  upd(p.Pbar - p.Pbar.transpose());
  upd(p.Phat - p.Phat.transpose());
  return res;
}

// --- sharp and reaction operators ---

Eigen::MatrixXd sharp(const WedgeBasis& w, const Eigen::MatrixXd& a,
                      const Eigen::MatrixXd& b) {
  const int m = w.m();
  if (a.rows() != m || a.cols() != m || b.rows() != m || b.cols() != m)
    throw InvalidInput("sharp: operator size must be m×m");
  std::vector<Eigen::MatrixXd> av, bv;
  av.reserve(m);
  bv.reserve(m);
  for (int k = 0; k < m; ++k) {
    av.push_back(w.fromCoords(a.col(k)));
    bv.push_back(w.fromCoords(b.col(k)));
  }
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd cmn(m);
  for (int M = 0; M < m; ++M)
    for (int N = 0; N < m; ++N) {
      Eigen::VectorXd kc = w.coords(bracketForms(av[M], bv[N]));
      for (int r = 0; r < m; ++r) cmn(r) = w.structure(M, N, r);
      s.noalias() += cmn * kc.transpose();
    }
  return s;
}

Eigen::MatrixXd sharpStructure(const WedgeBasis& w, const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& b) {
  const int m = w.m();
  if (a.rows() != m || a.cols() != m || b.rows() != m || b.cols() != m)
    throw InvalidInput("sharpStructure: operator size must be m×m");
  std::vector<Eigen::MatrixXd> cmat(m, Eigen::MatrixXd(m, m));
  for (int r = 0; r < m; ++r)
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) cmat[r](p, q) = w.structure(p, q, r);
  Eigen::MatrixXd s(m, m);
  for (int i = 0; i < m; ++i) {
    Eigen::MatrixXd di = a.transpose() * cmat[i] * b;
    for (int j = 0; j < m; ++j)
      s(j, i) = (cmat[j].array() * di.array()).sum();
  }
  return s;
}

Eigen::MatrixXd reactionQ(const WedgeBasis& w, const Eigen::MatrixXd& m) {
  return m * m + sharp(w, m, m);
}

Eigen::MatrixXd reactionQ(const WedgeBasis& w, const Tensor4& r) {
  return reactionQ(w, w.curvatureOperator(r));
}

std::vector<Eigen::MatrixXd> reactionS(const WedgeBasis& w,
                                       const Eigen::MatrixXd& a,
                                       const std::vector<Eigen::MatrixXd>& f) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(f.size());
  for (const Eigen::MatrixXd& fx : f)
    out.push_back(a * fx + fx * a + 2.0 * sharp(w, fx, a));
  return out;
}

Tensor3 trilinearT(const WedgeBasis& w, const Eigen::MatrixXd& a,
                   const Eigen::MatrixXd& b, const Eigen::MatrixXd& c) {
  const int m = w.m();
  if (a.rows() != m || b.rows() != m || c.rows() != m || a.cols() != m ||
      b.cols() != m || c.cols() != m)
    throw InvalidInput("trilinearT: operator size must be m×m");
  std::vector<Eigen::MatrixXd> av, bv, cv;
  for (int k = 0; k < m; ++k) {
    av.push_back(w.fromCoords(a.col(k)));
    bv.push_back(w.fromCoords(b.col(k)));
    cv.push_back(w.fromCoords(c.col(k)));
  }
  Tensor3 t(m);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) {
      Eigen::MatrixXd br = bracketForms(av[p], bv[q]);
      for (int r = 0; r < m; ++r) t(p, q, r) = innerForms(br, cv[r]);
    }
  return t;
}

Tensor5 reactionU(const Tensor4& r, const Tensor5& t) {
  const int n = r.dim();
  if (t.dim() != n) throw InvalidInput("reactionU: dimension mismatch");
  Tensor5 u(n);
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double s = 0.0;
            for (int b = 0; b < n; ++b)
              for (int d = 0; d < n; ++d)
                s += r(m, b, d, i) * t(b, d, j, k, l) +
                     r(m, b, d, j) * t(b, i, d, k, l) +
                     r(m, b, d, k) * t(b, i, j, d, l) +
                     r(m, b, d, l) * t(b, i, j, k, d);
            u(m, i, j, k, l) = s;
          }
  return u;
}

Tensor4 projectCurvatureType(const Tensor4& v) {
  const int n = v.dim();
  Tensor4 out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          out(i, j, k, l) =
              (v(i, j, k, l) - v(j, i, k, l) - v(i, j, l, k) + v(j, i, l, k) +
               v(k, l, i, j) - v(l, k, i, j) - v(k, l, j, i) + v(l, k, j, i)) /
              8.0;
  return out;
}

namespace {

void requireBracketClosed(const WedgeBasis& w, const Eigen::MatrixXd& pbar,
                          const Eigen::MatrixXd& phat) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pbar);
  std::vector<Eigen::VectorXd> basis;
  for (int k = 0; k < w.m(); ++k)
    if (es.eigenvalues()(k) > 0.5) basis.push_back(es.eigenvectors().col(k));
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = i + 1; j < basis.size(); ++j) {
      Eigen::MatrixXd br =
          bracketForms(w.fromCoords(basis[i]), w.fromCoords(basis[j]));
      double leak = (phat * w.coords(br)).cwiseAbs().maxCoeff();
      if (leak > 1e-8 * (1.0 + br.cwiseAbs().maxCoeff()))
        throw PreconditionViolated(
            "projected reaction identity: image of Pbar is not bracket-closed");
    }
}

}  // namespace

double qcompResidual(const WedgeBasis& w, const Tensor4& r,
                     const ProjectionPair& p) {
  if (p.Pbar.rows() != w.m()) throw InvalidInput("qcompResidual: wrong pair size");
  if (projectionPairResidual(p) > 1e-8)
    throw InvalidInput("qcompResidual: not a valid projection pair");
  requireBracketClosed(w, p.Pbar, p.Phat);
  Eigen::MatrixXd mr = w.curvatureOperator(r);
  Eigen::MatrixXd lhs = reactionQ(w, mr) * p.Phat;
  Eigen::MatrixXd rhat = mr * p.Phat;
  Eigen::MatrixXd rhatstar = p.Phat * mr;
  Eigen::MatrixXd rbarstar = p.Pbar * mr;
  Eigen::MatrixXd rhs = mr * rhat + sharp(w, rbarstar, rhatstar) +
                        sharp(w, mr, rhatstar) * p.Phat;
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

double scompResidual(const WedgeBasis& w, const Tensor4& r, const Tensor5& t,
                     const ProjectionPair& p) {
  if (p.Pbar.rows() != w.m()) throw InvalidInput("scompResidual: wrong pair size");
  if (projectionPairResidual(p) > 1e-8)
    throw InvalidInput("scompResidual: not a valid projection pair");
  requireBracketClosed(w, p.Pbar, p.Phat);
  Eigen::MatrixXd mr = w.curvatureOperator(r);
  Eigen::MatrixXd rhat = mr * p.Phat;
  Eigen::MatrixXd rhatstar = p.Phat * mr;
  Eigen::MatrixXd rbarstar = p.Pbar * mr;
  double res = 0.0;
  for (int x = 0; x < w.n(); ++x) {
    Eigen::MatrixXd f = w.curvatureOperator(sliceFirst(t, x));
    Eigen::MatrixXd lhs = (mr * f + f * mr + 2.0 * sharp(w, f, mr)) * p.Phat;
    Eigen::MatrixXd that = f * p.Phat;
    Eigen::MatrixXd thatstar = p.Phat * f;
    Eigen::MatrixXd rhs = mr * that + f * rhat +
                          2.0 * sharp(w, thatstar, rbarstar) +
                          2.0 * sharp(w, f, rhatstar) * p.Phat;
    res = std::max(res, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return res;
}

double curvatureSymmetryResidual(const Tensor4& r) {
  const int n = r.dim();
  double res = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          res = std::max(res, std::abs(r(a, b, c, d) + r(b, a, c, d)));
          res = std::max(res, std::abs(r(a, b, c, d) + r(a, b, d, c)));
          res = std::max(res, std::abs(r(a, b, c, d) - r(c, d, a, b)));
          res = std::max(res, std::abs(r(a, b, c, d) + r(a, c, d, b) + r(a, d, b, c)));
        }
  return res;
}

Eigen::MatrixXd randomSymmetricEndo(const WedgeBasis& w, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  Eigen::MatrixXd a(w.m(), w.m());
  for (int i = 0; i < w.m(); ++i)
    for (int j = 0; j < w.m(); ++j) a(i, j) = dist(rng);
  return 0.5 * (a + a.transpose());
}

Tensor4 randomCurvatureTensor(const WedgeBasis& w, std::mt19937_64& rng) {
  Tensor4 r0 = w.curvatureFromOperator(randomSymmetricEndo(w, rng));
  const int n = w.n();
  // remove the totally antisymmetric (first-Bianchi-violating) component
  Tensor4 r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          r(i, j, k, l) = r0(i, j, k, l) -
                          (r0(i, j, k, l) + r0(j, k, i, l) + r0(k, i, j, l)) / 3.0;
  return r;
}

Tensor5 randomCurvatureDerivative(const WedgeBasis& w, std::mt19937_64& rng) {
  Tensor5 t(w.n());
  for (int m = 0; m < w.n(); ++m)
    setSliceFirst(t, m, randomCurvatureTensor(w, rng));
  return t;
}

}  // namespace holoflow
