#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "holoflow/model.hpp"

namespace holoflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kPeriod = 6.283185307179586476925286766559;

/// Periodic finite-difference geometry: one grid axis per coordinate, metric
/// samples per point, all derived quantities rebuilt from centered stencils.
/// Axes with a single sample carry directions the metric does not vary along.
class GridGeometry final : public Geometry {
 public:
  GridGeometry(std::string kindName, std::vector<int> counts,
               std::vector<MatrixXd> metric)
      : kindName_(std::move(kindName)),
        n_(static_cast<int>(counts.size())),
        counts_(std::move(counts)),
        g_(std::move(metric)) {
    if (n_ < 1) throw InvalidInput("grid model needs at least one axis");
    int np = 1;
    for (int c : counts_) {
      if (c < 1) throw InvalidInput("grid axis needs at least one sample");
      np *= c;
    }
    if (static_cast<int>(g_.size()) != np)
      throw InvalidInput("metric sample count does not match the grid");
    h_.resize(static_cast<std::size_t>(n_));
    for (int k = 0; k < n_; ++k) h_[static_cast<std::size_t>(k)] = kPeriod / counts_[static_cast<std::size_t>(k)];
    for (const MatrixXd& m : g_) {
      if (m.rows() != n_ || m.cols() != n_)
        throw InvalidInput("metric sample has the wrong dimension");
      if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw InvalidMetric("metric sample is not symmetric");
    }
    // centered stencils need room on every axis the metric varies along
    for (int k = 0; k < n_; ++k) {
      int c = counts_[static_cast<std::size_t>(k)];
      if (c >= 5 || c == 1) continue;
      for (int p = 0; p < np; ++p)
        if ((g_[static_cast<std::size_t>(p)] -
             g_[static_cast<std::size_t>(shift(p, k, 1))])
                .cwiseAbs()
                .maxCoeff() > 0.0)
          throw InvalidInput(
              "grid axis with a varying metric needs at least five samples");
    }
    rebuild();
  }

  std::unique_ptr<Geometry> clone() const override {
    return std::make_unique<GridGeometry>(*this);
  }
  std::string kind() const override { return kindName_; }
  int n() const override { return n_; }
  int points() const override { return static_cast<int>(g_.size()); }

  MatrixXd metricAt(int p) const override { return g_[checked(p)]; }
  MatrixXd frameAt(int p) const override { return e_[checked(p)]; }
  Tensor3 frameConnectionAt(int p) const override {
    return frameConn_[checked(p)];
  }
  Tensor3 christoffels(int p) const override { return gamma_[checked(p)]; }
  std::vector<Tensor4> frameCurvature() const override { return frameR_; }

  std::vector<double> frameDirectional(const std::vector<double>& f,
                                       int m) const override {
    const int np = points();
    if (static_cast<int>(f.size()) != np)
      throw InvalidInput("scalar field size does not match the grid");
    if (m < 0 || m >= n_) throw InvalidInput("derivative direction out of range");
    std::vector<double> out(static_cast<std::size_t>(np), 0.0);
    for (int p = 0; p < np; ++p) {
      double v = 0.0;
      for (int mu = 0; mu < n_; ++mu) {
        double emu = e_[static_cast<std::size_t>(p)](mu, m);
        if (emu == 0.0 || counts_[static_cast<std::size_t>(mu)] < 2) continue;
        double d = (f[static_cast<std::size_t>(shift(p, mu, 1))] -
                    f[static_cast<std::size_t>(shift(p, mu, -1))]) /
                   (2.0 * h_[static_cast<std::size_t>(mu)]);
        v += emu * d;
      }
      out[static_cast<std::size_t>(p)] = v;
    }
    return out;
  }

  Tensor3 christoffelsAtChart(const VectorXd& x) const override {
    Tensor3 out(n_);
    interpolate(x, [&](int p, double wgt) {
      const Tensor3& gp = gamma_[static_cast<std::size_t>(p)];
      for (int f = 0; f < out.size(); ++f) out.flat(f) += wgt * gp.flat(f);
    });
    return out;
  }

  MatrixXd metricAtChart(const VectorXd& x) const override {
    MatrixXd out = MatrixXd::Zero(n_, n_);
    interpolate(x, [&](int p, double wgt) {
      out += wgt * g_[static_cast<std::size_t>(p)];
    });
    return out;
  }

  void flowStep(double dt, FlowScheme scheme, double cflSafety) override {
    if (dt <= 0.0) throw InvalidInput("flow step needs dt > 0");
    if (cflSafety <= 0.0) throw InvalidInput("flow step needs cflSafety > 0");
    if (scheme == FlowScheme::Rk4Ode)
      throw ConfigError("rk4-ode integrates fiberwise models only; "
                        "grid models need explicit-fd or semi-implicit-fd");
    std::vector<MatrixXd> ric = coordinateRicci();
    if (scheme == FlowScheme::ExplicitFd) {
      double hmin = minActiveSpacing();
      double bound = cflSafety * hmin * hmin /
                     (2.0 * n_ * maxInverseMetricNorm());
      if (dt > bound)
        throw ConfigError("time step " + std::to_string(dt) +
                          " exceeds the diffusion stability bound " +
                          std::to_string(bound));
      for (std::size_t p = 0; p < g_.size(); ++p) g_[p] -= 2.0 * dt * ric[p];
    } else {
      semiImplicitStep(dt, ric);
    }
    rebuild();
  }

  double minActiveSpacing() const override {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_; ++k)
      if (counts_[static_cast<std::size_t>(k)] >= 2)
        best = std::min(best, h_[static_cast<std::size_t>(k)]);
    return best;
  }

  double curvatureTruncationEstimate() const override { return truncEstimate_; }

 private:
  std::size_t checked(int p) const {
    if (p < 0 || p >= points()) throw InvalidInput("sample point out of range");
    return static_cast<std::size_t>(p);
  }

  // periodic neighbor index along one axis
  int shift(int p, int axis, int by) const {
    int stride = 1;
    for (int k = n_ - 1; k > axis; --k) stride *= counts_[static_cast<std::size_t>(k)];
    int c = counts_[static_cast<std::size_t>(axis)];
    int i = (p / stride) % c;
    int j = ((i + by) % c + c) % c;
    return p + (j - i) * stride;
  }

  // multilinear periodic interpolation: calls visit(corner, weight)
  template <typename Visit>
  void interpolate(const VectorXd& x, Visit visit) const {
    if (x.size() != n_) throw InvalidInput("chart point has the wrong dimension");
    std::vector<int> base(static_cast<std::size_t>(n_), 0);
    std::vector<double> frac(static_cast<std::size_t>(n_), 0.0);
    std::vector<int> active;
    for (int k = 0; k < n_; ++k) {
      int c = counts_[static_cast<std::size_t>(k)];
      if (c == 1) continue;
      double t = x(k) / h_[static_cast<std::size_t>(k)];
      double fl = std::floor(t);
      base[static_cast<std::size_t>(k)] =
          static_cast<int>(fl - std::floor(fl / c) * c) % c;
      frac[static_cast<std::size_t>(k)] = t - fl;
      active.push_back(k);
    }
    int corners = 1 << active.size();
    for (int mask = 0; mask < corners; ++mask) {
      double wgt = 1.0;
      int p = 0;
      int stride = 1;
      std::vector<int> idx = base;
      for (std::size_t a = 0; a < active.size(); ++a) {
        int k = active[a];
        bool hi = (mask >> a) & 1;
        wgt *= hi ? frac[static_cast<std::size_t>(k)]
                  : 1.0 - frac[static_cast<std::size_t>(k)];
        if (hi)
          idx[static_cast<std::size_t>(k)] =
              (idx[static_cast<std::size_t>(k)] + 1) % counts_[static_cast<std::size_t>(k)];
      }
      for (int k = n_ - 1; k >= 0; --k) {
        p += idx[static_cast<std::size_t>(k)] * stride;
        stride *= counts_[static_cast<std::size_t>(k)];
      }
      if (wgt != 0.0) visit(p, wgt);
    }
  }

  // centered first derivative of a per-point matrix field; `width` selects
  // the stencil half-spacing (1 = ±1 samples, 2 = ±2 samples)
  std::vector<MatrixXd> fdMatrix(const std::vector<MatrixXd>& field, int axis,
                                 int width) const {
    std::vector<MatrixXd> out(field.size());
    double denom = 2.0 * width * h_[static_cast<std::size_t>(axis)];
    for (int p = 0; p < points(); ++p)
      out[static_cast<std::size_t>(p)] =
          (field[static_cast<std::size_t>(shift(p, axis, width))] -
           field[static_cast<std::size_t>(shift(p, axis, -width))]) /
          denom;
    return out;
  }

  std::vector<Tensor3> fdTensor3(const std::vector<Tensor3>& field, int axis,
                                 int width) const {
    std::vector<Tensor3> out(field.size(), Tensor3(n_));
    double denom = 2.0 * width * h_[static_cast<std::size_t>(axis)];
    for (int p = 0; p < points(); ++p) {
      const Tensor3& hi = field[static_cast<std::size_t>(shift(p, axis, width))];
      const Tensor3& lo = field[static_cast<std::size_t>(shift(p, axis, -width))];
      Tensor3& o = out[static_cast<std::size_t>(p)];
      for (int f = 0; f < o.size(); ++f) o.flat(f) = (hi.flat(f) - lo.flat(f)) / denom;
    }
    return out;
  }

  // Γ^k_{ij} = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij) from supplied ∂g
  std::vector<Tensor3> christoffelField(
      const std::vector<std::vector<MatrixXd>>& dg) const {
    std::vector<Tensor3> out(g_.size(), Tensor3(n_));
    for (int p = 0; p < points(); ++p) {
      const MatrixXd& gi = gi_[static_cast<std::size_t>(p)];
      Tensor3& o = out[static_cast<std::size_t>(p)];
      for (int k = 0; k < n_; ++k)
        for (int i = 0; i < n_; ++i)
          for (int j = 0; j < n_; ++j) {
            double v = 0.0;
            for (int l = 0; l < n_; ++l)
              v += gi(k, l) *
                   (dg[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)](j, l) +
                    dg[static_cast<std::size_t>(j)][static_cast<std::size_t>(p)](i, l) -
                    dg[static_cast<std::size_t>(l)][static_cast<std::size_t>(p)](i, j));
            o(k, i, j) = 0.5 * v;
          }
    }
    return out;
  }

  // frame curvature from a Christoffel field and its derivatives:
  // R^σ_{μνρ} = ∂_μΓ^σ_{νρ} − ∂_νΓ^σ_{μρ} + Γ^σ_{μλ}Γ^λ_{νρ} − Γ^σ_{νλ}Γ^λ_{μρ},
  // lowered with g, converted with the frame
  std::vector<Tensor4> frameCurvatureFrom(
      const std::vector<Tensor3>& gamma,
      const std::vector<std::vector<Tensor3>>& dgamma) const {
    std::vector<Tensor4> out(g_.size(), Tensor4(n_));
    for (int p = 0; p < points(); ++p) {
      const Tensor3& gm = gamma[static_cast<std::size_t>(p)];
      const MatrixXd& g = g_[static_cast<std::size_t>(p)];
      const MatrixXd& e = e_[static_cast<std::size_t>(p)];
      Tensor4 rlow(n_);
      for (int mu = 0; mu < n_; ++mu)
        for (int nu = 0; nu < n_; ++nu)
          for (int rho = 0; rho < n_; ++rho)
            for (int sig = 0; sig < n_; ++sig) {
              double up = dgamma[static_cast<std::size_t>(mu)][static_cast<std::size_t>(p)](sig, nu, rho) -
                          dgamma[static_cast<std::size_t>(nu)][static_cast<std::size_t>(p)](sig, mu, rho);
              for (int lam = 0; lam < n_; ++lam)
                up += gm(sig, mu, lam) * gm(lam, nu, rho) -
                      gm(sig, nu, lam) * gm(lam, mu, rho);
              // accumulate the lowered tensor directly: R_{μνρσ'} += g_{σ'σ} R^σ
              for (int low = 0; low < n_; ++low)
                rlow(mu, nu, rho, low) += g(low, sig) * up;
            }
      Tensor4& o = out[static_cast<std::size_t>(p)];
      for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b)
          for (int c = 0; c < n_; ++c)
            for (int d = 0; d < n_; ++d) {
              double v = 0.0;
              for (int mu = 0; mu < n_; ++mu)
                for (int nu = 0; nu < n_; ++nu)
                  for (int rho = 0; rho < n_; ++rho)
                    for (int sig = 0; sig < n_; ++sig)
                      v += e(mu, a) * e(nu, b) * e(rho, c) * e(sig, d) *
                           rlow(mu, nu, rho, sig);
              o(a, b, c, d) = v;
            }
    }
    return out;
  }

  std::vector<MatrixXd> coordinateRicci() const {
    std::vector<MatrixXd> out(g_.size());
    std::vector<MatrixXd> ricFrame = frameRicci(frameR_);
    for (int p = 0; p < points(); ++p) {
      const MatrixXd& th = theta_[static_cast<std::size_t>(p)];
      out[static_cast<std::size_t>(p)] =
          th.transpose() * ricFrame[static_cast<std::size_t>(p)] * th;
    }
    return out;
  }

  // one sequential-splitting step of g' = g + dt·rhs stabilized by the
  // constant-coefficient heat operator: w = g + dt·rhs − dt·c̄Δ_h g, then one
  // cyclic tridiagonal solve of (I − dt·c̄ D²_k) per active axis
  void semiImplicitStep(double dt, const std::vector<MatrixXd>& ric) {
    const int np = points();
    double cbar = maxInverseMetricNorm();
    std::vector<MatrixXd> w(g_.size());
    for (int p = 0; p < np; ++p) {
      MatrixXd lap = MatrixXd::Zero(n_, n_);
      for (int k = 0; k < n_; ++k) {
        if (counts_[static_cast<std::size_t>(k)] < 3) continue;
        double h2 = h_[static_cast<std::size_t>(k)] * h_[static_cast<std::size_t>(k)];
        lap += (g_[static_cast<std::size_t>(shift(p, k, 1))] -
                2.0 * g_[static_cast<std::size_t>(p)] +
                g_[static_cast<std::size_t>(shift(p, k, -1))]) /
               h2;
      }
      w[static_cast<std::size_t>(p)] =
          g_[static_cast<std::size_t>(p)] -
          2.0 * dt * ric[static_cast<std::size_t>(p)] - dt * cbar * lap;
    }
    for (int k = 0; k < n_; ++k) {
      if (counts_[static_cast<std::size_t>(k)] < 3) continue;
      solveAxisImplicit(w, k, dt * cbar);
    }
    g_ = std::move(w);
  }

  // in-place solve of (I − α D²_axis) u = u along every grid line of `axis`,
  // componentwise on the metric entries (cyclic Thomas + Sherman–Morrison)
  void solveAxisImplicit(std::vector<MatrixXd>& u, int axis, double alpha) const {
    int c = counts_[static_cast<std::size_t>(axis)];
    double h2 = h_[static_cast<std::size_t>(axis)] * h_[static_cast<std::size_t>(axis)];
    double off = -alpha / h2;
    double diag = 1.0 + 2.0 * alpha / h2;
    std::vector<int> line(static_cast<std::size_t>(c));
    std::vector<double> rhs(static_cast<std::size_t>(c)), sol(static_cast<std::size_t>(c)),
        corr(static_cast<std::size_t>(c));
    for (int p = 0; p < points(); ++p) {
      // visit each line once, from its index-0 representative
      int stride = 1;
      for (int k = n_ - 1; k > axis; --k) stride *= counts_[static_cast<std::size_t>(k)];
      if ((p / stride) % c != 0) continue;
      for (int i = 0; i < c; ++i) line[static_cast<std::size_t>(i)] = shift(p, axis, i);
      for (int row = 0; row < n_; ++row)
        for (int col = row; col < n_; ++col) {
          for (int i = 0; i < c; ++i)
            rhs[static_cast<std::size_t>(i)] =
                u[static_cast<std::size_t>(line[static_cast<std::size_t>(i)])](row, col);
          cyclicTridiagonal(diag, off, rhs, sol, corr);
          for (int i = 0; i < c; ++i) {
            u[static_cast<std::size_t>(line[static_cast<std::size_t>(i)])](row, col) =
                sol[static_cast<std::size_t>(i)];
            u[static_cast<std::size_t>(line[static_cast<std::size_t>(i)])](col, row) =
                sol[static_cast<std::size_t>(i)];
          }
        }
    }
  }

  // constant-coefficient cyclic tridiagonal solve (Sherman–Morrison rank-one
  // correction of two plain Thomas sweeps)
  static void cyclicTridiagonal(double diag, double off,
                                const std::vector<double>& rhs,
                                std::vector<double>& sol,
                                std::vector<double>& corr) {
    int m = static_cast<int>(rhs.size());
    if (m == 1) {
      sol[0] = rhs[0] / (diag + 2.0 * off);
      return;
    }
    if (m == 2) {
      // wrap makes both neighbors the same sample: rows are (diag, 2·off)
      double det = diag * diag - 4.0 * off * off;
      sol[0] = (diag * rhs[0] - 2.0 * off * rhs[1]) / det;
      sol[1] = (diag * rhs[1] - 2.0 * off * rhs[0]) / det;
      return;
    }
    double gammaPivot = -diag;
    auto thomas = [&](const std::vector<double>& b, std::vector<double>& x,
                      double d0, double dLast) {
      static thread_local std::vector<double> cp, dp;
      cp.assign(static_cast<std::size_t>(m), 0.0);
      dp.assign(static_cast<std::size_t>(m), 0.0);
      double d = d0;
      cp[0] = off / d;
      dp[0] = b[0] / d;
      for (int i = 1; i < m - 1; ++i) {
        double denom = diag - off * cp[static_cast<std::size_t>(i - 1)];
        cp[static_cast<std::size_t>(i)] = off / denom;
        dp[static_cast<std::size_t>(i)] =
            (b[static_cast<std::size_t>(i)] - off * dp[static_cast<std::size_t>(i - 1)]) / denom;
      }
      double denom = dLast - off * cp[static_cast<std::size_t>(m - 2)];
      dp[static_cast<std::size_t>(m - 1)] =
          (b[static_cast<std::size_t>(m - 1)] - off * dp[static_cast<std::size_t>(m - 2)]) / denom;
      x[static_cast<std::size_t>(m - 1)] = dp[static_cast<std::size_t>(m - 1)];
      for (int i = m - 2; i >= 0; --i)
        x[static_cast<std::size_t>(i)] =
            dp[static_cast<std::size_t>(i)] -
            cp[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i + 1)];
    };
    double d0 = diag - gammaPivot;
    double dLast = diag - off * off / gammaPivot;
    thomas(rhs, sol, d0, dLast);
    std::vector<double> unit(static_cast<std::size_t>(m), 0.0);
    unit[0] = gammaPivot;
    unit[static_cast<std::size_t>(m - 1)] = off;
    thomas(unit, corr, d0, dLast);
    double factor = (sol[0] + (off / gammaPivot) * sol[static_cast<std::size_t>(m - 1)]) /
                    (1.0 + corr[0] + (off / gammaPivot) * corr[static_cast<std::size_t>(m - 1)]);
    for (int i = 0; i < m; ++i)
      sol[static_cast<std::size_t>(i)] -= factor * corr[static_cast<std::size_t>(i)];
  }

  void rebuild() {
    const int np = points();
    gi_.resize(g_.size());
    e_.resize(g_.size());
    theta_.resize(g_.size());
    for (int p = 0; p < np; ++p) {
      const MatrixXd& g = g_[static_cast<std::size_t>(p)];
      Eigen::LLT<MatrixXd> llt(g);
      if (llt.info() != Eigen::Success)
        throw InvalidMetric("metric sample is not positive definite");
      MatrixXd l = llt.matrixL();
      theta_[static_cast<std::size_t>(p)] = l.transpose();
      e_[static_cast<std::size_t>(p)] = theta_[static_cast<std::size_t>(p)].inverse();
      gi_[static_cast<std::size_t>(p)] = g.inverse();
    }
    std::vector<std::vector<MatrixXd>> dg(static_cast<std::size_t>(n_));
    for (int k = 0; k < n_; ++k) dg[static_cast<std::size_t>(k)] = fdMatrix(g_, k, 1);
    gamma_ = christoffelField(dg);
    // frame connection Γ̃(a,b,c) = ⟨∇_{ē_a}ē_b, ē_c⟩, antisymmetrized in (b,c)
    // to keep the discrete ∇g exactly zero
    std::vector<std::vector<MatrixXd>> de(static_cast<std::size_t>(n_));
    for (int k = 0; k < n_; ++k) de[static_cast<std::size_t>(k)] = fdMatrix(e_, k, 1);
    frameConn_.assign(g_.size(), Tensor3(n_));
    for (int p = 0; p < np; ++p) {
      const MatrixXd& e = e_[static_cast<std::size_t>(p)];
      const MatrixXd& th = theta_[static_cast<std::size_t>(p)];
      const Tensor3& gm = gamma_[static_cast<std::size_t>(p)];
      Tensor3 raw(n_);
      for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b)
          for (int cc = 0; cc < n_; ++cc) {
            double v = 0.0;
            for (int mu = 0; mu < n_; ++mu) {
              if (e(mu, a) == 0.0) continue;
              for (int nu = 0; nu < n_; ++nu) {
                double cov = de[static_cast<std::size_t>(mu)][static_cast<std::size_t>(p)](nu, b);
                for (int lam = 0; lam < n_; ++lam)
                  cov += gm(nu, mu, lam) * e(lam, b);
                v += e(mu, a) * cov * th(cc, nu);
              }
            }
            raw(a, b, cc) = v;
          }
      Tensor3& fc = frameConn_[static_cast<std::size_t>(p)];
      for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b)
          for (int cc = 0; cc < n_; ++cc)
            fc(a, b, cc) = 0.5 * (raw(a, b, cc) - raw(a, cc, b));
    }
    // curvature, plus a wide-stencil recomputation for the truncation estimate
    std::vector<std::vector<Tensor3>> dgamma(static_cast<std::size_t>(n_));
    for (int k = 0; k < n_; ++k)
      dgamma[static_cast<std::size_t>(k)] = fdTensor3(gamma_, k, 1);
    frameR_ = frameCurvatureFrom(gamma_, dgamma);
    std::vector<std::vector<MatrixXd>> dgw(static_cast<std::size_t>(n_));
    for (int k = 0; k < n_; ++k) dgw[static_cast<std::size_t>(k)] = fdMatrix(g_, k, 2);
    std::vector<Tensor3> gammaW = christoffelField(dgw);
    std::vector<std::vector<Tensor3>> dgammaW(static_cast<std::size_t>(n_));
    for (int k = 0; k < n_; ++k)
      dgammaW[static_cast<std::size_t>(k)] = fdTensor3(gammaW, k, 2);
    std::vector<Tensor4> wide = frameCurvatureFrom(gammaW, dgammaW);
    truncEstimate_ = 0.0;
    for (int p = 0; p < np; ++p) {
      const Tensor4& a = frameR_[static_cast<std::size_t>(p)];
      const Tensor4& b = wide[static_cast<std::size_t>(p)];
      for (int f = 0; f < a.size(); ++f)
        truncEstimate_ =
            std::max(truncEstimate_, std::abs(a.flat(f) - b.flat(f)) / 3.0);
    }
  }

  std::string kindName_;
  int n_;
  std::vector<int> counts_;
  std::vector<double> h_;
  std::vector<MatrixXd> g_;
  std::vector<MatrixXd> gi_, e_, theta_;
  std::vector<Tensor3> gamma_, frameConn_;
  std::vector<Tensor4> frameR_;
  double truncEstimate_ = 0.0;
};

}  // namespace

std::unique_ptr<Geometry> makeFlatTorus(int n, const std::vector<int>& counts) {
  if (n < 2) throw InvalidInput("flat torus needs dimension at least two");
  if (static_cast<int>(counts.size()) != n)
    throw InvalidInput("flat torus needs one sample count per axis");
  int np = 1;
  for (int c : counts) {
    if (c < 1) throw InvalidInput("flat torus axis needs at least one sample");
    np *= c;
  }
  std::vector<MatrixXd> metric(static_cast<std::size_t>(np),
                               MatrixXd::Identity(n, n));
  return std::make_unique<GridGeometry>("flat-torus", counts, std::move(metric));
}

std::unique_ptr<Geometry> makeWarpedT3(const std::vector<double>& fSamples,
                                       const std::vector<double>& hSamples) {
  int np = static_cast<int>(fSamples.size());
  if (np < 5) throw InvalidInput("warped T3 needs at least five x-samples");
  if (hSamples.size() != fSamples.size())
    throw InvalidInput("warped T3 needs matching f and h sample counts");
  std::vector<MatrixXd> metric;
  metric.reserve(fSamples.size());
  for (int i = 0; i < np; ++i) {
    double f = fSamples[static_cast<std::size_t>(i)];
    double h = hSamples[static_cast<std::size_t>(i)];
    if (f <= 0.0 || h <= 0.0)
      throw InvalidMetric("warped T3 needs positive warp factors");
    MatrixXd g = MatrixXd::Zero(3, 3);
    g(0, 0) = 1.0;
    g(1, 1) = f * f;
    g(2, 2) = h * h;
    metric.push_back(g);
  }
  return std::make_unique<GridGeometry>("warped-T3", std::vector<int>{np, 1, 1},
                                        std::move(metric));
}

std::unique_ptr<Geometry> makeConformalT2(const std::vector<double>& uSamples,
                                          int nx, int ny) {
  if (nx < 5 || ny < 5)
    throw InvalidInput("conformal T2 needs at least five samples per axis");
  if (static_cast<int>(uSamples.size()) != nx * ny)
    throw InvalidInput("conformal T2 needs nx*ny samples");
  std::vector<MatrixXd> metric;
  metric.reserve(uSamples.size());
  for (double u : uSamples)
    metric.push_back(std::exp(2.0 * u) * MatrixXd::Identity(2, 2));
  return std::make_unique<GridGeometry>("conformal-T2", std::vector<int>{nx, ny},
                                        std::move(metric));
}

}  // namespace holoflow
