#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "holoflow/model.hpp"

namespace holoflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

void fillSectionalPattern(Tensor4& r, int n, double k) {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      r(i, j, j, i) += k;
      r(i, j, i, j) -= k;
    }
}

/// Round sphere of dimension n in polar coordinates, sampled at one interior
/// chart point. The radius² is the flowing state: d(r²)/dt = −2(n−1).
class SphereGeometry final : public Geometry {
 public:
  SphereGeometry(int n, double radius) : n_(n), r2_(radius * radius) {
    if (n < 2) throw InvalidInput("round sphere needs dimension at least two");
    if (radius <= 0.0)
      throw InvalidMetric("round sphere needs a positive radius");
    sample_.resize(n);
    for (int m = 0; m < n; ++m) sample_(m) = 1.0 + 0.1 * m;
  }

  std::unique_ptr<Geometry> clone() const override {
    return std::make_unique<SphereGeometry>(*this);
  }
  std::string kind() const override { return "round-sphere"; }
  int n() const override { return n_; }
  int points() const override { return 1; }

  MatrixXd metricAt(int p) const override {
    requireSample(p);
    return metricAtChart(sample_);
  }

  MatrixXd frameAt(int p) const override {
    requireSample(p);
    MatrixXd g = metricAtChart(sample_);
    MatrixXd e = MatrixXd::Zero(n_, n_);
    for (int i = 0; i < n_; ++i) e(i, i) = 1.0 / std::sqrt(g(i, i));
    return e;
  }

  Tensor3 frameConnectionAt(int p) const override {
    requireSample(p);
    MatrixXd g = metricAtChart(sample_);
    Tensor3 gamma = christoffelsAtChart(sample_);
    VectorXd e(n_), sq(n_);
    for (int i = 0; i < n_; ++i) {
      sq(i) = std::sqrt(g(i, i));
      e(i) = 1.0 / sq(i);
    }
    // Γ̃(a,b,c) = E_a √g_cc (∂_a E_c δ_{bc} + Γ^c_{ab} E_b) for the diagonal
    // polar metric, with ∂_a E_c = −cot(x_a) E_c when a < c
    Tensor3 raw(n_);
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b)
        for (int c = 0; c < n_; ++c) {
          double v = gamma(c, a, b) * e(b);
          if (b == c && a < c) v += -e(c) / std::tan(sample_(a));
          raw(a, b, c) = e(a) * sq(c) * v;
        }
    Tensor3 out(n_);
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b)
        for (int c = 0; c < n_; ++c)
          out(a, b, c) = 0.5 * (raw(a, b, c) - raw(a, c, b));
    return out;
  }

  std::vector<Tensor4> frameCurvature() const override {
    Tensor4 r(n_);
    fillSectionalPattern(r, n_, 1.0 / r2_);
    return {r};
  }

  std::vector<double> frameDirectional(const std::vector<double>& f,
                                       int) const override {
    return std::vector<double>(f.size(), 0.0);
  }

  Tensor3 christoffels(int p) const override {
    requireSample(p);
    return christoffelsAtChart(sample_);
  }

  Tensor3 christoffelsAtChart(const VectorXd& x) const override {
    if (x.size() != n_) throw InvalidInput("chart point has the wrong dimension");
    MatrixXd g = metricAtChart(x);
    Tensor3 out(n_);
    // diagonal metric with ∂_k g_ii = 2 cot(x_k) g_ii for k < i
    for (int k = 0; k < n_; ++k)
      for (int i = 0; i < n_; ++i) {
        if (k < i) {
          double cot = std::cos(x(k)) / std::sin(x(k));
          out(i, k, i) = cot;
          out(i, i, k) = cot;
          out(k, i, i) = -cot * g(i, i) / g(k, k);
        }
      }
    return out;
  }

  MatrixXd metricAtChart(const VectorXd& x) const override {
    if (x.size() != n_) throw InvalidInput("chart point has the wrong dimension");
    MatrixXd g = MatrixXd::Zero(n_, n_);
    double acc = r2_;
    for (int i = 0; i < n_; ++i) {
      g(i, i) = acc;
      double s = std::sin(x(i));
      acc *= s * s;
    }
    return g;
  }

  void flowStep(double dt, FlowScheme, double cflSafety) override {
    if (dt <= 0.0) throw InvalidInput("flow step needs dt > 0");
    if (cflSafety <= 0.0) throw InvalidInput("flow step needs cflSafety > 0");
    // the fiber ODE d(r²)/dt = −2(n−1) has a constant right-hand side, so
    // every scheme lands on the same exact update
    r2_ -= 2.0 * (n_ - 1) * dt;
  }

 private:
  void requireSample(int p) const {
    if (p != 0) throw InvalidInput("round sphere has a single sample point");
  }

  int n_;
  double r2_;
  VectorXd sample_;
};

/// Left-invariant Berger-sphere metric diag(g₁,g₂,g₃) in the fixed Milnor
/// basis with [X_a, X_b] = 2ε_{abc}X_c; all tensors are constant in the
/// invariant orthonormal frame ē_a = X_a/√g_a.
class BergerGeometry final : public Geometry {
 public:
  BergerGeometry(double a, double b, double c) : g_{a, b, c} {
    if (a <= 0.0 || b <= 0.0 || c <= 0.0)
      throw InvalidMetric("Berger sphere needs positive metric coefficients");
  }

  std::unique_ptr<Geometry> clone() const override {
    return std::make_unique<BergerGeometry>(*this);
  }
  std::string kind() const override { return "berger-sphere"; }
  int n() const override { return 3; }
  int points() const override { return 1; }

  MatrixXd metricAt(int p) const override {
    requireSample(p);
    MatrixXd g = MatrixXd::Zero(3, 3);
    for (int i = 0; i < 3; ++i) g(i, i) = g_[static_cast<std::size_t>(i)];
    return g;
  }

  MatrixXd frameAt(int p) const override {
    requireSample(p);
    MatrixXd e = MatrixXd::Zero(3, 3);
    for (int i = 0; i < 3; ++i)
      e(i, i) = 1.0 / std::sqrt(g_[static_cast<std::size_t>(i)]);
    return e;
  }

  Tensor3 frameConnectionAt(int p) const override {
    requireSample(p);
    return connection(g_);
  }

  std::vector<Tensor4> frameCurvature() const override {
    return {curvatureOf(g_)};
  }

  std::vector<double> frameDirectional(const std::vector<double>& f,
                                       int) const override {
    return std::vector<double>(f.size(), 0.0);
  }

  Tensor3 christoffels(int p) const override {
    // the model has no coordinate chart; the Milnor frame connection is the
    // canonical closed-form substitute
    requireSample(p);
    return connection(g_);
  }

  void flowStep(double dt, FlowScheme scheme, double cflSafety) override {
    if (dt <= 0.0) throw InvalidInput("flow step needs dt > 0");
    if (cflSafety <= 0.0) throw InvalidInput("flow step needs cflSafety > 0");
    auto rhs = [](const std::array<double, 3>& g) {
      std::array<double, 3> ric = ricciCoefficients(g);
      std::array<double, 3> d{};
      for (int a = 0; a < 3; ++a)
        d[static_cast<std::size_t>(a)] = -2.0 * g[static_cast<std::size_t>(a)] *
                                         ric[static_cast<std::size_t>(a)];
      return d;
    };
    auto axpy = [](const std::array<double, 3>& g, double s,
                   const std::array<double, 3>& d) {
      std::array<double, 3> out{};
      for (int a = 0; a < 3; ++a)
        out[static_cast<std::size_t>(a)] =
            g[static_cast<std::size_t>(a)] + s * d[static_cast<std::size_t>(a)];
      return out;
    };
    if (scheme == FlowScheme::Rk4Ode) {
      std::array<double, 3> k1 = rhs(g_);
      std::array<double, 3> k2 = rhs(axpy(g_, dt / 2, k1));
      std::array<double, 3> k3 = rhs(axpy(g_, dt / 2, k2));
      std::array<double, 3> k4 = rhs(axpy(g_, dt, k3));
      for (int a = 0; a < 3; ++a)
        g_[static_cast<std::size_t>(a)] +=
            dt / 6.0 *
            (k1[static_cast<std::size_t>(a)] + 2.0 * k2[static_cast<std::size_t>(a)] +
             2.0 * k3[static_cast<std::size_t>(a)] + k4[static_cast<std::size_t>(a)]);
    } else {
      // no spatial operator here, so both difference schemes reduce to a
      // forward Euler update of the fiber ODE
      g_ = axpy(g_, dt, rhs(g_));
    }
  }

 private:
  void requireSample(int p) const {
    if (p != 0) throw InvalidInput("Berger sphere has a single sample point");
  }

  static double eps(int a, int b, int c) {
    return static_cast<double>((a - b) * (b - c) * (c - a)) / 2.0;
  }

  // structure constants of the orthonormal frame and the Koszul connection
  static Tensor3 structure(const std::array<double, 3>& g) {
    Tensor3 cbar(3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          cbar(a, b, c) = 2.0 * eps(a, b, c) *
                          std::sqrt(g[static_cast<std::size_t>(c)] /
                                    (g[static_cast<std::size_t>(a)] *
                                     g[static_cast<std::size_t>(b)]));
    return cbar;
  }

  static Tensor3 connection(const std::array<double, 3>& g) {
    Tensor3 cbar = structure(g);
    Tensor3 gamma(3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          gamma(a, b, c) =
              0.5 * (cbar(a, b, c) - cbar(b, c, a) + cbar(c, a, b));
    return gamma;
  }

  // R_{abcd} = Γ̃(b,c,e)Γ̃(a,e,d) − Γ̃(a,c,e)Γ̃(b,e,d) − c̄_{abe}Γ̃(e,c,d)
  static Tensor4 curvatureOf(const std::array<double, 3>& g) {
    Tensor3 cbar = structure(g);
    Tensor3 gm = connection(g);
    Tensor4 r(3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d) {
            double v = 0.0;
            for (int e = 0; e < 3; ++e)
              v += gm(b, c, e) * gm(a, e, d) - gm(a, c, e) * gm(b, e, d) -
                   cbar(a, b, e) * gm(e, c, d);
            r(a, b, c, d) = v;
          }
    return r;
  }

  static std::array<double, 3> ricciCoefficients(const std::array<double, 3>& g) {
    Tensor4 r = curvatureOf(g);
    std::array<double, 3> ric{};
    for (int a = 0; a < 3; ++a) {
      double v = 0.0;
      for (int j = 0; j < 3; ++j) v += r(a, j, j, a);
      ric[static_cast<std::size_t>(a)] = v;
    }
    return ric;
  }

  std::array<double, 3> g_;
};

/// Riemannian product of two single-sample models: block metric, block frame,
/// block connection and curvature; the chart (when both factors have one) is
/// the concatenation of the factor charts.
class ProductGeometry final : public Geometry {
 public:
  ProductGeometry(std::unique_ptr<Geometry> first,
                  std::unique_ptr<Geometry> second)
      : a_(std::move(first)), b_(std::move(second)) {
    if (!a_ || !b_) throw InvalidInput("product needs two factor models");
    if (a_->points() != 1 || b_->points() != 1)
      throw InvalidInput(
          "product factors must be single-sample (closed-form) models");
  }

  ProductGeometry(const ProductGeometry& other)
      : a_(other.a_->clone()), b_(other.b_->clone()) {}

  std::unique_ptr<Geometry> clone() const override {
    return std::make_unique<ProductGeometry>(*this);
  }
  std::string kind() const override { return "product"; }
  int n() const override { return a_->n() + b_->n(); }
  int points() const override { return 1; }

  MatrixXd metricAt(int p) const override {
    requireSample(p);
    return blockMatrix(a_->metricAt(0), b_->metricAt(0));
  }

  MatrixXd frameAt(int p) const override {
    requireSample(p);
    return blockMatrix(a_->frameAt(0), b_->frameAt(0));
  }

  Tensor3 frameConnectionAt(int p) const override {
    requireSample(p);
    return blockTensor3(a_->frameConnectionAt(0), b_->frameConnectionAt(0));
  }

  std::vector<Tensor4> frameCurvature() const override {
    const int na = a_->n();
    Tensor4 ra = a_->frameCurvature()[0];
    Tensor4 rb = b_->frameCurvature()[0];
    Tensor4 out(n());
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < na; ++j)
        for (int k = 0; k < na; ++k)
          for (int l = 0; l < na; ++l) out(i, j, k, l) = ra(i, j, k, l);
    const int nb = b_->n();
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j)
        for (int k = 0; k < nb; ++k)
          for (int l = 0; l < nb; ++l)
            out(na + i, na + j, na + k, na + l) = rb(i, j, k, l);
    return {out};
  }

  std::vector<double> frameDirectional(const std::vector<double>& f,
                                       int) const override {
    return std::vector<double>(f.size(), 0.0);
  }

  Tensor3 christoffels(int p) const override {
    requireSample(p);
    return blockTensor3(a_->christoffels(0), b_->christoffels(0));
  }

  Tensor3 christoffelsAtChart(const VectorXd& x) const override {
    if (x.size() != n()) throw InvalidInput("chart point has the wrong dimension");
    return blockTensor3(a_->christoffelsAtChart(x.head(a_->n())),
                        b_->christoffelsAtChart(x.tail(b_->n())));
  }

  MatrixXd metricAtChart(const VectorXd& x) const override {
    if (x.size() != n()) throw InvalidInput("chart point has the wrong dimension");
    return blockMatrix(a_->metricAtChart(x.head(a_->n())),
                       b_->metricAtChart(x.tail(b_->n())));
  }

  void flowStep(double dt, FlowScheme scheme, double cflSafety) override {
    a_->flowStep(dt, scheme, cflSafety);
    b_->flowStep(dt, scheme, cflSafety);
  }

 private:
  void requireSample(int p) const {
    if (p != 0) throw InvalidInput("product model has a single sample point");
  }

  MatrixXd blockMatrix(const MatrixXd& ma, const MatrixXd& mb) const {
    MatrixXd out = MatrixXd::Zero(n(), n());
    out.topLeftCorner(ma.rows(), ma.cols()) = ma;
    out.bottomRightCorner(mb.rows(), mb.cols()) = mb;
    return out;
  }

  Tensor3 blockTensor3(const Tensor3& ta, const Tensor3& tb) const {
    const int na = a_->n();
    Tensor3 out(n());
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < na; ++j)
        for (int k = 0; k < na; ++k) out(i, j, k) = ta(i, j, k);
    const int nb = b_->n();
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j)
        for (int k = 0; k < nb; ++k) out(na + i, na + j, na + k) = tb(i, j, k);
    return out;
  }

  std::unique_ptr<Geometry> a_, b_;
};

}  // namespace

std::unique_ptr<Geometry> makeRoundSphere(int n, double radius) {
  return std::make_unique<SphereGeometry>(n, radius);
}

std::unique_ptr<Geometry> makeBergerSphere(double a, double b, double c) {
  return std::make_unique<BergerGeometry>(a, b, c);
}

std::unique_ptr<Geometry> makeProduct(std::unique_ptr<Geometry> first,
                                      std::unique_ptr<Geometry> second) {
  return std::make_unique<ProductGeometry>(std::move(first), std::move(second));
}

Eigen::MatrixXd bergerCircleHolonomy(const Geometry& berger, int direction) {
  if (berger.kind() != "berger-sphere")
    throw InvalidInput("circle holonomy is defined for Berger spheres only");
  if (direction < 0 || direction >= 3)
    throw InvalidInput("circle direction must be 0, 1 or 2");
  double ga = berger.metricAt(0)(direction, direction);
  Tensor3 fc = berger.frameConnectionAt(0);
  // parallel transport along the frame circle: dV/ds = −M V with constant
  // M_{bc} = Γ̃(a,c,b), over one period 2π√g_a of the unit-speed circle
  MatrixXd m = MatrixXd::Zero(3, 3);
  for (int b = 0; b < 3; ++b)
    for (int c = 0; c < 3; ++c) m(b, c) = fc(direction, c, b);
  double period = 2.0 * kPi * std::sqrt(ga);
  return (-period * m).exp();
}

}  // namespace holoflow
