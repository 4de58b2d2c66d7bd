#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdio>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "holoflow/errors.hpp"
#include "holoflow/tensor.hpp"
#include "holoflow/wedge.hpp"

namespace holoflow {

/// Time-integration scheme for metric/field evolution.
enum class FlowScheme { Rk4Ode, ExplicitFd, SemiImplicitFd };

FlowScheme parseFlowScheme(const std::string& name);
std::string flowSchemeName(FlowScheme s);

/// Per-point curvature data in orthonormal-frame components: r holds
/// R_{abcd}, t its covariant derivative T_{mabcd} = ∇_m R_{abcd}, and t2/t3
/// the next two derivative levels when requested (kmax ≥ 2, 3).
struct CurvatureField {
  int n = 0;
  int kmax = 0;
  std::vector<Tensor4> r;
  std::vector<Tensor5> t;
  std::vector<Tensor6> t2;
  std::vector<Tensor7> t3;
};

/// A compact model geometry sampled at finitely many points, exposing exact or
/// finite-difference curvature in per-point orthonormal frames. Grid kinds
/// carry a periodic chart; homogeneous kinds carry closed forms and a single
/// sample point. The frame is the metric's Cholesky frame (diagonal
/// Gram–Schmidt), which realizes the evolving-gauge frame exactly for the
/// bundled model families (their Ricci tensors stay diagonal).
class Geometry {
 public:
  virtual ~Geometry() = default;
  virtual std::unique_ptr<Geometry> clone() const = 0;

  virtual std::string kind() const = 0;
  virtual int n() const = 0;       // tangent-space dimension
  virtual int points() const = 0;  // number of sample points

  /// Chart metric at a sample point (for homogeneous kinds: components in the
  /// invariant-frame basis). Always symmetric positive definite.
  virtual Eigen::MatrixXd metricAt(int p) const = 0;

  /// Orthonormal frame at a sample point: column a holds the chart components
  /// of the frame vector ē_a.
  virtual Eigen::MatrixXd frameAt(int p) const = 0;

  /// Frame-connection coefficients Γ̃(a,b,c) = ⟨∇_{ē_a} ē_b, ē_c⟩ at a sample
  /// point; antisymmetric in (b,c).
  virtual Tensor3 frameConnectionAt(int p) const = 0;

  /// Frame components R_{abcd} of the curvature tensor at every sample point,
  /// with the sign convention R_{abba} = +sectional curvature.
  virtual std::vector<Tensor4> frameCurvature() const = 0;

  /// Directional derivative ē_m(f) of a per-point scalar field. Grid kinds
  /// use centered O(h²) differences; homogeneous kinds return zero (their
  /// sampled fields are invariant).
  virtual std::vector<double> frameDirectional(const std::vector<double>& f,
                                               int m) const = 0;

  /// Chart Christoffel symbols Γ^k_{ij} at a sample point, stored as
  /// (k, i, j). For the Berger sphere this returns the Milnor frame
  /// connection (the model has no coordinate chart).
  virtual Tensor3 christoffels(int p) const = 0;

  /// Christoffel symbols at an arbitrary chart point (closed form on sphere
  /// and product kinds, multilinear interpolation on grids).
  virtual Tensor3 christoffelsAtChart(const Eigen::VectorXd& x) const;

  /// Metric at an arbitrary chart point, matching christoffelsAtChart.
  virtual Eigen::MatrixXd metricAtChart(const Eigen::VectorXd& x) const;

  /// Parallel transport around a closed chart polyline; returns the holonomy
  /// matrix in the orthonormal frame at the first loop point.
  virtual Eigen::MatrixXd loopHolonomy(
      const std::vector<Eigen::VectorXd>& loop) const;

  /// Advance the metric by one Ricci-flow step ∂g/∂t = −2Rc.
  virtual void flowStep(double dt, FlowScheme scheme, double cflSafety) = 0;

  /// Smallest metric eigenvalue over all sample points (positivity monitor).
  double minMetricEigenvalue() const;
  /// Largest |g⁻¹| eigenvalue over all sample points (enters the CFL bound).
  double maxInverseMetricNorm() const;
  /// Smallest grid spacing along axes that actually vary; +inf when the
  /// model has no finite-difference axis (closed-form kinds).
  virtual double minActiveSpacing() const;

  /// Sup-norm estimate of the curvature truncation error: the Richardson
  /// mismatch between narrow (±1) and wide (±2) stencil curvature on grid
  /// kinds, zero for closed-form kinds.
  virtual double curvatureTruncationEstimate() const;
};

// ---- model factories -------------------------------------------------------

std::unique_ptr<Geometry> makeFlatTorus(int n, const std::vector<int>& counts);
std::unique_ptr<Geometry> makeRoundSphere(int n, double radius);
std::unique_ptr<Geometry> makeBergerSphere(double a, double b, double c);
/// g = dx² + f(x)²dy² + h(x)²dz² on a periodic x-grid (period 2π); the y and
/// z circles carry one sample point each since nothing varies along them.
std::unique_ptr<Geometry> makeWarpedT3(const std::vector<double>& fSamples,
                                       const std::vector<double>& hSamples);
/// g = e^{2u(x,y)}(dx² + dy²) on a periodic nx×ny grid (period 2π each).
std::unique_ptr<Geometry> makeConformalT2(const std::vector<double>& uSamples,
                                          int nx, int ny);
std::unique_ptr<Geometry> makeProduct(std::unique_ptr<Geometry> first,
                                      std::unique_ptr<Geometry> second);
/// Build a model from a JSON config {"kind": ..., parameters...}.
std::unique_ptr<Geometry> makeModelFromConfig(const std::string& jsonText);

// ---- operations ------------------------------------------------------------

/// Chart Christoffel symbols at sample point p (see Geometry::christoffels).
Tensor3 christoffels(const Geometry& geo, int p);

/// Frame-component curvature with kmax covariant-derivative levels (0..3).
/// Throws AccuracyError when the per-point residual — algebraic curvature
/// symmetries plus the wide-vs-narrow stencil self-consistency estimate on
/// grid kinds — exceeds 10× symTol (resolution too coarse), UnsupportedOrder
/// for kmax > 3.
CurvatureField curvature(const Geometry& geo, int kmax = 1,
                         double symTol = 1e-2);

/// Covariant derivative of a per-point frame-component tensor field; the new
/// first slot is the derivative direction: (∇U)_{m i…} = ē_m(U_{i…}) −
/// Σ_s Γ̃(m, i_s, p) U_{…p…}.
template <int R>
std::vector<Tensor<R + 1>> covariant_derivative(
    const std::vector<Tensor<R>>& field, const Geometry& geo);

/// Holonomy of a closed chart polyline, in the frame at `base` (which must
/// equal the first loop point). Throws InvalidInput for non-closed loops.
Eigen::MatrixXd loop_holonomy(const Geometry& geo,
                              const std::vector<Eigen::VectorXd>& loop,
                              const Eigen::VectorXd& base);

/// Principal logarithm of a special-orthogonal matrix, as a TwoForm seed.
TwoForm holonomyLog(const Eigen::MatrixXd& q);

/// Raw Ambrose–Singer seeds at sample point p: the images {∇^l Rm(φ^A)} for
/// all derivative directions up to order kmax and all basis two-forms.
std::vector<TwoForm> ambrose_singer_seeds(const Geometry& geo, int p, int kmax);
std::vector<TwoForm> ambrose_singer_seeds(const WedgeBasis& w,
                                          const CurvatureField& field, int p,
                                          int kmax);

/// Holonomy of one closed Milnor-frame circle on the Berger sphere (the
/// model's exact substitute for chart loops): transport around the integral
/// circle of frame direction a.
Eigen::MatrixXd bergerCircleHolonomy(const Geometry& berger, int direction);

/// Frame Ricci tensor ric(i,k) = Σ_j R(i,j,j,k) per point.
std::vector<Eigen::MatrixXd> frameRicci(const std::vector<Tensor4>& r);

/// Write a per-point tensor field as CSV rows "point,c0,c1,...".
template <int R>
void exportFieldCsv(std::ostream& out, const std::vector<Tensor<R>>& field);

// ---- templates -------------------------------------------------------------

template <int R>
std::vector<Tensor<R + 1>> covariant_derivative(
    const std::vector<Tensor<R>>& field, const Geometry& geo) {
  const int n = geo.n();
  const int np = geo.points();
  if (static_cast<int>(field.size()) != np)
    throw InvalidInput("covariant_derivative: field size != sample count");
  const int comps = field.empty() ? 0 : field.front().size();
  std::vector<Tensor<R + 1>> out(np, Tensor<R + 1>(n));
  // derivative part: per component scalar field, differentiated per direction
  std::vector<double> scalar(np);
  for (int c = 0; c < comps; ++c) {
    for (int p = 0; p < np; ++p) scalar[p] = field[p].flat(c);
    for (int m = 0; m < n; ++m) {
      std::vector<double> d = geo.frameDirectional(scalar, m);
      for (int p = 0; p < np; ++p) out[p].flat(m * comps + c) = d[p];
    }
  }
  // connection corrections
  std::array<int, R> strides{};
  int acc = 1;
  for (int s = R - 1; s >= 0; --s) {
    strides[static_cast<std::size_t>(s)] = acc;
    acc *= n;
  }
  std::array<int, R> idx{};
  for (int p = 0; p < np; ++p) {
    Tensor3 gc = geo.frameConnectionAt(p);
    if (gc.maxAbs() == 0.0) continue;
    for (int c = 0; c < comps; ++c) {
      int rem = c;
      for (int s = 0; s < R; ++s) {
        idx[static_cast<std::size_t>(s)] = rem / strides[static_cast<std::size_t>(s)];
        rem %= strides[static_cast<std::size_t>(s)];
      }
      for (int m = 0; m < n; ++m) {
        double corr = 0.0;
        for (int s = 0; s < R; ++s) {
          int self = idx[static_cast<std::size_t>(s)];
          int base = c - self * strides[static_cast<std::size_t>(s)];
          for (int q = 0; q < n; ++q)
            corr += gc(m, self, q) *
                    field[p].flat(base + q * strides[static_cast<std::size_t>(s)]);
        }
        out[p].flat(m * comps + c) -= corr;
      }
    }
  }
  return out;
}

template <int R>
void exportFieldCsv(std::ostream& out, const std::vector<Tensor<R>>& field) {
  for (std::size_t p = 0; p < field.size(); ++p) {
    out << p;
    for (int c = 0; c < field[p].size(); ++c) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", field[p].flat(c));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace holoflow
