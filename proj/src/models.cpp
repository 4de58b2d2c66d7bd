#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "holoflow/model.hpp"
#include "json.hpp"

namespace holoflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;

FlowScheme parseFlowScheme(const std::string& name) {
  if (name == "rk4-ode") return FlowScheme::Rk4Ode;
  if (name == "explicit-fd") return FlowScheme::ExplicitFd;
  if (name == "semi-implicit-fd") return FlowScheme::SemiImplicitFd;
  throw ConfigError("unknown flow scheme '" + name +
                    "' (expected rk4-ode, explicit-fd or semi-implicit-fd)");
}

std::string flowSchemeName(FlowScheme s) {
  switch (s) {
    case FlowScheme::Rk4Ode:
      return "rk4-ode";
    case FlowScheme::ExplicitFd:
      return "explicit-fd";
    case FlowScheme::SemiImplicitFd:
      return "semi-implicit-fd";
  }
  throw InvalidInput("unknown flow scheme value");
}

Tensor3 Geometry::christoffelsAtChart(const VectorXd&) const {
  throw InvalidInput(kind() + " exposes no smooth chart");
}

MatrixXd Geometry::metricAtChart(const VectorXd&) const {
  throw InvalidInput(kind() + " exposes no smooth chart");
}

MatrixXd Geometry::loopHolonomy(const std::vector<VectorXd>& loop) const {
  const int nn = n();
  if (loop.size() < 2) throw InvalidInput("a loop needs at least two points");
  for (const VectorXd& x : loop)
    if (x.size() != nn) throw InvalidInput("loop point has the wrong dimension");
  if ((loop.front() - loop.back()).cwiseAbs().maxCoeff() > 1e-9)
    throw InvalidInput("loop is not closed");
  MatrixXd transport = MatrixXd::Identity(nn, nn);
  for (std::size_t seg = 0; seg + 1 < loop.size(); ++seg) {
    const VectorXd& x0 = loop[seg];
    VectorXd dx = loop[seg + 1] - x0;
    double len = dx.norm();
    if (len == 0.0) continue;
    int steps = std::max(16, static_cast<int>(std::ceil(len / 0.01)));
    double ds = 1.0 / steps;
    // transport generator at curve parameter s: A_{νλ} = Γ^ν_{μλ} dx^μ
    auto gen = [&](double s) {
      Tensor3 gm = christoffelsAtChart(x0 + s * dx);
      MatrixXd m = MatrixXd::Zero(nn, nn);
      for (int nu = 0; nu < nn; ++nu)
        for (int lam = 0; lam < nn; ++lam) {
          double v = 0.0;
          for (int mu = 0; mu < nn; ++mu) v += gm(nu, mu, lam) * dx(mu);
          m(nu, lam) = v;
        }
      return m;
    };
    for (int i = 0; i < steps; ++i) {
      double s = i * ds;
      MatrixXd a0 = gen(s);
      MatrixXd am = gen(s + 0.5 * ds);
      MatrixXd a1 = gen(s + ds);
      MatrixXd k1 = -a0 * transport;
      MatrixXd k2 = -am * (transport + 0.5 * ds * k1);
      MatrixXd k3 = -am * (transport + 0.5 * ds * k2);
      MatrixXd k4 = -a1 * (transport + ds * k3);
      transport += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  MatrixXd g0 = metricAtChart(loop.front());
  Eigen::LLT<MatrixXd> llt(g0);
  if (llt.info() != Eigen::Success)
    throw InvalidMetric("metric is not positive definite at the loop base");
  MatrixXd theta = llt.matrixL().transpose();
  return theta * transport * theta.inverse();
}

double Geometry::minMetricEigenvalue() const {
  double best = std::numeric_limits<double>::infinity();
  for (int p = 0; p < points(); ++p) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(metricAt(p));
    best = std::min(best, es.eigenvalues().minCoeff());
  }
  return best;
}

double Geometry::maxInverseMetricNorm() const {
  double worst = 0.0;
  for (int p = 0; p < points(); ++p) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(metricAt(p));
    double lo = es.eigenvalues().minCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, 1.0 / lo);
  }
  return worst;
}

double Geometry::minActiveSpacing() const {
  return std::numeric_limits<double>::infinity();
}

double Geometry::curvatureTruncationEstimate() const { return 0.0; }

Tensor3 christoffels(const Geometry& geo, int p) {
  if (p < 0 || p >= geo.points())
    throw InvalidInput("sample point out of range");
  return geo.christoffels(p);
}

CurvatureField curvature(const Geometry& geo, int kmax, double symTol) {
  if (kmax < 0) throw InvalidInput("curvature needs kmax >= 0");
  if (kmax > 3)
    throw UnsupportedOrder("curvature derivatives are supported up to order 3");
  if (symTol <= 0.0) throw InvalidInput("curvature needs a positive tolerance");
  CurvatureField cf;
  cf.n = geo.n();
  cf.kmax = kmax;
  cf.r = geo.frameCurvature();
  double resid = geo.curvatureTruncationEstimate();
  for (const Tensor4& r : cf.r)
    resid = std::max(resid, curvatureSymmetryResidual(r));
  if (resid > 10.0 * symTol)
    throw AccuracyError("curvature residual " + std::to_string(resid) +
                        " exceeds 10x the tolerance " + std::to_string(symTol) +
                        "; the resolution is too coarse");
  if (kmax >= 1) cf.t = covariant_derivative(cf.r, geo);
  if (kmax >= 2) cf.t2 = covariant_derivative(cf.t, geo);
  if (kmax >= 3) cf.t3 = covariant_derivative(cf.t2, geo);
  return cf;
}

MatrixXd loop_holonomy(const Geometry& geo, const std::vector<VectorXd>& loop,
                       const VectorXd& base) {
  if (loop.empty()) throw InvalidInput("a loop needs at least two points");
  if (base.size() != loop.front().size() ||
      (base - loop.front()).cwiseAbs().maxCoeff() > 1e-12)
    throw InvalidInput("holonomy base must equal the first loop point");
  return geo.loopHolonomy(loop);
}

TwoForm holonomyLog(const MatrixXd& q) {
  if (q.rows() != q.cols() || q.rows() < 2)
    throw InvalidInput("holonomy log needs a square matrix");
  int nn = static_cast<int>(q.rows());
  if ((q.transpose() * q - MatrixXd::Identity(nn, nn)).cwiseAbs().maxCoeff() >
      0.2)
    throw InvalidInput("holonomy log needs a near-orthogonal matrix");
  MatrixXd l = q.log();
  MatrixXd anti = 0.5 * (l - l.transpose());
  return TwoForm::fromMatrix(anti);
}

std::vector<TwoForm> ambrose_singer_seeds(const WedgeBasis& w,
                                          const CurvatureField& field, int p,
                                          int kmax) {
  if (w.n() != field.n)
    throw InvalidInput("wedge basis dimension does not match the field");
  if (kmax < 0) throw InvalidInput("seed order must be non-negative");
  if (kmax > 3 || kmax > field.kmax)
    throw UnsupportedOrder("seed order exceeds the stored derivative levels");
  if (p < 0 || p >= static_cast<int>(field.r.size()))
    throw InvalidInput("sample point out of range");
  const int n = field.n;
  std::vector<TwoForm> seeds;
  auto addImages = [&](const Tensor4& r4) {
    MatrixXd mat = w.curvatureOperator(r4);
    for (int col = 0; col < mat.cols(); ++col)
      seeds.push_back(TwoForm::fromMatrix(w.fromCoords(mat.col(col))));
  };
  addImages(field.r[static_cast<std::size_t>(p)]);
  if (kmax >= 1)
    for (int m = 0; m < n; ++m)
      addImages(sliceFirst(field.t[static_cast<std::size_t>(p)], m));
  if (kmax >= 2)
    for (int m1 = 0; m1 < n; ++m1) {
      Tensor5 s1 = sliceFirst(field.t2[static_cast<std::size_t>(p)], m1);
      for (int m2 = 0; m2 < n; ++m2) addImages(sliceFirst(s1, m2));
    }
  if (kmax >= 3)
    for (int m1 = 0; m1 < n; ++m1) {
      Tensor6 s1 = sliceFirst(field.t3[static_cast<std::size_t>(p)], m1);
      for (int m2 = 0; m2 < n; ++m2) {
        Tensor5 s2 = sliceFirst(s1, m2);
        for (int m3 = 0; m3 < n; ++m3) addImages(sliceFirst(s2, m3));
      }
    }
  return seeds;
}

std::vector<TwoForm> ambrose_singer_seeds(const Geometry& geo, int p, int kmax) {
  if (kmax < 0) throw InvalidInput("seed order must be non-negative");
  if (kmax > 3)
    throw UnsupportedOrder("seed order is supported up to three derivatives");
  WedgeBasis w(geo.n());
  CurvatureField cf = curvature(geo, kmax);
  return ambrose_singer_seeds(w, cf, p, kmax);
}

std::vector<MatrixXd> frameRicci(const std::vector<Tensor4>& r) {
  std::vector<MatrixXd> out;
  out.reserve(r.size());
  for (const Tensor4& rp : r) {
    int n = rp.dim();
    MatrixXd ric = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        double v = 0.0;
        for (int j = 0; j < n; ++j) v += rp(i, j, j, k);
        ric(i, k) = v;
      }
    out.push_back(ric);
  }
  return out;
}

namespace {

constexpr double kPeriod = 6.283185307179586476925286766559;

std::unique_ptr<Geometry> fromJson(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("model config needs a 'kind' field");
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "flat-torus") {
    int n = j.value("n", 3);
    std::vector<int> counts = j.value("counts", std::vector<int>{});
    if (counts.empty())
      counts.assign(static_cast<std::size_t>(std::max(n, 0)),
                    j.value("resolution", 8));
    return makeFlatTorus(n, counts);
  }
  if (kind == "round-sphere")
    return makeRoundSphere(j.value("n", 2), j.value("radius", 1.0));
  if (kind == "berger-sphere") {
    std::vector<double> c =
        j.value("coefficients", std::vector<double>{1.0, 1.0, 4.0});
    if (c.size() != 3)
      throw ConfigError("berger-sphere needs three metric coefficients");
    return makeBergerSphere(c[0], c[1], c[2]);
  }
  if (kind == "warped-T3") {
    if (j.contains("f") != j.contains("h"))
      throw ConfigError("warped-T3 needs both f and h sample arrays");
    if (j.contains("f"))
      return makeWarpedT3(j.at("f").get<std::vector<double>>(),
                          j.at("h").get<std::vector<double>>());
    int res = j.value("resolution", 48);
    if (res < 5) throw ConfigError("warped-T3 resolution must be at least 5");
    std::string profile = j.value("profile", "generic");
    std::vector<double> f(static_cast<std::size_t>(res)),
        h(static_cast<std::size_t>(res));
    for (int i = 0; i < res; ++i) {
      double x = kPeriod * i / res;
      if (profile == "generic") {
        f[static_cast<std::size_t>(i)] = 1.0 + 0.25 * std::sin(x);
        h[static_cast<std::size_t>(i)] = 1.0 + 0.2 * std::cos(x);
      } else if (profile == "split") {
        f[static_cast<std::size_t>(i)] = 1.0;
        h[static_cast<std::size_t>(i)] = 1.0 + 0.3 * std::cos(x);
      } else {
        throw ConfigError("unknown warped-T3 profile '" + profile + "'");
      }
    }
    return makeWarpedT3(f, h);
  }
  if (kind == "conformal-T2") {
    if (j.contains("u"))
      return makeConformalT2(j.at("u").get<std::vector<double>>(),
                             j.at("nx").get<int>(), j.at("ny").get<int>());
    int res = j.value("resolution", 32);
    if (res < 5) throw ConfigError("conformal-T2 resolution must be at least 5");
    std::string profile = j.value("profile", "bump");
    if (profile != "bump")
      throw ConfigError("unknown conformal-T2 profile '" + profile + "'");
    std::vector<double> u(static_cast<std::size_t>(res) *
                          static_cast<std::size_t>(res));
    for (int i = 0; i < res; ++i)
      for (int k = 0; k < res; ++k)
        u[static_cast<std::size_t>(i) * static_cast<std::size_t>(res) +
          static_cast<std::size_t>(k)] =
            0.15 * std::sin(kPeriod * i / res) * std::sin(kPeriod * k / res);
    return makeConformalT2(u, res, res);
  }
  if (kind == "product") {
    if (!j.contains("first") || !j.contains("second"))
      throw ConfigError("product needs 'first' and 'second' factor configs");
    return makeProduct(fromJson(j.at("first")), fromJson(j.at("second")));
  }
  throw ConfigError("unknown model kind '" + kind + "'");
}

}  // namespace

std::unique_ptr<Geometry> makeModelFromConfig(const std::string& jsonText) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(jsonText);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config is not valid JSON: ") +
                      e.what());
  }
  try {
    return fromJson(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config is malformed: ") + e.what());
  }
}

}  // namespace holoflow
