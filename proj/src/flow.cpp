#include "holoflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace holoflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// out(..., i at slot, ...) = Σ_j A(j, i) · T(..., j at slot, ...).  With
// A = the frame matrix this lowers a coordinate tensor into the frame; with
// A = the inverse frame it raises frame components back to the chart; with
// A = an operator it applies that operator's transpose to one slot.
Tensor4 contractSlot(const Tensor4& t, const MatrixXd& a, int slot) {
  const int n = t.dim();
  Tensor4 out(n);
  int idx[4];
  for (idx[0] = 0; idx[0] < n; ++idx[0])
    for (idx[1] = 0; idx[1] < n; ++idx[1])
      for (idx[2] = 0; idx[2] < n; ++idx[2])
        for (idx[3] = 0; idx[3] < n; ++idx[3]) {
          double v = 0.0;
          int jdx[4] = {idx[0], idx[1], idx[2], idx[3]};
          for (int j = 0; j < n; ++j) {
            jdx[slot] = j;
            v += a(j, idx[slot]) * t(jdx[0], jdx[1], jdx[2], jdx[3]);
          }
          out(idx[0], idx[1], idx[2], idx[3]) = v;
        }
  return out;
}

Tensor4 chartFromFrame(const Tensor4& tf, const MatrixXd& frameInverse) {
  Tensor4 out = tf;
  for (int s = 0; s < 4; ++s) out = contractSlot(out, frameInverse, s);
  return out;
}

Tensor4 frameFromChart(const Tensor4& tc, const MatrixXd& frame) {
  Tensor4 out = tc;
  for (int s = 0; s < 4; ++s) out = contractSlot(out, frame, s);
  return out;
}

// Compensation generator: ∂_t P = −Σ_slots Ric♯ acting on that slot, the
// coordinate-component law that keeps frame components constant in the
// evolving gauge.  `a` is the mixed Ricci operator A^q_μ = g^{qλ}Ric_{λμ}.
Tensor4 compensationRate4(const Tensor4& p, const MatrixXd& a) {
  Tensor4 out(p.dim());
  for (int s = 0; s < 4; ++s) out -= contractSlot(p, a, s);
  return out;
}

MatrixXd compensationRate2(const MatrixXd& omega, const MatrixXd& a) {
  return -(a.transpose() * omega + omega * a);
}

// Mixed Ricci operator per sample point, assembled in the chart basis from
// the frame Ricci tensor: A = E·ric·E⁻¹.
std::vector<MatrixXd> mixedRicciField(const Geometry& geo) {
  std::vector<MatrixXd> ric = frameRicci(geo.frameCurvature());
  std::vector<MatrixXd> out(ric.size());
  for (std::size_t p = 0; p < ric.size(); ++p) {
    MatrixXd e = geo.frameAt(static_cast<int>(p));
    out[p] = e * ric[p] * e.inverse();
  }
  return out;
}

void requireCompatible(const FlowState& a, const FlowState& b) {
  if (!a.model || !b.model)
    throw InvalidInput("transport needs two populated flow states");
  if (a.model->points() != b.model->points() || a.model->n() != b.model->n())
    throw InvalidInput("transport endpoints disagree in dimension or sampling");
  if (static_cast<int>(a.frames.size()) != a.points() ||
      static_cast<int>(b.frames.size()) != b.points())
    throw InvalidInput("transport endpoints are missing frame data");
}

// Classical RK4 stage data for one fiber-transport step between two metric
// snapshots: the mixed Ricci field at both endpoints and at a midpoint
// geometry reached by a half metric step from the earlier snapshot.  The
// signed step h = to.t − from.t makes the same stages serve both directions;
// the metric itself is only ever integrated forward.
struct TransportStages {
  double h = 0.0;
  std::vector<MatrixXd> a0, am, a1;
};

TransportStages makeStages(const FlowState& from, const FlowState& to,
                           const FlowConfig& config) {
  TransportStages st;
  st.h = to.t - from.t;
  if (config.scheme == FlowScheme::Rk4Ode) {
    // The ODE scheme tracks the continuous flow to high order, so the stage
    // operators come from the Ricci curvature of the endpoint geometries plus
    // a half-step midpoint geometry.
    const FlowState& earlier = (st.h >= 0.0) ? from : to;
    const double half = 0.5 * std::abs(st.h);
    std::unique_ptr<Geometry> mid = earlier.model->clone();
    try {
      mid->flowStep(half, config.scheme, config.cflSafety);
    } catch (const InvalidMetric& e) {
      throw FlowSingularity(
          std::string("metric failed inside a transport half step: ") + e.what(),
          earlier.t + half);
    }
    if (mid->minMetricEigenvalue() <= 0.0)
      throw FlowSingularity("metric lost positive definiteness inside a transport half step",
                            earlier.t + half);
    st.a0 = mixedRicciField(*from.model);
    st.am = mixedRicciField(*mid);
    st.a1 = mixedRicciField(*to.model);
    return st;
  }
  // The difference schemes move the metric along the chord between the two
  // stored states, so the matching gauge generator is −½ g(τ)⁻¹ ∂g with ∂g
  // constant along the chord. Re-evaluating Ricci at the stage times would
  // tie the fiber accuracy to the scheme's own first order; the chord keeps
  // it at the integrator's order against the metric the scheme actually
  // produced.
  const int np = from.points();
  const std::size_t unp = static_cast<std::size_t>(np);
  st.a0.resize(unp);
  st.am.resize(unp);
  st.a1.resize(unp);
  for (int p = 0; p < np; ++p) {
    const std::size_t q = static_cast<std::size_t>(p);
    MatrixXd gFrom = from.model->metricAt(p);
    MatrixXd gTo = to.model->metricAt(p);
    MatrixXd rate = (gTo - gFrom) / st.h;
    MatrixXd gMid = 0.5 * (gFrom + gTo);
    st.a0[q] = -0.5 * gFrom.llt().solve(rate);
    st.am[q] = -0.5 * gMid.llt().solve(rate);
    st.a1[q] = -0.5 * gTo.llt().solve(rate);
  }
  return st;
}

// One RK4 step of the compensation ODE in chart components: frame data at
// `from` goes down to the chart, integrates against the stage operators, and
// comes back up through the frame at `to`.
MatrixXd transportEndo(const WedgeBasis& w, const MatrixXd& mat,
                       const TransportStages& st, int p,
                       const MatrixXd& frameFrom, const MatrixXd& frameTo) {
  const double h = st.h;
  Tensor4 y = chartFromFrame(w.endoToComponents(mat), frameFrom.inverse());
  Tensor4 k1 = compensationRate4(y, st.a0[static_cast<std::size_t>(p)]);
  Tensor4 k2 = compensationRate4(y + (h / 2) * k1, st.am[static_cast<std::size_t>(p)]);
  Tensor4 k3 = compensationRate4(y + (h / 2) * k2, st.am[static_cast<std::size_t>(p)]);
  Tensor4 k4 = compensationRate4(y + h * k3, st.a1[static_cast<std::size_t>(p)]);
  y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return w.endoFromComponents(frameFromChart(y, frameTo));
}

VectorXd transportForm(const WedgeBasis& w, const VectorXd& coords,
                       const TransportStages& st, int p,
                       const MatrixXd& frameFrom, const MatrixXd& frameTo) {
  const double h = st.h;
  MatrixXd theta = frameFrom.inverse();
  MatrixXd y = theta.transpose() * w.fromCoords(coords) * theta;
  MatrixXd k1 = compensationRate2(y, st.a0[static_cast<std::size_t>(p)]);
  MatrixXd k2 = compensationRate2(y + (h / 2) * k1, st.am[static_cast<std::size_t>(p)]);
  MatrixXd k3 = compensationRate2(y + (h / 2) * k2, st.am[static_cast<std::size_t>(p)]);
  MatrixXd k4 = compensationRate2(y + h * k3, st.a1[static_cast<std::size_t>(p)]);
  y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return w.coords(frameTo.transpose() * y * frameTo);
}

std::vector<ProjectionPair> transportPairs(const WedgeBasis& w,
                                           const FlowState& from,
                                           const FlowState& to,
                                           const TransportStages& st) {
  std::vector<ProjectionPair> out(from.proj.size());
  double before = 0.0;
  for (const ProjectionPair& pr : from.proj)
    before = std::max(before, projectionPairResidual(pr));
  double worst = 0.0;
  for (int p = 0; p < from.points(); ++p) {
    const std::size_t q = static_cast<std::size_t>(p);
    out[q].Pbar = transportEndo(w, from.proj[q].Pbar, st, p, from.frames[q],
                                to.frames[q]);
    out[q].Phat = transportEndo(w, from.proj[q].Phat, st, p, from.frames[q],
                                to.frames[q]);
    worst = std::max(worst, projectionPairResidual(out[q]));
  }
  if (worst - before > 1e-6) {
    std::ostringstream msg;
    msg << "transport grew the projection-invariant residual to " << worst
        << " in one step; reduce the step size";
    throw AccuracyError(msg.str());
  }
  return out;
}

std::vector<MatrixXd> transportBases(const WedgeBasis& w, const FlowState& from,
                                     const FlowState& to,
                                     const TransportStages& st) {
  std::vector<MatrixXd> out(from.basis.size());
  for (int p = 0; p < from.points(); ++p) {
    const std::size_t q = static_cast<std::size_t>(p);
    MatrixXd v(w.m(), w.m());
    for (int col = 0; col < w.m(); ++col)
      v.col(col) = transportForm(w, from.basis[q].col(col), st, p,
                                 from.frames[q], to.frames[q]);
    out[q] = std::move(v);
  }
  return out;
}

bool degenerateStep(const FlowState& from, const FlowState& to) {
  return std::abs(to.t - from.t) <
         1e-15 * std::max(1.0, std::max(std::abs(from.t), std::abs(to.t)));
}

void requireOrthonormalBasis(const FlowState& s) {
  double res = basisOrthonormalityResidual(s);
  if (res > 1e-6) {
    std::ostringstream msg;
    msg << "adapted basis lost orthonormality (residual " << res
        << "); curvature coefficients cannot be extracted against it";
    throw PreconditionViolated(msg.str());
  }
}

}  // namespace

double diffusionStableDt(const Geometry& geo, double cflSafety) {
  const double h = geo.minActiveSpacing();
  if (!std::isfinite(h)) return std::numeric_limits<double>::infinity();
  return cflSafety * h * h / (2.0 * geo.n() * geo.maxInverseMetricNorm());
}

void validateFlowConfig(const FlowConfig& config, const Geometry& geo) {
  if (!(config.dt > 0.0)) throw ConfigError("flow config needs dt > 0");
  if (!(config.cflSafety > 0.0 && config.cflSafety < 1.0))
    throw ConfigError("cflSafety must lie strictly between 0 and 1");
  if (config.tEnd < 0.0) throw ConfigError("flow config needs tEnd >= 0");
  if (config.scheme == FlowScheme::ExplicitFd) {
    const double bound = diffusionStableDt(geo, config.cflSafety);
    if (config.dt > bound) {
      std::ostringstream msg;
      msg << "time step " << config.dt
          << " exceeds the diffusion stability bound " << bound;
      throw ConfigError(msg.str());
    }
  }
}

FlowState make_flow_state(std::unique_ptr<Geometry> model, const WedgeBasis& w,
                          const Subalgebra& h) {
  if (!model) throw InvalidInput("flow state needs a model");
  if (w.n() != model->n())
    throw InvalidInput("two-form basis dimension does not match the model");
  if (h.n != w.n())
    throw InvalidInput("subalgebra dimension does not match the model");
  const int m = w.m();
  const int k = h.dim();
  if (k > m) throw InvalidInput("subalgebra basis is larger than the fiber");

  ProjectionPair pair = projection_pair(w, h);

  // Complete the subalgebra basis to an orthonormal basis of the fiber by
  // Gram–Schmidt against the coordinate directions, in their fixed order, so
  // the completion is deterministic.
  MatrixXd v = MatrixXd::Zero(m, m);
  for (int i = 0; i < k; ++i) v.col(i) = h.basis[static_cast<std::size_t>(i)];
  if (k > 0) {
    MatrixXd gram = v.leftCols(k).transpose() * v.leftCols(k);
    if ((gram - MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-8)
      throw InvalidInput("subalgebra basis must be orthonormal");
  }
  int col = k;
  for (int a = 0; a < m && col < m; ++a) {
    VectorXd r = VectorXd::Zero(m);
    r(a) = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < col; ++j) r -= v.col(j).dot(r) * v.col(j);
    if (r.norm() > 1e-6) v.col(col++) = r / r.norm();
  }
  if (col != m) throw InvalidInput("could not complete the two-form basis");

  FlowState s;
  s.t = 0.0;
  s.model = std::shared_ptr<const Geometry>(std::move(model));
  const int np = s.points();
  s.frames.resize(static_cast<std::size_t>(np));
  for (int p = 0; p < np; ++p)
    s.frames[static_cast<std::size_t>(p)] = s.model->frameAt(p);
  s.proj.assign(static_cast<std::size_t>(np), pair);
  s.basis.assign(static_cast<std::size_t>(np), v);
  return s;
}

double frameGaugeResidual(const FlowState& s) {
  if (!s.model) throw InvalidInput("flow state has no model");
  const MatrixXd id = MatrixXd::Identity(s.n(), s.n());
  double worst = 0.0;
  for (int p = 0; p < s.points(); ++p) {
    const MatrixXd& e = s.frames[static_cast<std::size_t>(p)];
    worst = std::max(worst,
                     (e.transpose() * s.model->metricAt(p) * e - id)
                         .cwiseAbs()
                         .maxCoeff());
  }
  return worst;
}

double projectionResidual(const FlowState& s) {
  double worst = 0.0;
  for (const ProjectionPair& p : s.proj)
    worst = std::max(worst, projectionPairResidual(p));
  return worst;
}

double basisOrthonormalityResidual(const FlowState& s) {
  double worst = 0.0;
  for (const MatrixXd& v : s.basis) {
    const MatrixXd id = MatrixXd::Identity(v.cols(), v.cols());
    worst = std::max(worst, (v.transpose() * v - id).cwiseAbs().maxCoeff());
  }
  return worst;
}

FlowState step_metric(const FlowState& state, const FlowConfig& config) {
  if (!state.model) throw InvalidInput("flow state has no model");
  validateFlowConfig(config, *state.model);
  std::unique_ptr<Geometry> next = state.model->clone();
  const double t1 = state.t + config.dt;
  try {
    next->flowStep(config.dt, config.scheme, config.cflSafety);
  } catch (const InvalidMetric& e) {
    throw FlowSingularity(std::string("metric flow step failed: ") + e.what(),
                          t1);
  }
  if (next->minMetricEigenvalue() <= 0.0)
    throw FlowSingularity("metric lost positive definiteness", t1);

  FlowState out;
  out.t = t1;
  out.model = std::shared_ptr<const Geometry>(std::move(next));
  const int np = out.points();
  out.frames.resize(static_cast<std::size_t>(np));
  for (int p = 0; p < np; ++p)
    out.frames[static_cast<std::size_t>(p)] = out.model->frameAt(p);
  out.proj = state.proj;
  out.basis = state.basis;
  return out;
}

std::vector<ProjectionPair> transport_projection(const FlowState& from,
                                                 const FlowState& to,
                                                 const FlowConfig& config) {
  requireCompatible(from, to);
  if (static_cast<int>(from.proj.size()) != from.points())
    throw InvalidInput("source state carries no projection data");
  if (degenerateStep(from, to)) return from.proj;
  WedgeBasis w(from.n());
  return transportPairs(w, from, to, makeStages(from, to, config));
}

std::vector<MatrixXd> transport_adapted_basis(const FlowState& from,
                                              const FlowState& to,
                                              const FlowConfig& config) {
  requireCompatible(from, to);
  if (static_cast<int>(from.basis.size()) != from.points())
    throw InvalidInput("source state carries no basis data");
  requireOrthonormalBasis(from);
  if (degenerateStep(from, to)) return from.basis;
  WedgeBasis w(from.n());
  return transportBases(w, from, to, makeStages(from, to, config));
}

FlowState evolve_projection_ode(const FlowState& state,
                                const FlowConfig& config) {
  FlowState next = step_metric(state, config);
  next.proj = transport_projection(state, next, config);
  return next;
}

FlowState evolve_adapted_basis(const FlowState& state,
                               const FlowConfig& config) {
  FlowState next = step_metric(state, config);
  next.basis = transport_adapted_basis(state, next, config);
  return next;
}

FlowState advance_flow(const FlowState& state, const FlowConfig& config) {
  FlowState next = step_metric(state, config);
  WedgeBasis w(state.n());
  requireOrthonormalBasis(state);
  TransportStages st = makeStages(state, next, config);
  next.proj = transportPairs(w, state, next, st);
  next.basis = transportBases(w, state, next, st);
  return next;
}

FlowState run_flow(FlowState state, const FlowConfig& config, int outputEvery,
                   const std::function<void(const FlowState&)>& onSample) {
  if (!state.model) throw InvalidInput("flow state has no model");
  if (outputEvery < 1) throw InvalidInput("outputEvery must be positive");
  validateFlowConfig(config, *state.model);
  const double eps = 1e-12 * std::max(1.0, std::abs(config.tEnd));
  if (onSample) onSample(state);
  int step = 0;
  while (state.t < config.tEnd - eps) {
    FlowConfig stepConfig = config;
    stepConfig.dt = std::min(config.dt, config.tEnd - state.t);
    state = advance_flow(state, stepConfig);
    ++step;
    const bool last = state.t >= config.tEnd - eps;
    if (onSample && (step % outputEvery == 0 || last)) onSample(state);
  }
  return state;
}

MatrixXd twoFormCurvatureCoefficients(const MatrixXd& rmOp,
                                      const MatrixXd& basis) {
  if (rmOp.rows() != basis.rows() || rmOp.cols() != basis.rows() ||
      basis.rows() != basis.cols())
    throw InvalidInput("curvature operator and basis sizes disagree");
  const MatrixXd id = MatrixXd::Identity(basis.cols(), basis.cols());
  if ((basis.transpose() * basis - id).cwiseAbs().maxCoeff() > 1e-6)
    throw PreconditionViolated(
        "curvature coefficients need an orthonormal two-form basis");
  return basis.transpose() * rmOp * basis;
}

ParabolicSeries parabolic_extend_projection(const FlowState& state,
                                            const FlowConfig& config,
                                            int outputEvery,
                                            double parallelTol) {
  if (!state.model) throw InvalidInput("flow state has no model");
  if (!std::isfinite(state.model->minActiveSpacing()))
    throw InvalidInput(
        "the heat extension needs a grid model with a spatial operator");
  if (config.scheme != FlowScheme::ExplicitFd)
    throw ConfigError("the heat extension integrates with the explicit scheme; got '" +
                      flowSchemeName(config.scheme) + "'");
  validateFlowConfig(config, *state.model);
  if (outputEvery < 1) throw InvalidInput("outputEvery must be positive");
  const int np = state.points();
  if (static_cast<int>(state.proj.size()) != np)
    throw InvalidInput("flow state carries no projection data");

  WedgeBasis w(state.n());
  const int m = w.m();
  std::unique_ptr<Geometry> geo = state.model->clone();
  std::vector<Tensor4> phat(static_cast<std::size_t>(np));
  for (int p = 0; p < np; ++p)
    phat[static_cast<std::size_t>(p)] =
        w.endoToComponents(state.proj[static_cast<std::size_t>(p)].Phat);

  {
    std::vector<Tensor5> grad = covariant_derivative(phat, *geo);
    double sup = 0.0;
    for (const Tensor5& g : grad) sup = std::max(sup, g.maxAbs());
    if (sup > parallelTol) {
      std::ostringstream msg;
      msg << "initial projection is not covariantly constant (|grad| = " << sup
          << " exceeds " << parallelTol << ")";
      throw PreconditionViolated(msg.str());
    }
  }

  // Monitored quantity (L + |P̂|²)·|∇P̂|² with L fixed from the initial data,
  // large against |P̂(0)|² so the reaction terms cannot flip its sign.
  double bernL = 1.0;
  for (const Tensor4& t : phat) bernL = std::max(bernL, 1.0 + 8.0 * t.normSq());

  ParabolicSeries series;
  series.bernsteinL = bernL;
  const MatrixXd id = MatrixXd::Identity(m, m);

  auto record = [&](double tNow) {
    std::vector<Tensor5> grad = covariant_derivative(phat, *geo);
    ParabolicSample smp;
    smp.t = tNow;
    smp.proj.resize(static_cast<std::size_t>(np));
    for (int p = 0; p < np; ++p) {
      const std::size_t q = static_cast<std::size_t>(p);
      smp.supGradPhat = std::max(smp.supGradPhat, grad[q].maxAbs());
      MatrixXd mat = w.endoFromComponents(phat[q]);
      ProjectionPair pr{id - mat, mat};
      smp.supProjectionDefect =
          std::max(smp.supProjectionDefect, projectionPairResidual(pr));
      smp.bernstein = std::max(smp.bernstein,
                               (bernL + phat[q].normSq()) * grad[q].normSq());
      smp.proj[q] = std::move(pr);
    }
    series.samples.push_back(std::move(smp));
  };

  double t = state.t;
  record(t);
  const double eps = 1e-12 * std::max(1.0, std::abs(config.tEnd));
  const int n = state.n();
  int step = 0;
  while (t < config.tEnd - eps) {
    const double dt = std::min(config.dt, config.tEnd - t);

    // Forward Euler on the frame components: P̂ ← P̂ + dt·ΔP̂ at the current
    // metric; the compensation terms of the chart-component equation are
    // exactly absorbed by the evolving gauge.
    std::vector<Tensor5> grad = covariant_derivative(phat, *geo);
    std::vector<Tensor6> hess = covariant_derivative(grad, *geo);
    for (int p = 0; p < np; ++p) {
      const std::size_t q = static_cast<std::size_t>(p);
      Tensor4 lap(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              double v = 0.0;
              for (int d = 0; d < n; ++d) v += hess[q](d, d, i, j, k, l);
              lap(i, j, k, l) = v;
            }
      phat[q] += dt * lap;
    }

    try {
      geo->flowStep(dt, config.scheme, config.cflSafety);
    } catch (const InvalidMetric& e) {
      throw FlowSingularity(std::string("metric flow step failed: ") + e.what(),
                            t + dt);
    }
    if (geo->minMetricEigenvalue() <= 0.0)
      throw FlowSingularity("metric lost positive definiteness", t + dt);

    t += dt;
    ++step;
    const bool last = t >= config.tEnd - eps;
    if (step % outputEvery == 0 || last) record(t);
  }
  return series;
}

void write_checkpoint(const FlowState& state, const FlowConfig& config,
                      const std::string& pathPrefix, unsigned seed) {
  if (!state.model) throw InvalidInput("flow state has no model");

  nlohmann::json header;
  header["kind"] = state.model->kind();
  header["n"] = state.n();
  header["points"] = state.points();
  header["t"] = state.t;
  header["seed"] = seed;
  header["config"] = {{"dt", config.dt},
                      {"scheme", flowSchemeName(config.scheme)},
                      {"tEnd", config.tEnd},
                      {"cflSafety", config.cflSafety}};

  std::ofstream jf(pathPrefix + ".json", std::ios::binary | std::ios::trunc);
  if (!jf) throw InvalidInput("cannot open checkpoint header " + pathPrefix + ".json");
  jf << header.dump(2) << '\n';

  std::ofstream cf(pathPrefix + ".csv", std::ios::binary | std::ios::trunc);
  if (!cf) throw InvalidInput("cannot open checkpoint data " + pathPrefix + ".csv");
  cf << "point,field,row,col,value\n";
  char buf[40];
  auto emit = [&](int p, const char* field, const MatrixXd& mat) {
    for (int r = 0; r < mat.rows(); ++r)
      for (int c = 0; c < mat.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", mat(r, c));
        cf << p << ',' << field << ',' << r << ',' << c << ',' << buf << '\n';
      }
  };
  for (int p = 0; p < state.points(); ++p) {
    const std::size_t q = static_cast<std::size_t>(p);
    emit(p, "metric", state.model->metricAt(p));
    if (q < state.proj.size()) emit(p, "phat", state.proj[q].Phat);
    if (q < state.basis.size()) emit(p, "basis", state.basis[q]);
  }
}

}  // namespace holoflow
