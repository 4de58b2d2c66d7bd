#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "holoflow/holonomy.hpp"
#include "holoflow/model.hpp"
#include "holoflow/wedge.hpp"

namespace holoflow {

/// Step size, scheme, horizon, and stability margin for a flow run.
/// `cflSafety` scales the diffusion stability bound
/// dt ≤ cflSafety·h²/(2n·max|g⁻¹|) enforced for the grid schemes.
struct FlowConfig {
  double dt = 1e-3;
  FlowScheme scheme = FlowScheme::Rk4Ode;
  double tEnd = 0.1;
  double cflSafety = 0.8;
};

/// Largest admissible explicit diffusion step on `geo` under the bound above;
/// +inf for single-sample models, which carry no spatial operator.
double diffusionStableDt(const Geometry& geo, double cflSafety);

/// ConfigError when dt ≤ 0, cflSafety ∉ (0,1), tEnd < 0, or a finite-difference
/// scheme on a grid model exceeds its diffusion stability bound.
void validateFlowConfig(const FlowConfig& config, const Geometry& geo);

/// One instant of the evolving system.
///
/// `frames` realizes the evolving orthonormal gauge: the Cholesky frame of the
/// current metric, which for the diagonal metric families bundled here is
/// exactly the frame transported so the metric's frame components stay δ.
/// Consequently a tensor transported by the fiberwise compensation ODE has
/// constant frame components, and `proj` / `basis` store frame components:
/// m×m operators on two-form coordinates, and basis columns v_A = coords of
/// φ^A (the first k spanning the distinguished subspace H).
///
/// States are immutable snapshots; every step builds a fresh state (so readers
/// of step k never observe step k+1 half-written), and per-point fiber work is
/// independent point to point.
struct FlowState {
  double t = 0.0;
  std::shared_ptr<const Geometry> model;
  std::vector<Eigen::MatrixXd> frames;
  std::vector<ProjectionPair> proj;
  std::vector<Eigen::MatrixXd> basis;

  int n() const { return model ? model->n() : 0; }
  int points() const { return model ? model->points() : 0; }
};

/// Initial state at t = 0: the projection pair of `h` at every point and the
/// basis of `h` completed (deterministically, against coordinate directions)
/// to an orthonormal basis of ∧².
FlowState make_flow_state(std::unique_ptr<Geometry> model, const WedgeBasis& w,
                          const Subalgebra& h);

/// max_p ‖frames(p)ᵀ·g(p)·frames(p) − Id‖_∞: drift of the evolving gauge.
double frameGaugeResidual(const FlowState& s);
/// max_p of the projection-pair residual (complementarity, idempotency, ...).
double projectionResidual(const FlowState& s);
/// max_p ‖basisᵀ·basis − Id‖_∞: two-form basis orthonormality drift.
double basisOrthonormalityResidual(const FlowState& s);

/// One step of ∂g/∂t = −2·Ric by config.scheme (coefficient RK4 for the
/// homogeneous families, CFL-guarded finite differences on grids).  Frames
/// refresh from the new metric; proj/basis are carried unchanged (they are
/// frame components).  Throws FlowSingularity, stamped with the failure time,
/// when the stepped metric loses positive definiteness.
FlowState step_metric(const FlowState& state, const FlowConfig& config);

/// Fiberwise transport of the projection pair between two metric snapshots:
/// one RK4 step of
///   ∂_t P_{abcd} = −R^q_a P_{qbcd} − R^q_b P_{aqcd} − R^q_c P_{abqd} − R^q_d P_{abcq}
/// in coordinate components, with stage Ricci data from `from`, `to`, and a
/// midpoint geometry obtained by a half metric step.  `to.t < from.t` runs the
/// (reversible) ODE backward between stored forward snapshots; the metric
/// itself is never integrated backward.  AccuracyError when the transported
/// pair violates the projection invariants beyond 1e-6.
std::vector<ProjectionPair> transport_projection(const FlowState& from,
                                                 const FlowState& to,
                                                 const FlowConfig& config);

/// The same transport for the adapted basis columns (the two-slot version of
/// the same ODE, which preserves the evolving-metric inner products of the
/// φ^A).  PreconditionViolated when the incoming basis is not orthonormal
/// (two-form curvature coefficients could not be extracted against it).
std::vector<Eigen::MatrixXd> transport_adapted_basis(const FlowState& from,
                                                     const FlowState& to,
                                                     const FlowConfig& config);

/// step_metric plus transport_projection along the step just taken.
FlowState evolve_projection_ode(const FlowState& state, const FlowConfig& config);
/// step_metric plus transport_adapted_basis along the step just taken.
FlowState evolve_adapted_basis(const FlowState& state, const FlowConfig& config);
/// step_metric plus both fiber transports on the shared metric trajectory.
FlowState advance_flow(const FlowState& state, const FlowConfig& config);

/// March advance_flow from state.t to config.tEnd (final step shortened to
/// land exactly).  `onSample` (optional) fires on the initial state, after
/// every `outputEvery`-th step, and on the final state.
FlowState run_flow(FlowState state, const FlowConfig& config,
                   int outputEvery = 1,
                   const std::function<void(const FlowState&)>& onSample = {});

/// Coefficients M of the expansion R_{abcd} = −M_{AB}·φ^A_{ab}·φ^B_{cd} in an
/// evolving orthonormal two-form basis V (columns = basis coordinates):
/// M = Vᵀ·mat(Rm)·V.  PreconditionViolated when V is not orthonormal.
Eigen::MatrixXd twoFormCurvatureCoefficients(const Eigen::MatrixXd& rmOp,
                                             const Eigen::MatrixXd& basis);

/// One output sample of the parabolic extension run.
struct ParabolicSample {
  double t = 0.0;
  std::vector<ProjectionPair> proj;  // frame components per point
  double supGradPhat = 0.0;          // sup over the grid of |∇P̂|
  double supProjectionDefect = 0.0;  // max over the grid pair residual
  double bernstein = 0.0;            // max over the grid of (L+|P̂|²)·|∇P̂|²
};
struct ParabolicSeries {
  double bernsteinL = 0.0;  // the constant L in the monitored quantity
  std::vector<ParabolicSample> samples;
};

/// Heat flow of P̂ alongside the metric flow on a grid model, from state.t to
/// config.tEnd with the explicit scheme (the CFL bound covers the metric and
/// heat updates alike).  The coordinate-component equation carries four Ricci
/// reaction terms; expressed in the evolving gauge those are exactly the gauge
/// compensation, leaving (D_t − Δ)P̂ = 0, which is what the update integrates
/// on the stored frame components.  Requires |∇P̂(0)| ≤ parallelTol
/// (PreconditionViolated otherwise) and a grid model (InvalidInput otherwise);
/// ConfigError for a non-explicit scheme or a CFL violation.  P̄ is maintained
/// as Id − P̂.  Samples are recorded at t = 0, every `outputEvery`-th step,
/// and at the end.
ParabolicSeries parabolic_extend_projection(const FlowState& state,
                                            const FlowConfig& config,
                                            int outputEvery = 1,
                                            double parallelTol = 1e-6);

/// Deterministic checkpoint: `pathPrefix`.json (model kind, config, t, seed)
/// and `pathPrefix`.csv (per-point metric, P̂, and basis components, %.17g).
void write_checkpoint(const FlowState& state, const FlowConfig& config,
                      const std::string& pathPrefix, unsigned seed = 0);

}  // namespace holoflow
