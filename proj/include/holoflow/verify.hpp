#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "holoflow/flow.hpp"
#include "holoflow/holonomy.hpp"
#include "holoflow/model.hpp"
#include "holoflow/wedge.hpp"

namespace holoflow {

/// The six coupled evolution equations checked by residual_evolution:
/// A = ∇P̂, B = ∇∇P̂, the curvature tensor R, its derivative T = ∇R, and the
/// composites R̂ = R∘P̂ and T̂ = ∇R∘(Id×P̂).
enum class EvolutionEquation { A, B, R, T, Rhat, That };

std::string equationName(EvolutionEquation eq);
EvolutionEquation parseEquation(const std::string& name);

/// Composite fields of the projection/curvature system at one flow instant,
/// assembled in frame components at every sample point.
///
/// Component conventions (all arrays are plain frame components):
///   phat/pbar        P̂_{ijkl}, P̄_{ijkl} (plain projection components)
///   a[p](m,i,j,k,l)  A = ∇_m P̂_{ijkl}
///   b[p](m,n,...)    B = ∇_m ∇_n P̂_{ijkl}          (derivOrder ≥ 2 only)
///   rhat             (R∘P̂)_{ijkl} = P̂_{ijab} R_{ablk}, rbar the P̄ analogue
///   that[p](m,...)   (∇R∘(Id×P̂))_{mijkl} = −P̂_{ijab} T_{mabkl}, tbar likewise
/// Adjoint composites are the pair swap of these arrays:
/// (R̂*)_{ijkl} = R̂_{klij} and so on.  X bundles (R̂, T̂); Y bundles (A, B).
struct SystemState {
  double t = 0.0;
  int n = 0;
  int derivOrder = 1;
  std::shared_ptr<const Geometry> model;
  std::vector<Tensor4> phat, pbar;
  CurvatureField curv;  // r = R, t = ∇R, and t2 = ∇∇R when derivOrder ≥ 2
  std::vector<Tensor5> a;
  std::vector<Tensor6> b;  // empty when derivOrder < 2
  std::vector<Tensor4> rhat, rbar;
  std::vector<Tensor5> that, tbar;
  /// Sup-norms (max over points of the pointwise Frobenius norm) of the
  /// fields above, keyed "A", "B", "Rhat", "That", "Rbar", "Tbar", "Rm",
  /// "gradRm", plus the bundles "X" and "Y".
  std::map<std::string, double> norms;

  double supX() const;  // sup_p sqrt(|R̂|² + |T̂|²)
  double supY() const;  // sup_p sqrt(|A|² + |B|²)
};

/// Assemble the composite system fields from a flow state.  derivOrder 1
/// builds A, R̂, T̂ (and the bar composites); derivOrder 2 additionally
/// builds B and the second curvature derivative needed by the B/T̂ equations.
/// Throws UnsupportedOrder for derivOrder outside {1, 2}.
SystemState build_system_state(const FlowState& state, int derivOrder = 2);

/// Outcome of one identity or inequality check.
///
/// `residual` is the sup over sample points of the pointwise defect;
/// `constantC` is the residual relative to the larger of the two sides of the
/// identity (or, for inequality checks, the measured bounding constant).
/// `spatialOrder`/`temporalOrder` stay 0 until a coarse/fine pair is folded
/// in by fold_refinement, which uses exactly two refinement levels; orders are
/// clamped to ±9.99, and a pair whose residuals both sit below the noise floor
/// reports the clamp value (the check is exact to round-off at both levels).
/// `pass` holds exactly when the residual at the finest level is below
/// `tolerance`.
struct ResidualReport {
  std::string equation;
  double residual = 0.0;
  std::map<std::string, double> fieldNorms;
  double constantC = 0.0;
  double spatialOrder = 0.0;
  double temporalOrder = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  std::string toJson() const;
};

/// Fold a coarse-level report and its (h → h/2, dt → dt/4) refinement into
/// the fine report: spatialOrder = log2(residual ratio), temporalOrder =
/// log4(residual ratio), both clamped to ±9.99 and floored against round-off
/// noise.  The folded report keeps the fine level's residual/pass/tolerance.
ResidualReport fold_refinement(const ResidualReport& coarse,
                               const ResidualReport& fine,
                               double noiseFloor = 1e-13);

/// Residual of one evolution equation between two consecutive flow states in
/// the evolving gauge (`to.t > from.t`).
///
/// The left side is the forward time difference of the frame components minus
/// the Laplacian for the heat-type equations (R, T, R̂, T̂); Laplacian and
/// reaction sides are evaluated as the from/to average, so the residual is
/// O(dt²) + O(h²) on smooth scenarios.  Throws GaugeError when either state's
/// frame orthonormality residual exceeds 1e-6, InvalidInput for a
/// non-positive time step, and UnsupportedOrder when the B, R̂, or T̂
/// equation is requested with derivOrder < 2 data.
ResidualReport residual_evolution(EvolutionEquation eq, const FlowState& from,
                                  const FlowState& to, double tolerance,
                                  int derivOrder = 2);

/// Verify the four commutation relations between the fiber operations and
/// the covariant derivative, as tensor identities on intrinsic probe fields
/// (the evolved P̂ components, the curvature field, and the metric —
/// intrinsic because chart-sampled models only differentiate their own
/// fields faithfully):
///   "lambda-nabla"  Λ(a,b)(∇U) − ∇(Λ(a,b)U) = δ_{ac} ∇_b U − σ([E_ab, Γ̃_c]) U
///   "rho-nabla"     ρ(a,b)(∇U) − ∇(ρ(a,b)U) = δ_{ac} ∇_b U − δ_{bc} ∇_a U
///                                             − σ([E_ab − E_ba, Γ̃_c]) U
///   "dt-nabla"      [D_t, ∇_a] U = (∇_p R_{pacb}) Λ(b,c) U + R_{ac} ∇_c U
///   "heat-nabla"    [D_t−Δ, ∇_a] U = [D_t, ∇_a] U-terms − R_{am} ∇_m U
///                   + 2 R_{qajm} ∇_q U_{…m at s…} + (∇_q R)_{qajm} U_{…m at s…}
/// Here Λ(a,b) is the slot action (Λ(a,b)U)_{i…} = Σ_s δ_{a,i_s} U_{…b…},
/// E_ab the matrix unit realizing it on one slot, σ(M) the induced action of
/// a matrix on all slots, and Γ̃_c the frame-connection matrix.  The σ-term
/// appears because ∇ is realized on plain component fields (its connection
/// correction acts on the already-rotated field); for parallel probes it
/// vanishes and the relations reduce to the displayed slot algebra.  The two
/// spatial relations hold to round-off; the two time relations (left sides
/// formed from forward time differences of the two states) hold to
/// O(dt + h²), with the spatial part exact on homogeneous models.  Returns
/// one report per relation, maximized over the probes.
std::vector<ResidualReport> check_commutators(const FlowState& from,
                                              const FlowState& to,
                                              double tolerance);

/// Verify the grouped smoothing inequalities on a time series of system
/// states, ignoring the initial layer t < delay (pass delay < 0 for the
/// default 1% of the final time):
///   |(D_t − Δ)X|² ≤ C (|X|² + |Y|²)
///   |D_t Y|²      ≤ C (|X|² + |∇X|² + |Y|²)
/// pointwise over samples and points.  The report's constantC (= residual) is
/// the larger of the two measured constants; pass holds when it is finite and
/// below `constantCap`.  A vacuous series (both sides zero everywhere) passes
/// with C = 0.  Throws InvalidInput for a series with fewer than two states.
ResidualReport check_inequalities(const std::vector<SystemState>& series,
                                  double constantCap = 1e6,
                                  double delay = -1.0);

// ---- scenarios and experiment drivers ---------------------------------

/// A named, fully deterministic experiment setup: model, distinguished
/// subalgebra, and numerics.  `holonomySpec` is one of
///   "trivial"          H = 0 (P̄ = 0)
///   "full"             H = so(n) (P̂ = 0)
///   "ambrose-singer"   H generated by the curvature images ∇^l R(φ^A),
///                      l ≤ kmax, at every sample point of the t = 0 model
///   "axes:i-j[,k-l…]"  H spanned by the listed coordinate two-forms
///                      (must be bracket-closed).
struct ScenarioConfig {
  std::string name;
  std::string modelJson;
  std::string holonomySpec = "ambrose-singer";
  double dt = 1e-3;
  double tEnd = 0.05;
  FlowScheme scheme = FlowScheme::Rk4Ode;
  int outputEvery = 10;
  int kmax = 1;
  unsigned seed = 2026;
  double identityTol = 1e-6;   // residual_evolution / check_commutators gate
  double algebraTol = 1e-8;    // rank decisions in generated algebras
  double inclusionTol = 1e-6;  // holonomy inclusion gate (relative to |Rm|)
  double constantCap = 1e6;    // check_inequalities gate
};

/// Names of the built-in scenarios.
std::vector<std::string> list_scenarios();
/// Built-in scenario by name; ConfigError for an unknown name.
ScenarioConfig scenario_config(const std::string& name);
/// Scenario from a JSON object (same field names as ScenarioConfig; "model"
/// holds the model config object).  ConfigError on malformed input.
ScenarioConfig scenario_from_json(const std::string& jsonText);

/// Resolve the scenario's holonomy specification against a model instance.
Subalgebra scenario_algebra(const ScenarioConfig& cfg, const Geometry& geo);
/// Model + resolved subalgebra at t = 0.
FlowState make_scenario_state(const ScenarioConfig& cfg);

/// Run all six evolution-equation residuals plus the four commutator checks
/// on one step of the scenario flow.  Grid scenarios are run at two
/// refinement levels (resolution doubled, dt quartered) and the reports carry
/// the measured convergence orders; a residual within 2× of its tolerance
/// triggers the refinement rerun before the check is allowed to fail.
std::vector<ResidualReport> verify_identities(const ScenarioConfig& cfg);

/// One output instant of a holonomy-preservation run.
struct HolonomySample {
  double t = 0.0;
  double supRmPhat = 0.0;    // sup_M |R∘P̂|
  double supGradPhat = 0.0;  // sup_M |∇P̂|
  double supA = 0.0;         // = sup_M |A| (same field as ∇P̂)
  double supB = 0.0;         // sup_M |B|
  int dimHol = 0;            // dim of the algebra generated by curvature seeds
  std::vector<int> blocks;   // invariant-subspace dimensions, descending
  bool kaehler = false;
  double complexResidual = -1.0;
  double minMetricEig = 0.0;
  double k0 = 0.0, k1 = 0.0, k2 = 0.0;  // running sup of |R|, |∇R|, |∇∇R|
};

/// Full record of one scenario run: per-sample monitors, the classification
/// of the algebra generated at the terminal slice, and the inclusion check
/// that the terminal algebra contains the curvature image of every earlier
/// output time (sup leak of mat(R(t)) through the terminal P̂, relative to
/// the curvature scale).  A flow singularity or fiber-accuracy failure before
/// tEnd yields a partial report with `completed = false` and the failure
/// time; `pass` requires completion and inclusion within tolerance.
struct HolonomyExperimentReport {
  std::string scenario;
  std::vector<HolonomySample> samples;
  HolonomyReport terminal;
  double inclusionResidual = 0.0;
  double tolerance = 0.0;
  bool completed = false;
  double failureTime = -1.0;
  std::string failureReason;
  bool pass = false;

  std::string toJson() const;
  /// CSV columns: t, supRmPhat, supGradPhat, supA, supB, dimHol, minEigG,
  /// K0, K1, K2 (%.17g, deterministic).
  void writeCsv(std::ostream& out) const;
};

HolonomyExperimentReport holonomy_preservation_experiment(
    const ScenarioConfig& cfg);

/// Command-line driver (testable in-process).  Subcommands:
///   verify-identities --scenario S [--dt V] [--resolution N] [--out DIR]
///   run-flow          --scenario S [--tEnd V] [--dt V] [--seed N] [--out DIR]
///   holonomy-report   --scenario S [--kmax K] [--out DIR]
///   list-scenarios
/// Writes a JSON summary (and a CSV time series for run-flow) into --out.
/// Exit status: 0 all checks passed, 1 a check failed or the run hit a
/// numerical failure (partial report still written), 2 configuration error
/// (unknown scenario/subcommand, malformed arguments).
int cli_run(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace holoflow
