#pragma once

#include <optional>
#include <string>
#include <vector>

#include "holoflow/wedge.hpp"

namespace holoflow {

/// Bracket-closed subspace H ⊂ ∧²R^n with an orthonormal basis of coordinate
/// vectors (in a WedgeBasis). `depth` records how many bracket-closure
/// iterations generate_algebra needed before the span stopped growing.
struct Subalgebra {
  int n = 0;
  std::vector<Eigen::VectorXd> basis;
  int depth = 0;
  int dim() const { return static_cast<int>(basis.size()); }
};

/// True when span(basis) is closed under the bracket to the given tolerance.
bool is_bracket_closed(const WedgeBasis& w,
                       const std::vector<Eigen::VectorXd>& basis, double tol);

/// Smallest bracket-closed subspace containing the seeds: alternately adjoin
/// pairwise brackets and re-orthonormalize (SVD rank decisions at
/// tol·σ_max) until the dimension stabilizes.
Subalgebra generate_algebra(const WedgeBasis& w, const std::vector<TwoForm>& seeds,
                            double tol);
Subalgebra generate_algebra(const WedgeBasis& w,
                            const std::vector<Eigen::VectorXd>& seedCoords,
                            double tol);

/// P̄ = Σ_A φ^A ⊗ φ^A over the H basis, P̂ = Id − P̄ (flat representation).
ProjectionPair projection_pair(const WedgeBasis& w, const Subalgebra& h);

/// Residual of the slot-action compatibility P̄_{abcd} (Λ^d_c P̂)_{ijkl} = 0
/// (both projections taken in 4-index components).
double projectionLambdaResidual(const WedgeBasis& w, const ProjectionPair& p);

/// Decomposition of R^n into invariant subspaces of the matrix representation
/// of H: eigenspaces of a generic symmetric element of the commutant of H.
struct InvariantSplit {
  std::vector<int> dims;                 // descending
  std::vector<Eigen::MatrixXd> blocks;   // n×d orthonormal bases, same order
};
InvariantSplit invariant_subspaces(const WedgeBasis& w, const Subalgebra& h,
                                   double tol);

/// Search the commutant of H for an orthogonal complex structure (antisymmetric
/// J with J² = −Id), by polar-normalizing a generic antisymmetric commutant
/// element. Returns nothing when the commutant has no antisymmetric part or
/// every candidate stays singular.
std::optional<Eigen::MatrixXd> detect_complex_structure(const WedgeBasis& w,
                                                        const Subalgebra& h,
                                                        double tol);

/// Holonomy-group labels whose standard dimension matches dim_hol for the
/// given n (advisory dimension lookup only).
std::vector<std::string> berger_candidates(int dimHol, int n);

/// Classification summary for one generated algebra; serializes to JSON.
struct HolonomyReport {
  int dim = 0;
  int depth = 0;
  std::vector<std::string> bergerCandidates;
  std::vector<int> invariantSubspaces;
  bool kaehler = false;
  double complexResidual = -1.0;  // ‖J²+Id‖_∞ when a J was found
  std::optional<Eigen::MatrixXd> complexStructure;
  std::string toJson() const;
};
HolonomyReport classify_algebra(const WedgeBasis& w, const Subalgebra& h, double tol);

}  // namespace holoflow
