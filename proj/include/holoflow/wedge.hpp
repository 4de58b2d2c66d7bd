#pragma once

#include <Eigen/Dense>
#include <random>
#include <utility>
#include <vector>

#include "holoflow/errors.hpp"
#include "holoflow/tensor.hpp"

namespace holoflow {

/// Antisymmetric bilinear form on R^n; only the strict upper triangle is
/// stored, so omega(i,j) == -omega(j,i) holds exactly by construction.
class TwoForm {
 public:
  TwoForm() = default;
  explicit TwoForm(int n) : n_(n), u_(static_cast<std::size_t>(n) * (n - 1) / 2, 0.0) {}

  /// The wedge basis form e_i ∧ e_j, normalized as ½(e_i⊗e_j − e_j⊗e_i).
  static TwoForm wedge(int n, int i, int j);
  /// Antisymmetric part of an arbitrary square matrix.
  static TwoForm fromMatrix(const Eigen::MatrixXd& a);

  int dim() const { return n_; }
  double operator()(int i, int j) const;
  void set(int i, int j, double v);  // requires i != j
  Eigen::MatrixXd matrix() const;

 private:
  int slot(int i, int j) const;  // upper-triangle lexicographic slot for i<j
  int n_ = 0;
  std::vector<double> u_;
};

/// Full contraction Σ_{ij} a_{ij} b_{ij} of two n×n arrays (the inner product
/// under which the √2-rescaled wedge basis below is orthonormal).
double innerForms(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Lie bracket [ω,η]_{ij} = g^{kl}(ω_{ik}η_{lj} − ω_{jk}η_{li}); with g = Id
/// this is the matrix commutator ωη − ηω of the component matrices.
Eigen::MatrixXd bracketForms(const Eigen::MatrixXd& w, const Eigen::MatrixXd& e);
TwoForm bracket(const TwoForm& w, const TwoForm& e, const Eigen::MatrixXd& g);

/// Orthonormal basis bookkeeping for ∧²R^n ≅ so(n): φ^A = √2·e_i∧e_j over
/// lexicographic pairs i<j (m = n(n−1)/2 of them), plus the structure
/// constants C^{PQ}_R = ⟨[φ^P,φ^Q], φ^R⟩ of the bracket in that basis.
///
/// Endomorphisms of ∧² are handled in two interchangeable representations:
///  - flat m×m matrix E with E_{BA} = ⟨E(φ^A), φ^B⟩, so composition is the
///    matrix product;
///  - 4-index component array. Two component conventions appear:
///    plain      E(ω)_{cd} = +E_{abcd} ω_{ab}   (projections P̄, P̂, ...)
///    curvature  E(ω)_{cd} = −R_{abcd} ω_{ab}   (R, T slices, ...)
class WedgeBasis {
 public:
  explicit WedgeBasis(int n);

  int n() const { return n_; }
  int m() const { return m_; }
  int index(int i, int j) const;  // requires i < j
  std::pair<int, int> pair(int A) const { return pairs_[A]; }
  const Eigen::MatrixXd& phi(int A) const { return phi_[A]; }

  double structure(int P, int Q, int R) const {
    return c_[(static_cast<std::size_t>(P) * m_ + Q) * m_ + R];
  }

  /// Coordinates v_A = ⟨ω, φ^A⟩ of an antisymmetric matrix, and back.
  Eigen::VectorXd coords(const Eigen::MatrixXd& omega) const;
  Eigen::MatrixXd fromCoords(const Eigen::VectorXd& v) const;

  /// Flat ↔ 4-index conversions in the two component conventions.
  Eigen::MatrixXd endoFromComponents(const Tensor4& e) const;
  Tensor4 endoToComponents(const Eigen::MatrixXd& mat) const;
  Eigen::MatrixXd curvatureOperator(const Tensor4& r) const;
  Tensor4 curvatureFromOperator(const Eigen::MatrixXd& mat) const;

 private:
  int n_, m_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<Eigen::MatrixXd> phi_;
  std::vector<double> c_;
};

/// Complementary orthogonal projections of ∧²R^n, flat representation.
/// im(Pbar) is the candidate holonomy subalgebra H; Phat = Id − Pbar projects
/// onto its orthogonal complement K.
struct ProjectionPair {
  Eigen::MatrixXd Pbar;
  Eigen::MatrixXd Phat;
};

/// Max violation of P + P̂ = Id, idempotency, self-adjointness, and mutual
/// annihilation for a ProjectionPair.
double projectionPairResidual(const ProjectionPair& p);

/// Hamilton's product (A#B)(ω) = Σ_{M,N} ⟨[A(φ^M), B(φ^N)], ω⟩ [φ^M, φ^N],
/// evaluated by the basis sum. Normalized so that Id#Id = (n−2)·Id, which is
/// what makes D_t M = ΔM + M² + M#M hold on an exact shrinking sphere.
Eigen::MatrixXd sharp(const WedgeBasis& w, const Eigen::MatrixXd& a,
                      const Eigen::MatrixXd& b);

/// Same product evaluated by structure-constant contraction
/// (A#B)_{JI} = A_{PM} B_{QN} C^{PQ}_I C^{MN}_J; agrees with sharp() to
/// round-off and serves as its independent second evaluation route.
Eigen::MatrixXd sharpStructure(const WedgeBasis& w, const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& b);

/// Reaction operator Q(M) = M² + M#M (flat representation).
Eigen::MatrixXd reactionQ(const WedgeBasis& w, const Eigen::MatrixXd& m);
/// Q of a curvature tensor, returned flat.
Eigen::MatrixXd reactionQ(const WedgeBasis& w, const Tensor4& r);

/// Reaction operator S(A,F)(X,·) = A∘F_X + F_X∘A + 2·F_X#A per direction X.
std::vector<Eigen::MatrixXd> reactionS(const WedgeBasis& w,
                                       const Eigen::MatrixXd& a,
                                       const std::vector<Eigen::MatrixXd>& f);

/// Trilinear form 𝒯[A,B,C]_{PQR} = ⟨[A(φ^P), B(φ^Q)], C(φ^R)⟩ on the basis.
Tensor3 trilinearT(const WedgeBasis& w, const Eigen::MatrixXd& a,
                   const Eigen::MatrixXd& b, const Eigen::MatrixXd& c);

/// Act with Λ^a_b on every slot: (Λ^a_b U)_{i₁…} = Σ_s δ_{a,i_s} U_{…b at s…}.
template <int R>
Tensor<R> lambdaAct(const Tensor<R>& u, int a, int b);

/// First-derivative reaction 5-tensor
/// 𝒰(R,T)_{mijkl} = R_{mbdi}T_{bdjkl} + R_{mbdj}T_{bidkl}
///                + R_{mbdk}T_{bijdl} + R_{mbdl}T_{bijkd},
/// i.e. R_{mb}T_{bijkl} + R_{mbdp}(Λ^p_d T)_{bijkl} after the Ricci terms
/// from the first slot cancel.
Tensor5 reactionU(const Tensor4& r, const Tensor5& t);

/// Orthogonal projection of a 4-index array onto arrays with two-form
/// antisymmetry in (i,j), (k,l) and symmetry under pair interchange.
Tensor4 projectCurvatureType(const Tensor4& v);

/// Residual of the projected reaction identity
///   Q(R)∘P̂ = R∘R̂ + R̄*#R̂* + (R#R̂*)∘P̂,
/// where R̂ = R∘P̂, R̂* = P̂∘R, R̄* = P̄∘R. Requires im(Pbar) bracket-closed
/// (throws PreconditionViolated otherwise).
double qcompResidual(const WedgeBasis& w, const Tensor4& r,
                     const ProjectionPair& p);

/// Residual of the companion identity for S, maximized over directions X:
///   (S(R,T)⌟X)∘P̂ = R∘T̂_X + T_X∘R̂ + 2·T̂*_X#R̄* + 2·(T_X#R̂*)∘P̂.
double scompResidual(const WedgeBasis& w, const Tensor4& r, const Tensor5& t,
                     const ProjectionPair& p);

/// Max violation of the curvature symmetries (antisymmetry in each pair, pair
/// interchange, first Bianchi) of a 4-index array.
double curvatureSymmetryResidual(const Tensor4& r);

/// Random dense inputs for property tests: a symmetric flat endomorphism, a
/// 4-tensor with all curvature symmetries (first Bianchi included), and a
/// 5-tensor whose directional slices each have them.
Eigen::MatrixXd randomSymmetricEndo(const WedgeBasis& w, std::mt19937_64& rng);
Tensor4 randomCurvatureTensor(const WedgeBasis& w, std::mt19937_64& rng);
Tensor5 randomCurvatureDerivative(const WedgeBasis& w, std::mt19937_64& rng);

// --- template definitions ---

template <int R>
Tensor<R> lambdaAct(const Tensor<R>& u, int a, int b) {
  const int n = u.dim();
  Tensor<R> out(n);
  std::size_t strides[R];
  std::size_t s = 1;
  for (int r = R - 1; r >= 0; --r) {
    strides[r] = s;
    s *= static_cast<std::size_t>(n);
  }
  for (std::size_t f = 0; f < u.size(); ++f) {
    double v = 0.0;
    for (int r = 0; r < R; ++r) {
      int ir = static_cast<int>(f / strides[r] % n);
      if (ir == a) v += u.flat(f + (b - a) * static_cast<long>(strides[r]));
    }
    out.flat(f) = v;
  }
  return out;
}

}  // namespace holoflow
