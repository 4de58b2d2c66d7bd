#include <Eigen/Dense>
#include <random>
#include <vector>

#include "doctest.h"
#include "holoflow/wedge.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace holoflow;

namespace {

MatrixXd randomAntisym(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  MatrixXd a = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      a(i, j) = dist(rng);
      a(j, i) = -a(i, j);
    }
  return a;
}

MatrixXd randomGeneral(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  MatrixXd a(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) a(i, j) = dist(rng);
  return a;
}

// Oracle: apply a flat endomorphism through its 4-index components,
// (E(ω))_{cd} = E_{abcd} ω_{ab}, independent of the coords() fast path.
MatrixXd applyViaComponents(const WedgeBasis& w, const MatrixXd& e,
                            const MatrixXd& omega) {
  const int n = w.n();
  Tensor4 comp = w.endoToComponents(e);
  MatrixXd out = MatrixXd::Zero(n, n);
  for (int c = 0; c < n; ++c)
    for (int d = 0; d < n; ++d) {
      double s = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) s += comp(a, b, c, d) * omega(a, b);
      out(c, d) = s;
    }
  return out;
}

// Oracle: brute-force sharp by the definition, building every bracket from
// scratch with the component-route application above.
MatrixXd sharpBruteForce(const WedgeBasis& w, const MatrixXd& a,
                         const MatrixXd& b) {
  const int m = w.m();
  MatrixXd s = MatrixXd::Zero(m, m);
  for (int I = 0; I < m; ++I) {
    MatrixXd acc = MatrixXd::Zero(w.n(), w.n());
    for (int M = 0; M < m; ++M)
      for (int N = 0; N < m; ++N) {
        MatrixXd am = applyViaComponents(w, a, w.phi(M));
        MatrixXd bn = applyViaComponents(w, b, w.phi(N));
        double coef = innerForms(bracketForms(am, bn), w.phi(I));
        acc += coef * bracketForms(w.phi(M), w.phi(N));
      }
    s.col(I) = w.coords(acc);
  }
  return s;
}

MatrixXd sphereCurvatureMat(const WedgeBasis& w, double k) {
  const int n = w.n();
  Tensor4 r(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d)
          r(a, b, c, d) =
              k * ((a == d && b == c ? 1.0 : 0.0) - (a == c && b == d ? 1.0 : 0.0));
  return w.curvatureOperator(r);
}

// Orthonormal-projection pair onto the span of the given coordinate vectors.
ProjectionPair pairFromSpan(const WedgeBasis& w, const std::vector<VectorXd>& span) {
  const int m = w.m();
  MatrixXd pbar = MatrixXd::Zero(m, m);
  std::vector<VectorXd> basis;
  for (VectorXd v : span) {
    for (const VectorXd& u : basis) v -= u.dot(v) * u;
    if (v.norm() > 1e-12) basis.push_back(v.normalized());
  }
  for (const VectorXd& u : basis) pbar += u * u.transpose();
  return ProjectionPair{pbar, MatrixXd::Identity(m, m) - pbar};
}

// u(2) inside so(4), built independently as the kernel of X ↦ [X, J] over
// two-form coordinates (J the standard orthogonal complex structure).
ProjectionPair u2PairOracle(const WedgeBasis& w) {
  REQUIRE(w.n() == 4);
  MatrixXd j = MatrixXd::Zero(4, 4);
  j(1, 0) = 1; j(0, 1) = -1; j(3, 2) = 1; j(2, 3) = -1;
  MatrixXd l(w.m(), w.m());
  for (int A = 0; A < w.m(); ++A)
    l.col(A) = w.coords(bracketForms(w.phi(A), j));
  Eigen::JacobiSVD<MatrixXd> svd(l, Eigen::ComputeFullV);
  int null = 0;
  for (int i = 0; i < w.m(); ++i)
    if (svd.singularValues()(i) < 1e-10) ++null;
  REQUIRE(null == 4);  // dim u(2)
  std::vector<VectorXd> span;
  for (int i = w.m() - null; i < w.m(); ++i)
    span.push_back(svd.matrixV().col(i));
  return pairFromSpan(w, span);
}

ProjectionPair so2so2Pair(const WedgeBasis& w) {
  REQUIRE(w.n() == 4);
  std::vector<VectorXd> span;
  VectorXd a = VectorXd::Zero(w.m()), b = VectorXd::Zero(w.m());
  a(w.index(0, 1)) = 1.0;
  b(w.index(2, 3)) = 1.0;
  span.push_back(a);
  span.push_back(b);
  return pairFromSpan(w, span);
}

}  // namespace

TEST_CASE("two-form storage is exactly antisymmetric") {
  TwoForm f(4);
  f.set(1, 3, 2.5);
  CHECK(f(1, 3) == 2.5);
  CHECK(f(3, 1) == -2.5);
  CHECK(f(2, 2) == 0.0);
  TwoForm wdg = TwoForm::wedge(3, 0, 2);
  CHECK(wdg(0, 2) == 0.5);   // ½(e_i⊗e_j − e_j⊗e_i)
  CHECK(wdg(2, 0) == -0.5);
  MatrixXd g(2, 2);
  g << 0, 3, 1, 0;
  TwoForm h = TwoForm::fromMatrix(g);
  CHECK(h(0, 1) == 1.0);
  CHECK(h(1, 0) == -1.0);
}

TEST_CASE("bracket: frozen example, antisymmetry, Jacobi, commutator form") {
  MatrixXd id3 = MatrixXd::Identity(3, 3);
  TwoForm w12 = TwoForm::wedge(3, 0, 1);
  TwoForm w23 = TwoForm::wedge(3, 1, 2);

  TwoForm br = bracket(w12, w23, id3);
  // [e1∧e2, e2∧e3] = ½·e1∧e3, i.e. component (0,2) equals ½·½.
  CHECK(br(0, 2) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(br(0, 1) == doctest::Approx(0.0));
  CHECK(br(1, 2) == doctest::Approx(0.0));

  TwoForm self = bracket(w12, w12, id3);
  CHECK(self.matrix().cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(7);
  for (int n : {3, 4, 5}) {
    for (int rep = 0; rep < 100; ++rep) {
      MatrixXd a = randomAntisym(n, rng), b = randomAntisym(n, rng),
               c = randomAntisym(n, rng);
      MatrixXd jac = bracketForms(bracketForms(a, b), c) +
                     bracketForms(bracketForms(b, c), a) +
                     bracketForms(bracketForms(c, a), b);
      CHECK(jac.cwiseAbs().maxCoeff() < 1e-12);
      MatrixXd comm = a * b - b * a;
      CHECK((bracketForms(a, b) - comm).cwiseAbs().maxCoeff() < 1e-13);
    }
  }

  CHECK_THROWS_AS(bracket(w12, TwoForm::wedge(4, 0, 1), id3), InvalidInput);
  MatrixXd notSpd = -MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(bracket(w12, w23, notSpd), InvalidMetric);
}

TEST_CASE("wedge basis: orthonormality, coordinates, structure constants") {
  for (int n : {3, 4, 5, 6}) {
    WedgeBasis w(n);
    CHECK(w.m() == n * (n - 1) / 2);
    for (int A = 0; A < w.m(); ++A) {
      for (int B = 0; B < w.m(); ++B) {
        double ip = innerForms(w.phi(A), w.phi(B));
        CHECK(std::abs(ip - (A == B ? 1.0 : 0.0)) < 1e-14);
      }
      auto [i, j] = w.pair(A);
      CHECK(w.index(i, j) == A);
    }
    std::mt19937_64 rng(11);
    MatrixXd omega = randomAntisym(n, rng);
    CHECK((w.fromCoords(w.coords(omega)) - omega).cwiseAbs().maxCoeff() < 1e-14);

    // full antisymmetry of <[X,Y],Z> on basis triples (ad-invariance)
    for (int P = 0; P < w.m(); ++P)
      for (int Q = 0; Q < w.m(); ++Q)
        for (int R = 0; R < w.m(); ++R) {
          double c = w.structure(P, Q, R);
          CHECK(std::abs(c + w.structure(Q, P, R)) < 1e-14);
          CHECK(std::abs(c + w.structure(P, R, Q)) < 1e-14);
          CHECK(std::abs(c - w.structure(Q, R, P)) < 1e-14);
        }
  }
  // frozen value: n=3, <[φ^(12), φ^(23)], φ^(13)> = 1/√2
  WedgeBasis w3(3);
  CHECK(w3.structure(w3.index(0, 1), w3.index(1, 2), w3.index(0, 2)) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("endomorphism representations round-trip; curvature sign convention") {
  std::mt19937_64 rng(23);
  for (int n : {3, 4}) {
    WedgeBasis w(n);
    MatrixXd e = randomGeneral(w.m(), w.m(), rng);
    MatrixXd back = w.endoFromComponents(w.endoToComponents(e));
    CHECK((back - e).cwiseAbs().maxCoeff() < 1e-13);

    // the two application routes agree
    MatrixXd omega = randomAntisym(n, rng);
    MatrixXd viaCoords = w.fromCoords(e * w.coords(omega));
    MatrixXd viaComp = applyViaComponents(w, e, omega);
    CHECK((viaCoords - viaComp).cwiseAbs().maxCoeff() < 1e-13);

    Tensor4 r = randomCurvatureTensor(w, rng);
    Tensor4 r2 = w.curvatureFromOperator(w.curvatureOperator(r));
    Tensor4 diff = r - r2;
    CHECK(diff.maxAbs() < 1e-13);
  }
  // constant curvature K has operator matrix 2K·Id (frozen)
  for (int n : {3, 4, 5}) {
    WedgeBasis w(n);
    MatrixXd mat = sphereCurvatureMat(w, 0.7);
    CHECK((mat - 1.4 * MatrixXd::Identity(w.m(), w.m())).cwiseAbs().maxCoeff() <
          1e-13);
  }
}

TEST_CASE("sharp: symmetry, bilinearity, two routes, Id#Id, transpose rule") {
  std::mt19937_64 rng(31);
  for (int n : {3, 4}) {
    WedgeBasis w(n);
    const int m = w.m();
    for (int rep = 0; rep < 20; ++rep) {
      MatrixXd a = randomGeneral(m, m, rng), b = randomGeneral(m, m, rng);
      MatrixXd ab = sharp(w, a, b);
      CHECK((ab - sharp(w, b, a)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((ab - sharpStructure(w, a, b)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((ab.transpose() -
             sharp(w, a.transpose().eval(), b.transpose().eval()))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
      MatrixXd zero = MatrixXd::Zero(m, m);
      CHECK(sharp(w, a, zero).cwiseAbs().maxCoeff() == 0.0);
      MatrixXd lin =
          sharp(w, a, 2.0 * b) - 2.0 * ab;
      CHECK(lin.cwiseAbs().maxCoeff() < 1e-12);
    }
    // brute-force definition agrees
    MatrixXd a = randomGeneral(m, m, rng), b = randomGeneral(m, m, rng);
    CHECK((sharp(w, a, b) - sharpBruteForce(w, a, b)).cwiseAbs().maxCoeff() <
          1e-11);
  }
  for (int n : {3, 4, 5, 6}) {
    WedgeBasis w(n);
    MatrixXd id = MatrixXd::Identity(w.m(), w.m());
    MatrixXd expect = double(n - 2) * id;
    CHECK((sharp(w, id, id) - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("reaction Q on the shrinking-sphere calibration point") {
  // Unit round S³: operator matrix 2K·Id; the exact homothety gives
  // dM/dt = 4(n−1)K²·Id = M² + M#M there, so Q(2K·Id) = 8K²·Id at K=1.
  WedgeBasis w(3);
  MatrixXd m = sphereCurvatureMat(w, 1.0);
  MatrixXd q = reactionQ(w, m);
  CHECK((q - 8.0 * MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937_64 rng(41);
  WedgeBasis w4(4);
  for (int rep = 0; rep < 100; ++rep) {
    MatrixXd s = randomSymmetricEndo(w4, rng);
    MatrixXd q4 = reactionQ(w4, s);
    CHECK((q4 - q4.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(reactionQ(w4, MatrixXd::Zero(6, 6).eval()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reaction S: zero, linearity, and composition structure") {
  WedgeBasis w(4);
  std::mt19937_64 rng(43);
  MatrixXd a = randomSymmetricEndo(w, rng);
  std::vector<MatrixXd> zero(4, MatrixXd::Zero(6, 6));
  for (const MatrixXd& s : reactionS(w, a, zero))
    CHECK(s.cwiseAbs().maxCoeff() == 0.0);

  std::vector<MatrixXd> f1, f2, fsum;
  for (int x = 0; x < 4; ++x) {
    f1.push_back(randomGeneral(6, 6, rng));
    f2.push_back(randomGeneral(6, 6, rng));
    fsum.push_back(2.0 * f1.back() - 3.0 * f2.back());
  }
  auto s1 = reactionS(w, a, f1), s2 = reactionS(w, a, f2),
       ss = reactionS(w, a, fsum);
  for (int x = 0; x < 4; ++x) {
    MatrixXd lin = ss[x] - (2.0 * s1[x] - 3.0 * s2[x]);
    CHECK(lin.cwiseAbs().maxCoeff() < 1e-11);
    MatrixXd direct = a * f1[x] + f1[x] * a + 2.0 * sharp(w, f1[x], a);
    CHECK((s1[x] - direct).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("trilinear form: brute force, antisymmetry, vanishing on pairs") {
  WedgeBasis w(4);
  std::mt19937_64 rng(47);
  MatrixXd a = randomGeneral(6, 6, rng), b = randomGeneral(6, 6, rng),
           c = randomGeneral(6, 6, rng);
  Tensor3 t = trilinearT(w, a, b, c);
  for (int P = 0; P < 6; ++P)
    for (int Q = 0; Q < 6; ++Q)
      for (int R = 0; R < 6; ++R) {
        MatrixXd av = applyViaComponents(w, a, w.phi(P));
        MatrixXd bv = applyViaComponents(w, b, w.phi(Q));
        MatrixXd cv = applyViaComponents(w, c, w.phi(R));
        double want = innerForms(bracketForms(av, bv), cv);
        CHECK(std::abs(t(P, Q, R) - want) < 1e-12);
      }

  MatrixXd id = MatrixXd::Identity(6, 6);
  Tensor3 tid = trilinearT(w, id, id, id);
  for (int P = 0; P < 6; ++P)
    for (int Q = 0; Q < 6; ++Q)
      for (int R = 0; R < 6; ++R) {
        CHECK(std::abs(tid(P, Q, R) + tid(Q, P, R)) < 1e-14);
        CHECK(std::abs(tid(P, Q, R) + tid(P, R, Q)) < 1e-14);
        CHECK(std::abs(tid(P, Q, R) - w.structure(P, Q, R)) < 1e-14);
      }

  for (const ProjectionPair& p : {u2PairOracle(w), so2so2Pair(w)}) {
    CHECK(projectionPairResidual(p) < 1e-12);
    Tensor3 t1 = trilinearT(w, p.Phat, p.Pbar, p.Pbar);
    Tensor3 t2 = trilinearT(w, p.Pbar, p.Phat, p.Pbar);
    Tensor3 t3 = trilinearT(w, p.Pbar, p.Pbar, p.Phat);
    CHECK(t1.maxAbs() < 1e-12);
    CHECK(t2.maxAbs() < 1e-12);
    CHECK(t3.maxAbs() < 1e-12);
  }
}

TEST_CASE("lambda slot action: frozen rank-2 example") {
  Tensor2 u(3);
  int v = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) u(i, j) = ++v;  // 1..9
  Tensor2 l = lambdaAct(u, 0, 1);
  // (Λ^0_1 u)_{ij} = δ_{i0} u_{1j} + δ_{j0} u_{i1}
  CHECK(l(0, 0) == u(1, 0) + u(0, 1));
  CHECK(l(0, 2) == u(1, 2));
  CHECK(l(2, 0) == u(2, 1));
  CHECK(l(1, 1) == 0.0);
}

TEST_CASE("reaction U matches the raw slot-action expansion") {
  WedgeBasis w(4);
  std::mt19937_64 rng(53);
  Tensor4 r = randomCurvatureTensor(w, rng);
  Tensor5 t = randomCurvatureDerivative(w, rng);
  Tensor5 u = reactionU(r, t);

  const int n = 4;
  Tensor2 ric(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += r(i, j, j, k);
      ric(i, k) = s;
    }
  // oracle: Ric_{mb}·T_b + R_{mbdp}·(Λ^p_d T)_b with Λ acting on all slots
  Tensor5 expect(n);
  for (int d = 0; d < n; ++d)
    for (int p = 0; p < n; ++p) {
      Tensor5 lt = lambdaAct(t, p, d);
      for (int m = 0; m < n; ++m)
        for (int b = 0; b < n; ++b) {
          double coef = r(m, b, d, p);
          if (coef == 0.0) continue;
          Tensor4 sl = sliceFirst(lt, b);
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                  expect(m, i, j, k, l) += coef * sl(i, j, k, l);
        }
    }
  for (int m = 0; m < n; ++m)
    for (int b = 0; b < n; ++b) {
      Tensor4 sl = sliceFirst(t, b);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l)
              expect(m, i, j, k, l) += ric(m, b) * sl(i, j, k, l);
    }
  Tensor5 diff = u - expect;
  CHECK(diff.maxAbs() < 1e-12);
}

TEST_CASE("curvature-type projector: idempotent and fixes curvature tensors") {
  WedgeBasis w(4);
  std::mt19937_64 rng(59);
  Tensor4 v(4);
  std::normal_distribution<double> dist;
  for (std::size_t k = 0; k < v.size(); ++k) v.flat(k) = dist(rng);
  Tensor4 pv = projectCurvatureType(v);
  Tensor4 ppv = projectCurvatureType(pv);
  Tensor4 diff = ppv - pv;
  CHECK(diff.maxAbs() < 1e-13);

  Tensor4 r = randomCurvatureTensor(w, rng);
  Tensor4 fixed = projectCurvatureType(r) - r;
  CHECK(fixed.maxAbs() < 1e-13);
}

TEST_CASE("random curvature tensors satisfy all symmetries") {
  std::mt19937_64 rng(61);
  for (int n : {3, 4, 5}) {
    WedgeBasis w(n);
    for (int rep = 0; rep < 10; ++rep) {
      Tensor4 r = randomCurvatureTensor(w, rng);
      CHECK(curvatureSymmetryResidual(r) < 1e-13);
      Tensor5 t = randomCurvatureDerivative(w, rng);
      for (int m = 0; m < n; ++m)
        CHECK(curvatureSymmetryResidual(sliceFirst(t, m)) < 1e-13);
    }
  }
}

TEST_CASE("projected reaction identities hold; unprojected tail term fails") {
  WedgeBasis w(4);
  std::mt19937_64 rng(67);
  for (const ProjectionPair& p : {u2PairOracle(w), so2so2Pair(w)}) {
    for (int rep = 0; rep < 20; ++rep) {
      Tensor4 r = randomCurvatureTensor(w, rng);
      Tensor5 t = randomCurvatureDerivative(w, rng);
      double scale = 1.0 + std::pow(w.curvatureOperator(r).norm(), 3);
      CHECK(qcompResidual(w, r, p) < 1e-10 * scale);
      CHECK(scompResidual(w, r, t, p) < 1e-10 * scale * (1.0 + t.norm()));
    }
  }

  // trivial projections
  WedgeBasis w3(3);
  ProjectionPair allH{MatrixXd::Identity(3, 3), MatrixXd::Zero(3, 3)};
  Tensor4 r3 = randomCurvatureTensor(w3, rng);
  CHECK(qcompResidual(w3, r3, allH) < 1e-12);

  // the final sharp term genuinely needs its trailing projection: dropping it
  // leaves a residual of order 1 for so(2) ⊂ so(3)
  VectorXd h = VectorXd::Zero(3);
  h(w3.index(0, 1)) = 1.0;
  ProjectionPair so2 = pairFromSpan(w3, {h});
  double worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    Tensor4 r = randomCurvatureTensor(w3, rng);
    MatrixXd mr = w3.curvatureOperator(r);
    MatrixXd lhs = reactionQ(w3, mr) * so2.Phat;
    MatrixXd rhatstar = so2.Phat * mr;
    MatrixXd rhs = mr * (mr * so2.Phat) +
                   sharp(w3, so2.Pbar * mr, rhatstar) +
                   sharp(w3, mr, rhatstar);  // missing ∘P̂ on purpose
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    CHECK(qcompResidual(w3, r, so2) < 1e-11 * (1.0 + std::pow(mr.norm(), 3)));
  }
  CHECK(worst > 1e-6);

  // precondition: a non-closed image must be rejected
  VectorXd a = VectorXd::Zero(3), b = VectorXd::Zero(3);
  a(w3.index(0, 1)) = 1.0;
  b(w3.index(1, 2)) = 1.0;
  ProjectionPair notClosed = pairFromSpan(w3, {a, b});
  Tensor4 rr = randomCurvatureTensor(w3, rng);
  CHECK_THROWS_AS(qcompResidual(w3, rr, notClosed), PreconditionViolated);
}
