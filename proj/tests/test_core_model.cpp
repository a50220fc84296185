#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rydmix/core_model.hpp"

using namespace rydmix;

namespace {

FieldSet reference_fields() {
  FieldSet f;
  f.omega_p = 0.3;
  f.omega_s = 1.5;
  f.omega_a = 0.2;
  f.omega_m = 0.001;
  f.omega_c = 2.0;
  return f;
}

AtomParams reference_params() {
  AtomParams p;
  p.delta_p = -18.0;
  p.delta_l = -0.8;
  p.set_uniform_rydberg(0.002, 0.02);
  return p;
}

Matrix6c random_density(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix6c a;
  for (int i = 0; i < kLevels; ++i) {
    for (int j = 0; j < kLevels; ++j) a(i, j) = cplx(g(rng), g(rng));
  }
  Matrix6c rho = a * a.adjoint();
  return rho / rho.trace();
}

double max_abs(const Matrix6c& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Hamiltonian, ZeroInputGivesZeroMatrix) {
  EXPECT_EQ(max_abs(build_hamiltonian(FieldSet{}, AtomParams{})), 0.0);
}

TEST(Hamiltonian, EntriesForReferenceFields) {
  const Matrix6c h = build_hamiltonian(reference_fields(), reference_params());
  EXPECT_DOUBLE_EQ(h(kProbeExcited, kProbeExcited).real(), 18.0);
  EXPECT_DOUBLE_EQ(h(kProbeExcited, kGround).real(), -0.3);
  EXPECT_DOUBLE_EQ(h(kLowerExcited, kLowerExcited).real(), 0.8);
  EXPECT_DOUBLE_EQ(h(kRydberg3, kProbeExcited).real(), -1.5);
  EXPECT_DOUBLE_EQ(h(kRydberg3, kRydberg4).real(), -0.2);
  EXPECT_DOUBLE_EQ(h(kRydberg5, kRydberg4).real(), -0.001);
  EXPECT_DOUBLE_EQ(h(kRydberg5, kLowerExcited).real(), -2.0);
}

TEST(Hamiltonian, HermitianForComplexFields) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int n = 0; n < 50; ++n) {
    FieldSet f{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)},
               {u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
    AtomParams p;
    p.delta_p = u(rng);
    p.delta_3 = u(rng);
    p.delta_4 = u(rng);
    p.delta_5 = u(rng);
    p.delta_l = u(rng);
    const Matrix6c h = build_hamiltonian(f, p);
    EXPECT_EQ(max_abs(h - h.adjoint()), 0.0);
  }
}

TEST(Hamiltonian, RejectsNonFiniteInput) {
  FieldSet f = reference_fields();
  f.omega_a = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(build_hamiltonian(f, AtomParams{}), ValidationError);
  AtomParams p;
  p.delta_p = std::numeric_limits<double>::infinity();
  EXPECT_THROW(build_hamiltonian(FieldSet{}, p), ValidationError);
}

// Gamma is the unit of the model and cannot vanish, so the empty generator is
// probed through a state the |2> decay does not touch.
TEST(Liouvillian, ZeroWhenNothingActs) {
  AtomParams p;
  p.gamma_prime = 0.0;
  p.set_uniform_rydberg(0.0, 0.0);
  const Liouvillian l = build_liouvillian(Matrix6c::Zero(), p);
  for (int k : {kGround, kRydberg3, kRydberg4, kRydberg5, kLowerExcited}) {
    EXPECT_EQ(max_abs(l.apply(DensityMatrix::pure(k).matrix())), 0.0);
  }
}

TEST(Liouvillian, SingleDecayChannel) {
  AtomParams p;
  p.gamma_prime = 0.0;
  p.set_uniform_rydberg(0.0, 0.0);
  const Liouvillian l = build_liouvillian(Matrix6c::Zero(), p);
  Matrix6c expected = Matrix6c::Zero();
  expected(kGround, kGround) = 1.0;
  expected(kProbeExcited, kProbeExcited) = -1.0;
  EXPECT_LT(max_abs(l.apply(DensityMatrix::pure(kProbeExcited).matrix()) - expected), 1e-15);
}

TEST(Liouvillian, DecayChannelsLandOnStatedLevels) {
  AtomParams p;
  p.gamma_prime = 0.17;
  p.set_uniform_rydberg(0.0, 0.0);
  p.rydberg_decay = {0.3, 0.4, 0.5};
  const Liouvillian l = build_liouvillian(Matrix6c::Zero(), p);
  struct Channel {
    int from, to;
    double rate;
  };
  for (const Channel& c : {Channel{kProbeExcited, kGround, 1.0}, Channel{kRydberg3, kProbeExcited, 0.3},
                           Channel{kRydberg4, kGround, 0.4}, Channel{kRydberg5, kLowerExcited, 0.5},
                           Channel{kLowerExcited, kGround, 0.17}}) {
    const Matrix6c out = l.apply(DensityMatrix::pure(c.from).matrix());
    EXPECT_NEAR(out(c.to, c.to).real(), c.rate, 1e-15);
    EXPECT_NEAR(out(c.from, c.from).real(), -c.rate, 1e-15);
  }
}

TEST(Liouvillian, DephasingDampsCoherencesOnly) {
  AtomParams p;
  p.gamma_prime = 0.0;
  p.set_uniform_rydberg(0.0, 0.0);
  p.rydberg_dephasing = {0.0, 0.25, 0.0};
  p.gamma = 1.0;
  const Liouvillian l = build_liouvillian(Matrix6c::Zero(), p);
  Matrix6c rho = Matrix6c::Zero();
  rho(kGround, kRydberg4) = 1.0;
  rho(kRydberg4, kGround) = 1.0;
  const Matrix6c out = l.apply(rho);
  EXPECT_NEAR(out(kGround, kRydberg4).real(), -0.25, 1e-15);
  Matrix6c pop = Matrix6c::Zero();
  pop(kRydberg4, kRydberg4) = 1.0;
  EXPECT_LT(max_abs(l.apply(pop)), 1e-15);
}

TEST(Liouvillian, MatchesDirectMasterEquation) {
  std::mt19937_64 rng(11);
  const FieldSet f{{0.3, 0.1}, {1.5, -0.2}, {0.2, 0.05}, {0.01, 0.0}, {2.0, 0.3}, {0.04, -0.02}};
  AtomParams p = reference_params();
  p.rydberg_decay = {0.01, 0.02, 0.03};
  p.rydberg_dephasing = {0.04, 0.05, 0.06};
  const Matrix6c h = build_hamiltonian(f, p);
  const Liouvillian l = build_liouvillian(h, p);
  const cplx i{0.0, 1.0};
  auto jump = [](int lower, int upper) {
    Matrix6c m = Matrix6c::Zero();
    m(lower, upper) = 1.0;
    return m;
  };
  for (int n = 0; n < 10; ++n) {
    const Matrix6c rho = random_density(rng);
    Matrix6c expected = -i * (h * rho - rho * h);
    auto decay = [&](int upper, int lower, double rate) {
      const Matrix6c c = jump(lower, upper);
      expected += rate * (c * rho * c.adjoint() - 0.5 * (c.adjoint() * c * rho + rho * c.adjoint() * c));
    };
    decay(kProbeExcited, kGround, p.gamma);
    decay(kRydberg3, kProbeExcited, p.rydberg_decay[0]);
    decay(kRydberg4, kGround, p.rydberg_decay[1]);
    decay(kRydberg5, kLowerExcited, p.rydberg_decay[2]);
    decay(kLowerExcited, kGround, p.gamma_prime);
    for (int k = 0; k < 3; ++k) {
      Matrix6c pk = Matrix6c::Zero();
      pk(kRydberg3 + k, kRydberg3 + k) = 1.0;
      expected -= p.rydberg_dephasing[k] * (pk * rho + rho * pk - 2.0 * pk * rho * pk);
    }
    EXPECT_LT(max_abs(l.apply(rho) - expected), 1e-13);
  }
}

TEST(Liouvillian, PreservesTrace) {
  std::mt19937_64 rng(3);
  const Liouvillian l = build_liouvillian(build_hamiltonian(reference_fields(), reference_params()), reference_params());
  for (int n = 0; n < 100; ++n) {
    EXPECT_LT(std::abs(l.apply(random_density(rng)).trace()), 1e-12);
  }
}

TEST(Liouvillian, RejectsNonHermitianHamiltonian) {
  Matrix6c h = Matrix6c::Zero();
  h(0, 1) = 1.0;
  EXPECT_THROW(build_liouvillian(h, AtomParams{}), ValidationError);
}

TEST(SteadyState, NoFieldsRelaxesToGround) {
  const DensityMatrix rho = steady_state(FieldSet{}, AtomParams{});
  EXPECT_LT(max_abs(rho.matrix() - DensityMatrix::pure(kGround).matrix()), 1e-12);
}

// Two-level oracle: rho_21 = Omega (-Delta + i/2) / (Delta^2 + 1/4 + 2 Omega^2).
TEST(SteadyState, TwoLevelClosedForm) {
  for (double omega : {0.01, 0.05, 0.3, 1.0}) {
    for (double delta : {-3.0, -0.4, 0.0, 0.7, 5.0}) {
      FieldSet f;
      f.omega_p = omega;
      AtomParams p;
      p.delta_p = delta;
      const DensityMatrix rho = steady_state(f, p);
      const double den = delta * delta + 0.25 + 2.0 * omega * omega;
      const cplx exact = omega * cplx(-delta, 0.5) / den;
      EXPECT_LT(std::abs(rho(kProbeExcited, kGround) - exact), 1e-12 * std::max(1.0, std::abs(exact)));
      EXPECT_NEAR(rho.population(kProbeExcited), omega * omega / den, 1e-12);
      if (omega <= 0.01) {
        const cplx weak = omega / cplx(-delta, -0.5);
        EXPECT_LT(std::abs(rho(kProbeExcited, kGround) - weak), 0.01 * std::abs(weak));
      }
    }
  }
}

TEST(SteadyState, PhysicalAndSmallResidualForReferenceSet) {
  const Liouvillian l = build_liouvillian(build_hamiltonian(reference_fields(), reference_params()), reference_params());
  const SteadyStateReport r = steady_state_report(l);
  EXPECT_LE(r.residual, 1e-10);
  EXPECT_TRUE(DensityMatrix::is_physical(r.rho.matrix()));
}

TEST(SteadyState, MatchesLongEvolutionForReferenceSet) {
  const Liouvillian l = build_liouvillian(build_hamiltonian(reference_fields(), reference_params()), reference_params());
  const DensityMatrix ss = steady_state(l);
  const DensityMatrix ev = evolve_to_steady(l, DensityMatrix::pure(kGround), 4e3);
  EXPECT_LT(max_abs(ss.matrix() - ev.matrix()), 1e-6);
}

TEST(SteadyState, DegenerateNullSpaceIsAnError) {
  // With no field and no decay out of |3>..|6>, each of them is stationary.
  AtomParams p;
  p.gamma_prime = 0.0;
  p.set_uniform_rydberg(0.0, 0.0);
  EXPECT_THROW(steady_state(FieldSet{}, p), SolverError);
}

TEST(Evolution, ZeroGeneratorKeepsState) {
  std::mt19937_64 rng(5);
  const DensityMatrix rho0 = DensityMatrix::checked(random_density(rng));
  const DensityMatrix out = evolve_to_steady(Liouvillian{}, rho0, 3.0);
  EXPECT_LT(max_abs(out.matrix() - rho0.matrix()), 1e-14);
}

TEST(Evolution, ExponentialDecay) {
  AtomParams p;
  p.gamma_prime = 0.0;
  p.set_uniform_rydberg(0.0, 0.0);
  const Liouvillian l = build_liouvillian(Matrix6c::Zero(), p);
  const DensityMatrix out = evolve_to_steady(l, DensityMatrix::pure(kProbeExcited), 10.0);
  EXPECT_NEAR(out.population(kProbeExcited), std::exp(-10.0), 1e-6);
}

TEST(Evolution, RejectsNonPositiveTime) {
  EXPECT_THROW(evolve_to_steady(Liouvillian{}, DensityMatrix{}, 0.0), ValidationError);
}

TEST(DarkState, OmegaMZeroGivesLevelFive) {
  FieldSet f = reference_fields();
  f.omega_m = 0.0;
  const Vector6c d = dark_state(f).amplitudes;
  EXPECT_NEAR(std::abs(d(kRydberg5)), 1.0, 1e-12);
  EXPECT_NEAR(d.norm(), 1.0, 1e-12);
}

TEST(DarkState, OmegaAZeroGivesLowerLadderState) {
  FieldSet f = reference_fields();
  f.omega_a = 0.0;
  const Vector6c d = dark_state(f).amplitudes;
  EXPECT_NEAR(d(kRydberg5).real(), 0.0, 1e-15);
  // ratio of |1> to |3> amplitude is -S*/P
  EXPECT_LT(std::abs(d(kGround) / d(kRydberg3) - (-std::conj(f.omega_s) / f.omega_p)), 1e-12);
}

TEST(DarkState, UnitFieldsValue) {
  FieldSet f{1.0, 1.0, 1.0, 1.0, 0.0, 0.0};
  const Vector6c d = dark_state(f).amplitudes;
  const double s = 1.0 / std::sqrt(3.0);
  Vector6c expected = Vector6c::Zero();
  expected(0) = s;
  expected(2) = -s;
  expected(4) = s;
  EXPECT_LT((d - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DarkState, UndefinedWhenAllProductsVanish) {
  FieldSet f;
  f.omega_s = 1.0;
  EXPECT_THROW(dark_state(f), ValidationError);
}

TEST(DarkState, NormalizedForRandomComplexFields) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int n = 0; n < 200; ++n) {
    FieldSet f{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}, {}};
    EXPECT_NEAR(dark_state(f).amplitudes.norm(), 1.0, 1e-12);
  }
}

TEST(DarkState, DarknessForRealFieldsAtResonance) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int n = 0; n < 100; ++n) {
    FieldSet f{u(rng), u(rng), u(rng), u(rng), u(rng), 0.0};
    f.omega_l = -f.omega_p * f.omega_a * f.omega_c / (f.omega_m * f.omega_s);
    const Vector6c hd = build_hamiltonian(f, AtomParams{}) * dark_state(f).amplitudes;
    EXPECT_LT(std::abs(hd(kProbeExcited)), 1e-12);
    EXPECT_LT(std::abs(hd(kRydberg4)), 1e-12);
    EXPECT_LT(std::abs(hd(kLowerExcited)), 1e-12);
  }
}

TEST(DarkState, ProbabilityOfPureStates) {
  const FieldSet f = reference_fields();
  const Vector6c d = dark_state(f).amplitudes;
  EXPECT_NEAR(dark_state_probability(DensityMatrix::pure(d), f), 1.0, 1e-12);
  EXPECT_NEAR(dark_state_probability(DensityMatrix::pure(kProbeExcited), f), 0.0, 1e-15);
}

TEST(DensityMatrixChecks, RejectsUnphysical) {
  Matrix6c m = Matrix6c::Zero();
  m(0, 0) = 2.0;
  m(1, 1) = -1.0;
  EXPECT_THROW(DensityMatrix::checked(m), ValidationError);
  Matrix6c n = DensityMatrix{}.matrix();
  n(0, 1) = 0.1;
  EXPECT_THROW(DensityMatrix::checked(n), ValidationError);
}
