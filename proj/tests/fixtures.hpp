#ifndef PULSESTAB_TESTS_FIXTURES_HPP
#define PULSESTAB_TESTS_FIXTURES_HPP

#include <random>

#include "pulsestab/model.hpp"
#include "pulsestab/pulse.hpp"
#include "pulsestab/symplectic.hpp"

namespace fixtures {

using pulsestab::LagrangianFrame;
using pulsestab::Mat;
using pulsestab::PulseProfile;
using pulsestab::SkewGradientModel;
using pulsestab::Vec;

/// Closed-form scalar pulse u(x) = (3/2) sech^2(x/2) sampled with exact
/// derivatives; the tight reference for everything scalar.
PulseProfile analytic_scalar_profile(double half_width = 30.0, int num_intervals = 6000);

double scalar_pulse(double x);       // (3/2) sech^2(x/2)
double scalar_pulse_prime(double x); // derivative

/// Newton-solved scalar pulse, cached per (half_width, N, tol).
const PulseProfile& solved_scalar_profile();

/// FitzHugh-Nagumo fixture parameters frozen for the test suite.  The
/// profile does not depend on tau, so one solve serves every tau.
/// Fixture A is the stable two-front pulse found by parameter search
/// (index 0, leading eigenvalue ~ -0.01, tau0 ~ 264 < 2 gamma^2); its
/// profile ships as a seed file and is re-polished at load time.
/// Fixture B is a comparable-diffusion bump whose index is 1 (one
/// conjugate point, one positive eigenvalue).
struct FhnFixture {
  double d;
  double gamma;
  double beta;
};
FhnFixture fhn_fixture_a(); // stable two-front set
FhnFixture fhn_fixture_b(); // unstable-by-index set

const PulseProfile& fhn_profile_a();
const PulseProfile& fhn_profile_b();

SkewGradientModel fhn_model_a(double tau);
SkewGradientModel fhn_model_b(double tau);

/// Haar-ish random Lagrangian frame via a random unitary A + iB.
LagrangianFrame random_lagrangian(int n, std::mt19937_64& rng);

/// Random symplectic matrix from shear/stretch generators.
Mat random_symplectic(int n, std::mt19937_64& rng);

} // namespace fixtures

#endif
