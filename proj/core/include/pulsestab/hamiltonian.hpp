#ifndef PULSESTAB_HAMILTONIAN_HPP
#define PULSESTAB_HAMILTONIAN_HPP

#include <vector>

#include "pulsestab/model.hpp"
#include "pulsestab/pulse.hpp"
#include "pulsestab/symplectic.hpp"
#include "pulsestab/types.hpp"

namespace pulsestab {

/// The linear Hamiltonian family z' = J A(x) z attached to a pulse, with
///   A(x) = [[(QD)^{-1}, 0], [0, B(x) - eps*Id - lambda*QM]],
/// B(x) = hess_v(w0(x)) interpolated from the profile (B(inf) outside).
struct HamiltonianFamily {
  const SkewGradientModel* model = nullptr;
  const PulseProfile* profile = nullptr;
  double lambda = 0.0;
  double epsilon = 0.0;

  int n() const { return model->n; }
};

/// Symmetric 2n x 2n coefficient matrix at position x.
Mat assemble_A(const HamiltonianFamily& family, double x);

/// Spectral splitting of J A(inf): frames spanning the eigenspaces with
/// positive/negative real part (complex pairs realified) and the gap
/// min |Re mu|.  Throws when an eigenvalue sits on the imaginary axis.
struct AsymptoticSplit {
  LagrangianFrame v_plus;
  LagrangianFrame v_minus;
  double spectral_gap = 0.0;
  double max_imag = 0.0; // largest |Im mu|; > 0 means spiral tails
};
AsymptoticSplit asymptotic_split(const HamiltonianFamily& family);

/// A Lagrangian frame per sampling point, integrated with per-step
/// re-orthonormalization.  direction: +1 = unstable (forward from -X),
/// -1 = stable (backward from +X).
struct FramePath {
  Vec grid;
  std::vector<LagrangianFrame> frames;
  int direction = +1;

  const LagrangianFrame& at(int i) const { return frames[static_cast<size_t>(i)]; }
};

struct IntegrateOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_angle_step = 0.2; // bound on consecutive principal angles
};

/// Unstable frame path: Z(-X) = V^+(J A(inf)) flowed forward, recorded on
/// tau_grid (ascending, within [-X, X]).
FramePath integrate_unstable(const HamiltonianFamily& family, const Vec& tau_grid,
                             const IntegrateOptions& opts = {});

/// Stable frame path: Z(+X) = V^-(J A(inf)) flowed backward, recorded on
/// tau_grid (ascending).
FramePath integrate_stable(const HamiltonianFamily& family, const Vec& tau_grid,
                           const IntegrateOptions& opts = {});

/// Single frame at tau (convenience wrappers around the path integrators).
LagrangianFrame unstable_frame_at(const HamiltonianFamily& family, double tau,
                                  const IntegrateOptions& opts = {});
LagrangianFrame stable_frame_at(const HamiltonianFamily& family, double tau,
                                const IntegrateOptions& opts = {});

/// Unstable frames at lambda = eps = 0 with the translation solution
/// z(tau) = (-grad_v(w0(tau)), w0'(tau)) pinned from the profile.  The
/// kernel direction decays forward in x, so a purely integrated frame
/// eventually drifts towards the growing asymptotic direction (the
/// discretized kernel eigenvalue is only O(h^2) close to zero); pinning
/// removes that knife edge.  Remaining directions come from the flow.
FramePath integrate_unstable_pinned(const HamiltonianFamily& family,
                                    const Vec& tau_grid,
                                    const IntegrateOptions& opts = {});
LagrangianFrame unstable_frame_pinned_at(const HamiltonianFamily& family, double tau,
                                         const IntegrateOptions& opts = {});

/// Smallest singular value of [E^s(0) | E^u(0)]; zero (at tolerance) iff
/// lambda is an eigenvalue of the (eps-shifted) linearized problem.
double evans_gap(const HamiltonianFamily& family,
                 const IntegrateOptions& opts = {});

} // namespace pulsestab

#endif
