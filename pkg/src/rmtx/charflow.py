"""Characteristic flow of spectral parameters and a DBM stepper.

The spectral-parameter flow is the coupled scalar system

    d eta/dt = -Im m^{z_t}(i eta_t) - eta_t / 2,
    d z/dt   = -z_t / 2,

integrated with classical RK4.  The flow admits exact closed forms
(z_t = e^{-t/2} z_0, m_t = e^{t/2} m_0, together with the |eta|/rho and
|eta| rho relations) which serve as the convergence oracle instead of
step doubling.

The DBM stepper advances the mirrored Hermitization eigenvalues
(lambda_{-i} = -lambda_i) by Euler-Maruyama with mirrored noise.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import dyson
from .errors import Collision, CrossedAxis, NoSolution

DEFAULT_DT = 1e-4

#: calibrated backward-shooting constants: |z0|^2 - 1 >= C1_SHOOT * T and
#: eta0/rho0 >= C2_SHOOT * T (exact values are 1 and pi for |z| >= 1)
C1_SHOOT = 1.0
C2_SHOOT = 3.0


@dataclass(frozen=True)
class FlowState:
    """One point on a characteristic trajectory, with cached Dyson data."""

    t: float
    z: complex
    eta: float
    m: complex
    rho: float


def _state(t, z, eta):
    sol = dyson.solve_m(z, 1j * eta)
    return FlowState(t=float(t), z=complex(z), eta=float(eta),
                     m=sol.m, rho=sol.rho)


def _rhs(z, eta):
    m = dyson.solve_m(z, 1j * eta).m
    return (-0.5 * z, -m.imag - 0.5 * eta)


def _rk4_step(z, eta, dt):
    k1z, k1e = _rhs(z, eta)
    k2z, k2e = _rhs(z + 0.5 * dt * k1z, eta + 0.5 * dt * k1e)
    k3z, k3e = _rhs(z + 0.5 * dt * k2z, eta + 0.5 * dt * k2e)
    k4z, k4e = _rhs(z + dt * k3z, eta + dt * k3e)
    z_new = z + dt / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z)
    eta_new = eta + dt / 6.0 * (k1e + 2 * k2e + 2 * k3e + k4e)
    return z_new, eta_new


def flow_integrate(z0, eta0, T, dt=DEFAULT_DT):
    """RK4 trajectory of the characteristics up to time T < T*.

    Returns the list of FlowState snapshots at every accepted step
    (including t=0 and t=T).

    Raises
    ------
    CrossedAxis
        If eta changes sign mid-step, signalling T >= T*(eta0, z0).
    """
    if eta0 == 0:
        raise CrossedAxis("eta0 must be nonzero")
    states = [_state(0.0, z0, eta0)]
    sgn = math.copysign(1.0, eta0)
    t, z, eta = 0.0, complex(z0), float(eta0)
    n_steps = int(round(T / dt))
    for k in range(n_steps):
        h = min(dt, T - t)
        if h <= 0:
            break
        z_new, eta_new = _rk4_step(z, eta, h)
        if eta_new * sgn <= 0:
            raise CrossedAxis(f"eta crossed the axis at t ~ {t + h}")
        t, z, eta = t + h, z_new, eta_new
        states.append(_state(t, z, eta))
    if abs(states[-1].t - T) > 1e-12 and T - states[-1].t > 1e-12:
        z_new, eta_new = _rk4_step(z, eta, T - t)
        if eta_new * sgn <= 0:
            raise CrossedAxis(f"eta crossed the axis at t ~ {T}")
        states.append(_state(T, z_new, eta_new))
    return states


def tstar(z0, eta0, dt=1e-3):
    """First time |eta_t| <= 1e-10: integrate-until plus final bisection.

    Near the axis the step is shrunk to ~half the remaining |eta| over the
    local slope, so the terminal approach converges geometrically even when
    the crossing is tangential (cusp).
    """
    if eta0 == 0:
        raise CrossedAxis("eta0 must be nonzero")
    sgn = math.copysign(1.0, eta0)
    t, z, eta = 0.0, complex(z0), float(eta0)
    for _ in range(1_000_000):
        if sgn * eta <= 1e-10:
            return t
        slope = abs(_rhs(z, eta)[1])
        h = min(dt, max(0.5 * sgn * eta / max(slope, 1e-14), 1e-13))
        z_new, eta_new = _rk4_step(z, eta, h)
        if sgn * eta_new <= 1e-10:
            # bisect the final step size on [0, h]
            lo, hi = 0.0, h
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                _, eta_mid = _rk4_step(z, eta, mid)
                if sgn * eta_mid <= 1e-10:
                    hi = mid
                else:
                    lo = mid
            return t + hi
        t, z, eta = t + h, z_new, eta_new
    raise CrossedAxis("tstar: step budget exhausted")


def _integrate_raw(z0, eta0, T, dt):
    """Endpoint (z_T, eta_T) without per-step state construction."""
    sgn = math.copysign(1.0, eta0)
    t, z, eta = 0.0, complex(z0), float(eta0)
    n_steps = int(math.ceil(T / dt - 1e-12))
    for _ in range(n_steps):
        h = min(dt, T - t)
        z_new, eta_new = _rk4_step(z, eta, h)
        if eta_new * sgn <= 0:
            raise CrossedAxis(f"eta crossed the axis at t ~ {t + h}")
        t, z, eta = t + h, z_new, eta_new
    return z, eta


def shoot_back(z, eta, T, dt=DEFAULT_DT, tol=1e-9):
    """Initial condition (z0, eta0) whose characteristic ends at (z, eta).

    z0 = e^{T/2} z exactly; eta0 is found by bisecting the increasing map
    eta0 -> eta_T.  Asserts the calibrated lower bounds |z0|^2-1 >= C1*T
    and eta0/rho0 >= C2*T.
    """
    if eta == 0:
        raise NoSolution("eta must be nonzero")
    if abs(z) < 1.0:
        raise NoSolution("shoot_back requires |z| >= 1")
    z0 = math.exp(T / 2.0) * complex(z)
    sgn = math.copysign(1.0, eta)

    def end_eta(eta0):
        return _integrate_raw(z0, eta0, T, dt)[1]

    lo = abs(eta)
    hi = abs(eta) + 2.0
    for _ in range(60):
        try:
            if sgn * end_eta(sgn * hi) >= sgn * eta:
                break
        except CrossedAxis:
            pass
        hi *= 2.0
        if hi > 1e6:
            raise NoSolution("could not bracket eta0")
    else:
        raise NoSolution("could not bracket eta0")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        try:
            e = end_eta(sgn * mid)
        except CrossedAxis:
            e = 0.0 if sgn > 0 else -0.0
        if sgn * e < sgn * eta:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * 1e-3:
            break
    eta0 = sgn * hi
    final = flow_integrate(z0, eta0, T, dt)[-1]
    if abs(final.eta - eta) > 100 * tol or abs(final.z - z) > tol:
        raise NoSolution(
            f"shooting missed the target: ({final.z}, {final.eta})")
    sol0 = dyson.solve_m(z0, 1j * eta0)
    assert abs(z0) ** 2 - 1.0 >= C1_SHOOT * T - 1e-12
    assert abs(eta0) / sol0.rho >= C2_SHOOT * T - 1e-12
    return z0, eta0


@dataclass
class DbmState:
    """Positive branch of the mirrored Hermitization eigenvalues.

    The full particle system is {+lam_i} U {-lam_i}; antisymmetry is exact
    by construction and ordering is restored after every step.
    """

    lam: np.ndarray
    t: float = 0.0

    @property
    def n(self):
        return self.lam.size

    def full(self):
        return np.concatenate([-self.lam[::-1], self.lam])


def dbm_step(state: DbmState, dt, rng) -> DbmState:
    """One Euler-Maruyama step of the mirrored DBM.

    d lam_i = db_i / sqrt(2n) + (1/2n) sum_{j != i} (lam_i - lam_j)^{-1} dt,

    with the sum running over all 2n mirrored particles and mirrored noise
    b_{-i} = -b_i.

    Raises
    ------
    Collision
        If two particles coincide within 1e-14 after the step; the caller
        should retry with dt/2 (see :func:`dbm_run`).
    """
    lam = state.lam
    n = lam.size
    diff_pp = lam[:, None] - lam[None, :]          # lam_i - lam_j, j > 0
    np.fill_diagonal(diff_pp, np.inf)
    diff_pm = lam[:, None] + lam[None, :]          # lam_i - (-lam_j); the
    # j = i entry 1/(2 lam_i) is the mirror particle, a genuine neighbour
    drift = (diff_pp ** -1).sum(axis=1) + (diff_pm ** -1).sum(axis=1)
    noise = rng.standard_normal(n)
    lam_new = lam + noise * math.sqrt(dt / (2.0 * n)) + drift * dt / (2.0 * n)
    lam_new = np.sort(np.abs(lam_new))
    if np.any(np.diff(lam_new) < 1e-14) or lam_new[0] < 1e-14:
        raise Collision(f"particles collided at t={state.t + dt}")
    return DbmState(lam=lam_new, t=state.t + dt)


def dbm_run(state: DbmState, t_total, dt, rng, max_halvings=40) -> DbmState:
    """Advance the DBM by t_total, halving dt on collisions."""
    remaining = float(t_total)
    while remaining > 1e-15:
        h = min(dt, remaining)
        halved = 0
        while True:
            try:
                new_state = dbm_step(state, h, rng)
                break
            except Collision:
                halved += 1
                if halved > max_halvings:
                    raise
                h /= 2.0
        remaining -= h
        state = new_state
    return state


def gamma_trajectory(states1, states2):
    """gamma_t along a pair of coupled trajectories (same time grid)."""
    out = []
    for s1, s2 in zip(states1, states2):
        out.append(abs(s1.z - s2.z) + abs(s1.eta) / s1.rho
                   + abs(s2.eta) / s2.rho)
    return np.array(out)
