"""The coupled fluid-disk evolution, one scalar subsystem per angular mode.

The linear evolution of a decomposed field splits into independent radial
systems: the tangential mean w (dynamic boundary condition with angular
parameter 1, coupling 2*pi/inertia), the two transformed mode-1 unknowns
z = d(psi)/dr + psi/r (dynamic, parameter 0, coupling 4*pi/(pi+m)), and for
every harmonic k >= 2 the pair z_k = r^-k d/dr(r^k psi_k) which obeys a
homogeneous-Dirichlet heat equation with shifted parameter k-1.  The z
variables are primary: the pressure never appears, the stream profiles are
recovered by explicit inversion after each step, and the disk velocity is
read off the boundary scalars (translation = half the mode-1 boundary
values, rotation = the w boundary value).

Viscosity enters the coefficients directly; since the systems are linear and
autonomous this is the exact time rescaling t -> nu t of the unit-viscosity
solver.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import dynbc
from .dynbc import DynBCParams, ScalarModeState
from .elliptic import (
    StreamPair,
    invert_order_k,
    invert_z,
    transform_order_k,
    z_transform,
)
from .errors import InvalidArgument, NonpositiveTime
from .fields import (
    ModeDecomposition,
    RigidState,
    added_mass_pairing,
    fluid_lp_norm,
    weighted_field_norm,
)
from .grid import PhysicalParams

__all__ = [
    "StokesState",
    "AsymptoticMomenta",
    "init_stokes",
    "step_stokes",
    "evolve_stokes",
    "lamb_oseen_profile",
    "lamb_oseen_disk_profile",
    "recover_mode1_pressure",
    "reconstruct_trajectory",
    "asymptotic_momenta",
    "state_axpy",
    "StokesRecorder",
    "subsystem_params",
    "decomp_to_sources",
]


@dataclass(frozen=True)
class StokesState:
    """Evolution state: the spectral field plus its primary z unknowns.

    z_higher[j] = (z for psi_{j+2} channel, z for phi_{j+2} channel).  The
    decomposition is re-derived from the z variables after every step, so
    transform/inversion consistency holds at all times."""

    decomp: ModeDecomposition
    w_state: ScalarModeState
    z_psi: ScalarModeState
    z_phi: ScalarModeState
    z_higher: tuple
    t: float
    params: PhysicalParams

    @property
    def grid(self):
        return self.decomp.grid

    @property
    def rigid(self):
        return self.decomp.rigid


@dataclass(frozen=True)
class AsymptoticMomenta:
    """Conserved data selecting the long-time profile: the total momentum
    (m - pi) * ell(0) and the scalar masses of the two mode-1 z systems."""

    M_vec: np.ndarray
    M_phi: float
    M_psi: float


def subsystem_params(params, kind, k=0, theta=0.5, startup_steps=2):
    """DynBCParams for one scalar subsystem of the coupled evolution."""
    if kind == "w":
        return DynBCParams(1, params.alpha_w, params.nu, "dynamic", theta, startup_steps)
    if kind == "z1":
        return DynBCParams(0, params.alpha0, params.nu, "dynamic", theta, startup_steps)
    if kind == "higher":
        return DynBCParams(k - 1, 1.0, params.nu, "dirichlet", theta, startup_steps)
    raise InvalidArgument(f"unknown subsystem kind {kind!r}")


def init_stokes(decomp, params, t=0.0):
    """Build the z variables from a decomposition.

    The boundary scalars come from the rigid data (ell_z = 2*ell, the trace
    relations), the fluid parts from the stream transforms; an initial
    no-slip mismatch shows up as a trace jump that the first step smooths,
    exactly as in the scalar solver.
    """
    grid = decomp.grid
    rig = decomp.rigid
    zp = z_transform(StreamPair(decomp.psi, float(decomp.psi[0])), grid)
    zf = z_transform(StreamPair(decomp.phi, float(decomp.phi[0])), grid, flip_sign=True)
    z_psi = ScalarModeState(grid, zp.y, 2.0 * float(rig.ell[1]), t)
    z_phi = ScalarModeState(grid, zf.y, 2.0 * float(rig.ell[0]), t)
    w_state = ScalarModeState(grid, decomp.w, float(rig.omega), t)
    zh = []
    for j in range(decomp.k_max - 1):
        k = j + 2
        zpk = transform_order_k(grid, decomp.higher[j, 0], k)
        zfk = -transform_order_k(grid, decomp.higher[j, 1], k)
        zh.append(
            (ScalarModeState(grid, zpk, 0.0, t), ScalarModeState(grid, zfk, 0.0, t))
        )
    return StokesState(decomp, w_state, z_psi, z_phi, tuple(zh), t, params)


def _rebuild_decomp(grid, w_state, z_psi, z_phi, z_higher):
    psi_pair = invert_z(z_psi, grid)
    phi_pair = invert_z(z_phi, grid)
    n_high = len(z_higher)
    higher = np.zeros((n_high, 2, grid.n_points))
    for j, (zpk, zfk) in enumerate(z_higher):
        k = j + 2
        higher[j, 0] = invert_order_k(grid, zpk.y, k)
        higher[j, 1] = -invert_order_k(grid, zfk.y, k)
    rigid = RigidState(
        np.array([z_phi.ell / 2.0, z_psi.ell / 2.0]), float(w_state.ell)
    )
    return ModeDecomposition(grid, w_state.y, psi_pair.psi, -phi_pair.psi, higher, rigid)


def _thread_count():
    try:
        return max(1, int(os.environ.get("DISKFLOW_THREADS", "1")))
    except ValueError:
        return 1


def step_stokes(state, dt, sources=None, first_step=False, theta=0.5):
    """Advance every scalar subsystem by dt and rebuild the decomposition.

    sources, if given, holds per-subsystem (fluid profile, boundary source)
    pairs as produced by decomp_to_sources; the subsystems remain exactly
    decoupled inside the solve.
    """
    params = state.params
    grid = state.grid
    src = sources or {}
    jobs = []
    jobs.append(("w", state.w_state, subsystem_params(params, "w", theta=theta), src.get("w")))
    jobs.append(("zp", state.z_psi, subsystem_params(params, "z1", theta=theta), src.get("z_psi")))
    jobs.append(("zf", state.z_phi, subsystem_params(params, "z1", theta=theta), src.get("z_phi")))
    for j, (zpk, zfk) in enumerate(state.z_higher):
        k = j + 2
        p_k = subsystem_params(params, "higher", k=k, theta=theta)
        hsrc = src.get("higher", ())
        s_p = hsrc[j][0] if j < len(hsrc) else None
        s_f = hsrc[j][1] if j < len(hsrc) else None
        jobs.append((f"zp{k}", zpk, p_k, s_p))
        jobs.append((f"zf{k}", zfk, p_k, s_f))

    def run(job):
        _, st, p, s = job
        return dynbc.step(st, p, dt, source=s, first_step=first_step)

    nthreads = _thread_count()
    if nthreads > 1 and len(jobs) > 3:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    w_state, z_psi, z_phi = results[0], results[1], results[2]
    zh = tuple((results[3 + 2 * j], results[4 + 2 * j]) for j in range(len(state.z_higher)))
    decomp = _rebuild_decomp(grid, w_state, z_psi, z_phi, zh)
    return StokesState(decomp, w_state, z_psi, z_phi, zh, state.t + dt, params)


def evolve_stokes(state0, t_end, dt, observer=None, observe_times=None):
    """March the coupled linear system from state0.t to t_end."""
    if t_end < state0.t:
        raise InvalidArgument("t_end must be >= the current time")
    n_steps = int(round((t_end - state0.t) / dt))
    if abs(state0.t + n_steps * dt - t_end) > 1e-9 * max(dt, 1.0):
        raise InvalidArgument("t_end - t0 must be an integer number of steps")
    targets = None
    next_target = None
    if observe_times is not None:
        targets = iter(np.sort(np.asarray(observe_times, dtype=float)))
        next_target = next(targets, None)
    state = state0

    def notify(st):
        nonlocal next_target
        if observer is None:
            return
        if observe_times is None:
            observer(st)
            return
        while next_target is not None and next_target <= st.t + 1e-9 * dt:
            observer(st)
            next_target = next(targets, None)

    notify(state)
    for j in range(n_steps):
        # startup smoothing only for fresh (t = 0) states: exact composition
        state = step_stokes(state, dt, first_step=(j == 0 and state.t == 0.0))
        notify(state)
    return state


def state_axpy(ca, a, cb=0.0, b=None):
    """Linear combination of Stokes states (all channels are linear)."""
    from .fields import decomp_axpy

    if b is None:
        b = a
        cb = 0.0
    decomp = decomp_axpy(ca, a.decomp, cb, b.decomp)
    grid = a.grid
    t = a.t

    def mix(sa, sb):
        return ScalarModeState(grid, ca * sa.y + cb * sb.y, ca * sa.ell + cb * sb.ell, t)

    zh = tuple(
        (mix(pa, pb), mix(fa, fb))
        for (pa, fa), (pb, fb) in zip(a.z_higher, b.z_higher)
    )
    return StokesState(
        decomp,
        mix(a.w_state, b.w_state),
        mix(a.z_psi, b.z_psi),
        mix(a.z_phi, b.z_phi),
        zh,
        t,
        a.params,
    )


def decomp_to_sources(decomp):
    """Transform a forcing field (e.g. the projected convection term) into
    per-subsystem (fluid profile, boundary source) pairs.

    The boundary ODEs are forced by the rigid part of the projection: the
    rotation rate feeds the w system and twice the translation components
    feed the mode-1 z systems (their boundary scalars are 2*ell)."""
    grid = decomp.grid
    rig = decomp.rigid
    zp = z_transform(StreamPair(decomp.psi, float(decomp.psi[0])), grid)
    zf = z_transform(StreamPair(decomp.phi, float(decomp.phi[0])), grid, flip_sign=True)
    out = {
        "w": (decomp.w, float(rig.omega)),
        "z_psi": (zp.y, 2.0 * float(rig.ell[1])),
        "z_phi": (zf.y, 2.0 * float(rig.ell[0])),
        "higher": tuple(
            (
                (transform_order_k(grid, decomp.higher[j, 0], j + 2), 0.0),
                (-transform_order_k(grid, decomp.higher[j, 1], j + 2), 0.0),
            )
            for j in range(decomp.k_max - 1)
        ),
    }
    return out


def lamb_oseen_profile(grid, t, nu, M_vec):
    """The self-similar dipole carrying momentum M_vec at time t.

    Stream profile (1 - exp(-r^2/(4 nu t))) / (2 pi r); the cos channel is
    weighted by the y-momentum and the sin channel by minus the x-momentum.
    """
    if t <= 0:
        raise NonpositiveTime(f"t must be > 0, got {t}")
    M_vec = np.asarray(M_vec, dtype=float).reshape(2)
    r = grid.nodes
    prof = (1.0 - np.exp(-(r * r) / (4.0 * nu * t))) / (2.0 * math.pi * r)
    psi = M_vec[1] * prof
    phi = -M_vec[0] * prof
    rigid = RigidState(np.array([-phi[0], psi[0]]), 0.0)
    return ModeDecomposition(
        grid, np.zeros_like(r), psi, phi, np.zeros((0, 2, grid.n_points)), rigid
    )


def lamb_oseen_disk_profile(grid, t, nu, M_vec):
    """Disk-corrected variant of the asymptotic profile:
    (exp(-1/(4 nu t)) - exp(-r^2/(4 nu t)) + 1/(4 nu t)) / (2 pi r).

    Differs from lamb_oseen_profile by O(t^-2) in every fluid norm."""
    if t <= 0:
        raise NonpositiveTime(f"t must be > 0, got {t}")
    M_vec = np.asarray(M_vec, dtype=float).reshape(2)
    r = grid.nodes
    s = 1.0 / (4.0 * nu * t)
    prof = (math.exp(-s) - np.exp(-(r * r) * s) + s) / (2.0 * math.pi * r)
    psi = M_vec[1] * prof
    phi = -M_vec[0] * prof
    rigid = RigidState(np.array([-phi[0], psi[0]]), 0.0)
    return ModeDecomposition(
        grid, np.zeros_like(r), psi, phi, np.zeros((0, 2, grid.n_points)), rigid
    )


def recover_mode1_pressure(state):
    """Boundary coefficients of the mode-1 pressures (full pressure = beta/r).

    From the boundary flux balance, beta = nu * dz/dr(1) * (pi - m)/(pi + m)
    for each channel; equivalently ell' - nu*dz/dr(1) with ell' taken from
    the boundary ODE.  Returns (beta_q, beta_p) for the (sin, cos) channels.
    """
    params = state.params
    grid = state.grid
    fac = params.nu * (math.pi - params.m) / (math.pi + params.m)
    beta_q = fac * grid.boundary_derivative(state.z_psi.y)
    beta_p = fac * grid.boundary_derivative(state.z_phi.y)
    return beta_q, beta_p


def reconstruct_trajectory(rigid_series, dt=None, times=None):
    """Integrate the velocity series into center positions and angles.

    The body-to-lab change of frame is bookkeeping only: the disk is
    rotation invariant, so no field rotation is applied.  Trapezoid in time
    on a uniform (dt) or explicit (times) sampling."""
    ells = np.array([rs.ell for rs in rigid_series], dtype=float)
    omegas = np.array([rs.omega for rs in rigid_series], dtype=float)
    if times is None:
        if dt is None:
            raise InvalidArgument("need dt or times")
        times = dt * np.arange(len(rigid_series))
    times = np.asarray(times, dtype=float)
    dts = np.diff(times)
    h = np.zeros_like(ells)
    th = np.zeros_like(omegas)
    h[1:] = np.cumsum(0.5 * dts[:, None] * (ells[:-1] + ells[1:]), axis=0)
    th[1:] = np.cumsum(0.5 * dts * (omegas[:-1] + omegas[1:]))
    return [
        RigidState(ells[i], omegas[i], h[i], th[i]) for i in range(len(rigid_series))
    ]


def asymptotic_momenta(state):
    """Quadrature masses of the two mode-1 z systems plus (m - pi) * ell.

    For stream profiles with decaying tails the quadrature and closed-form
    routes agree; the masses are step invariants of the evolution."""
    params = state.params
    p0 = subsystem_params(params, "z1")
    M_phi = dynbc.mass(state.z_phi, p0)
    M_psi = dynbc.mass(state.z_psi, p0)
    M_vec = (params.m - math.pi) * np.asarray(state.rigid.ell, dtype=float)
    return AsymptoticMomenta(M_vec, M_phi, M_psi)


class StokesRecorder:
    """Observer for coupled runs: velocities, field norms, masses, profile
    errors against the self-similar dipole, and the added-mass residual."""

    def __init__(self, params, p_values=(2.0,), M_vec=None, profile_ps=(2.0,),
                 with_added_mass=True):
        self.params = params
        self.p_values = tuple(p_values)
        self.M_vec = None if M_vec is None else np.asarray(M_vec, dtype=float)
        self.profile_ps = tuple(profile_ps)
        self.with_added_mass = with_added_mass
        self.t = []
        self.ell = []
        self.omega = []
        self.norms = []
        self.profile_err = []
        self.mass_phi = []
        self.mass_psi = []
        self.added_mass_resid = []

    def __call__(self, state):
        d = state.decomp
        self.t.append(state.t)
        self.ell.append(np.array(d.rigid.ell))
        self.omega.append(d.rigid.omega)
        self.norms.append(
            [weighted_field_norm(state.grid, d, p, self.params) for p in self.p_values]
        )
        if self.M_vec is not None and state.t > 0:
            ref = lamb_oseen_profile(state.grid, state.t, self.params.nu, self.M_vec)
            from .fields import decomp_axpy

            diff = decomp_axpy(1.0, d, -1.0, ref)
            self.profile_err.append([fluid_lp_norm(diff, p) for p in self.profile_ps])
        else:
            self.profile_err.append([math.nan] * len(self.profile_ps))
        mom = asymptotic_momenta(state)
        self.mass_phi.append(mom.M_phi)
        self.mass_psi.append(mom.M_psi)
        if self.with_added_mass:
            pair = added_mass_pairing(d, 1)
            self.added_mass_resid.append(pair + math.pi * d.rigid.ell[0])
        else:
            self.added_mass_resid.append(math.nan)

    def header(self):
        cols = ["t", "ell_x", "ell_y", "omega"]
        cols += [f"norm_L{dynbc._fmt_p(p)}" for p in self.p_values]
        cols += [f"profile_err_L{dynbc._fmt_p(p)}" for p in self.profile_ps]
        cols += ["mass_phi", "mass_psi", "added_mass_resid"]
        return ", ".join(cols)

    def rows(self):
        for i, t in enumerate(self.t):
            yield [
                t,
                self.ell[i][0],
                self.ell[i][1],
                self.omega[i],
                *self.norms[i],
                *self.profile_err[i],
                self.mass_phi[i],
                self.mass_psi[i],
                self.added_mass_resid[i],
            ]

    def write(self, path, config_comment=None):
        with open(path, "w") as fh:
            if config_comment:
                for line in str(config_comment).splitlines():
                    fh.write(f"# {line}\n")
            fh.write(self.header() + "\n")
            for row in self.rows():
                fh.write(", ".join(f"{v:.17e}" for v in row) + "\n")
