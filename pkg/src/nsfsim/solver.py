"""First-order upwind finite-volume scheme for the regularized system in 1D.

The scheme advances (rho, rho u, rho e_delta) with

* upwind convective fluxes, the donor cell picked by the sign of the face
  velocity; inflow faces donate the prescribed density rho_b, outflow faces
  the interior trace;
* central face-averaged pressure p_delta = p + delta (rho^Gamma + rho^2);
* face-centered stress (mu(theta) + delta theta) 2(1 - 1/d) du/dx
  + eta(theta) du/dx and heat flux -(kappa + delta (theta^Gamma + 1/theta))
  dtheta/dx;
* mass diffusion epsilon with a Robin inflow condition whose diffusive face
  flux is (rho_b - rho) [u_b . n]^-;
* the prescribed total energy flux F_ib on inflow faces, insulation on
  walls and outflow;
* volume sources S_delta : grad u - p div u
  + eps delta (Gamma rho^{Gamma-2} + 2) |grad rho|^2 + delta / theta^2
  - eps theta^5, plus the momentum correction -eps grad rho . grad u.

Setting epsilon = delta = 0 recovers the target system.  Time stepping is
a two-stage strong-stability-preserving Runge-Kutta pair with step
rejection: a stage that loses positivity (density or temperature floors,
or a failed temperature recovery) halves dt and retries.

Every budget-relevant face flux and volume integrand is accumulated during
the run with the same stage weights as the update itself, so the discrete
mass identity telescopes to rounding and the audits in
:mod:`nsfsim.budgets` separate scheme error from quadrature error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Union

import numpy as np

from .boundary import BoundaryFace, BoundarySpec, FaceKind
from .mesh import Mesh1D
from .thermo import (EosSpec, TransportSpec, OutOfDomainError,
                     energy_theta_slope, pressure, sound_speed_sq,
                     specific_entropy, specific_internal_energy,
                     temperature_from_energy_density)


class StepRejected(Exception):
    """A stage lost positivity; retry with a smaller dt."""


class RunAborted(RuntimeError):
    """Too many consecutive step rejections; carries the partial trajectory."""

    def __init__(self, message, trajectory=None, state=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.state = state


@dataclass(frozen=True)
class SolverConfig:
    """Regularization levels, stress dimension factor, and stepping control."""

    epsilon: float = 0.0
    delta: float = 0.0
    Gamma: float = 4.0
    d: int = 3
    cfl: float = 0.4
    t_end: float = 1.0
    g: Union[float, Callable, None] = 0.0
    rho_floor: float = 1e-10
    theta_floor: float = 1e-10
    theta_bar: float = 1.0
    max_rejects: int = 20
    energy_source: Optional[Callable] = None

    def __post_init__(self):
        if self.epsilon < 0.0 or self.delta < 0.0:
            raise ValueError("epsilon and delta must be nonnegative")
        if not self.Gamma > 2.0:
            raise ValueError(f"Gamma must exceed 2, got {self.Gamma}")
        if self.d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {self.d}")
        if not (0.0 < self.cfl < 1.0):
            raise ValueError(f"cfl must lie in (0,1), got {self.cfl}")
        if self.t_end < 0.0:
            raise ValueError("t_end must be nonnegative")

    def body_force(self, t: float, x: np.ndarray) -> np.ndarray:
        if self.g is None:
            return np.zeros_like(x)
        if callable(self.g):
            return np.asarray(self.g(t, x), dtype=float) * np.ones_like(x)
        return float(self.g) * np.ones_like(x)

    @property
    def deviatoric_factor(self) -> float:
        return 2.0 * (1.0 - 1.0 / self.d)


@dataclass(frozen=True)
class FieldState:
    """Per-cell fields (rho, u, theta) at one time."""

    rho: np.ndarray
    u: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        for name in ("rho", "u", "theta"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=float))

    def copy(self) -> "FieldState":
        return FieldState(self.rho.copy(), self.u.copy(), self.theta.copy())


def viscous_stress(ts: TransportSpec, cfg: SolverConfig, theta, du_dx):
    """1D normal viscous stress (mu + delta theta) 2(1 - 1/d) du/dx + eta du/dx."""
    theta = np.asarray(theta, dtype=float)
    du_dx = np.asarray(du_dx, dtype=float)
    coeff = (ts.mu(theta) + cfg.delta * theta) * cfg.deviatoric_factor + ts.eta(theta)
    return coeff * du_dx


def heat_flux(ts: TransportSpec, cfg: SolverConfig, theta, dtheta_dx):
    """Regularized heat flux -(kappa + delta (theta^Gamma + 1/theta)) dtheta/dx."""
    theta = np.asarray(theta, dtype=float)
    cond = ts.kappa(theta)
    if cfg.delta > 0.0:
        cond = cond + cfg.delta * (theta ** cfg.Gamma + 1.0 / theta)
    return -cond * np.asarray(dtheta_dx, dtype=float)


def boundary_velocity_extension(mesh: Mesh1D, bspec: BoundarySpec):
    """Linear interior extension of the boundary velocity and its gradient."""
    ul, ur = bspec.left.u_b, bspec.right.u_b
    x = mesh.centers
    grad = (ur - ul) / mesh.measure
    return ul + grad * (x - mesh.x_left), grad


def _ghosts(state: FieldState, bspec: BoundarySpec):
    """One ghost layer per side following the face class."""
    rho, u, theta = state.rho, state.u, state.theta
    vals = []
    for f, idx in ((bspec.left, 0), (bspec.right, -1)):
        if f.kind is FaceKind.IN:
            vals.append((f.rho_b, f.u_b, theta[idx]))
        elif f.kind is FaceKind.OUT:
            vals.append((rho[idx], u[idx], theta[idx]))
        else:
            vals.append((rho[idx], 2.0 * f.u_b - u[idx], theta[idx]))
    (rl, ul_, tl), (rr, ur_, tr) = vals
    rho_p = np.concatenate([[rl], rho, [rr]])
    u_p = np.concatenate([[ul_], u, [ur_]])
    theta_p = np.concatenate([[tl], theta, [tr]])
    return rho_p, u_p, theta_p


@dataclass
class StageRecord:
    """Named budget integrands of one RHS evaluation.

    ``scalars`` hold instantaneous rates (volume and boundary integrals);
    time-weighted sums of them reproduce the scheme's own updates exactly.
    ``cells`` holds per-cell diagnostics for tests.
    """

    scalars: dict = dc_field(default_factory=dict)
    cells: dict = dc_field(default_factory=dict)


def convective_fluxes(state: FieldState, mesh: Mesh1D, bspec: BoundarySpec,
                      eos: EosSpec, cfg: SolverConfig):
    """Per-face upwind fluxes (mass, momentum, energy, entropy), x-direction.

    Energy and entropy transport rho e_delta and rho s_delta.  Inflow faces
    donate (rho_b, u_b, interior theta); outflow faces donate interior
    traces; the returned energy flux is purely convective (the prescribed
    total inflow flux replaces it in the update).
    """
    rho_p, u_p, theta_p = _ghosts(state, bspec)
    n = mesh.n_cells
    u_face = 0.5 * (u_p[:-1] + u_p[1:])
    u_face[0] = bspec.left.u_b
    u_face[-1] = bspec.right.u_b

    e_p = specific_internal_energy(eos, rho_p, theta_p)
    w_p = rho_p * (e_p + cfg.delta * theta_p)
    s_p = rho_p * specific_entropy(eos, rho_p, theta_p)
    if cfg.delta > 0.0:
        s_p = s_p + cfg.delta * rho_p * np.log(theta_p)

    take_left = u_face >= 0.0
    rho_up = np.where(take_left, rho_p[:-1], rho_p[1:])
    u_up = np.where(take_left, u_p[:-1], u_p[1:])
    w_up = np.where(take_left, w_p[:-1], w_p[1:])
    s_up = np.where(take_left, s_p[:-1], s_p[1:])

    f_mass = rho_up * u_face
    f_mom = f_mass * u_up
    f_energy = w_up * u_face
    f_entropy = s_up * u_face
    assert f_mass.shape == (n + 1,)
    return f_mass, f_mom, f_energy, f_entropy, u_face


def _stage_rhs(mesh: Mesh1D, eos: EosSpec, ts: TransportSpec, cfg: SolverConfig,
               bspec: BoundarySpec, t: float, state: FieldState):
    """One right-hand-side evaluation; returns (drho, dm, dW, StageRecord)."""
    n = mesh.n_cells
    h = mesh.h
    rho, u, theta = state.rho, state.u, state.theta
    rho_p, u_p, theta_p = _ghosts(state, bspec)

    f_mass, f_mom, f_energy, f_entropy, u_face = convective_fluxes(
        state, mesh, bspec, eos, cfg)

    # face-centered diffusive pieces
    theta_face = 0.5 * (theta_p[:-1] + theta_p[1:])
    du_face = (u_p[1:] - u_p[:-1]) / h
    dth_face = (theta_p[1:] - theta_p[:-1]) / h
    stress_face = viscous_stress(ts, cfg, theta_face, du_face)
    q_face = heat_flux(ts, cfg, theta_face, dth_face)
    q_face[0] = 0.0
    q_face[-1] = 0.0  # insulation on walls/outflow; inflow handled via F_ib

    # cell pressures and face averages (ghost-padded)
    p_p = pressure(eos, rho_p, theta_p)
    if cfg.delta > 0.0:
        p_delta_p = p_p + cfg.delta * (rho_p ** cfg.Gamma + rho_p ** 2)
    else:
        p_delta_p = p_p
    p_face = 0.5 * (p_delta_p[:-1] + p_delta_p[1:])

    # mass diffusion and the Robin inflow flux (x-direction fluxes)
    diff_mass = np.zeros(n + 1)
    if cfg.epsilon > 0.0:
        diff_mass[1:-1] = -cfg.epsilon * (rho[1:] - rho[:-1]) / h
        for f, idx, pos in ((bspec.left, 0, 0), (bspec.right, -1, n)):
            if f.kind is FaceKind.IN:
                robin_out = (f.rho_b - rho[idx]) * f.u_dot_n
                diff_mass[pos] = f.normal * robin_out

    # energy flux with boundary overrides
    e_flux = f_energy + q_face
    for f, pos in ((bspec.left, 0), (bspec.right, n)):
        if f.kind is FaceKind.IN:
            e_flux[pos] = f.normal * f.F_ib
        elif f.kind is FaceKind.WALL:
            e_flux[pos] = 0.0
        # OUT: convective interior trace, zero heat flux (already in place)

    mass_flux = f_mass + diff_mass

    drho = -(mass_flux[1:] - mass_flux[:-1]) / h
    dm = (-(f_mom[1:] - f_mom[:-1]) / h
          - (p_face[1:] - p_face[:-1]) / h
          + (stress_face[1:] - stress_face[:-1]) / h)

    x = mesh.centers
    g = cfg.body_force(t, x)
    dm = dm + rho * g

    grad_rho_c = (rho_p[2:] - rho_p[:-2]) / (2.0 * h)
    if cfg.epsilon > 0.0:
        grad_u_c = (u_p[2:] - u_p[:-2]) / (2.0 * h)
        dm = dm - cfg.epsilon * grad_rho_c * grad_u_c

    # internal energy sources
    div_u = (u_face[1:] - u_face[:-1]) / h
    p_cell = p_p[1:-1]
    diss_cell = 0.5 * (stress_face[:-1] * du_face[:-1] + stress_face[1:] * du_face[1:])
    heat_diss_cell = -0.5 * (q_face[:-1] * dth_face[:-1] + q_face[1:] * dth_face[1:])
    source = diss_cell - p_cell * div_u
    if cfg.energy_source is not None:
        mms = np.asarray(cfg.energy_source(t, x), dtype=float) * np.ones_like(x)
        source = source + mms
        mms_total = mesh.integrate(mms)
        mms_over_theta = mesh.integrate(mms / theta)
    else:
        mms_total = 0.0
        mms_over_theta = 0.0
    if cfg.delta > 0.0:
        source = source + cfg.delta / theta ** 2
        if cfg.epsilon > 0.0:
            source = source + (cfg.epsilon * cfg.delta
                               * (cfg.Gamma * rho ** (cfg.Gamma - 2.0) + 2.0)
                               * grad_rho_c ** 2)
    if cfg.epsilon > 0.0:
        source = source - cfg.epsilon * theta ** 5

    dW = -(e_flux[1:] - e_flux[:-1]) / h + source

    rec = _record_stage(mesh, eos, ts, cfg, bspec, t, state, rho_p, u_p, theta_p,
                        mass_flux, f_mass, f_entropy, e_flux, u_face, stress_face,
                        q_face, dth_face, du_face, p_cell, p_delta_p, div_u,
                        diss_cell, heat_diss_cell, grad_rho_c, g, mms_total, mms_over_theta)
    rec.cells["div_u"] = div_u
    rec.cells["dissipation"] = diss_cell
    rec.cells["p_div_u"] = p_cell * div_u
    rec.cells["source"] = source
    rec.cells["drho"] = drho
    rec.cells["dm"] = dm
    rec.cells["dW"] = dW
    return drho, dm, dW, rec


def _record_stage(mesh, eos, ts, cfg, bspec, t, state, rho_p, u_p, theta_p,
                  mass_flux, f_mass, f_entropy, e_flux, u_face, stress_face,
                  q_face, dth_face, du_face, p_cell, p_delta_p, div_u,
                  diss_cell, heat_diss_cell, grad_rho_c, g, mms_total, mms_over_theta):
    """Instantaneous budget integrands (outward-normal boundary values)."""
    n = mesh.n_cells
    h = mesh.h
    rho, u, theta = state.rho, state.u, state.theta
    sc = {}

    ub_ext, grad_ub = boundary_velocity_extension(mesh, bspec)

    # --- boundary terms ---
    sc["mass_bdry"] = -mass_flux[0] + mass_flux[-1]
    sc["mass_in_conv"] = 0.0
    sc["mass_out_conv"] = 0.0
    sc["mass_robin"] = 0.0
    sc["energy_bdry_in"] = 0.0
    sc["energy_out_conv"] = 0.0
    sc["energy_out_delta"] = 0.0
    sc["energy_in_gamma_breg"] = 0.0
    sc["energy_in_rho_sq"] = 0.0
    sc["energy_in_rho_b_gamma"] = 0.0
    sc["entropy_out_conv"] = 0.0
    sc["entropy_in"] = 0.0
    sc["energy_bdry_total"] = -e_flux[0] + e_flux[-1]
    sc["apriori_in_coercive"] = 0.0
    sc["apriori_out_ballistic"] = 0.0

    gm = cfg.Gamma
    for f, idx, pos in ((bspec.left, 0, 0), (bspec.right, -1, n)):
        udn = f.u_dot_n
        th_tr = theta[idx]
        if f.kind is FaceKind.IN:
            sc["mass_in_conv"] += f.rho_b * udn
            sc["mass_robin"] += (f.rho_b - rho[idx]) * udn
            sc["energy_bdry_in"] += f.F_ib
            rb, rc = f.rho_b, rho[idx]
            sc["energy_in_gamma_breg"] += (rb ** gm / (gm - 1.0)
                                           - gm / (gm - 1.0) * rc ** (gm - 1.0) * (rb - rc)
                                           - rc ** gm / (gm - 1.0)) * udn
            sc["energy_in_rho_sq"] += (rc - rb) ** 2 * udn
            sc["energy_in_rho_b_gamma"] += rb ** gm / (gm - 1.0) * udn
            e_b = float(specific_internal_energy(eos, rb, th_tr))
            s_b = float(specific_entropy(eos, rb, th_tr))
            ent_in = -f.F_ib / th_tr + (e_b / th_tr - s_b) * rb * udn
            if cfg.delta > 0.0:
                ent_in += cfg.delta * rb * (1.0 - math.log(th_tr)) * udn
            sc["entropy_in"] += ent_in
            sc["apriori_in_coercive"] += 1.0 / th_tr + th_tr ** 3 * abs(udn)
        elif f.kind is FaceKind.OUT:
            rc = rho[idx]
            e_c = float(specific_internal_energy(eos, rc, th_tr))
            s_c = float(specific_entropy(eos, rc, th_tr))
            e_del = e_c + cfg.delta * th_tr
            s_del = s_c + (cfg.delta * math.log(th_tr) if cfg.delta > 0.0 else 0.0)
            sc["mass_out_conv"] += rc * udn
            sc["energy_out_conv"] += rc * e_del * udn
            sc["energy_out_delta"] += (rc ** gm / (gm - 1.0) + rc ** 2) * udn
            sc["entropy_out_conv"] += rc * s_del * udn
            sc["apriori_out_ballistic"] += rc * (e_del - cfg.theta_bar * s_del) * udn

    # --- volume terms ---
    inv_theta = 1.0 / theta
    sc["S_grad_u"] = mesh.integrate(diss_cell)
    sc["p_div_u"] = mesh.integrate(p_cell * div_u)
    # (1/theta)(S:grad u - q.grad theta/theta): the heat part carries 1/theta^2
    diss_weighted = inv_theta * diss_cell + inv_theta ** 2 * heat_diss_cell
    sc["dissipation_no_delta"] = mesh.integrate(diss_weighted)
    if cfg.delta > 0.0:
        diss_weighted = diss_weighted + cfg.delta * inv_theta ** 3
    sc["dissipation"] = mesh.integrate(diss_weighted)
    sc["theta4"] = mesh.integrate(theta ** 4)
    sc["theta5"] = mesh.integrate(theta ** 5)
    sc["inv_theta2"] = mesh.integrate(inv_theta ** 2)
    sc["inv_theta3"] = mesh.integrate(inv_theta ** 3)
    sc["grad_rho_sq_gamma"] = mesh.integrate(
        (cfg.Gamma * rho ** (cfg.Gamma - 2.0) + 2.0) * grad_rho_c ** 2)
    sc["grad_rho_sq_gamma_over_theta"] = mesh.integrate(
        inv_theta * (cfg.Gamma * rho ** (cfg.Gamma - 2.0) + 2.0) * grad_rho_c ** 2)

    # epsilon-level entropy correction: grad rho . grad(e_d/theta - s_d + p/(rho theta))
    e_cell = specific_internal_energy(eos, rho_p[1:-1], theta_p[1:-1])
    s_cell = specific_entropy(eos, rho_p[1:-1], theta_p[1:-1])
    if cfg.delta > 0.0:
        e_cell = e_cell + cfg.delta * theta_p[1:-1]
        s_cell = s_cell + cfg.delta * np.log(theta_p[1:-1])
    g_pad = np.empty(n + 2)
    g_pad[1:-1] = e_cell / theta - s_cell + p_cell / (rho * theta)
    g_pad[0] = g_pad[1]
    g_pad[-1] = g_pad[-2]
    grad_g = (g_pad[2:] - g_pad[:-2]) / (2.0 * h)
    sc["grad_rho_grad_g"] = mesh.integrate(grad_rho_c * grad_g)

    # total-energy budget terms built on the boundary-velocity extension
    stress_cell = 0.5 * (stress_face[:-1] + stress_face[1:])
    sc["S_grad_ub"] = mesh.integrate(stress_cell * grad_ub) if grad_ub != 0.0 else 0.0
    sc["conv_p_grad_ub"] = mesh.integrate(
        (rho * u * u + p_delta_p[1:-1]) * grad_ub) if grad_ub != 0.0 else 0.0
    sc["rho_u_grad_ub2"] = mesh.integrate(
        rho * u * 2.0 * ub_ext * grad_ub) if grad_ub != 0.0 else 0.0
    sc["rho_g_rel_u"] = mesh.integrate(rho * g * (u - ub_ext))
    if cfg.epsilon > 0.0:
        du_rel = (u_p[2:] - u_p[:-2]) / (2.0 * h) - grad_ub
        sc["eps_mom_ub"] = mesh.integrate(grad_rho_c * du_rel * ub_ext)
    else:
        sc["eps_mom_ub"] = 0.0
    sc["mms_energy_source"] = mms_total
    sc["mms_energy_source_over_theta"] = mms_over_theta
    return StageRecord(scalars=sc)


# ---------------------------------------------------------------------------
# temperature recovery and single forward-Euler building blocks
# ---------------------------------------------------------------------------


def _recover_theta(eos: EosSpec, cfg: SolverConfig, rho, w, theta_guess):
    """Invert rho e_delta(rho, theta) = w per cell; Newton with robust fallback."""
    if np.any(rho < cfg.rho_floor):
        raise StepRejected("density fell below its floor")
    theta = np.asarray(theta_guess, dtype=float).copy()
    delta = cfg.delta
    for _ in range(40):
        f = rho * (specific_internal_energy(eos, rho, theta) + delta * theta) - w
        df = rho * (energy_theta_slope(eos, rho, theta) + delta)
        step = f / df
        theta_new = theta - step
        theta = np.where(theta_new > 0.1 * theta, theta_new, 0.1 * theta)
        if np.max(np.abs(step) / (theta + 1e-300)) < 1e-14:
            break
    f = rho * (specific_internal_energy(eos, rho, theta) + delta * theta) - w
    bad = np.abs(f) > 1e-9 * (np.abs(w) + 1.0)
    if np.any(bad):
        try:
            theta_fb = temperature_from_energy_density(
                eos, rho[bad], w[bad], delta=delta)
        except OutOfDomainError as err:
            raise StepRejected(f"temperature recovery failed: {err}") from None
        theta = theta.copy()
        theta[bad] = theta_fb
    if np.any(theta < cfg.theta_floor):
        raise StepRejected("temperature fell below its floor")
    return theta


def _conserved(eos: EosSpec, cfg: SolverConfig, state: FieldState):
    rho, u, theta = state.rho, state.u, state.theta
    w = rho * (specific_internal_energy(eos, rho, theta) + cfg.delta * theta)
    return rho.copy(), rho * u, w


def _primitive(eos: EosSpec, cfg: SolverConfig, rho, m, w, theta_guess):
    theta = _recover_theta(eos, cfg, rho, w, theta_guess)
    return FieldState(rho=rho, u=m / rho, theta=theta)


def continuity_step(state: FieldState, mesh: Mesh1D, eos: EosSpec,
                    ts: TransportSpec, cfg: SolverConfig, bspec: BoundarySpec,
                    dt: float, t: float = 0.0) -> np.ndarray:
    """Forward-Euler density update (upwind transport + mass diffusion)."""
    drho, _, _, _ = _stage_rhs(mesh, eos, ts, cfg, bspec, t, state)
    rho_new = state.rho + dt * drho
    if np.any(rho_new < cfg.rho_floor):
        raise StepRejected("density fell below its floor")
    return rho_new


def momentum_step(state: FieldState, mesh: Mesh1D, eos: EosSpec,
                  ts: TransportSpec, cfg: SolverConfig, bspec: BoundarySpec,
                  dt: float, t: float = 0.0) -> np.ndarray:
    """Forward-Euler momentum update; returns the new momentum field."""
    _, dm, _, _ = _stage_rhs(mesh, eos, ts, cfg, bspec, t, state)
    return state.rho * state.u + dt * dm


def internal_energy_step(state: FieldState, mesh: Mesh1D, eos: EosSpec,
                         ts: TransportSpec, cfg: SolverConfig, bspec: BoundarySpec,
                         dt: float, t: float = 0.0) -> np.ndarray:
    """Forward-Euler energy update; returns the new temperature field."""
    _, _, dW, _ = _stage_rhs(mesh, eos, ts, cfg, bspec, t, state)
    rho, _, w = _conserved(eos, cfg, state)
    return _recover_theta(eos, cfg, rho, w + dt * dW, state.theta)


def temperature_subproblem_step(state: FieldState, mesh: Mesh1D, eos: EosSpec,
                                ts: TransportSpec, cfg: SolverConfig,
                                bspec: BoundarySpec, dt: float,
                                t: float = 0.0) -> np.ndarray:
    """Advance only the energy balance for frozen (rho, u); returns theta."""
    return internal_energy_step(state, mesh, eos, ts, cfg, bspec, dt, t=t)


def stable_dt(state: FieldState, mesh: Mesh1D, eos: EosSpec, ts: TransportSpec,
              cfg: SolverConfig) -> float:
    """CFL-limited step from acoustic, viscous, thermal and mass diffusion."""
    rho, u, theta = state.rho, state.u, state.theta
    h = mesh.h
    cs = np.sqrt(sound_speed_sq(eos, rho, theta))
    dt_a = h / np.max(np.abs(u) + cs)
    nu = ((ts.mu(theta) + cfg.delta * theta) * cfg.deviatoric_factor
          + ts.eta(theta)) / rho
    cond = ts.kappa(theta)
    if cfg.delta > 0.0:
        cond = cond + cfg.delta * (theta ** cfg.Gamma + 1.0 / theta)
    chi = cond / (rho * (energy_theta_slope(eos, rho, theta) + cfg.delta))
    dt_nu = h * h / (2.0 * max(np.max(nu), 1e-300))
    dt_chi = h * h / (2.0 * max(np.max(chi), 1e-300))
    dt = min(dt_a, dt_nu, dt_chi)
    if cfg.epsilon > 0.0:
        dt = min(dt, h * h / (2.0 * cfg.epsilon))
    return cfg.cfl * float(dt)


def _heun_step(mesh, eos, ts, cfg, bspec, t, state, dt):
    """One SSP-RK2 step; returns (new_state, averaged accumulator increments)."""
    rho0, m0, w0 = _conserved(eos, cfg, state)
    d1rho, d1m, d1w, rec1 = _stage_rhs(mesh, eos, ts, cfg, bspec, t, state)
    st1 = _primitive(eos, cfg, rho0 + dt * d1rho, m0 + dt * d1m, w0 + dt * d1w,
                     state.theta)
    d2rho, d2m, d2w, rec2 = _stage_rhs(mesh, eos, ts, cfg, bspec, t + dt, st1)
    rho_n = rho0 + 0.5 * dt * (d1rho + d2rho)
    m_n = m0 + 0.5 * dt * (d1m + d2m)
    w_n = w0 + 0.5 * dt * (d1w + d2w)
    new_state = _primitive(eos, cfg, rho_n, m_n, w_n, st1.theta)
    inc = {k: 0.5 * dt * (rec1.scalars[k] + rec2.scalars[k]) for k in rec1.scalars}
    return new_state, inc


def step(state: FieldState, mesh: Mesh1D, eos: EosSpec, ts: TransportSpec,
         cfg: SolverConfig, bspec: BoundarySpec, dt: float, t: float = 0.0):
    """One adaptive SSP-RK2 step; halves dt on rejection (up to max_rejects).

    Returns (new_state, dt_used, accumulator_increments, n_rejects).
    """
    rejects = 0
    while True:
        try:
            new_state, inc = _heun_step(mesh, eos, ts, cfg, bspec, t, state, dt)
            return new_state, dt, inc, rejects
        except StepRejected as err:
            rejects += 1
            if rejects > cfg.max_rejects:
                raise RunAborted(
                    f"step at t={t:.6g} rejected {rejects} times (last: {err}); "
                    "diagnostic state attached", state=state) from None
            dt *= 0.5


@dataclass
class Trajectory:
    """States and cumulative budget integrals recorded along a run."""

    mesh: Mesh1D
    eos: EosSpec
    transport: TransportSpec
    config: SolverConfig
    boundary: BoundarySpec
    times: list
    states: list
    accums: list
    n_steps: int = 0
    n_rejects: int = 0
    label: str = ""

    def state_at(self, t: float) -> FieldState:
        idx = self._index(t)
        return self.states[idx]

    def accum_at(self, t: float) -> dict:
        return self.accums[self._index(t)]

    def _index(self, t: float) -> int:
        times = np.asarray(self.times)
        idx = int(np.argmin(np.abs(times - t)))
        if abs(times[idx] - t) > 1e-9 * (1.0 + abs(t)):
            raise KeyError(f"time {t} not recorded (have {list(times)})")
        return idx

    @property
    def final_state(self) -> FieldState:
        return self.states[-1]


def run(mesh: Mesh1D, eos: EosSpec, ts: TransportSpec, cfg: SolverConfig,
        bspec: BoundarySpec, initial: FieldState, output_times=None,
        label: str = "") -> Trajectory:
    """Integrate to t_end, recording states and cumulative boundary integrals.

    ``output_times`` defaults to {0, t_end}; the stepper lands on each output
    instant exactly.  On abort the partial trajectory is attached to the
    raised :class:`RunAborted`.
    """
    if output_times is None:
        output_times = [0.0, cfg.t_end]
    outs = sorted(set(float(t) for t in output_times) | {0.0, float(cfg.t_end)})
    if outs[-1] > cfg.t_end + 1e-12:
        raise ValueError("output times beyond t_end")

    state = initial.copy()
    if np.any(state.rho < cfg.rho_floor) or np.any(state.theta < cfg.theta_floor):
        raise ValueError("initial data violates the positivity floors")

    acc = None
    traj = Trajectory(mesh=mesh, eos=eos, transport=ts, config=cfg, boundary=bspec,
                      times=[0.0], states=[state.copy()], accums=[{}], label=label)

    t = 0.0
    out_idx = 1 if outs[0] == 0.0 else 0
    while out_idx < len(outs):
        target = outs[out_idx]
        while t < target - 1e-14 * (1.0 + target):
            dt = min(stable_dt(state, mesh, eos, ts, cfg), target - t)
            try:
                state, dt_used, inc, rej = step(state, mesh, eos, ts, cfg, bspec, dt, t=t)
            except RunAborted as err:
                err.trajectory = traj
                raise
            if acc is None:
                acc = dict(inc)
            else:
                for k, v in inc.items():
                    acc[k] += v
            traj.n_steps += 1
            traj.n_rejects += rej
            if dt_used == dt and target - (t + dt) < 1e-14 * (1.0 + target):
                t = target
            else:
                t += dt_used
        traj.times.append(target)
        traj.states.append(state.copy())
        traj.accums.append(dict(acc) if acc else {})
        out_idx += 1
    return traj
