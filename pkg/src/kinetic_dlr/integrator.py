"""Macro-micro time steppers.

A step advances the moment triple (f0, f1, f2), the electric field, and the
low-rank factors of the micro part.  The moment fluxes and the K-factor
fluxes are upwinded jointly through the stacked (r+3)-component hyperbolic
system; the backward S substep and the L substep use centered x-derivatives,
which leaves the K step's upwind dissipation net-applied over each K-S-L
cycle and keeps the otherwise undamped transport couplings stable.  All
coupling matrices are frozen at a substep's outer time level and the
evolving factor re-enters every term, so the SSPRK2 stages of the
second-order scheme see consistent right-hand sides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lowrank import LowRankState, augmented_qr, qr_weighted
from .orthopoly import conserved_to_uT
from .spatial import (
    XGrid,
    build_hyperbolic_system,
    centered_dx,
    poisson_solve,
    upwind_flux_divergence,
)

GAUSS = "gauss"
AMPERE = "ampere"


@dataclass
class SimState:
    """Full solver state at time t."""

    U: np.ndarray          # (3, n_x) moments f0, f1, f2
    E: np.ndarray          # (n_x,)
    low_rank: LowRankState
    t: float = 0.0

    def copy(self) -> "SimState":
        lr = LowRankState(self.low_rank.X.copy(), self.low_rank.S.copy(),
                          self.low_rank.V.copy())
        return SimState(self.U.copy(), self.E.copy(), lr, self.t)


@dataclass
class CouplingMatrices:
    """Paper-level coupling quantities for one micro step, mostly exposed for
    testing; the stepper consumes the factorized context directly."""

    y1: np.ndarray
    y2: np.ndarray
    y3: np.ndarray
    A: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    G: np.ndarray
    B: np.ndarray | None = None
    F: np.ndarray | None = None
    N: np.ndarray | None = None
    Q: np.ndarray | None = None
    z1: np.ndarray | None = None
    z2: np.ndarray | None = None
    z3: np.ndarray | None = None


@dataclass
class _MicroContext:
    """Everything the K/S right-hand side needs, frozen for one substep group
    except for the evolving factor itself."""

    U: np.ndarray
    E_star: np.ndarray
    u: np.ndarray
    T: np.ndarray
    nu: float
    sys: object
    dv_mat: np.ndarray      # <V_j, dv V_l> (homogeneous traces)
    dv2_mat: np.ndarray
    g_mat: np.ndarray       # <V_j, dv(v V_l)>
    y2: np.ndarray
    y3: np.ndarray
    bc: dict | None = None  # trace-response reductions, FD backend only


@dataclass
class StepResiduals:
    """Pointwise local-law residual maxima recorded during the last step."""

    charge: float = 0.0
    energy: float = float("nan")


def compute_f3(state: LowRankState, backend) -> np.ndarray:
    """Closure moment of the micro part from its factors, O(r(n_x + n_v))."""
    q = backend.gram(backend.wp3[:, None], state.V)[0]
    return state.X @ (state.S @ q)


def field_solve_gauss(grid: XGrid, coeffs, U: np.ndarray, rho0: float | None = None):
    """Electric field from the Poisson solve of the current charge density."""
    rho = coeffs.c_matrix[0, 0] * U[0]
    _, E = poisson_solve(grid, rho, rho0)
    return E


def current_density(coeffs, U: np.ndarray) -> np.ndarray:
    C = coeffs.c_matrix
    return C[1, 0] * U[0] + C[1, 1] * U[1]


def field_solve_ampere(E: np.ndarray, J: np.ndarray, dt: float):
    """One explicit step of the field equation dE/dt = -J; returns the new
    field and the time-centered field."""
    E_new = E - dt * J
    return E_new, 0.5 * (E + E_new)


def ssprk2(q, h, rhs):
    q1 = q + h * rhs(q)
    return 0.5 * (q + q1 + h * rhs(q1))


class Stepper:
    """Time stepper for one discretization (grid, velocity backend, physics).

    A stepper instance advances one simulation at a time; ``last_residuals``
    refers to the most recent step.
    """

    def __init__(self, grid: XGrid, backend, nu: float = 0.0,
                 reconstruction: str = "muscl_mc", field: str = AMPERE,
                 rho0: float | None = None, rng=None):
        self.grid = grid
        self.backend = backend
        self.coeffs = backend.coeffs
        self.nu = float(nu)
        self.reconstruction = reconstruction
        self.field = field
        self.rho0 = rho0
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.last_residuals = StepResiduals()
        self._src_mat = self.coeffs.source_matrix()

    # ------------------------------------------------------------------
    # pieces
    # ------------------------------------------------------------------

    def hyperbolic_system(self, V: np.ndarray):
        be = self.backend
        a_mat = be.gram(V, be.vmul(V))
        q = be.gram(be.wp3[:, None], V)[0]
        return build_hyperbolic_system(self.coeffs, a_mat, q)

    def macro_flux_divergence(self, U, K, sys):
        w = np.vstack([U, K])
        return upwind_flux_divergence(self.grid, w, sys, "p1", self.reconstruction)

    def macro_rhs(self, U, K, sys, E_field):
        div = self.macro_flux_divergence(U, K, sys)
        return -div + E_field * (self._src_mat @ U), div

    def micro_context(self, U, E_star, V) -> _MicroContext:
        be = self.backend
        if self.nu:
            _, u, T = conserved_to_uT(self.coeffs, U)
        else:
            u = T = np.zeros_like(E_star)
        img = be.macro_images
        vt_dphi = be.gram(V, img.dv)
        y2 = (vt_dphi @ U) * E_star
        if self.nu:
            vt_d2phi = be.gram(V, img.dv2)
            vt_gphi = be.gram(V, img.dv_vmul)
            y3 = self.nu * (T * (vt_d2phi @ U) + vt_gphi @ U - u * (vt_dphi @ U))
            dv2_mat = be.gram(V, be.dv2(V))
            g_mat = be.gram(V, be.dv_vmul(V))
        else:
            y3 = np.zeros_like(y2)
            dv2_mat = g_mat = None
        bc = be.bc_reductions(V) if be.kind == "fd" else None
        return _MicroContext(
            U=U, E_star=E_star, u=u, T=T, nu=self.nu,
            sys=self.hyperbolic_system(V),
            dv_mat=be.gram(V, be.dv(V)),
            dv2_mat=dv2_mat, g_mat=g_mat,
            y2=y2, y3=y3, bc=bc,
        )

    def trace_fields(self, U, X):
        """X-projected Dirichlet traces of -N at the velocity boundaries,
        (2, n_x); None for the spectral backend."""
        if self.backend.kind != "fd":
            return None
        proj = (self.grid.dx * (U @ X)) @ X.T
        return -self.backend.boundary_values @ proj

    def _bc_outer(self, red, tf):
        return red[0][:, None] * tf[0][None, :] + red[1][:, None] * tf[1][None, :]

    def k_rhs(self, K: np.ndarray, ctx: _MicroContext, tf) -> np.ndarray:
        """Right-hand side of the K substep at the current stage value."""
        w = np.vstack([ctx.U, K])
        div = upwind_flux_divergence(self.grid, w, ctx.sys, "p2",
                                     self.reconstruction)
        dk1 = ctx.dv_mat @ K
        if ctx.bc is not None and tf is not None:
            dk1 = dk1 + self._bc_outer(ctx.bc["dv"], tf)
        rhs = -div - ctx.y2 + ctx.y3 - ctx.E_star * dk1
        if ctx.nu:
            dk2 = ctx.dv2_mat @ K
            gk = ctx.g_mat @ K
            if ctx.bc is not None and tf is not None:
                dk2 = dk2 + self._bc_outer(ctx.bc["dv2"], tf)
                gk = gk + self._bc_outer(ctx.bc["dv_vmul"], tf)
            rhs += ctx.nu * (ctx.T * dk2 + gk - ctx.u * dk1)
        return rhs

    def s_core_matrices(self, X: np.ndarray, ctx: _MicroContext):
        """X-side inner products and rank-3 source blocks of the backward
        core step, frozen for one substep.

        The advective x-derivatives here are centered, not upwinded: the
        backward S step then removes only the central part of the K update,
        so the upwind dissipation of the K step survives one K-S-L cycle and
        keeps the undamped transport terms of the L step stable.
        """
        grid = self.grid
        dxU2 = centered_dx(grid, ctx.U[2])
        y1 = ctx.sys.a0[3:, 2][:, None] * dxU2[None, :]
        y_tot = y1 + ctx.y2 - ctx.y3
        Z = grid.dx * (y_tot @ X).T                    # (i, j)
        B = grid.dx * (X.T @ centered_dx(grid, X.T).T)
        F = grid.dx * (X.T @ (ctx.E_star[:, None] * X))
        a_mat = ctx.sys.a0[3:, 3:]
        if self.nu:
            N = grid.dx * (X.T @ (ctx.T[:, None] * X))
            Q = grid.dx * (X.T @ (ctx.u[:, None] * X))
        else:
            N = Q = None
        traces = None
        if self.backend.kind == "fd":
            traces = -self.backend.boundary_values @ (grid.dx * (ctx.U @ X))
        return {"Z": Z, "B": B, "F": F, "N": N, "Q": Q, "A": a_mat,
                "traces": traces}

    def s_rhs(self, S: np.ndarray, X: np.ndarray, ctx: _MicroContext,
              core) -> np.ndarray:
        """Backward core dynamics in the factored form: the boundary traces
        are re-projected onto the current X basis and the evolving core
        re-enters the derivative couplings."""
        d1 = ctx.dv_mat @ S.T
        if ctx.bc is not None and core["traces"] is not None:
            tr = core["traces"]
            d1 = d1 + np.outer(ctx.bc["dv"][0], tr[0]) \
                + np.outer(ctx.bc["dv"][1], tr[1])
        rhs = core["Z"] + core["B"] @ S @ core["A"] + core["F"] @ d1.T
        if ctx.nu:
            d2 = ctx.dv2_mat @ S.T
            gt = ctx.g_mat @ S.T
            if ctx.bc is not None and core["traces"] is not None:
                tr = core["traces"]
                d2 = d2 + np.outer(ctx.bc["dv2"][0], tr[0]) \
                    + np.outer(ctx.bc["dv2"][1], tr[1])
                gt = gt + np.outer(ctx.bc["dv_vmul"][0], tr[0]) \
                    + np.outer(ctx.bc["dv_vmul"][1], tr[1])
            rhs -= ctx.nu * (core["N"] @ d2.T + gt.T - core["Q"] @ d1.T)
        return rhs

    def l_frozen(self, X, ctx: _MicroContext):
        """Constant-in-L pieces of the L substep: rank-3 source vectors, the
        x-side coupling matrices, and the projected boundary traces."""
        grid, be = self.grid, self.backend
        img = be.macro_images
        dxU = centered_dx(grid, ctx.U)
        c0 = grid.dx * (ctx.U @ X)
        c1 = grid.dx * (dxU @ X)
        cE = grid.dx * ((ctx.E_star * ctx.U) @ X)
        z_const = -(img.vmul @ c1) - (img.dv @ cE)
        if ctx.nu:
            cT = grid.dx * ((ctx.T * ctx.U) @ X)
            cu = grid.dx * ((ctx.u * ctx.U) @ X)
            z_const += ctx.nu * (img.dv2 @ cT + img.dv_vmul @ c0 - img.dv @ cu)
        B = grid.dx * (X.T @ centered_dx(grid, X.T).T)
        F = grid.dx * (X.T @ (ctx.E_star[:, None] * X))
        N = grid.dx * (X.T @ (ctx.T[:, None] * X))
        Q = grid.dx * (X.T @ (ctx.u[:, None] * X))
        traces = None
        if be.kind == "fd":
            traces = -be.boundary_values @ c0
        return {"z": z_const, "B": B, "F": F, "N": N, "Q": Q, "traces": traces}

    def l_rhs(self, L: np.ndarray, ctx: _MicroContext, frz) -> np.ndarray:
        be = self.backend
        speeds = frz["F"] + ctx.nu * frz["Q"] if ctx.nu else frz["F"]
        rhs = frz["z"] - be.vmul(L) @ frz["B"].T
        rhs += be.l_advection(L, speeds, ctx.nu, traces=frz["traces"])
        if ctx.nu:
            rhs += ctx.nu * (be.dv2(L, frz["traces"]) @ frz["N"].T)
        return be.project_micro(rhs)

    # ------------------------------------------------------------------
    # paper-level coupling matrices (test surface)
    # ------------------------------------------------------------------

    def assemble_k_matrices(self, state: SimState, E_star: np.ndarray) -> CouplingMatrices:
        """Coupling vectors and matrices of the K substep at the state's time
        level, in the L-based form used by the Forward Euler analysis."""
        be = self.backend
        X, S, V = state.low_rank.X, state.low_rank.S, state.low_rank.V
        ctx = self.micro_context(state.U, E_star, V)
        q = be.gram(be.wp3[:, None], V)[0]
        y1 = self.coeffs.a[2] * q[:, None] * centered_dx(self.grid, state.U[2])[None, :]
        tf = self.trace_fields(state.U, X)
        traces = None
        if be.kind == "fd":
            traces = -be.boundary_values @ (self.grid.dx * (state.U @ X))
        L = V @ S.T
        D1 = be.gram(V, be.dv(L, traces))
        D2 = be.gram(V, be.dv2(L, traces))
        G = be.gram(V, be.dv_vmul(L, traces))
        a_mat = be.gram(V, be.vmul(V))
        lf = self.l_frozen(X, ctx)
        return CouplingMatrices(
            y1=y1, y2=ctx.y2,
            y3=ctx.y3 if self.nu else np.zeros_like(ctx.y2),
            A=a_mat, D1=D1, D2=D2, G=G,
            B=lf["B"], F=lf["F"], N=lf["N"], Q=lf["Q"],
        )

    # ------------------------------------------------------------------
    # substeps
    # ------------------------------------------------------------------

    @staticmethod
    def _advance(q, dt, rhs, scheme):
        if scheme == "euler":
            return q + dt * rhs(q)
        if scheme == "ssprk2":
            return ssprk2(q, dt, rhs)
        raise ValueError(f"unknown substep scheme {scheme!r}")

    def macro_step(self, U, K, sys, E_field, dt, base=None):
        """One explicit moment update with the jointly upwinded flux; also
        returns the flux divergence for the local-law bookkeeping.

        base lets the full step of the midpoint scheme add the half-step
        fluxes and sources onto the time-n moments.
        """
        rhs, div = self.macro_rhs(U, K, sys, E_field)
        return (U if base is None else base) + dt * rhs, div

    def k_step(self, K, ctx, tf, dt, scheme="euler"):
        """Advance the spatial factor product and refactor: (X_new, S')."""
        K_new = self._advance(K, dt, lambda Ks: self.k_rhs(Ks, ctx, tf), scheme)
        return qr_weighted(K_new.T, self.grid.dx, rng=self.rng)

    def s_step(self, S, X, ctx, dt, scheme="euler", core=None):
        """Backward core update with coupling matrices frozen at the
        substep's outer time level."""
        if core is None:
            core = self.s_core_matrices(X, ctx)
        return self._advance(S, dt, lambda Ss: self.s_rhs(Ss, X, ctx, core),
                             scheme)

    def l_step(self, L, ctx, frz, dt, scheme="euler"):
        """Advance the velocity factor product, filter (spectral backend),
        and refactor conservatively: (V_new, S_new)."""
        L_new = self._advance(L, dt, lambda Ls: self.l_rhs(Ls, ctx, frz), scheme)
        L_new = self.backend.apply_mode_filter(L_new)
        return augmented_qr(L_new, self.backend, rng=self.rng)

    # ------------------------------------------------------------------
    # steps
    # ------------------------------------------------------------------

    def step(self, state: SimState, dt: float, order: int = 2) -> SimState:
        if order == 1:
            return self.step_first_order(state, dt)
        if order == 2:
            return self.step_second_order(state, dt)
        raise ValueError("integrator order must be 1 or 2")

    def step_first_order(self, state: SimState, dt: float) -> SimState:
        grid, coeffs = self.grid, self.coeffs
        U, E = state.U, state.E
        X, S, V = state.low_rank.X, state.low_rank.S, state.low_rank.V

        # field solve
        if self.field == GAUSS:
            E_star = E
            E_new = None  # recomputed from the updated density below
        else:
            E_new, E_star = field_solve_ampere(E, current_density(coeffs, U), dt)

        ctx = self.micro_context(U, E_star, V)
        K = (X @ S).T

        # moment update with the jointly upwinded flux
        U_new, div = self.macro_step(U, K, ctx.sys, E_star, dt)

        # K step and QR
        tf = self.trace_fields(U, X)
        X1, S1 = self.k_step(K, ctx, tf, dt)

        # S step runs backward with re-projected traces
        S2 = self.s_step(S1, X1, ctx, dt)

        # L step, filter, conservative QR
        frz = self.l_frozen(X1, ctx)
        V_new, S_new = self.l_step(V @ S2.T, ctx, frz, dt)

        if self.field == GAUSS:
            E_new = field_solve_gauss(grid, coeffs, U_new, self.rho0)
        self._record_residuals(state, U_new, E, E_new, E_star, div, dt)
        return SimState(U_new, E_new, LowRankState(X1, S_new, V_new),
                        state.t + dt)

    def step_second_order(self, state: SimState, dt: float) -> SimState:
        grid, coeffs = self.grid, self.coeffs
        U, E = state.U, state.E
        X, S, V = state.low_rank.X, state.low_rank.S, state.low_rank.V
        h = 0.5 * dt

        # half step of the moments with the time-n field and factors
        sys_n = self.hyperbolic_system(V)
        K_n = (X @ S).T
        U_half, _ = self.macro_step(U, K_n, sys_n, E, h)

        # field update centered on the half-step current
        E_new, E_mid = field_solve_ampere(E, current_density(coeffs, U_half), dt)

        # first Strang half: K, S, L over dt/2 (SSPRK2 substeps)
        ctx = self.micro_context(U_half, E_mid, V)
        tf = self.trace_fields(U_half, X)
        X1, S1 = self.k_step(K_n, ctx, tf, h, scheme="ssprk2")
        tf1 = self.trace_fields(U_half, X1)
        S2 = self.s_step(S1, X1, ctx, h, scheme="ssprk2")
        frz = self.l_frozen(X1, ctx)
        V_half, S_half = self.l_step(V @ S2.T, ctx, frz, h, scheme="ssprk2")

        # second Strang half: L, S, K over dt/2 (mid-state factors are kept
        # for the final moment update)
        V_new, S3 = self.l_step(V_half @ S_half.T, ctx, frz, h, scheme="ssprk2")
        ctx2 = self.micro_context(U_half, E_mid, V_new)
        S4 = self.s_step(S3, X1, ctx2, h, scheme="ssprk2")
        K2 = ssprk2((X1 @ S4).T, h, lambda Ks: self.k_rhs(Ks, ctx2, tf1))
        X_new, S_new = qr_weighted(K2.T, grid.dx, rng=self.rng)

        # full moment step with half-step fluxes and sources
        sys_half = self.hyperbolic_system(V_half)
        K_half = (X1 @ S_half).T
        U_new, div = self.macro_step(U_half, K_half, sys_half, E_mid, dt,
                                     base=U)

        self._record_residuals(state, U_new, E, E_new, E_mid, div, dt)
        return SimState(U_new, E_new, LowRankState(X_new, S_new, V_new),
                        state.t + dt)

    # ------------------------------------------------------------------
    # local conservation residuals
    # ------------------------------------------------------------------

    def _record_residuals(self, state, U_new, E_old, E_new, E_star, div, dt):
        """Pointwise residuals of the discrete local charge and (for the
        field-integrating variant) total-energy balance laws, reusing the
        moment flux divergence of this step."""
        C = self.coeffs.c_matrix
        rho_rate = C[0, 0] * (U_new[0] - state.U[0]) / dt
        charge = float(np.max(np.abs(rho_rate + C[0, 0] * div[0])))
        energy = float("nan")
        if E_new is not None and self.field == AMPERE:
            kappa_old = C[2] @ state.U
            kappa_new = C[2] @ U_new
            e_rate = (kappa_new - kappa_old + 0.5 * (E_new**2 - E_old**2)) / dt
            heat_div = C[2] @ div
            energy = float(np.max(np.abs(e_rate + heat_div)))
        self.last_residuals = StepResiduals(charge=charge, energy=energy)

    # ------------------------------------------------------------------
    # invariants (cheap re-assertions used by tests and diagnostics)
    # ------------------------------------------------------------------

    def micro_moment_fields(self, lr: LowRankState) -> np.ndarray:
        """<w p_n, g> over the grid from the factors, (n_x, 3)."""
        m = self.backend.gram(self.backend.macro_basis, lr.V)
        return lr.X @ (lr.S @ m.T)

    def orthonormality_defects(self, lr: LowRankState):
        gx = self.grid.dx * (lr.X.T @ lr.X)
        gv = self.backend.gram(lr.V, lr.V)
        eye = np.eye(lr.rank)
        return (float(np.max(np.abs(gx - eye))), float(np.max(np.abs(gv - eye))))
