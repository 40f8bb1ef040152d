"""Ground state of -Delta Q + Q = Q^3 and the associated functionals.

The radial profile is obtained by bisection shooting on Q(0) between the
sign-crossing and runaway branches of Q'' + (2/r) Q' - Q + Q^3 = 0; beyond a
matching radius the profile is continued by the exact decaying solution of
the linearized equation, C e^{-r}/r, so the far tail underflows cleanly.
A Petviashvili fixed-point iteration on the 3D grid provides an independent
second route used to cross-check functionals and to place Q on simulation
grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.integrate import simpson

from .grids import Grid, SpectralField


class ShootingError(RuntimeError):
    pass


def _rhs(r, y):
    q, p = y
    return [p, q - q**3 - 2.0 * p / r]


def _classify(q0: float, r_max: float):
    """Integrate one shot; +1 if Q crosses zero (Q(0) too large), -1 if it
    stays positive and relaxes toward the Q = 1 equilibrium (too small)."""
    r0 = 1e-6
    y0 = [q0 + (q0 - q0**3) * r0**2 / 6.0, (q0 - q0**3) * r0 / 3.0]

    def crossing(r, y):
        return y[0]

    crossing.terminal = True

    sol = solve_ivp(_rhs, (r0, r_max), y0, rtol=1e-13, atol=1e-16,
                    events=[crossing], dense_output=True, method="DOP853")
    return (+1 if sol.t_events[0].size else -1), sol


@dataclass
class GroundStateProfile:
    r: np.ndarray
    Q: np.ndarray
    dQ: np.ndarray
    Q0: float
    r_match: float
    tail_C: float
    functionals: dict = field(default_factory=dict)

    def interpolate(self, radii: np.ndarray) -> np.ndarray:
        """Cubic interpolation (linear interpolation leaves kinks that show
        up as spurious gradient mass when placed on coarse 3D grids)."""
        from scipy.interpolate import CubicSpline
        if not hasattr(self, "_spline"):
            self._spline = CubicSpline(self.r, self.Q, bc_type=((1, 0.0), "natural"))
        radii = np.asarray(radii, dtype=float)
        out = np.where(radii <= self.r[-1], self._spline(radii), 0.0)
        far = radii > self.r[-1]
        if far.any():
            out[far] = self.tail_C * np.exp(-radii[far]) / radii[far]
        return out

    @property
    def mass(self) -> float:
        return self.functionals["M"]

    @property
    def threshold_product(self) -> float:
        return self.functionals["E_S"] * self.functionals["M"]


def solve_ground_state(r_max: float = 30.0, mesh: float = 1e-3,
                       tol: float = 1e-10, r_match: float = 10.0,
                       bracket=(2.0, 10.0)) -> GroundStateProfile:
    """Bisection shooting on Q(0), then a banded Newton polish on the output
    mesh.  The polish is needed because the linearization carries an e^{+r}
    mode, so a pure shot cannot hold the pointwise ODE defect below 1e-8 out
    to r_max in double precision; Q(0) itself is fixed by the bisection."""
    lo, hi = bracket
    s_lo, _ = _classify(lo, r_match + 2.0)
    s_hi, _ = _classify(hi, r_match + 2.0)
    if not (s_lo == -1 and s_hi == +1):
        raise ShootingError(
            f"bracket does not straddle the ground state: "
            f"classify({lo})={s_lo}, classify({hi})={s_hi}")
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        s, _ = _classify(mid, r_match + 2.0)
        if s == +1:
            hi = mid
        else:
            lo = mid
    q0 = 0.5 * (lo + hi)

    _, sol = _classify(q0, r_match + 2.0)
    r = np.arange(0.0, r_max + 0.5 * mesh, mesh)
    inside = (r >= 1e-6) & (r <= r_match)
    Q = np.empty_like(r)
    vals = sol.sol(r[inside])
    Q[inside] = vals[0]
    Q[r < 1e-6] = q0
    qm = float(sol.sol(r_match)[0])
    C = qm * r_match * np.exp(r_match)
    far = r > r_match
    Q[far] = C * np.exp(-r[far]) / r[far]

    Q = _newton_polish(r, Q, C)
    dQ = _fd_derivative(r, Q)
    prof = GroundStateProfile(r=r, Q=Q, dQ=dQ, Q0=float(Q[0]),
                              r_match=r_match, tail_C=C)
    prof.functionals = radial_functionals(prof)
    return prof


def _newton_polish(r, Q, tail_C, iterations: int = 8):
    """Newton-solve the 4th-order finite-difference discretization of the
    radial ODE with even symmetry at the origin and the exact decaying tail
    as the far Dirichlet data, starting from the shot profile."""
    from scipy.sparse import lil_matrix
    from scipy.sparse.linalg import spsolve

    n = r.size
    h = r[1] - r[0]
    Q = Q.copy()
    Q[-1] = tail_C * np.exp(-r[-1]) / r[-1]
    Q[-2] = tail_C * np.exp(-r[-2]) / r[-2]

    # stencil index offsets/weights for interior rows
    w2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h)
    w1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h)

    def residual(Q):
        F = np.zeros(n)
        # r = 0: 3 Q''(0) = Q - Q^3 with the even 4th-order stencil
        d2_0 = (16.0 * Q[1] - Q[2] - 15.0 * Q[0]) / (6.0 * h * h)
        F[0] = 3.0 * d2_0 - Q[0] + Q[0] ** 3
        # r = h: ghost Q[-1] = Q[1]
        d2 = (-Q[1] + 16.0 * Q[0] - 30.0 * Q[1] + 16.0 * Q[2] - Q[3]) / (12 * h * h)
        d1 = (Q[1] - 8.0 * Q[0] + 8.0 * Q[2] - Q[3]) / (12 * h)
        F[1] = d2 + 2.0 * d1 / r[1] - Q[1] + Q[1] ** 3
        for k, off in enumerate(range(-2, 3)):
            seg = Q[2 + off:n - 2 + off]
            F[2:-2] += w2[k] * seg + (2.0 / r[2:-2]) * w1[k] * seg
        F[2:-2] += -Q[2:-2] + Q[2:-2] ** 3
        F[-2] = 0.0  # Dirichlet tail rows
        F[-1] = 0.0
        return F

    A = lil_matrix((n, n))
    A[0, 0] = -15.0 / (6 * h * h) * 3.0
    A[0, 1] = 16.0 / (6 * h * h) * 3.0
    A[0, 2] = -1.0 / (6 * h * h) * 3.0
    A[1, 0] = 16.0 / (12 * h * h) - 8.0 / (12 * h) * 2.0 / r[1]
    A[1, 1] = -31.0 / (12 * h * h) + 1.0 / (12 * h) * 2.0 / r[1]
    A[1, 2] = 16.0 / (12 * h * h) + 8.0 / (12 * h) * 2.0 / r[1]
    A[1, 3] = -1.0 / (12 * h * h) - 1.0 / (12 * h) * 2.0 / r[1]
    rows = np.arange(2, n - 2)
    for k, off in enumerate(range(-2, 3)):
        A[rows, rows + off] = w2[k] + (2.0 / r[rows]) * w1[k]
    A[n - 2, n - 2] = 1.0
    A[n - 1, n - 1] = 1.0
    A = A.tocsr()
    diag_rows = np.arange(n - 2)

    for _ in range(iterations):
        F = residual(Q)
        J = A.copy()
        d = J.diagonal()
        d[0] += -1.0 + 3.0 * Q[0] ** 2
        d[1:n - 2] += -1.0 + 3.0 * Q[1:n - 2] ** 2
        J.setdiag(d)
        step = spsolve(J, F)
        Q = Q - step
        if np.abs(step).max() < 1e-13:
            break
    return Q


def _fd_derivative(r, Q):
    h = r[1] - r[0]
    dQ = np.gradient(Q, h, edge_order=2)
    dQ[2:-2] = (Q[:-4] - 8.0 * Q[1:-3] + 8.0 * Q[3:-1] - Q[4:]) / (12.0 * h)
    dQ[0] = 0.0
    return dQ


def radial_functionals(prof: GroundStateProfile) -> dict:
    """All functional values by radial quadrature: integrals are
    4*pi * int f(r) r^2 dr."""
    r, Q, dQ = prof.r, prof.Q, prof.dQ
    w = 4.0 * np.pi * r**2
    l2_sq = simpson(w * Q**2, x=r)
    grad_sq = simpson(w * dQ**2, x=r)
    l4_4 = simpson(w * Q**4, x=r)
    M = 0.5 * l2_sq
    E_S = 0.5 * grad_sq - 0.25 * l4_4
    J = E_S + M
    K = grad_sq - 0.75 * l4_4
    return {"l2_sq": l2_sq, "grad_sq": grad_sq, "l4_4": l4_4,
            "M": M, "E_S": E_S, "J": J, "K": K}


def ode_defect(prof: GroundStateProfile) -> float:
    """Sup-norm defect of Q'' + (2/r)Q' - Q + Q^3 on the interior mesh,
    second derivative by five-point central differences."""
    r, Q = prof.r, prof.Q
    h = r[1] - r[0]
    i = slice(2, -2)
    d2 = (-Q[4:] + 16 * Q[3:-1] - 30 * Q[2:-2] + 16 * Q[1:-3] - Q[:-4]) / (12 * h**2)
    d1 = (-Q[4:] + 8 * Q[3:-1] - 8 * Q[1:-3] + Q[:-4]) / (12 * h)
    rr = r[i]
    defect = d2 + 2.0 * d1 / rr - Q[i] + Q[i] ** 3
    # skip the first few points where the (2/r) term amplifies round-off
    keep = rr > 0.05
    return float(np.abs(defect[keep]).max())


def dilate_functionals(prof: GroundStateProfile, lam: float) -> dict:
    """Functionals of Q_lambda(x) = lambda Q(lambda x), via substitution on
    the radial mesh (independent of the scaling algebra being tested)."""
    r = prof.r
    Q = lam * prof.interpolate(lam * r)
    dQ = np.gradient(Q, r, edge_order=2)
    tmp = GroundStateProfile(r=r, Q=Q, dQ=dQ, Q0=lam * prof.Q0,
                             r_match=prof.r_match, tail_C=prof.tail_C)
    out = radial_functionals(tmp)
    out["J_lambda"] = out["E_S"] + lam**2 * out["M"]
    return out


# ---------------------------------------------------------------------------
# grid placement and the Petviashvili cross-check
# ---------------------------------------------------------------------------

def place_on_grid(prof: GroundStateProfile, grid: Grid,
                  center=None) -> SpectralField:
    """Radial interpolation of Q onto a simulation grid, centered in the box."""
    if center is None:
        center = (0.5 * grid.length,) * 3
    X, Y, Z = grid.meshgrid()
    rr = np.sqrt((X - center[0]) ** 2 + (Y - center[1]) ** 2 + (Z - center[2]) ** 2)
    vals = prof.interpolate(rr.ravel()).reshape(rr.shape)
    return SpectralField.from_phys(grid, vals.astype(np.complex128))


def petviashvili(grid: Grid, iterations: int = 400, tol: float = 1e-12) -> SpectralField:
    """Fixed-point spectral solve of -Delta Q + Q = Q^3 on the 3D grid."""
    X, Y, Z = grid.meshgrid()
    c = 0.5 * grid.length
    r2 = (X - c) ** 2 + (Y - c) ** 2 + (Z - c) ** 2
    q = 4.0 * np.exp(-r2 / 2.0)
    sym = 1.0 + grid.k2
    for _ in range(iterations):
        qhat = np.fft.fftn(q) / grid.n**3 * grid.dealias_mask
        cube_hat = np.fft.fftn(q**3) / grid.n**3 * grid.dealias_mask
        num = np.sum(sym * np.abs(qhat) ** 2)
        den = np.real(np.sum(np.conj(qhat) * cube_hat))
        S = num / den
        qhat_new = S**1.5 * cube_hat / sym
        q_new = np.real(np.fft.ifftn(qhat_new) * grid.n**3)
        delta = np.abs(q_new - q).max() / max(np.abs(q_new).max(), 1e-300)
        q = q_new
        if delta < tol:
            break
    return SpectralField.from_phys(grid, q.astype(np.complex128))


# ---------------------------------------------------------------------------
# functionals of grid states
# ---------------------------------------------------------------------------

@dataclass
class FunctionalsRow:
    M: float
    E_Z: float
    E_S: float
    J: float
    K: float
    grad_sq: float
    l4_4: float
    quartic_completion: float  # (1/4) || v + |u|^2 ||_L2^2

    @property
    def threshold_product(self) -> float:
        return self.E_Z * self.M

    def identity_defect(self) -> float:
        """E_Z - E_S - (1/4)||v + |u|^2||^2, zero analytically."""
        return abs(self.E_Z - self.E_S - self.quartic_completion)


def evaluate_functionals(u: SpectralField, v: SpectralField) -> FunctionalsRow:
    """Mass, Hamiltonians, action and scaling derivative by spectral quadrature."""
    grid = u.grid
    dv = grid.cell_volume
    up = u.phys()
    vp = v.phys()
    abs_u2 = np.abs(up) ** 2
    grad_sq = float(grid.volume * np.sum(grid.k2 * np.abs(u.freq()) ** 2))
    l2_sq = float(np.sum(abs_u2) * dv)
    l4_4 = float(np.sum(abs_u2**2) * dv)
    v_l2_sq = float(np.sum(np.abs(vp) ** 2) * dv)
    cross = float(np.sum(np.real(vp) * abs_u2) * dv)

    M = 0.5 * l2_sq
    E_S = 0.5 * grad_sq - 0.25 * l4_4
    E_Z = 0.5 * grad_sq + 0.25 * v_l2_sq + 0.5 * cross
    J = E_S + M
    K = grad_sq - 0.75 * l4_4
    quartic = 0.25 * float(np.sum(np.abs(vp + abs_u2) ** 2) * dv)
    return FunctionalsRow(M=M, E_Z=E_Z, E_S=E_S, J=J, K=K, grad_sq=grad_sq,
                          l4_4=l4_4, quartic_completion=quartic)


def lambda_star(ground: GroundStateProfile, u0: SpectralField) -> float:
    """J(Q) / (2 M(u0)), the dilation parameter of the threshold argument."""
    m0 = 0.5 * u0.l2() ** 2
    return ground.functionals["J"] / (2.0 * m0)


@dataclass
class ThresholdFlags:
    below_threshold: bool
    sigma_star_hit: bool
    product: float
    ground_product: float


def threshold_monitor(u: SpectralField, v: SpectralField,
                      ground: GroundStateProfile) -> ThresholdFlags:
    """E_Z(u,v) M(u) against E_S(Q) M(Q) (Theorem-1.2 threshold)."""
    row = evaluate_functionals(u, v)
    gp = ground.threshold_product
    prod = row.threshold_product
    return ThresholdFlags(below_threshold=bool(prod < gp),
                          sigma_star_hit=bool(prod >= gp),
                          product=prod, ground_product=gp)
