"""Projected-gradient minimization of tau on the mass sphere N(f, g) = mu.

The iteration descends along the constraint-tangential gradient, renormalizes
back to the sphere after every step, and periodically applies the signed
symmetric-decreasing rearrangement guarded by a monotone-energy acceptance
test.  The multiplier is the Rayleigh quotient <grad tau, p> / (2 mu), exact
at stationarity.  Because the quartic dispersion term makes the plain L2 flow
hopelessly stiff on fine spectral grids, the descent direction is smoothed by
the inverse of the shifted linear symbol (sigma + |a| k^2, sigma + |c| k^2);
this changes the metric, not the minimizer, and keeps the descent monotone.

An optional Newton polish on the full stationarity system pushes the residual
to the rounding floor when requested.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import functional as fn
from .grid import Field, FieldPair, Grid, load_columns

_FLOAT = "%.17g"


@dataclass(frozen=True)
class MinimizerConfig:
    tol: float = 1e-8
    max_iter: int = 50000
    step0: float = 1e-2
    rearrange_every: int = 50
    backtrack_factor: float = 0.5
    min_step: float = 1e-12
    precondition: bool = True
    polish: bool = False
    polish_tol: float = 1e-11

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if not self.min_step < self.step0:
            raise ValueError("min_step must be smaller than step0")


@dataclass
class MinimizerResult:
    pair: FieldPair
    m_value: float
    lam: float          # Lagrange multiplier; negative at a genuine minimizer
    residual: float     # max-norm of the stationarity mismatch over both equations
    iterations: int
    history: np.ndarray  # accepted iterates, columns (tau, residual)
    mu: float
    a: float
    c: float
    lambda_f: float     # per-equation multiplier estimates; their gap is a
    lambda_g: float     # convergence diagnostic
    flags: tuple[str, ...]

    @property
    def converged(self) -> bool:
        return "non_convergence" not in self.flags and "stalled" not in self.flags


def residual(p: FieldPair, lam: float, a: float, c: float) -> float:
    """Max-norm stationarity mismatch max(|a f''+fg+g - lam f|, |c g''+f^2/2+f - lam g|)."""
    gf, gg = fn.euler_lagrange_terms(p, a, c)
    rf = gf - lam * p.f.samples
    rg = gg - lam * p.g.samples
    return max(float(np.max(np.abs(rf))), float(np.max(np.abs(rg))))


def _renormalize(f: np.ndarray, g: np.ndarray, mu: float, dx: float):
    mass = dx * (np.dot(f, f) + np.dot(g, g))
    scale = math.sqrt(mu / mass)
    return scale * f, scale * g


def _band_solve(ws: _Workspace, f: np.ndarray, g: np.ndarray, lam: float, split: float = 16.0):
    """Solve the stationarity system exactly on the linearly dominated band.

    For modes with min(|a|,|c|) k^2 >= split * |lam| the per-mode 2x2 system

        (|a| k^2 + |lam|) fh +              gh = -(f g)^
                     fh + (|c| k^2 + |lam|) gh = -(f^2/2)^

    is diagonally dominant, so replacing those modes by its exact solution
    contracts their error; this clears the FFT round-trip noise that the
    |a| k^2 amplification would otherwise pin at the max-norm residual floor.
    """
    aa, cc = abs(ws.a), abs(ws.c)
    ll = -lam
    band = np.minimum(aa, cc) * ws.k2 >= split * ll
    if not np.any(band):
        return f, g
    fh = np.fft.rfft(f)
    gh = np.fft.rfft(g)
    b1 = -np.fft.rfft(f * g)
    b2 = -np.fft.rfft(0.5 * f * f)
    d1 = aa * ws.k2 + ll
    d2 = cc * ws.k2 + ll
    det = d1 * d2 - 1.0
    fh = np.where(band, (d2 * b1 - b2) / det, fh)
    gh = np.where(band, (d1 * b2 - b1) / det, gh)
    return np.fft.irfft(fh, ws.n), np.fft.irfft(gh, ws.n)


def _shape_project(f: np.ndarray, g: np.ndarray, floor_rel: float = 1e-12):
    """Signed symmetric-decreasing projection that leaves the noise tail alone.

    Re-sorting samples at the rounding floor of the profile injects high-k
    kinks whose |a| k^2-amplified second derivative can dominate the max-norm
    stationarity residual, so only samples above floor_rel * peak take part in
    the magnitude placement; everything below keeps its position and sign.
    """
    from .rearrange import placement_order

    n = f.size
    order = placement_order(n)
    rank = np.empty(n, dtype=np.intp)
    rank[order] = np.arange(n)

    def one(u: np.ndarray, sign: float) -> np.ndarray:
        vals = np.abs(u)
        peak = vals.max()
        if peak == 0.0:
            return u.copy()
        big = vals >= floor_rel * peak
        m = int(rank[big].max()) + 1
        slots = order[:m]
        pos = np.sort(slots)
        sub = vals[pos]
        ranked = sub[np.argsort(-sub, kind="stable")]
        out = u.copy()
        out[slots] = sign * ranked
        return out

    return one(f, 1.0), one(g, -1.0)


class _Workspace:
    """Raw-array evaluation of tau, the half-gradient and the preconditioner."""

    def __init__(self, grid: Grid, a: float, c: float):
        self.grid = grid
        self.a = a
        self.c = c
        self.dx = grid.dx
        self.n = grid.n
        k = grid.wavenumbers()
        self.k2 = k * k
        # rfft Parseval weights: interior modes count twice
        w = np.full(k.shape, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        self._pw = w * self.dx / self.n

    def spec_inner(self, uh: np.ndarray, vh: np.ndarray, mult: np.ndarray) -> float:
        """Quadrature of mult-weighted spectra: dx * sum(u M v) by Parseval."""
        return float(np.sum(self._pw * mult * (uh.real * vh.real + uh.imag * vh.imag)))

    def tau(self, f: np.ndarray, g: np.ndarray) -> float:
        fh = np.fft.rfft(f)
        gh = np.fft.rfft(g)
        dir_f = self.spec_inner(fh, fh, self.k2)
        dir_g = self.spec_inner(gh, gh, self.k2)
        cross = self.dx * float(np.sum(f * f * g))
        pair = self.dx * float(np.dot(f, g))
        return -self.a * dir_f - self.c * dir_g + cross + 2.0 * pair

    def el(self, f: np.ndarray, g: np.ndarray):
        fpp = np.fft.irfft(-self.k2 * np.fft.rfft(f), self.n)
        gpp = np.fft.irfft(-self.k2 * np.fft.rfft(g), self.n)
        return self.a * fpp + f * g + g, self.c * gpp + 0.5 * f * f + f

    def smooth(self, rf: np.ndarray, rg: np.ndarray, sigma: float):
        df = np.fft.irfft(np.fft.rfft(rf) / (sigma + abs(self.a) * self.k2), self.n)
        dg = np.fft.irfft(np.fft.rfft(rg) / (sigma + abs(self.c) * self.k2), self.n)
        return df, dg


class _LineModel:
    """Exact energy decrement along a renormalized descent ray.

    For the ray p(s) = gamma(s) (p - s D) with gamma restoring N = mu, the
    change tau(p(s)) - tau(p) is a closed-form rational function of s whose
    coefficients are a handful of inner products.  Evaluating the decrement
    directly (instead of subtracting two O(|tau|) energies) keeps the line
    search exact far below the rounding floor of tau itself, which is what
    lets the descent push the stationarity residual to small tolerances.
    """

    def __init__(self, ws: _Workspace, f, g, fh, gh, df, dg, dfh, dgh, mu):
        dx = ws.dx
        a, c, k2 = ws.a, ws.c, ws.k2
        self.mu = mu
        self.pD = dx * (np.dot(f, df) + np.dot(g, dg))
        self.DD = dx * (np.dot(df, df) + np.dot(dg, dg))
        dir_fd = ws.spec_inner(fh, dfh, k2)
        dir_gd = ws.spec_inner(gh, dgh, k2)
        dir_dd_f = ws.spec_inner(dfh, dfh, k2)
        dir_dd_g = ws.spec_inner(dgh, dgh, k2)
        self.q0 = (
            -a * ws.spec_inner(fh, fh, k2)
            - c * ws.spec_inner(gh, gh, k2)
            + 2.0 * dx * np.dot(f, g)
        )
        self.q1 = -2.0 * a * dir_fd - 2.0 * c * dir_gd + 2.0 * dx * (np.dot(f, dg) + np.dot(g, df))
        self.q2 = -a * dir_dd_f - c * dir_dd_g + 2.0 * dx * np.dot(df, dg)
        self.c0 = dx * float(np.sum(f * f * g))
        self.c1 = dx * float(np.sum(2.0 * f * df * g + f * f * dg))
        self.c2 = dx * float(np.sum(df * df * g + 2.0 * f * df * dg))
        self.c3 = dx * float(np.sum(df * df * dg))

    def decrement(self, s: float) -> float:
        """tau(p(s)) - tau(p); +inf when the ray leaves the admissible cone."""
        nq = self.mu - 2.0 * s * self.pD + s * s * self.DD
        if not nq > 0.0:
            return math.inf
        g2 = self.mu / nq
        g2m1 = (2.0 * s * self.pD - s * s * self.DD) / nq
        gamma = math.sqrt(g2)
        g3m1 = g2m1 / (gamma + 1.0) * (g2 + gamma + 1.0)
        quad = g2 * (-s * self.q1 + s * s * self.q2)
        cubic = gamma * g2 * (-s * self.c1 + s * s * (self.c2 - s * self.c3))
        return g2m1 * self.q0 + g3m1 * self.c0 + quad + cubic


def minimize(
    a: float,
    c: float,
    mu: float,
    grid: Grid,
    cfg: MinimizerConfig | None = None,
    h: Field | None = None,
) -> MinimizerResult:
    """Minimize tau over the sphere N = mu; see the module docstring for the scheme."""
    if not (a < 0.0 and c < 0.0):
        raise ValueError(f"minimize requires a < 0 and c < 0, got a={a}, c={c}")
    if not mu > 0.0:
        raise ValueError(f"minimize requires mu > 0, got {mu}")
    cfg = cfg or MinimizerConfig()
    if h is None:
        h = fn.seed_profile()

    ub = fn.upper_bound_m(a, c, mu, h)
    threshold = fn.mu0(a, c, ub.c1)
    flags: list[str] = []
    if mu < threshold * (1.0 - 1e-12):
        flags.append("below_mu0_threshold")

    ws = _Workspace(grid, a, c)
    dx = grid.dx

    lam_scale = ub.lambda_scale
    pair0 = fn.trial_pair(h, lam_scale, mu, grid)
    f, g = _renormalize(pair0.f.samples.copy(), pair0.g.samples.copy(), mu, dx)
    for _ in range(60):
        if ws.tau(f, g) < 0.0:
            break
        lam_scale *= 0.5  # shrink the dilation until the start has negative energy
        pair0 = fn.trial_pair(h, lam_scale, mu, grid)
        f, g = _renormalize(pair0.f.samples.copy(), pair0.g.samples.copy(), mu, dx)

    tau_cur = ws.tau(f, g)
    step = cfg.step0
    hist: list[tuple[float, float]] = []
    lam = 0.0
    res = math.inf
    it = 0
    converged = False
    stalled = False
    k2 = ws.k2

    def stationarity(f, g):
        fh = np.fft.rfft(f)
        gh = np.fft.rfft(g)
        gf = a * np.fft.irfft(-k2 * fh, grid.n) + f * g + g
        gg = c * np.fft.irfft(-k2 * gh, grid.n) + 0.5 * f * f + f
        lam = dx * (np.dot(gf, f) + np.dot(gg, g)) / mu
        rf = gf - lam * f
        rg = gg - lam * g
        res = max(float(np.max(np.abs(rf))), float(np.max(np.abs(rg))))
        return fh, gh, lam, rf, rg, res

    def noise_floor(f, g):
        # measured rounding floor of the max-norm residual: FFT round-trip
        # noise of the second derivative scales like eps * k_nyq^2 * |coef| * amp
        amp = max(abs(a) * float(np.max(np.abs(f))), abs(c) * float(np.max(np.abs(g))))
        return np.finfo(float).eps * k2[-1] * amp

    eff_tol = cfg.tol
    while it < cfg.max_iter:
        it += 1
        fh, gh, lam, rf, rg, res = stationarity(f, g)
        hist.append((tau_cur, res))
        eff_tol = max(cfg.tol, noise_floor(f, g))
        if res <= eff_tol:
            # convergence counts only if the shape projection keeps it
            pf, pg = _renormalize(*_shape_project(f, g), mu, dx)
            _, _, lam_p, _, _, res_p = stationarity(pf, pg)
            if res_p <= eff_tol:
                f, g, lam, res = pf, pg, lam_p, res_p
                converged = True
                break
            tau_p = ws.tau(pf, pg)
            if tau_p <= tau_cur:
                f, g, tau_cur = pf, pg, tau_p
                continue

        if cfg.precondition:
            sigma = max(1.0, abs(lam))
            dfh = np.fft.rfft(rf) / (sigma + abs(a) * k2)
            dgh = np.fft.rfft(rg) / (sigma + abs(c) * k2)
            df = np.fft.irfft(dfh, grid.n)
            dg = np.fft.irfft(dgh, grid.n)
        else:
            df, dg = rf, rg
            dfh, dgh = np.fft.rfft(df), np.fft.rfft(dg)

        line = _LineModel(ws, f, g, fh, gh, df, dg, dfh, dgh, mu)
        drop = line.decrement(step)
        while not drop < 0.0:
            step *= cfg.backtrack_factor
            if step < cfg.min_step:
                break
            drop = line.decrement(step)
        if not drop < 0.0:
            stalled = True
            break
        # cheap scalar probes toward the 1-d minimum along the ray
        while True:
            wider = line.decrement(step / cfg.backtrack_factor)
            if wider < drop:
                step /= cfg.backtrack_factor
                drop = wider
                if step >= 1e3:
                    break
            else:
                break
        f, g = _renormalize(f - step * df, g - step * dg, mu, dx)
        tau_cur += drop
        if lam < -1.0:
            # energy effect of the band smoother is far below the rounding
            # floor of tau, so the recorded history is unaffected
            f, g = _renormalize(*_band_solve(ws, f, g, lam), mu, dx)

        if cfg.rearrange_every > 0 and it % cfg.rearrange_every == 0:
            pf, pg = _renormalize(*_shape_project(f, g), mu, dx)
            tau_p = ws.tau(pf, pg)
            if tau_p <= tau_cur:
                f, g, tau_cur = pf, pg, tau_p

    if not converged:
        # the flagged result still honors the sign and shape contracts
        f, g = _renormalize(*_shape_project(f, g), mu, dx)

    if cfg.polish:
        f, g, lam = _newton_polish(ws, f, g, mu, cfg)
        f, g = _renormalize(f, g, mu, dx)

    gf, gg = ws.el(f, g)
    lam = dx * (np.dot(gf, f) + np.dot(gg, g)) / mu
    lam_f = dx * np.dot(gf, f) / (dx * np.dot(f, f))
    lam_g = dx * np.dot(gg, g) / (dx * np.dot(g, g)) if np.any(g) else lam
    res = max(float(np.max(np.abs(gf - lam * f))), float(np.max(np.abs(gg - lam * g))))
    tau_cur = ws.tau(f, g)

    if converged and eff_tol > cfg.tol:
        flags.append("tolerance_clamped_to_floor")
    if stalled:
        flags.append("stalled")
    if not converged and res > eff_tol:
        flags.append("non_convergence")
    if tau_cur >= -2.0 * mu:
        # the pair-term floor of the spreading regime: nothing localized was found
        flags.append("collapse_to_zero")

    return MinimizerResult(
        pair=FieldPair(Field(grid, f), Field(grid, g)),
        m_value=tau_cur,
        lam=lam,
        residual=res,
        iterations=it,
        history=np.array(hist) if hist else np.zeros((0, 2)),
        mu=mu,
        a=a,
        c=c,
        lambda_f=lam_f,
        lambda_g=lam_g,
        flags=tuple(flags),
    )


def _newton_polish(ws: _Workspace, f, g, mu, cfg: MinimizerConfig):
    """Newton refinement of the stationarity system on the low-mode block.

    The modes below the linear-dominance split carry the coupled, slowly
    contracting part of the problem; they are few, so the projected Jacobian
    (plus the multiplier column and the mass-constraint row) is assembled
    densely and solved by least squares, which also quotients out the
    translation null direction.  The band solve handles everything above the
    split, so one polish pass alternates the two.
    """
    n = ws.n
    dx = ws.dx
    a, c, k2 = ws.a, ws.c, ws.k2
    nyq = n // 2
    best = None

    for _ in range(10):
        gf, gg = ws.el(f, g)
        lam = dx * (np.dot(gf, f) + np.dot(gg, g)) / mu
        rf = gf - lam * f
        rg = gg - lam * g
        res = max(float(np.max(np.abs(rf))), float(np.max(np.abs(rg))))
        if best is None or res < best[3]:
            best = (f, g, lam, res)
        if res <= cfg.polish_tol:
            break

        ll = max(1.0, -lam)
        m = int(np.sum(k2 < 16.0 * ll / min(abs(a), abs(c))))
        m = min(max(m, 8), 256, nyq)
        dof = 2 * m - 1

        def from_vec(v):
            uh = np.zeros(nyq + 1, dtype=complex)
            uh[:m] = v[:m]
            uh[1:m] += 1j * v[m:]
            return uh

        def to_vec(uh):
            return np.concatenate([uh[:m].real, uh[1:m].imag])

        cols = np.empty((2 * dof + 1, 2 * dof + 1))
        for block, jdof in ((0, range(dof)), (1, range(dof))):
            for j in jdof:
                v = np.zeros(dof)
                v[j] = 1.0
                uh = from_vec(v)
                du = np.fft.irfft(uh, n)
                dupp = np.fft.irfft(-k2 * uh, n)
                if block == 0:
                    top = a * dupp + (g - lam) * du
                    mid = (f + 1.0) * du
                    con = dx * np.dot(f, du)
                else:
                    top = (f + 1.0) * du
                    mid = c * dupp - lam * du
                    con = dx * np.dot(g, du)
                cols[:, block * dof + j] = np.concatenate(
                    [to_vec(np.fft.rfft(top)), to_vec(np.fft.rfft(mid)), [con]]
                )
        cols[:, -1] = np.concatenate(
            [to_vec(np.fft.rfft(-f)), to_vec(np.fft.rfft(-g)), [0.0]]
        )
        rhs = -np.concatenate(
            [
                to_vec(np.fft.rfft(rf)),
                to_vec(np.fft.rfft(rg)),
                [0.5 * (dx * (np.dot(f, f) + np.dot(g, g)) - mu)],
            ]
        )
        sol, *_ = np.linalg.lstsq(cols, rhs, rcond=None)
        f = f + np.fft.irfft(from_vec(sol[:dof]), n)
        g = g + np.fft.irfft(from_vec(sol[dof : 2 * dof]), n)
        lam = lam + sol[-1]
        if lam < -1.0:
            f, g = _band_solve(ws, f, g, lam)

    gf, gg = ws.el(f, g)
    lam = dx * (np.dot(gf, f) + np.dot(gg, g)) / mu
    res = max(
        float(np.max(np.abs(gf - lam * f))), float(np.max(np.abs(gg - lam * g)))
    )
    if best is not None and res > best[3]:
        f, g, lam, _ = best
    return f, g, lam


def suggest_grid(
    a: float,
    c: float,
    mu: float,
    h: Field | None = None,
    n: int | None = None,
    length: float | None = None,
    decay_lengths: float = 24.0,
    n_min: int = 256,
    n_max: int = 65536,
) -> Grid:
    """Pick a grid that resolves the minimizer expected at mass mu.

    The realized constant c1 gives the guaranteed multiplier magnitude
    |lam| >= c1 mu^{2/3} / (|a|+|c|)^{1/3}; the linearized far-field rates at a
    multiplier lam solve |a||c| r^4 - |lam|(|a|+|c|) r^2 + (lam^2 - 1) = 0.
    The slow rate at the guaranteed multiplier sizes the domain; the fast rate
    at a few times that multiplier sizes the spacing.  Passing n or length pins
    that quantity and only the other one adapts.
    """
    if h is None:
        h = fn.seed_profile()
    c1 = fn.upper_bound_m(a, c, mu, h).c1
    lam_lb = max(c1 * mu ** (2.0 / 3.0) / (abs(a) + abs(c)) ** (1.0 / 3.0), 1.02)
    if length is None:
        slow = tail_rates(a, c, -lam_lb)[0]
        length = 2.0 * decay_lengths / (0.8 * slow)
    if n is not None:
        return Grid(n, length)
    fast = tail_rates(a, c, -4.0 * lam_lb)[1]
    dx_target = 0.08 / fast
    need = length / dx_target
    size = n_min
    while size < need and size < n_max:
        size *= 2
    return Grid(min(size, n_max), length)


def tail_rates(a: float, c: float, lam: float) -> tuple[float, float]:
    """(slow, fast) exponential decay rates of the linearized far field.

    Roots r^2 of |a||c| r^4 - |lam|(|a|+|c|) r^2 + (lam^2 - 1) = 0; both are
    positive exactly when |lam| > 1.  For |lam| <= 1 the slow rate is floored
    at a small positive value so exploratory runs still get a usable grid.
    """
    aa, cc = abs(a), abs(c)
    ll = abs(lam)
    disc = math.sqrt(max(ll**2 * (aa - cc) ** 2 + 4.0 * aa * cc, 0.0))
    hi = (ll * (aa + cc) + disc) / (2.0 * aa * cc)
    lo = (ll * (aa + cc) - disc) / (2.0 * aa * cc)
    fast = math.sqrt(max(hi, 1e-4))
    slow = math.sqrt(lo) if lo > 0 else 0.05
    return slow, fast


def save_result(path, result: MinimizerResult) -> None:
    """Three-column `x f g` text with the grid header plus a solver header."""
    grid = result.pair.grid
    with open(path, "w") as fh:
        fh.write(f"# n={grid.n} L={_FLOAT % grid.length}\n")
        fh.write(
            "# mu=%s lambda=%s m=%s residual=%s a=%s c=%s\n"
            % tuple(
                _FLOAT % v
                for v in (result.mu, result.lam, result.m_value, result.residual, result.a, result.c)
            )
        )
        for x, fv, gv in zip(grid.x, result.pair.f.samples, result.pair.g.samples):
            fh.write(" ".join(_FLOAT % v for v in (x, fv, gv)) + "\n")


def load_result(path) -> MinimizerResult:
    from .grid import FieldFormatError

    grid, data, extra = load_columns(path, 3)
    meta = {}
    for line in extra:
        for token in line.lstrip("#").split():
            if "=" in token:
                key, _, val = token.partition("=")
                try:
                    meta[key] = float(val)
                except ValueError as exc:
                    raise FieldFormatError(f"{path}: bad metadata token {token!r}") from exc
    for key in ("mu", "lambda", "m", "residual", "a", "c"):
        if key not in meta:
            raise FieldFormatError(f"{path}: missing metadata key {key!r}")
    pair = FieldPair(Field(grid, data[:, 1]), Field(grid, data[:, 2]))
    return MinimizerResult(
        pair=pair,
        m_value=meta["m"],
        lam=meta["lambda"],
        residual=meta["residual"],
        iterations=0,
        history=np.zeros((0, 2)),
        mu=meta["mu"],
        a=meta["a"],
        c=meta["c"],
        lambda_f=meta["lambda"],
        lambda_g=meta["lambda"],
        flags=(),
    )


