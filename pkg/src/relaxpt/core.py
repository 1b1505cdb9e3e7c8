"""Partitionings, the reduced resolvent, and the IPT / RS fixed-point solvers.

A partitioning splits ``H = diag(h0_diag) + lam * h1``. The unperturbed
target state is the basis vector ``e_target`` with energy
``E0 = h0_diag[target]``. All iterates are normalized by pinning their
target component to exactly 1.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import mpmath
import numpy as np

from . import precision as prec
from .accel import AndersonWindow, anderson_step
from .operator import SparseSymmetricOperator
from .trace import ConvergenceTrace

log = logging.getLogger(__name__)

DEGENERACY_RTOL = 1e-12
DIVERGENCE_NORM = 1e12
BANACH_CONSTANT = 3.0 - 2.0 * math.sqrt(2.0)
POWER_ITERATION_STEPS = 30
POWER_ITERATION_MAX_DIM = 2000


class DegenerateDiagonal(ArithmeticError):
    """The target diagonal entry is (numerically) degenerate with another one."""

    def __init__(self, target: int, index: int, gap: float):
        self.target, self.index, self.gap = target, index, gap
        super().__init__(
            f"h0_diag[{index}] is within {gap:.3g} of the target entry h0_diag[{target}]; "
            "the targeted unperturbed state is not isolated")


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    DIVERGED = "Diverged"


@dataclass
class Partitioning:
    """``H = diag(h0_diag) + lam * h1`` with unperturbed state ``e_target``."""

    h0_diag: np.ndarray
    h1: SparseSymmetricOperator
    lam: float = 1.0
    target: int = 0
    degeneracy_rtol: float = DEGENERACY_RTOL
    _denom: Optional[np.ndarray] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.h0_diag) != self.h1.dim:
            raise ValueError(f"h0_diag has length {len(self.h0_diag)} but h1 has dim {self.h1.dim}")
        if not 0 <= self.target < self.dim:
            raise IndexError(f"target {self.target} out of range for dim {self.dim}")

    @property
    def dim(self) -> int:
        return self.h1.dim

    @property
    def e0(self):
        return self.h0_diag[self.target]

    @property
    def precision(self) -> str:
        return self.h1.precision

    def hamiltonian(self) -> SparseSymmetricOperator:
        """Reassemble ``H``."""
        h1 = self.h1 if self.lam == 1 else self.h1.scaled(self.lam)
        return h1.add_diagonal(self.h0_diag)

    def as_precision(self, precision: str) -> "Partitioning":
        if precision == self.precision and prec.is_extended(self.h0_diag) == (precision == prec.EXTENDED):
            return self
        lam = mpmath.mpf(self.lam) if precision == prec.EXTENDED else float(self.lam)
        return Partitioning(prec.as_precision(self.h0_diag, precision), self.h1.as_precision(precision),
                            lam, self.target, self.degeneracy_rtol)

    def denominators(self) -> np.ndarray:
        """``E0 - h0_diag`` with the target entry replaced by 1 (it is never used)."""
        if self._denom is None:
            d = self.e0 - self.h0_diag
            d[self.target] = prec.one_like(d)
            thresh = self.degeneracy_rtol * max(1.0, abs(float(self.e0)))
            small = np.abs(prec.to_double(d)) < thresh
            small[self.target] = False
            if small.any():
                n = int(np.flatnonzero(small)[0])
                raise DegenerateDiagonal(self.target, n, abs(float(d[n])))
            self._denom = d
        return self._denom


# ---------------------------------------------------------------------------
# partitionings


def epstein_nesbet(H: SparseSymmetricOperator, target: int = 0) -> Partitioning:
    """EN split: ``h0 = diag(H)`` and ``h1 = H - diag(H)`` with lam = 1."""
    if H.dim < 2:
        raise ValueError("Epstein-Nesbet partitioning needs dim >= 2")
    if not 0 <= target < H.dim:
        raise IndexError(f"target {target} out of range for dim {H.dim}")
    one = mpmath.mpf(1) if H.is_extended else 1.0
    return Partitioning(H.diagonal(), H.offdiagonal(), one, target)


def natural_partitioning(F_diag, I: SparseSymmetricOperator, g, target: int = 0) -> Partitioning:
    """Conventional split ``h0 = F``, ``h1 = g * I`` (diagonal of I kept in h1)."""
    F_diag = np.asarray(F_diag)
    if len(F_diag) != I.dim:
        raise ValueError(f"F_diag has length {len(F_diag)} but I has dim {I.dim}")
    if F_diag.dtype != object:
        F_diag = F_diag.astype(float)
    one = mpmath.mpf(1) if I.is_extended else 1.0
    return Partitioning(F_diag.copy(), I.scaled(g), one, target)


def repartition(p: Partitioning, alpha) -> Partitioning:
    """Feenberg-type rescaling ``H = [h0/alpha] + [h1 + (1 - 1/alpha) h0]``.

    Only valid as a reconstruction of ``H`` when ``p.lam == 1``; the new
    ``h1`` carries a diagonal part.
    """
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    if not 0 < float(alpha) <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if alpha == 1:
        return Partitioning(p.h0_diag.copy(), p.h1, p.lam, p.target, p.degeneracy_rtol)
    if p.lam != 1:
        raise ValueError("repartition requires lam == 1")
    if p.precision == prec.EXTENDED:
        alpha = mpmath.mpf(alpha)
    inv = 1 / alpha
    new_h1 = p.h1.add_diagonal((1 - inv) * p.h0_diag)
    return Partitioning(p.h0_diag * inv, new_h1, p.lam, p.target, p.degeneracy_rtol)


# ---------------------------------------------------------------------------
# elementary maps


def reduced_resolvent_apply(p: Partitioning, v: np.ndarray) -> np.ndarray:
    """``R0(E0) v``: zero at the target, ``v[n] / (E0 - h0[n])`` elsewhere."""
    if len(v) != p.dim:
        raise ValueError(f"vector length {len(v)} does not match dim {p.dim}")
    out = v / p.denominators()
    out[p.target] = 0 * out[p.target]
    return out


def _q_from_product(p: Partitioning, psi: np.ndarray, w: np.ndarray) -> np.ndarray:
    # w = h1 @ psi
    num = p.lam * (w - w[p.target] * psi)
    out = num / p.denominators()
    out[p.target] = prec.one_like(out)
    return out


def q_ipt(p: Partitioning, psi: np.ndarray) -> np.ndarray:
    """IPT map ``Q(psi) = e_t + lam R0(E0) (h1 psi - <e_t|h1 psi> psi)``."""
    return _q_from_product(p, psi, p.h1 @ psi)


def energy(p: Partitioning, psi: np.ndarray):
    """``<e_t|H psi>`` for ``psi[target] = 1``."""
    if len(psi) != p.dim:
        raise ValueError(f"vector length {len(psi)} does not match dim {p.dim}")
    cols, vals = p.h1.row(p.target)
    if prec.is_extended(psi) or p.precision == prec.EXTENDED:
        with prec.workdps():
            s = mpmath.fsum(v * psi[c] for c, v in zip(cols, vals))
    else:
        s = float(np.dot(vals, psi[cols]))
    return p.e0 + p.lam * s


def _energy_residual_from_product(p: Partitioning, psi, w):
    hpsi = p.h0_diag * psi + p.lam * w
    e = hpsi[p.target]
    return e, prec.norm(hpsi - e * psi)


def residual_norm(H: SparseSymmetricOperator, psi: np.ndarray, target: int) -> float:
    """``|| H psi - <e_t|H psi> psi ||``."""
    hpsi = H @ psi
    return prec.norm(hpsi - hpsi[target] * psi)


def rs_step(p: Partitioning, coeffs: list[np.ndarray]) -> np.ndarray:
    """Next RS coefficient from ``a_0 .. a_l`` (lam folded into each a_l).

    ``a_{l+1} = lam R0 [h1 a_l - sum_{s=0}^{l} <e_t|h1 a_s> a_{l-s}]``
    """
    if not coeffs:
        raise ValueError("need at least a_0")
    products = [p.h1 @ a for a in coeffs]
    return _rs_next(p, coeffs, products[-1], [w[p.target] for w in products])


def _rs_next(p, coeffs, h1_al, c):
    ell = len(coeffs) - 1
    acc = h1_al.copy()
    for s in range(ell + 1):
        acc = acc - c[s] * coeffs[ell - s]
    return p.lam * reduced_resolvent_apply(p, acc)


def rs_coefficients(p: Partitioning, order: int) -> list[np.ndarray]:
    """``[a_0, ..., a_order]`` of the RS recursion started at ``a_0 = e_t``."""
    rs = _RSRecursion(p)
    for _ in range(order):
        rs.step()
    return rs.coeffs


class _RSRecursion:
    def __init__(self, p: Partitioning):
        self.p = p
        a0 = prec.basis_vector(p.dim, p.target, p.precision)
        self.coeffs = [a0]
        self._last_product = p.h1 @ a0
        self._c = [self._last_product[p.target]]
        self.partial_sum = a0.copy()

    def step(self) -> np.ndarray:
        a = _rs_next(self.p, self.coeffs, self._last_product, self._c)
        self.coeffs.append(a)
        self._last_product = self.p.h1 @ a
        self._c.append(self._last_product[self.p.target])
        self.partial_sum = self.partial_sum + a
        return a


# ---------------------------------------------------------------------------
# solver


@dataclass
class SolverConfig:
    alpha: float = 1.0
    tol: float = 1e-10
    max_iter: int = 10000
    mode: str = "ipt"  # "ipt" | "rs"
    acceleration: str = "none"  # "none" | "anderson"
    memory: int = 10
    precision: str = prec.DOUBLE
    divergence_norm: float = DIVERGENCE_NORM
    engine: str = "numpy"  # "numpy" | "compiled"
    restrict_component: bool = False

    def __post_init__(self):
        self.mode = self.mode.lower()
        self.acceleration = self.acceleration.lower()
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")
        self.max_iter = int(self.max_iter)
        if self.mode not in ("ipt", "rs"):
            raise ValueError(f"mode must be 'ipt' or 'rs', got {self.mode!r}")
        if self.acceleration not in ("none", "anderson"):
            raise ValueError(f"acceleration must be 'none' or 'anderson', got {self.acceleration!r}")
        if self.memory < 0:
            raise ValueError("Anderson memory must be >= 0")
        prec.check_precision(self.precision)
        if self.acceleration == "anderson" and self.mode == "rs":
            raise ValueError("Anderson acceleration is only defined for IPT iterates")
        if self.acceleration == "anderson" and self.precision == prec.EXTENDED:
            raise ValueError("Anderson acceleration runs in double precision only")
        self.engine = self.engine.lower()
        if self.engine not in ("numpy", "compiled"):
            raise ValueError(f"engine must be 'numpy' or 'compiled', got {self.engine!r}")
        if self.engine == "compiled" and (self.mode != "ipt" or self.acceleration != "none"
                                          or self.precision != prec.DOUBLE):
            raise ValueError("the compiled engine supports plain relaxed IPT in double precision only")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        return cls(**d)


@dataclass
class IterationState:
    psi: np.ndarray
    k: int
    energy: float
    residual: float


class _Clock:
    def __init__(self):
        self.t0 = time.perf_counter()

    def __call__(self) -> float:
        return time.perf_counter() - self.t0


def _diverged(psi, limit) -> bool:
    return not prec.all_finite(psi) or prec.max_abs(psi) > limit


def relax_iterate(p: Partitioning, cfg: SolverConfig, trace: Optional[ConvergenceTrace] = None,
                  psi_init: Optional[np.ndarray] = None) -> tuple[IterationState, Status]:
    """Run relaxed IPT (or relaxed RS) until the residual drops below ``cfg.tol``.

    IPT iterates ``psi <- alpha Q(psi) + (1 - alpha) psi``; with Anderson
    acceleration the relaxed images are mixed instead. RS mode runs the RS
    recursion on ``repartition(p, alpha)`` and reports its partial sums.

    Trace row ``k`` holds ``<e_t|H psi_k>`` and the residual of ``psi_k``.
    With ``cfg.restrict_component`` the solve runs on the connected component
    of the target in the graph of ``h1`` (every iterate vanishes outside it)
    and the result is embedded back into the full space.
    """
    p = p.as_precision(cfg.precision)
    idx, full_dim = None, p.dim
    if cfg.restrict_component:
        idx = target_component(p)
        if len(idx) == p.dim:
            idx = None
        else:
            p = restrict(p, idx)
            if psi_init is not None:
                psi_init = np.asarray(psi_init)[idx]
    if cfg.mode == "rs":
        state, status = _relax_rs(p, cfg, trace)
    elif cfg.engine == "compiled":
        state, status = _relax_compiled(p, cfg, trace, psi_init)
    else:
        state, status = fixed_point_iterate(_IPTProblem(p), cfg, trace, psi_init)
    if idx is not None:
        full = prec.zeros(full_dim, cfg.precision)
        full[idx] = state.psi
        state = IterationState(full, state.k, state.energy, state.residual)
    return state, status


def target_component(p: Partitioning) -> np.ndarray:
    """Sorted indices of the connected component of ``target`` in the graph of ``h1``."""
    from scipy.sparse.csgraph import connected_components

    _, labels = connected_components(p.h1.to_double().to_scipy(), directed=False)
    return np.flatnonzero(labels == labels[p.target])


def restrict(p: Partitioning, idx: np.ndarray) -> Partitioning:
    """Partitioning on the sub-basis ``idx`` (which must contain the target)."""
    idx = np.asarray(idx)
    pos = np.flatnonzero(idx == p.target)
    if len(pos) != 1:
        raise ValueError("restriction must keep the target exactly once")
    return Partitioning(p.h0_diag[idx].copy(), p.h1.submatrix(idx), p.lam, int(pos[0]), p.degeneracy_rtol)


def _relax_compiled(p: Partitioning, cfg: SolverConfig, trace, psi_init):
    from ._kernels import CONVERGED, DIVERGED, relaxed_ipt

    clock = _Clock()
    psi = np.zeros(p.dim)
    if psi_init is not None:
        psi[:] = np.asarray(psi_init, dtype=float)
    psi[p.target] = 1.0
    stride = trace.keep if trace is not None and trace.keep else 1
    h1 = p.h1
    k, code, ks, es, rs = relaxed_ipt(h1.indptr, h1.indices.astype(np.int64), np.asarray(h1.data, float),
                                      np.asarray(p.h0_diag, float), float(p.lam), p.target,
                                      float(cfg.alpha), float(cfg.tol), cfg.max_iter, stride,
                                      float(cfg.divergence_norm), psi)
    if trace is not None:
        elapsed = clock()
        for kk, e, r in zip(ks, es, rs):
            trace.append(int(kk), float(e), float(r), elapsed)
        trace.finalize()
    status = {CONVERGED: Status.CONVERGED, DIVERGED: Status.DIVERGED}.get(code, Status.MAX_ITERATIONS)
    return IterationState(psi, int(k), float(es[-1]), float(rs[-1])), status


class _IPTProblem:
    """IPT map on a partitioning; one ``h1`` product per evaluation."""

    def __init__(self, p: Partitioning):
        self.p = p
        self.target = p.target
        self.dim = p.dim
        self.precision = p.precision

    def evaluate(self, psi):
        """(Q(psi), <e_t|H psi>, residual of psi)."""
        w = self.p.h1 @ psi
        e, res = _energy_residual_from_product(self.p, psi, w)
        return _q_from_product(self.p, psi, w), e, res


def fixed_point_iterate(problem, cfg: SolverConfig, trace: Optional[ConvergenceTrace] = None,
                        psi_init: Optional[np.ndarray] = None) -> tuple[IterationState, Status]:
    """Relaxed (optionally Anderson-mixed) iteration of ``problem.evaluate``.

    ``problem`` exposes ``target``, ``dim``, ``precision`` and
    ``evaluate(psi) -> (Q(psi), energy(psi), residual(psi))``.
    """
    clock = _Clock()
    t = problem.target
    if psi_init is None:
        psi = prec.basis_vector(problem.dim, t, problem.precision)
    else:
        psi = prec.as_precision(psi_init, problem.precision).copy()
        psi[t] = prec.one_like(psi)
    alpha = mpmath.mpf(cfg.alpha) if problem.precision == prec.EXTENDED else float(cfg.alpha)
    window = AndersonWindow(cfg.memory) if cfg.acceleration == "anderson" else None
    q, e, res = problem.evaluate(psi)
    state = IterationState(psi, 0, e, res)
    status = Status.MAX_ITERATIONS
    for k in range(1, cfg.max_iter + 1):
        g = q if cfg.alpha == 1 else alpha * q + (1 - alpha) * psi
        extra = {}
        if window is not None:
            window.push(psi, g)
            step = anderson_step(window, t)
            psi = step.x_next
            extra = {"beta": list(step.beta)}
            if step.fallback:
                log.info("Anderson step %d fell back to a plain step", k)
        else:
            psi = g
        psi[t] = prec.one_like(psi)
        if _diverged(psi, cfg.divergence_norm):
            state = IterationState(psi, k, math.nan, math.inf)
            if trace is not None:
                trace.append(k, math.nan, math.inf, clock(), **extra)
            status = Status.DIVERGED
            break
        q, e, res = problem.evaluate(psi)
        state = IterationState(psi, k, e, res)
        if trace is not None:
            trace.append(k, e, res, clock(), **extra)
        if res < cfg.tol:
            status = Status.CONVERGED
            break
    if trace is not None:
        trace.finalize()
    return state, status


def _relax_rs(p, cfg, trace):
    clock = _Clock()
    H = p.hamiltonian()
    q = repartition(p, cfg.alpha) if cfg.alpha != 1 else p
    rs = _RSRecursion(q)
    psi = rs.partial_sum
    state = IterationState(psi, 0, energy(p, psi), residual_norm(H, psi, p.target))
    status = Status.MAX_ITERATIONS
    for k in range(1, cfg.max_iter + 1):
        rs.step()
        psi = rs.partial_sum
        if _diverged(psi, cfg.divergence_norm):
            state = IterationState(psi, k, math.nan, math.inf)
            if trace is not None:
                trace.append(k, math.nan, math.inf, clock())
            status = Status.DIVERGED
            break
        e, res = energy(p, psi), residual_norm(H, psi, p.target)
        state = IterationState(psi, k, e, res)
        if trace is not None:
            trace.append(k, e, res, clock())
        if res < cfg.tol:
            status = Status.CONVERGED
            break
    if trace is not None:
        trace.finalize()
    return state, status


def iterate_q(p: Partitioning, k: int, psi_init: Optional[np.ndarray] = None) -> list[np.ndarray]:
    """Plain unrelaxed iterates ``psi_0 .. psi_k`` of the IPT map."""
    psi = prec.basis_vector(p.dim, p.target, p.precision) if psi_init is None else psi_init.copy()
    out = [psi]
    for _ in range(k):
        psi = q_ipt(p, psi)
        out.append(psi)
    return out


# ---------------------------------------------------------------------------
# diagnostics


def h1_norm_estimate(h1: SparseSymmetricOperator) -> tuple[float, str]:
    """Spectral-norm estimate of ``h1`` and the method used.

    Power iteration (30 steps, from a fixed start vector) up to dim 2000,
    the Gershgorin row-sum upper bound above that.
    """
    h1 = h1.to_double()
    if h1.dim <= POWER_ITERATION_MAX_DIM:
        v = np.ones(h1.dim) + np.linspace(0.0, 1.0, h1.dim)
        v /= np.linalg.norm(v)
        est = 0.0
        for _ in range(POWER_ITERATION_STEPS):
            u = h1 @ v
            nu = np.linalg.norm(u)
            if nu == 0.0:
                return 0.0, "power"
            est = nu
            v = u / nu
        return float(est), "power"
    absrow = np.bincount(h1.rows(), weights=np.abs(h1.data), minlength=h1.dim)
    return float(absrow.max()), "gershgorin"


def convergence_radius_bound(p: Partitioning, reading: str = "scaled") -> float:
    """Sufficient-condition radius in ``|lam|`` for Banach convergence of IPT.

    ``reading="scaled"`` gives ``(3 - 2 sqrt 2) * delta / ||h1||`` and
    ``reading="literal"`` gives ``(3 - 2 sqrt 2) / (||h1|| * delta)``, where
    ``delta`` is the smallest gap between ``E0`` and the rest of ``h0``.
    Returns ``math.inf`` when ``h1`` vanishes. The bound is very conservative.
    """
    if reading not in ("scaled", "literal"):
        raise ValueError("reading must be 'scaled' or 'literal'")
    nrm, _ = h1_norm_estimate(p.h1)
    if nrm == 0.0:
        return math.inf
    h0 = prec.to_double(p.h0_diag)
    gaps = np.abs(h0 - h0[p.target])
    gaps[p.target] = np.inf
    delta = float(gaps.min())
    if reading == "scaled":
        return BANACH_CONSTANT * delta / nrm
    return BANACH_CONSTANT / (nrm * delta)


def with_lambda(p: Partitioning, lam) -> Partitioning:
    return replace(p, lam=lam)
