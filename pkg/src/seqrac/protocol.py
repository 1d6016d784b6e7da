"""Sequential 2->1 quantum random access code with weak intermediate measurements.

Alice encodes two bits ``x = (x0, x1)`` into one of four qubit states on a
square in the XZ plane of the Bloch sphere. Bob measures sigma_X (y=0) or
sigma_Z (y=1) with strength ``eta`` and forwards the post-measurement state
to Charlie, who measures sigma_X (z=0) or sigma_Z (z=1) projectively.
Outcome bit 0 is eigenvalue +1 and bit 1 is eigenvalue -1 throughout.

Probability tables are numpy arrays indexed ``[x0, x1, y, b, z, c]``, the
same column order as the count tables.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .qmath import IDENTITY, DensityMatrix, C2x2, dagger, pauli, trace

SQRT2 = math.sqrt(2.0)
CLASSICAL_LIMIT = 0.75
MAX_WITNESS = 0.5 + SQRT2 / 4
#: W_AB = W_AC at this value (eta = 4/5); above it Charlie beats Bob.
CROSSING_WITNESS = 0.5 + SQRT2 / 5
NULL_EVENT_PROB = 1e-15
DOMAIN_TOL = 1e-12

BASES = ("X", "Z")


class DomainError(ValueError):
    """A witness value lies outside the range reachable by a qubit strategy."""


class InputPair(NamedTuple):
    x0: int
    x1: int

    def bit(self, position: int) -> int:
        return self[position]


def _check_eta(eta: float) -> float:
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"measurement strength must lie in [0, 1], got {eta}")
    return eta


def _check_bit(v, name: str) -> int:
    if v not in (0, 1):
        raise ValueError(f"{name} must be 0 or 1, got {v!r}")
    return int(v)


def shrink_factor(eta: float) -> float:
    """Bloch-vector contraction of the measure-and-forget channel, (1 + sqrt(1-eta^2)) / 2."""
    return (1.0 + math.sqrt(max(1.0 - eta * eta, 0.0))) / 2.0


def prepare_state(x) -> DensityMatrix:
    x0, x1 = (_check_bit(v, "input bit") for v in x)
    m = 0.5 * (IDENTITY + (-1) ** x0 * pauli("X") / SQRT2 + (-1) ** x1 * pauli("Z") / SQRT2)
    return DensityMatrix(m)


def projector(basis: int, outcome: int) -> C2x2:
    """Projector onto the (-1)**outcome eigenspace of sigma_X (basis 0) or sigma_Z (basis 1)."""
    return 0.5 * (IDENTITY + (-1) ** outcome * pauli(BASES[basis]))


@dataclass(frozen=True)
class WeakMeasurement:
    """Two-outcome weak measurement of sigma_X (basis 0) or sigma_Z (basis 1).

    ``eta = 1`` is projective; ``eta = 0`` carries no information.
    """

    basis: int
    eta: float

    def __post_init__(self):
        _check_bit(self.basis, "basis")
        _check_eta(self.eta)

    @property
    def mu(self) -> float:
        # clip absorbs drift like eta = 1 + 1e-16
        return 0.5 * math.acos(min(max(self.eta, -1.0), 1.0))

    @property
    def observable(self) -> C2x2:
        return pauli(BASES[self.basis])

    def povm(self, b: int) -> C2x2:
        return 0.5 * (IDENTITY + (-1) ** b * self.eta * self.observable)

    def kraus(self, b: int) -> C2x2:
        c, s = math.cos(self.mu), math.sin(self.mu)
        return 0.5 * ((c + s) * IDENTITY + (-1) ** b * (c - s) * self.observable)


@dataclass(frozen=True)
class MeasurementOutcome:
    bit: int
    probability: float
    post_state: Optional[DensityMatrix]


def weak_measure(rho: DensityMatrix, m: WeakMeasurement) -> tuple[MeasurementOutcome, MeasurementOutcome]:
    """Both outcomes of ``m`` on ``rho``.

    ``post_state`` is None for an outcome whose probability is below 1e-15,
    since conditioning on it is undefined.
    """
    outcomes = []
    for b in (0, 1):
        k = m.kraus(b)
        unnorm = k @ rho.matrix @ dagger(k)
        p = trace(unnorm).real
        post = DensityMatrix(unnorm / p, tol=1e-9) if p >= NULL_EVENT_PROB else None
        outcomes.append(MeasurementOutcome(b, p, post))
    return outcomes[0], outcomes[1]


def average_post_state(rho: DensityMatrix, eta: float) -> DensityMatrix:
    """State handed on by a receiver whose basis choice and outcome are discarded."""
    _check_eta(eta)
    acc = np.zeros((2, 2), dtype=complex)
    for y, b in itertools.product((0, 1), repeat=2):
        k = WeakMeasurement(y, eta).kraus(b)
        acc += k @ rho.matrix @ dagger(k)
    return DensityMatrix(acc / 2)


def joint_distribution(eta: float) -> np.ndarray:
    """p(b, c | x, y, z) for weak Bob and projective Charlie.

    Returns an array of shape (2, 2, 2, 2, 2, 2) indexed ``[x0, x1, y, b, z, c]``.
    """
    _check_eta(eta)
    table = np.empty((2,) * 6)
    states = {x: prepare_state(x) for x in itertools.product((0, 1), repeat=2)}
    for (x0, x1), y, b in itertools.product(states, (0, 1), (0, 1)):
        k = WeakMeasurement(y, eta).kraus(b)
        after_bob = k @ states[(x0, x1)].matrix @ dagger(k)
        for z, c in itertools.product((0, 1), repeat=2):
            table[x0, x1, y, b, z, c] = trace(projector(z, c) @ after_bob).real
    return table


def witness_ab(eta: float) -> float:
    return 0.5 + SQRT2 / 4 * _check_eta(eta)


def witness_ac(eta: float) -> float:
    return 0.5 + SQRT2 / 4 * shrink_factor(_check_eta(eta))


def witness_abc(eta: float) -> float:
    eta = _check_eta(eta)
    return 0.25 * (1.0 + (eta + math.sqrt(max(1.0 - eta * eta, 0.0))) / SQRT2)


def witnesses_from_distribution(p: np.ndarray) -> tuple[float, float, float]:
    """(W_AB, W_AC, W_ABC) averaged directly from a ``[x0, x1, y, b, z, c]`` table.

    Each (x, y, z) slice is assumed normalised. Bob's marginal averages over
    Charlie's choice z, Charlie's over Bob's choice y; W_ABC uses z != y.
    """
    w_ab = w_ac = w_abc = 0.0
    for x0, x1 in itertools.product((0, 1), repeat=2):
        x = (x0, x1)
        for y in (0, 1):
            p_b = 0.5 * sum(p[x0, x1, y, x[y], z, :].sum() for z in (0, 1))
            w_ab += p_b / 8
            z = 1 - y
            w_abc += p[x0, x1, y, x[y], z, x[z]] / 8
        for z in (0, 1):
            p_c = 0.5 * sum(p[x0, x1, y, :, z, x[z]].sum() for y in (0, 1))
            w_ac += p_c / 8
    return float(w_ab), float(w_ac), float(w_abc)


@dataclass(frozen=True)
class WitnessSet:
    w_ab: float
    w_ac: float
    w_abc: float
    w_ab_std: Optional[float] = None
    w_ac_std: Optional[float] = None
    w_abc_std: Optional[float] = None

    @classmethod
    def theory(cls, eta: float) -> WitnessSet:
        return cls(witness_ab(eta), witness_ac(eta), witness_abc(eta))


def tradeoff_bound(w_ab: float) -> float:
    """Largest W_AC compatible with an observed W_AB."""
    rad = 16 * w_ab - 16 * w_ab * w_ab - 2
    if rad < -DOMAIN_TOL:
        raise DomainError(f"W_AB = {w_ab} is outside the quantum range [1/2, 1/2 + sqrt(2)/4]")
    return (4 + SQRT2 + math.sqrt(max(rad, 0.0))) / 8


def inverse_tradeoff_bound(w_ac: float) -> float:
    """Largest W_AB compatible with an observed W_AC."""
    rad = 4 * (4 + SQRT2) * w_ac - 16 * w_ac * w_ac - 4 - 2 * SQRT2
    if rad < -DOMAIN_TOL:
        raise DomainError(f"W_AC = {w_ac} is outside the quantum range [1/2, 1/2 + sqrt(2)/4]")
    return 0.5 * (1 + math.sqrt(max(rad, 0.0)))


def eta_low(w_ab: float) -> float:
    return min(max(SQRT2 * (2 * w_ab - 1), 0.0), 1.0)


def eta_up(w_ac: float, clamp: bool = False) -> float:
    rad = (2 + SQRT2 - 4 * w_ac) * (2 * w_ac - 1)
    if rad < -DOMAIN_TOL and not clamp:
        raise DomainError(f"W_AC = {w_ac} gives a negative radicand for the strength upper bound")
    return min(2 * math.sqrt(max(rad, 0.0)), 1.0)


def eta_bounds(w_ab: float, w_ac: float, clamp: bool = False) -> tuple[float, float]:
    """Lower and upper bounds on Bob's strength implied by observed witnesses.

    With ``clamp=True`` a negative radicand (noisy data just outside the
    quantum range) is treated as zero instead of raising.
    """
    return eta_low(w_ab), eta_up(w_ac, clamp=clamp)


def witness_chain(etas: Sequence[float]) -> list[float]:
    """Witness of each receiver in a chain of weak measurers with strengths ``etas``."""
    if len(etas) == 0:
        raise ValueError("need at least one receiver")
    out = []
    damping = 1.0
    for eta in etas:
        eta = _check_eta(eta)
        out.append(0.5 + SQRT2 / 4 * eta * damping)
        damping *= shrink_factor(eta)
    return out


def simulate_chain(etas: Sequence[float]) -> list[float]:
    """Same quantity as :func:`witness_chain`, by propagating density matrices.

    Each receiver sees the previous receivers' averaged post-measurement state.
    """
    if len(etas) == 0:
        raise ValueError("need at least one receiver")
    states = {x: prepare_state(x) for x in itertools.product((0, 1), repeat=2)}
    out = []
    for eta in etas:
        total = 0.0
        for x, rho in states.items():
            for y in (0, 1):
                outcome = weak_measure(rho, WeakMeasurement(y, eta))[x[y]]
                total += outcome.probability
        out.append(total / 8)
        states = {x: average_post_state(rho, eta) for x, rho in states.items()}
    return out


class NoGoResult(NamedTuple):
    value: float
    eta1: float
    eta2: float


NO_GO_CLOSED_FORM = 0.5 + (SQRT2 + 1) * (1 + math.sqrt(8 * SQRT2 - 11)) / 16


def _best_on_grid(e1: np.ndarray, e2: np.ndarray) -> Optional[NoGoResult]:
    g1, g2 = np.meshgrid(e1, e2, indexing="ij")
    f1 = (1 + np.sqrt(1 - g1**2)) / 2
    f2 = (1 + np.sqrt(1 - g2**2)) / 2
    w1 = 0.5 + SQRT2 / 4 * g1
    w2 = 0.5 + SQRT2 / 4 * g2 * f1
    w3 = np.where((w1 > CLASSICAL_LIMIT) & (w2 > CLASSICAL_LIMIT), 0.5 + SQRT2 / 4 * f1 * f2, -np.inf)
    i, j = np.unravel_index(np.argmax(w3), w3.shape)
    if not np.isfinite(w3[i, j]):
        return None
    return NoGoResult(float(w3[i, j]), float(g1[i, j]), float(g2[i, j]))


def no_go_search(coarse_step: float = 1e-3, fine_step: float = 1e-6) -> NoGoResult:
    """Best third-receiver witness (at full strength) while the first two both beat 3/4.

    Deterministic two-stage grid: a coarse pass over [0, 1]^2, then a fine
    pass over one coarse cell around the coarse optimum.
    """
    n = int(round(1 / coarse_step)) + 1
    grid = np.linspace(0.0, 1.0, n)
    best = _best_on_grid(grid, grid)
    if best is None:
        raise RuntimeError("no strengths let both receivers beat the classical limit")
    m = int(round(2 * coarse_step / fine_step)) + 1
    lo1, lo2 = max(best.eta1 - coarse_step, 0.0), max(best.eta2 - coarse_step, 0.0)
    fine1 = np.linspace(lo1, min(lo1 + 2 * coarse_step, 1.0), m)
    fine2 = np.linspace(lo2, min(lo2 + 2 * coarse_step, 1.0), m)
    refined = _best_on_grid(fine1, fine2)
    return refined if refined is not None and refined.value >= best.value else best


def three_receiver_no_go() -> float:
    return no_go_search().value
