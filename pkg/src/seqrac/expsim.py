"""Coincidence-count tables: synthetic generation, witness estimation and Poisson error bars.

Counts are normalised within each (x, y, z) group of four outcome cells,
so per-setting exposure drift and detector efficiency cancel out.
Array views of a table use the axis order ``[x0, x1, y, b, z, c]``.
"""
from __future__ import annotations

import contextlib
import csv
import itertools
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import protocol
from .protocol import SQRT2, joint_distribution

log = logging.getLogger(__name__)

CSV_COLUMNS = ("x0", "x1", "y", "b", "z", "c", "hwp_ab_rad", "hwp_bc_rad", "eta_set", "count")
CURVE_COLUMNS = ("eta", "w_ab", "w_ac", "w_abc", "tradeoff_bound")
SETTINGS = list(itertools.product((0, 1), repeat=6))
FIXTURE_PATH = Path(__file__).with_name("data") / "table1_counts.csv"


class EmptyGroupError(ValueError):
    """A (x, y, z) group has zero total counts, so its conditional probabilities are undefined."""


class IncompleteTableError(ValueError):
    pass


@dataclass(frozen=True)
class CountRecord:
    x0: int
    x1: int
    y: int
    b: int
    z: int
    c: int
    eta_set: float
    count: int
    hwp_ab_rad: Optional[float] = None
    hwp_bc_rad: Optional[float] = None

    def __post_init__(self):
        for name in ("x0", "x1", "y", "b", "z", "c"):
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1, got {getattr(self, name)!r}")
        if self.count < 0:
            raise ValueError(f"negative count {self.count}")

    @property
    def bits(self) -> tuple[int, int, int, int, int, int]:
        return (self.x0, self.x1, self.y, self.b, self.z, self.c)


@dataclass
class CountTable:
    records: list[CountRecord] = field(default_factory=list)
    exposure_note: str = ""

    def eta_sets(self) -> list[float]:
        return sorted({r.eta_set for r in self.records})

    def is_complete(self, eta_set: float) -> bool:
        bits = [r.bits for r in self.records if r.eta_set == eta_set]
        return len(bits) == 64 and set(bits) == set(SETTINGS)

    def counts(self, eta_set: float) -> np.ndarray:
        """Integer array of shape (2,)*6 for one strength; raises if any setting is missing or repeated."""
        if not self.is_complete(eta_set):
            raise IncompleteTableError(f"eta_set={eta_set}: table does not hold all 64 settings exactly once")
        arr = np.zeros((2,) * 6, dtype=np.int64)
        for r in self.records:
            if r.eta_set == eta_set:
                arr[r.bits] = r.count
        return arr

    def scaled(self, factor: int) -> CountTable:
        return CountTable([_replace_count(r, r.count * factor) for r in self.records], self.exposure_note)


def _replace_count(r: CountRecord, count: int) -> CountRecord:
    d = asdict(r)
    d["count"] = int(count)
    return CountRecord(**d)


def table_from_array(counts: np.ndarray, eta_set: float, note: str = "", angles=None) -> CountTable:
    """Wrap a (2,)*6 count array as a table; ``angles`` maps bits to (hwp_ab, hwp_bc)."""
    angles = angles or {}
    recs = []
    for bits in SETTINGS:
        ab, bc = angles.get(bits, (None, None))
        recs.append(CountRecord(*bits, eta_set=float(eta_set), count=int(counts[bits]), hwp_ab_rad=ab, hwp_bc_rad=bc))
    return CountTable(recs, note)


def _plate_angles() -> dict[tuple[int, ...], tuple[float, float]]:
    from .optics import table1_settings

    return {r.bits: (r.hwp_ab_angle, r.hwp_bc_angle) for r in table1_settings()}


def simulate_counts(eta: float, mean_total_per_setting_group: float, seed: int, with_angles: bool = True) -> CountTable:
    """Poisson coincidence counts for every setting at strength ``eta``.

    Each cell is an independent Poisson draw with mean
    ``mean_total_per_setting_group * p(b, c | x, y, z)``. Uses numpy's PCG64
    generator seeded with ``seed``.
    """
    if mean_total_per_setting_group < 0:
        raise ValueError("mean count must be non-negative")
    rng = np.random.default_rng(seed)
    means = mean_total_per_setting_group * np.clip(joint_distribution(eta), 0.0, None)
    counts = rng.poisson(means)
    note = f"synthetic: eta={eta}, mean per group={mean_total_per_setting_group}, seed={seed}"
    return table_from_array(counts, eta, note, _plate_angles() if with_angles else None)


def _group_axes_last(counts: np.ndarray) -> np.ndarray:
    # [..., x0, x1, y, b, z, c] -> [..., x0, x1, y, z, b, c]
    return np.swapaxes(counts, -3, -2)


def _witnesses_vectorized(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Witnesses for a stack of count arrays with trailing shape (2,)*6.

    Returns (w_ab, w_ac, w_abc, ok) where ``ok`` flags entries whose groups
    all have nonzero totals.
    """
    g = _group_axes_last(np.asarray(counts, dtype=float))
    totals = g.sum(axis=(-1, -2), keepdims=True)
    ok = np.all(totals[..., 0, 0] > 0, axis=(-1, -2, -3, -4))
    with np.errstate(invalid="ignore", divide="ignore"):
        p = g / totals  # [..., x0, x1, y, z, b, c]
    p_b = 0.5 * p.sum(axis=(-1, -3))  # [..., x0, x1, y, b]
    p_c = 0.5 * p.sum(axis=(-2, -4))  # [..., x0, x1, z, c]
    w_ab = np.zeros(p.shape[:-6])
    w_ac = np.zeros(p.shape[:-6])
    w_abc = np.zeros(p.shape[:-6])
    for x0, x1 in itertools.product((0, 1), repeat=2):
        x = (x0, x1)
        for k in (0, 1):
            w_ab = w_ab + p_b[..., x0, x1, k, x[k]] / 8
            w_ac = w_ac + p_c[..., x0, x1, k, x[k]] / 8
            y, z = k, 1 - k
            w_abc = w_abc + p[..., x0, x1, y, z, x[y], x[z]] / 8
    return w_ab, w_ac, w_abc, ok


def estimate_witnesses_from_counts(counts: np.ndarray) -> tuple[float, float, float]:
    counts = np.asarray(counts)
    totals = _group_axes_last(counts).sum(axis=(-1, -2))
    for x0, x1, y, z in itertools.product((0, 1), repeat=4):
        if totals[x0, x1, y, z] == 0:
            raise EmptyGroupError(f"group x={x0}{x1} y={y} z={z} has zero total counts")
    w_ab, w_ac, w_abc, _ = _witnesses_vectorized(counts)
    return float(w_ab), float(w_ac), float(w_abc)


def estimate_witnesses(table: CountTable, eta_set: float) -> tuple[float, float, float]:
    """(W_AB, W_AC, W_ABC) from the counts recorded at ``eta_set``."""
    return estimate_witnesses_from_counts(table.counts(eta_set))


def _eta_bounds_vectorized(w_ab: np.ndarray, w_ac: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    low = np.clip(SQRT2 * (2 * w_ab - 1), 0.0, 1.0)
    rad = np.clip((2 + SQRT2 - 4 * w_ac) * (2 * w_ac - 1), 0.0, None)
    up = np.minimum(2 * np.sqrt(rad), 1.0)
    return low, up


@dataclass(frozen=True)
class WitnessEstimate:
    value: float
    std: float
    n_resamples: int


@dataclass(frozen=True)
class EtaSetResult:
    eta_set: float
    w_ab: WitnessEstimate
    w_ac: WitnessEstimate
    w_abc: WitnessEstimate
    eta_low: WitnessEstimate
    eta_up: WitnessEstimate

    QUANTITIES = ("w_ab", "w_ac", "w_abc", "eta_low", "eta_up")

    def to_json(self) -> dict:
        out = {"eta_set": self.eta_set}
        for q in self.QUANTITIES:
            est = getattr(self, q)
            out[q] = {"value": est.value, "std": est.std}
        return out

    @classmethod
    def from_json(cls, d: dict, n_resamples: int = 0) -> EtaSetResult:
        kw = {q: WitnessEstimate(float(d[q]["value"]), float(d[q]["std"]), n_resamples) for q in cls.QUANTITIES}
        return cls(eta_set=float(d["eta_set"]), **kw)


@dataclass
class AnalysisResult:
    rows: list[EtaSetResult] = field(default_factory=list)
    skipped: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def to_json(self) -> list[dict]:
        return [r.to_json() for r in self.rows]


def _block_rng(seed: int, eta_set: float) -> np.random.Generator:
    # stream depends only on (seed, eta_set), not on which other blocks exist
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(round(eta_set * 1_000_000))]))


def bootstrap_errors(table: CountTable, eta_set: float, n_resamples: int, seed: int) -> EtaSetResult:
    """Parametric Poisson bootstrap of the witnesses and strength bounds at one ``eta_set``.

    Every cell is redrawn as Poisson with mean equal to its observed count.
    The reported value is the estimate from the observed counts; the std is
    the sample standard deviation over resamples.
    """
    if n_resamples < 2:
        raise ValueError("need at least 2 resamples for a standard deviation")
    counts = table.counts(eta_set)
    w_ab, w_ac, w_abc = estimate_witnesses_from_counts(counts)
    low, up = _eta_bounds_vectorized(np.float64(w_ab), np.float64(w_ac))

    rng = _block_rng(seed, eta_set)
    draws = rng.poisson(np.broadcast_to(counts, (n_resamples,) + counts.shape))
    r_ab, r_ac, r_abc, ok = _witnesses_vectorized(draws)
    if not ok.all():
        log.warning("eta_set=%s: dropped %d resamples with an empty group", eta_set, int((~ok).sum()))
        r_ab, r_ac, r_abc = r_ab[ok], r_ac[ok], r_abc[ok]
    n_ok = int(ok.sum())
    if n_ok < 2:
        raise EmptyGroupError(f"eta_set={eta_set}: fewer than 2 usable resamples")
    r_low, r_up = _eta_bounds_vectorized(r_ab, r_ac)

    def est(value, samples):
        return WitnessEstimate(float(value), float(np.std(samples, ddof=1)), n_ok)

    return EtaSetResult(
        eta_set=float(eta_set),
        w_ab=est(w_ab, r_ab),
        w_ac=est(w_ac, r_ac),
        w_abc=est(w_abc, r_abc),
        eta_low=est(low, r_low),
        eta_up=est(up, r_up),
    )


def analyze_table(table: CountTable, n_resamples: int = 10_000, seed: int = 0) -> AnalysisResult:
    """Witnesses, error bars and strength bounds for every complete eta_set, in ascending order."""
    result = AnalysisResult()
    for eta_set in table.eta_sets():
        if not table.is_complete(eta_set):
            log.warning("eta_set=%s is incomplete; skipped", eta_set)
            result.skipped.append(eta_set)
            continue
        result.rows.append(bootstrap_errors(table, eta_set, n_resamples, seed))
    return result


def theory_curve(steps: int) -> list[dict]:
    """Closed-form witnesses on ``steps`` equally spaced strengths in [0, 1]."""
    if steps < 2:
        raise ValueError("steps must be at least 2")
    rows = []
    for eta in np.linspace(0.0, 1.0, steps):
        eta = float(eta)
        w_ab = protocol.witness_ab(eta)
        rows.append(
            {
                "eta": eta,
                "w_ab": w_ab,
                "w_ac": protocol.witness_ac(eta),
                "w_abc": protocol.witness_abc(eta),
                "tradeoff_bound": protocol.tradeoff_bound(w_ab),
            }
        )
    return rows


# --- file formats -----------------------------------------------------------


def _fmt_angle(v: Optional[float]) -> str:
    return "" if v is None else f"{v:.12g}"


@contextlib.contextmanager
def _text_sink(target):
    """Yield a writable text stream for a path or an already-open stream."""
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", newline="", encoding="utf-8") as f:
            yield f


def write_counts(table: CountTable, target) -> None:
    with _text_sink(target) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in table.records:
            w.writerow([*r.bits, _fmt_angle(r.hwp_ab_rad), _fmt_angle(r.hwp_bc_rad), f"{r.eta_set:.12g}", r.count])


def read_counts(path, exposure_note: str = "") -> CountTable:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = {"x0", "x1", "y", "b", "z", "c", "eta_set", "count"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        recs = []
        for line, rec in enumerate(reader, start=2):
            try:
                recs.append(
                    CountRecord(
                        *(int(rec[k]) for k in ("x0", "x1", "y", "b", "z", "c")),
                        eta_set=float(rec["eta_set"]),
                        count=int(rec["count"]),
                        hwp_ab_rad=float(rec["hwp_ab_rad"]) if rec.get("hwp_ab_rad") else None,
                        hwp_bc_rad=float(rec["hwp_bc_rad"]) if rec.get("hwp_bc_rad") else None,
                    )
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line}: {exc}") from None
    return CountTable(recs, exposure_note)


def load_table1() -> CountTable:
    """The published coincidence counts (2 s exposure, 11 strengths)."""
    return read_counts(FIXTURE_PATH, exposure_note="coincidences in 2 s")


def write_analysis(result: AnalysisResult, target) -> None:
    with _text_sink(target) as f:
        f.write(json.dumps(result.to_json(), indent=2) + "\n")


def read_analysis(path) -> AnalysisResult:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return AnalysisResult([EtaSetResult.from_json(d) for d in data])


def write_curve(rows: Iterable[dict], target) -> None:
    with _text_sink(target) as f:
        w = csv.DictWriter(f, fieldnames=CURVE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: f"{r[k]:.15g}" for k in CURVE_COLUMNS})
