"""Jones-calculus model of the single-photon setup.

Conventions: ``|H> = (1, 0)``, ``|V> = (0, 1)``, wave-plate angles are the
fast-axis angle from horizontal in radians. Bob's weak measurement is a
Mach-Zehnder interferometer built from two polarizing beam displacers
(PBDs); the continuing exit implements K_{0|0} and the two plates
HWP_AB / HWP_BC around it pick the input state, Bob's basis/outcome and
Charlie's basis/outcome.

The fixed pi/4 plate that follows the interferometer is one of the three
plates merged into HWP_BC, so the detected train is
``LP . HWP(bc) . MZI exit . HWP(ab)`` with no separate post-plate; the
post-plate only appears in :func:`mzi_operator`, the stand-alone Kraus
realisation.

The polarization basis {H, V} plays the role of the sigma_X eigenbasis
{|+>, |->} of the abstract qubit. :func:`to_qubit_frame` makes that change
of basis explicit when optical operators are compared to Kraus operators.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .protocol import WeakMeasurement, joint_distribution
from .qmath import C2x2, equal_up_to_global_phase

H_POL = np.array([1, 0], dtype=complex)
V_POL = np.array([0, 1], dtype=complex)

VERIFY_TOL = 1e-9

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


class OpticsMismatch(AssertionError):
    """An optical configuration does not reproduce the protocol probability."""


def hwp_matrix(angle: float) -> C2x2:
    c, s = math.cos(2 * angle), math.sin(2 * angle)
    return np.array([[c, s], [s, -c]], dtype=complex)


def to_qubit_frame(op: C2x2) -> C2x2:
    """Re-express a Jones operator in the qubit basis where |H> -> |+>, |V> -> |->."""
    return _HADAMARD @ op @ _HADAMARD


def theta_for_eta(eta: float) -> float:
    """HWP_COM angle that sets measurement strength ``eta``; lies in [pi/8, pi/4]."""
    return (math.pi - math.acos(min(max(eta, -1.0), 1.0))) / 4


@dataclass(frozen=True)
class MziConfig:
    theta: float
    arm_h_angle: float = 0.0
    arm_v_angle: float = math.pi / 4
    post_hwp_angle: float = math.pi / 4

    @classmethod
    def for_eta(cls, eta: float) -> MziConfig:
        return cls(theta=theta_for_eta(eta))

    @classmethod
    def rotated(cls, alpha: float, eta: float) -> MziConfig:
        """Equivalent interferometer with HWP_V at ``alpha`` and HWP_H at ``alpha - pi/4``."""
        return cls(
            theta=alpha - math.acos(eta) / 4,
            arm_h_angle=alpha - math.pi / 4,
            arm_v_angle=alpha,
        )


def _pbd(beams: dict[int, np.ndarray]) -> dict[int, np.ndarray]:
    """Ideal beam displacer: H goes straight, V is shifted by one beam position."""
    out: dict[int, np.ndarray] = {}
    for pos, vec in beams.items():
        for shift, comp in ((0, 0), (1, 1)):
            part = np.zeros(2, dtype=complex)
            part[comp] = vec[comp]
            out[pos + shift] = out.get(pos + shift, np.zeros(2, dtype=complex)) + part
    return out


def mzi_beams(cfg: MziConfig, pol_in: np.ndarray) -> dict[int, np.ndarray]:
    """Polarization state at every exit position of the interferometer.

    Position 1 is the exit where both arms overlap and the only one that
    continues through the setup.
    """
    beams = _pbd({0: np.asarray(pol_in, dtype=complex)})
    arm_plates = {0: hwp_matrix(cfg.arm_h_angle), 1: hwp_matrix(cfg.arm_v_angle)}
    com = hwp_matrix(cfg.theta)
    beams = {pos: com @ arm_plates[pos] @ vec for pos, vec in beams.items()}
    return _pbd(beams)


def mzi_exit_jones(cfg: MziConfig) -> C2x2:
    """Jones operator from the MZI input to its continuing exit, before the post-HWP."""
    return np.column_stack([mzi_beams(cfg, v)[1] for v in (H_POL, V_POL)])


def mzi_jones(cfg: MziConfig) -> C2x2:
    """Continuing exit followed by the post-HWP, in the lab (H/V) frame."""
    return hwp_matrix(cfg.post_hwp_angle) @ mzi_exit_jones(cfg)


def mzi_operator(cfg: MziConfig) -> C2x2:
    """MZI + post-HWP operator in the qubit frame; equals K_{0|0}(eta) up to global phase."""
    return to_qubit_frame(mzi_jones(cfg))


def mzi_matches_kraus(eta: float, tol: float = 1e-10) -> bool:
    return equal_up_to_global_phase(mzi_operator(MziConfig.for_eta(eta)), WeakMeasurement(0, eta).kraus(0), tol)


@dataclass(frozen=True)
class SettingsRow:
    x0: int
    x1: int
    y: int
    b: int
    z: int
    c: int
    hwp_ab_angle: float
    hwp_bc_angle: float

    @property
    def bits(self) -> tuple[int, int, int, int, int, int]:
        return (self.x0, self.x1, self.y, self.b, self.z, self.c)

    def __str__(self):
        return "x={}{} y={} b={} z={} c={}".format(*self.bits)


@dataclass(frozen=True)
class TrainConfig:
    hwp_ab_angle: float
    mzi: MziConfig
    hwp_bc_angle: float

    def jones(self) -> C2x2:
        # the post-HWP is folded into hwp_bc_angle
        return hwp_matrix(self.hwp_bc_angle) @ mzi_exit_jones(self.mzi) @ hwp_matrix(self.hwp_ab_angle)


def _detected_probability(train: TrainConfig, lp_axis: np.ndarray) -> float:
    amp = np.vdot(lp_axis, train.jones() @ H_POL)
    return float(abs(amp) ** 2)


# Reference configuration used to fix the polarizer axis: x=00, y=0, b=0, z=0, c=0 at eta=1.
_CALIBRATION_ROW = SettingsRow(0, 0, 0, 0, 0, 0, math.pi / 16, math.pi / 4)


def calibrate_polarizer(row: SettingsRow = _CALIBRATION_ROW, eta: float = 1.0) -> np.ndarray:
    """Choose the fixed polarizer axis (H or V) from a single reference row."""
    target = joint_distribution(eta)[row.bits]
    train = TrainConfig(row.hwp_ab_angle, MziConfig.for_eta(eta), row.hwp_bc_angle)
    errs = {i: abs(_detected_probability(train, axis) - target) for i, axis in enumerate((H_POL, V_POL))}
    best = min(errs, key=errs.get)
    if errs[best] > VERIFY_TOL:
        raise OpticsMismatch(f"no polarizer axis reproduces the reference row {row}")
    return (H_POL, V_POL)[best]


_LP_AXIS: Optional[np.ndarray] = None


def polarizer_axis() -> np.ndarray:
    global _LP_AXIS
    if _LP_AXIS is None:
        _LP_AXIS = calibrate_polarizer()
    return _LP_AXIS


def train_probability(row: SettingsRow, eta: float) -> float:
    """Detection probability for one plate setting, input |H>, at strength ``eta``."""
    train = TrainConfig(row.hwp_ab_angle, MziConfig.for_eta(eta), row.hwp_bc_angle)
    return _detected_probability(train, polarizer_axis())


def check_row(row: SettingsRow, eta: float, tol: float = VERIFY_TOL) -> float:
    """Return the probability, raising OpticsMismatch if it disagrees with the protocol."""
    p = train_probability(row, eta)
    expected = joint_distribution(eta)[row.bits]
    if abs(p - expected) > tol:
        raise OpticsMismatch(f"row {row} at eta={eta}: optics {p:.12g} vs protocol {expected:.12g}")
    return p


@dataclass
class VerificationReport:
    etas: list[float]
    max_deviation: dict[tuple[int, ...], float] = field(default_factory=dict)
    failures: list[tuple[tuple[int, ...], float, float]] = field(default_factory=list)
    tol: float = VERIFY_TOL

    @property
    def n_checks(self) -> int:
        return len(self.max_deviation) * len(self.etas)

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        if not self.etas:
            return "no strengths requested; nothing checked"
        worst = max(self.max_deviation.values(), default=0.0)
        status = "PASS" if self.passed else f"FAIL ({len(self.failures)} mismatches)"
        return f"{status}: {self.n_checks} checks, worst deviation {worst:.3e}"


def verify_angle_table(rows: Sequence[SettingsRow], etas: Iterable[float], tol: float = VERIFY_TOL) -> VerificationReport:
    etas = [float(e) for e in etas]
    report = VerificationReport(etas=etas, tol=tol)
    if not etas:
        return report
    if len(rows) != 64 or {r.bits for r in rows} != set(itertools.product((0, 1), repeat=6)):
        raise ValueError("settings table must cover each of the 64 bit combinations exactly once")
    dists = {eta: joint_distribution(eta) for eta in etas}
    for row in rows:
        worst = 0.0
        for eta in etas:
            dev = abs(train_probability(row, eta) - dists[eta][row.bits])
            worst = max(worst, dev)
            if dev > tol:
                report.failures.append((row.bits, eta, dev))
        report.max_deviation[row.bits] = worst
    return report


def read_settings(path) -> list[SettingsRow]:
    """Unique plate settings from a count-table CSV (rows repeat per eta_set)."""
    seen: dict[tuple[int, ...], SettingsRow] = {}
    with open(path, newline="", encoding="utf-8") as f:
        for rec in csv.DictReader(f):
            bits = tuple(int(rec[k]) for k in ("x0", "x1", "y", "b", "z", "c"))
            if not rec.get("hwp_ab_rad") or not rec.get("hwp_bc_rad"):
                raise ValueError(f"{path}: row {bits} has no plate angles")
            row = SettingsRow(*bits, float(rec["hwp_ab_rad"]), float(rec["hwp_bc_rad"]))
            if bits in seen and seen[bits] != row:
                raise ValueError(f"{path}: inconsistent angles for setting {bits}")
            seen[bits] = row
    return sorted(seen.values(), key=lambda r: r.bits)


def table1_settings() -> list[SettingsRow]:
    return read_settings(Path(__file__).with_name("data") / "table1_counts.csv")
