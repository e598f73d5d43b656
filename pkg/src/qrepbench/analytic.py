"""Closed-form fidelity recursions and resource formulas.

Two fidelity-improvement schemes are modelled:

* repeated purification, where two Bell pairs of fidelity ``F`` are
  consumed to produce one of fidelity ``F**2 / (F**2 + (1 - F)**2)``;
* concatenated (3,1) repetition error correction, where a single-qubit
  fidelity evolves as ``F * sqrt(3 - 2F)`` and the Bell-pair fidelity is
  the square of the single-qubit value.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

from .errors import (
    InvalidFidelity,
    IterationCapExceeded,
    PurificationBelowThreshold,
    ResourceOverflow,
)

__all__ = [
    "SchemeKind",
    "Scheme",
    "PURIFICATION",
    "ECC_REPETITION",
    "BellMixture",
    "FidelityTrajectory",
    "ResourceProfile",
    "DegradedRegimeWarning",
    "purify_step",
    "purified_pair_fidelity",
    "ecc_single_qubit_step",
    "ecc_bell_fidelity",
    "fidelity_trajectory",
    "iterations_to_target",
    "purification_iteration_bound",
    "ecc_iteration_bound",
    "memory_required",
    "operations_required",
    "resource_profile",
]

ITERATION_CAP = 10_000
TOLERANCE = 1e-12
# Largest resource count accepted: anything at or above 2**1024 no longer
# converts to a finite double.
MAX_RESOURCE = 2**1024 - 1
# Below this single-qubit error the ECC error at least halves per level.
HALVING_THRESHOLD = (6 - math.sqrt(20)) / 8


class DegradedRegimeWarning(UserWarning):
    """Bit-flip probability above 1/2, outside the repetition code's useful range."""


class SchemeKind(enum.Enum):
    PURIFICATION = "purification"
    ECC_REPETITION = "ecc"


@dataclass(frozen=True)
class Scheme:
    kind: SchemeKind
    m: int = 3

    def __post_init__(self):
        if self.kind is SchemeKind.ECC_REPETITION and self.m < 3:
            raise ValueError(f"code arity must be >= 3, got {self.m}")

    @property
    def is_purification(self) -> bool:
        return self.kind is SchemeKind.PURIFICATION

    @property
    def name(self) -> str:
        return self.kind.value

    @classmethod
    def parse(cls, text: str) -> "Scheme":
        key = text.strip().lower()
        if key in ("purification", "pur", "purify"):
            return PURIFICATION
        if key in ("ecc", "ecc_repetition", "repetition"):
            return ECC_REPETITION
        raise ValueError(f"unknown scheme {text!r}")


PURIFICATION = Scheme(SchemeKind.PURIFICATION)
ECC_REPETITION = Scheme(SchemeKind.ECC_REPETITION, 3)


def _check_unit(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise InvalidFidelity(f"{name} must lie in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class BellMixture:
    """Diagonal mixture ``F |Phi+><Phi+| + (1 - F) |Psi+><Psi+|``."""

    fidelity: float
    error_weight: float

    def __post_init__(self):
        _check_unit("fidelity", self.fidelity)
        _check_unit("error_weight", self.error_weight)
        if abs(self.fidelity + self.error_weight - 1.0) > TOLERANCE:
            raise ValueError("mixture weights must sum to 1")

    @classmethod
    def from_fidelity(cls, fidelity: float) -> "BellMixture":
        return cls(fidelity, 1.0 - fidelity)

    def purified(self) -> "BellMixture":
        return BellMixture.from_fidelity(purify_step(self.fidelity))


@dataclass(frozen=True)
class FidelityTrajectory:
    scheme: Scheme
    initial: float
    values: tuple[float, ...]

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True)
class ResourceProfile:
    scheme: Scheme
    initial_fidelity: float
    target_fidelity: float
    iterations: int
    path_length: int
    qubits: int
    operations: int
    achieved_fidelity: float


def purify_step(F: float) -> float:
    """One round of purification on a pair of fidelity ``F``."""
    F = _check_unit("F", F)
    a = F * F
    return a / (a + (1.0 - F) ** 2)


def purified_pair_fidelity(p: float) -> float:
    """Fidelity after one purification, given pair-level error probability ``p``."""
    p = _check_unit("p", p)
    q = 1.0 - p
    return q * q / (q * q + p * p)


def ecc_single_qubit_step(F: float) -> float:
    """One level of (3,1) repetition concatenation on a single-qubit fidelity."""
    F = _check_unit("F", F)
    return F * math.sqrt(3.0 - 2.0 * F)


def ecc_bell_fidelity(p: float) -> float:
    """Bell-pair fidelity with both halves protected by the (3,1) code.

    Values of ``p`` above 1/2 are accepted; a :class:`DegradedRegimeWarning`
    is emitted since the code then makes things worse.
    """
    p = _check_unit("p", p)
    if p > 0.5:
        warnings.warn(
            f"bit-flip probability {p} > 1/2: repetition code degrades fidelity",
            DegradedRegimeWarning,
            stacklevel=2,
        )
    q = 1.0 - p
    return q**3 + 3.0 * p * q * q


def _check_purifiable(F0: float) -> None:
    if F0 <= 0.5:
        raise PurificationBelowThreshold(
            f"purification needs an input fidelity above 0.5, got {F0}"
        )


def _trajectory_values(scheme: Scheme, F0: float):
    """Yield F0, F1, ... forever (Bell-pair convention for ECC)."""
    if scheme.is_purification:
        F = F0
        while True:
            yield F
            F = purify_step(F)
    else:
        single = math.sqrt(F0)
        yield F0
        while True:
            single = ecc_single_qubit_step(single)
            yield single * single


def fidelity_trajectory(scheme: Scheme, F0: float, n: int) -> FidelityTrajectory:
    """Bell-pair fidelities ``[F0, F1, ..., Fn]`` under ``scheme``.

    For the repetition code ``F0`` is the Bell-pair fidelity; the single-qubit
    recursion is seeded with ``sqrt(F0)`` and every entry is squared back.
    """
    F0 = _check_unit("F0", F0)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if scheme.is_purification:
        _check_purifiable(F0)
    values = []
    for F in _trajectory_values(scheme, F0):
        values.append(F)
        if len(values) > n:
            break
    return FidelityTrajectory(scheme, F0, tuple(values))


def iterations_to_target(
    scheme: Scheme, F0: float, target: float, cap: int = ITERATION_CAP
) -> int:
    """Smallest ``n`` whose trajectory value reaches ``target``."""
    F0 = _check_unit("F0", F0)
    target = float(target)
    if not target < 1.0:
        raise InvalidFidelity(f"target must be below 1, got {target}")
    if scheme.is_purification:
        _check_purifiable(F0)
    for n, F in enumerate(_trajectory_values(scheme, F0)):
        if F >= target:
            return n
        if n >= cap:
            raise IterationCapExceeded(
                f"{scheme.name}: target {target} not reached from {F0} within {cap} steps"
            )
    raise AssertionError("unreachable")


def purification_iteration_bound(F0: float, eps: float) -> int:
    """Upper bound on the purification rounds needed to reach ``1 - eps``.

    A first phase lifts ``F0`` past ``1/sqrt(2)`` (skipped when ``F0`` already
    reaches 2/3, since from 2/3 onwards the iterates dominate
    ``2**(2**k) / (2**(2**k) + 1)``), then ``ceil(log2 log2 (1/eps))`` rounds
    finish the job.
    """
    F0 = float(F0)
    if not 0.5 < F0 < 1.0:
        raise InvalidFidelity(f"F0 must lie in (1/2, 1), got {F0}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if F0 >= 2.0 / 3.0:
        phase1 = 0
    else:
        # log1p keeps the denominator nonzero for F0 a few ulps above 1/2
        phase1 = math.ceil(-math.log2(F0 * math.sqrt(2.0)) * math.log(2.0) / math.log1p(F0 - 0.5))
    log_inv = math.log2(1.0 / eps)
    phase2 = math.ceil(math.log2(log_inv)) if log_inv > 1.0 else 0
    return phase1 + phase2


def ecc_iteration_bound(F0: float, eps: float) -> int:
    """Upper bound on single-qubit concatenation levels to reach ``1 - eps``.

    Iterates until the error drops below the halving threshold (about 0.191),
    then counts the halvings still needed.
    """
    F0 = float(F0)
    if not 0.5 < F0 <= 1.0:
        raise InvalidFidelity(f"F0 must lie in (1/2, 1], got {F0}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    F, n0 = F0, 0
    while 1.0 - F >= HALVING_THRESHOLD:
        F = ecc_single_qubit_step(F)
        n0 += 1
        if n0 > ITERATION_CAP:
            raise IterationCapExceeded("halving regime never reached")
    err = 1.0 - F
    if err <= eps:
        return n0
    return n0 + math.ceil(math.log2(err / eps))


def _checked_power(base: int, exponent: int) -> int:
    # bit_length estimate first so we never materialise gigantic ints
    if exponent * math.log2(base) >= 1024:
        raise ResourceOverflow(f"{base}**{exponent} exceeds the representable range")
    value = base**exponent
    if value > MAX_RESOURCE:
        raise ResourceOverflow(f"{base}**{exponent} exceeds the representable range")
    return value


def _check_counts(n: int, ell: int) -> None:
    if n < 1 or ell < 1:
        raise ValueError(f"n and ell must be >= 1, got n={n}, ell={ell}")


def memory_required(scheme: Scheme, n: int, ell: int) -> int:
    """Qubits a repeater needs for ``n`` iterations over a path of ``ell`` hops."""
    _check_counts(n, ell)
    base = 2 if scheme.is_purification else scheme.m
    return _checked_power(base, n + ell - 1)


def operations_required(scheme: Scheme, n: int, ell: int) -> int:
    """Operation count: ``7 n (ell - 1)`` for purification, ``4 (ell - 1)`` for ECC."""
    _check_counts(n, ell)
    if scheme.is_purification:
        return 7 * n * (ell - 1)
    return 4 * (ell - 1)


def resource_profile(
    scheme: Scheme, F0: float, target: float, ell: int
) -> ResourceProfile:
    n = max(1, iterations_to_target(scheme, F0, target))
    achieved = fidelity_trajectory(scheme, F0, n).values[-1]
    return ResourceProfile(
        scheme=scheme,
        initial_fidelity=float(F0),
        target_fidelity=float(target),
        iterations=n,
        path_length=ell,
        qubits=memory_required(scheme, n, ell),
        operations=operations_required(scheme, n, ell),
        achieved_fidelity=achieved,
    )
