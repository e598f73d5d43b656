"""Exact amplitude simulator for the small circuits of the bench.

Register convention: qubit 0 is the most significant bit of the amplitude
index, so reshaping the vector (C order) to ``(2,) * n`` puts qubit ``q`` on
axis ``q``.

Noise is a classical mixture of X-flip patterns.  Every probability below is
obtained by enumerating those patterns and, where a circuit measures, both
outcome branches; no randomness is involved.  Branch weights are reduced
with :func:`math.fsum`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import PatternSpaceTooLarge, SubsetTooLarge

MAX_QUBITS = 20
MAX_SUBSET = 20
NORM_TOL = 1e-10

SQRT_HALF = 1.0 / math.sqrt(2.0)
_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) * SQRT_HALF


class GateKind(enum.Enum):
    H = "H"
    X = "X"
    Z = "Z"
    CNOT = "CNOT"
    TOFFOLI = "Toffoli"
    MEASURE_Z = "MeasureZ"


_ARITY = {
    GateKind.H: 1,
    GateKind.X: 1,
    GateKind.Z: 1,
    GateKind.MEASURE_Z: 1,
    GateKind.CNOT: 2,
    GateKind.TOFFOLI: 3,
}


@dataclass(frozen=True)
class Gate:
    """A gate and the qubits it acts on.

    For CNOT and Toffoli the controls come first and the target last.
    """

    kind: GateKind
    targets: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(self.targets) != _ARITY[self.kind]:
            raise ValueError(
                f"{self.kind.value} takes {_ARITY[self.kind]} qubit(s), got {self.targets}"
            )
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"repeated qubit in {self.targets}")


def H(q):
    return Gate(GateKind.H, (q,))


def X(q):
    return Gate(GateKind.X, (q,))


def Z(q):
    return Gate(GateKind.Z, (q,))


def CNOT(control, target):
    return Gate(GateKind.CNOT, (control, target))


def TOFFOLI(c1, c2, target):
    return Gate(GateKind.TOFFOLI, (c1, c2, target))


def MEASURE(q):
    return Gate(GateKind.MEASURE_Z, (q,))


class BellState(enum.Enum):
    PHI_PLUS = "Phi+"
    PHI_MINUS = "Phi-"
    PSI_PLUS = "Psi+"
    PSI_MINUS = "Psi-"


_BELL_VECTORS = {
    BellState.PHI_PLUS: np.array([1, 0, 0, 1], dtype=complex) * SQRT_HALF,
    BellState.PHI_MINUS: np.array([1, 0, 0, -1], dtype=complex) * SQRT_HALF,
    BellState.PSI_PLUS: np.array([0, 1, 1, 0], dtype=complex) * SQRT_HALF,
    BellState.PSI_MINUS: np.array([0, 1, -1, 0], dtype=complex) * SQRT_HALF,
}


@dataclass(frozen=True, eq=False)
class PureState:
    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 0 <= self.num_qubits <= MAX_QUBITS:
            raise ValueError(f"register size must be in [0, {MAX_QUBITS}]")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**self.num_qubits:
            raise ValueError("amplitude vector length must be 2**num_qubits")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised (norm**2 = {norm})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zeros(cls, num_qubits: int) -> "PureState":
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def basis(cls, bits: str) -> "PureState":
        """Computational basis state from a bit string, qubit 0 first."""
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(len(bits), amps)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probability(self, bits: str) -> float:
        return float(abs(self.amplitudes[int(bits, 2)]) ** 2)

    def allclose(self, other: "PureState", atol: float = 1e-12) -> bool:
        return self.num_qubits == other.num_qubits and np.allclose(
            self.amplitudes, other.amplitudes, atol=atol
        )


def _from_tensor(n: int, t: np.ndarray) -> PureState:
    return PureState(n, np.ascontiguousarray(t).reshape(-1))


def _check_indices(state: PureState, qubits: Iterable[int]) -> None:
    for q in qubits:
        if not 0 <= q < state.num_qubits:
            raise IndexError(f"qubit {q} out of range for {state.num_qubits} qubits")


def _flip(t: np.ndarray, q: int) -> np.ndarray:
    return np.flip(t, axis=q)


def _controlled_flip(t: np.ndarray, controls: Sequence[int], target: int) -> np.ndarray:
    out = t.copy()
    idx = [slice(None)] * t.ndim
    for c in controls:
        idx[c] = 1
    idx = tuple(idx)
    # axes shift once the integer-indexed control axes are removed
    axis = target - sum(1 for c in controls if c < target)
    out[idx] = np.flip(t[idx], axis=axis)
    return out


def apply_gate(state: PureState, gate: Gate) -> PureState:
    """Apply a unitary gate.  Use :func:`measure` for ``MeasureZ``."""
    _check_indices(state, gate.targets)
    t = state.tensor()
    k = gate.kind
    if k is GateKind.X:
        out = _flip(t, gate.targets[0])
    elif k is GateKind.Z:
        q = gate.targets[0]
        out = t.copy()
        idx = [slice(None)] * t.ndim
        idx[q] = 1
        out[tuple(idx)] *= -1
    elif k is GateKind.H:
        q = gate.targets[0]
        out = np.moveaxis(np.tensordot(_H, t, axes=([1], [q])), 0, q)
    elif k is GateKind.CNOT:
        out = _controlled_flip(t, gate.targets[:1], gate.targets[1])
    elif k is GateKind.TOFFOLI:
        out = _controlled_flip(t, gate.targets[:2], gate.targets[2])
    else:
        raise ValueError("MeasureZ is not unitary; use measure()")
    return _from_tensor(state.num_qubits, out)


def apply_circuit(state: PureState, gates: Iterable[Gate]) -> PureState:
    for g in gates:
        state = apply_gate(state, g)
    return state


def measure(state: PureState, qubit: int) -> list[tuple[int, float, PureState]]:
    """Both Z-measurement branches as ``(outcome, probability, post_state)``.

    Branches of zero probability are dropped.  The measured qubit stays in the
    register, collapsed to the outcome.
    """
    _check_indices(state, [qubit])
    t = state.tensor()
    branches = []
    for outcome in (0, 1):
        proj = np.zeros_like(t)
        idx = [slice(None)] * t.ndim
        idx[qubit] = outcome
        idx = tuple(idx)
        proj[idx] = t[idx]
        prob = float(np.vdot(proj, proj).real)
        if prob > 0.0:
            branches.append(
                (outcome, prob, _from_tensor(state.num_qubits, proj / math.sqrt(prob)))
            )
    return branches


@dataclass(frozen=True)
class Branch:
    """One classical history of a circuit run: weight, state, recorded bits."""

    weight: float
    state: PureState
    bits: tuple[tuple[int, int], ...] = ()

    def bit(self, qubit: int) -> int:
        return dict(self.bits)[qubit]


def run_branches(state: PureState, gates: Iterable[Gate], weight: float = 1.0):
    """Run ``gates``, splitting into branches at every ``MeasureZ``."""
    branches = [Branch(weight, state)]
    for g in gates:
        if g.kind is GateKind.MEASURE_Z:
            q = g.targets[0]
            branches = [
                Branch(b.weight * prob, post, b.bits + ((q, outcome),))
                for b in branches
                for outcome, prob, post in measure(b.state, q)
            ]
        else:
            branches = [Branch(b.weight, apply_gate(b.state, g), b.bits) for b in branches]
    return branches


def bell_overlap(state: PureState, qa: int, qb: int, bell=BellState.PHI_PLUS) -> float:
    """``<B| rho_ab |B>`` for the reduced state of qubits ``qa``, ``qb``."""
    _check_indices(state, [qa, qb])
    t = np.moveaxis(state.tensor(), (qa, qb), (0, 1)).reshape(4, -1)
    amps = np.conj(_BELL_VECTORS[bell]) @ t
    return float(np.sum(np.abs(amps) ** 2))


def ghz_overlap(state: PureState, qubits: Sequence[int]) -> float:
    """``<GHZ| rho |GHZ>`` on ``qubits`` with GHZ = (|0..0> + |1..1>)/sqrt 2."""
    _check_indices(state, qubits)
    m = len(qubits)
    t = np.moveaxis(state.tensor(), tuple(qubits), tuple(range(m))).reshape(2**m, -1)
    amps = (t[0] + t[-1]) * SQRT_HALF
    return float(np.sum(np.abs(amps) ** 2))


def classify_bell(state: PureState, qa: int, qb: int, atol: float = 1e-9) -> BellState:
    """Name the Bell state held by ``qa``, ``qb``; raises if it is not one."""
    for bell in BellState:
        if abs(bell_overlap(state, qa, qb, bell) - 1.0) < atol:
            return bell
    raise ValueError(f"qubits {qa},{qb} do not hold a Bell state")


@dataclass(frozen=True)
class ErrorPattern:
    """A set of X flips over ``subset``; bit ``i`` of ``mask`` flips ``subset[i]``."""

    subset: tuple[int, ...]
    mask: int
    weight: float = 1.0

    @property
    def flipped(self) -> tuple[int, ...]:
        return tuple(q for i, q in enumerate(self.subset) if self.mask >> i & 1)

    @property
    def size(self) -> int:
        return bin(self.mask).count("1")

    @classmethod
    def from_flips(cls, flips: Iterable[int], subset: Sequence[int] | None = None):
        flips = tuple(flips)
        subset = tuple(subset) if subset is not None else tuple(sorted(set(flips)))
        mask = 0
        for q in flips:
            mask |= 1 << subset.index(q)
        return cls(subset, mask)

    def apply(self, state: PureState) -> PureState:
        t = state.tensor()
        for q in self.flipped:
            t = _flip(t, q)
        return _from_tensor(state.num_qubits, t)


def error_patterns(subset: Sequence[int], p: float) -> list[ErrorPattern]:
    subset = tuple(subset)
    s = len(subset)
    if s > MAX_SUBSET:
        raise SubsetTooLarge(f"cannot enumerate 2**{s} flip patterns")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    q = 1.0 - p
    out = []
    for mask in range(2**s):
        k = bin(mask).count("1")
        out.append(ErrorPattern(subset, mask, p**k * q ** (s - k)))
    return out


def enumerate_channel(base: PureState, subset: Sequence[int], p: float):
    """All X-flip branches of ``base`` over ``subset`` with their weights."""
    _check_indices(base, subset)
    return [(pat, pat.apply(base)) for pat in error_patterns(subset, p)]


@dataclass(frozen=True)
class ExperimentResult:
    """Outcome statistics of one exactly enumerated experiment.

    ``raw_success_probability`` is the unconditional weight of successful
    runs and ``conditional_bell_fidelity`` the same weight divided by the
    post-selection acceptance.  ``pair_fidelity`` carries the plain
    ``<Phi+|rho|Phi+>`` of the output pair when it differs from the success
    criterion (for the codes a logical flip on *both* sides cancels and is
    invisible in the pair state).
    """

    accept_probability: float
    conditional_bell_fidelity: float
    raw_success_probability: float
    pair_fidelity: float | None = None

    @property
    def root_success(self) -> float:
        """Square root of the raw success, the single-qubit-style fidelity."""
        return math.sqrt(self.raw_success_probability)


def _bell_pair(a: int, b: int) -> list[Gate]:
    return [H(a), CNOT(a, b)]


# Purification register: pair phi = (0 at s, 3 at d), pair psi = (1 at s, 2 at d)
_PUR_PHI_S, _PUR_PSI_S, _PUR_PSI_D, _PUR_PHI_D = 0, 1, 2, 3


def purification_experiment(p_pair: float) -> ExperimentResult:
    """Bilateral-CNOT purification of two pairs with pair-level error ``p_pair``.

    Each pair independently starts as ``Psi+`` with probability ``p_pair``
    (one X on its s-side qubit).  Both sides CNOT from the kept pair onto the
    sacrificed pair, measure the latter, and keep the result when the bits
    agree.
    """
    base = apply_circuit(
        PureState.zeros(4),
        _bell_pair(_PUR_PHI_S, _PUR_PHI_D) + _bell_pair(_PUR_PSI_S, _PUR_PSI_D),
    )
    protocol = [
        CNOT(_PUR_PHI_S, _PUR_PSI_S),
        CNOT(_PUR_PHI_D, _PUR_PSI_D),
        MEASURE(_PUR_PSI_S),
        MEASURE(_PUR_PSI_D),
    ]
    accepted, success = [], []
    for pattern, noisy in enumerate_channel(base, (_PUR_PHI_S, _PUR_PSI_S), p_pair):
        if pattern.weight == 0.0:
            continue
        for br in run_branches(noisy, protocol, pattern.weight):
            if br.bit(_PUR_PSI_S) != br.bit(_PUR_PSI_D):
                continue
            accepted.append(br.weight)
            success.append(br.weight * bell_overlap(br.state, _PUR_PHI_S, _PUR_PHI_D))
    accept = math.fsum(accepted)
    raw = math.fsum(success)
    return ExperimentResult(accept, raw / accept if accept > 0 else 0.0, raw)


def qubit_level_pair_error(p_x: float) -> float:
    """Probability that independent X flips (rate ``p_x``) leave ``Psi+``."""
    base = apply_circuit(PureState.zeros(2), _bell_pair(0, 1))
    hits = []
    for pattern, noisy in enumerate_channel(base, (0, 1), p_x):
        if classify_bell(noisy, 0, 1) is BellState.PSI_PLUS:
            hits.append(pattern.weight)
    return math.fsum(hits)


# Swapping register: s=0, r holds 1 (pair with s) and 2 (pair with d), d=3
_SW_S, _SW_R1, _SW_R2, _SW_D = 0, 1, 2, 3


def _bell_measure_and_correct(state, r1, r2, x_targets, z_targets):
    """Bell measurement on ``r1``, ``r2`` with X/Z feed-forward, every branch."""
    out = []
    for br in run_branches(state, [CNOT(r1, r2), H(r1), MEASURE(r1), MEASURE(r2)]):
        st = br.state
        if br.bit(r2):
            st = apply_circuit(st, [X(q) for q in x_targets])
        if br.bit(r1):
            st = apply_circuit(st, [Z(q) for q in z_targets])
        out.append(Branch(br.weight, st, br.bits))
    return out


def swapping_experiment(inject: ErrorPattern) -> BellState:
    """Swap ``s-r`` and ``r-d`` into ``s-d`` after applying ``inject``.

    Flip positions refer to the register ``s=0, r=1, r=2, d=3``.  Every
    measurement branch is checked to yield the same Bell state.
    """
    base = apply_circuit(PureState.zeros(4), _bell_pair(_SW_S, _SW_R1) + _bell_pair(_SW_R2, _SW_D))
    noisy = inject.apply(base)
    results = {
        classify_bell(br.state, _SW_S, _SW_D)
        for br in _bell_measure_and_correct(noisy, _SW_R1, _SW_R2, [_SW_D], [_SW_D])
    }
    if len(results) != 1:
        raise AssertionError(f"measurement branches disagree: {results}")
    return results.pop()


def _encode(data: int, ancillas: Sequence[int]) -> list[Gate]:
    return [CNOT(data, a) for a in ancillas]


def _decode(data: int, a1: int, a2: int) -> list[Gate]:
    return [CNOT(data, a2), CNOT(data, a1), TOFFOLI(a1, a2, data)]


# Repetition-code register: s block 0,1,2 and d block 3,4,5 (data first).
# The optional witness 6 is entangled with the source and never sees noise.
_REP_S = (0, 1, 2)
_REP_D = (3, 4, 5)
_REP_W = 6


def _repetition_outputs(p: float, witness: bool):
    s0, s1, s2 = _REP_S
    d0, d1, d2 = _REP_D
    prep = [H(s0), CNOT(s0, d0)]
    if witness:
        prep.append(CNOT(s0, _REP_W))
    prep += _encode(s0, (s1, s2)) + _encode(d0, (d1, d2))
    base = apply_circuit(PureState.zeros(7 if witness else 6), prep)
    decode = _decode(s0, s1, s2) + _decode(d0, d1, d2)
    for pattern, noisy in enumerate_channel(base, _REP_S + _REP_D, p):
        if pattern.weight > 0.0:
            yield pattern.weight, apply_circuit(noisy, decode)


def repetition_code_experiment(p: float) -> ExperimentResult:
    """Encode a Bell pair into two (3,1) blocks, flip bits, decode and correct.

    A logical flip on *both* blocks leaves ``Phi+`` unchanged, so the pair
    state alone cannot tell whether each block was decoded correctly.  The
    success run therefore prepares ``|000> + |111>`` over s-data, d-data and
    a noiseless witness and scores the GHZ overlap after decoding; a second
    run without the witness gives the plain pair fidelity.
    """
    s0, d0 = _REP_S[0], _REP_D[0]
    raw = math.fsum(w * ghz_overlap(out, (s0, d0, _REP_W)) for w, out in _repetition_outputs(p, True))
    pair = math.fsum(w * bell_overlap(out, s0, d0) for w, out in _repetition_outputs(p, False))
    return ExperimentResult(1.0, raw, raw, pair_fidelity=pair)


# ECC swap register: s block 0,1,2 (data 0), r 3 and 4, d block 5,6,7
# (data 5); optional witness 8 entangled with the s-r source.
_ES_S = (0, 1, 2)
_ES_R1, _ES_R2 = 3, 4
_ES_D = (5, 6, 7)
_ES_W = 8


def _ecc_swap_outputs(patterns: Sequence[ErrorPattern], witness: bool):
    s0, s1, s2 = _ES_S
    d0, d1, d2 = _ES_D
    prep = [H(s0), CNOT(s0, _ES_R1)]
    if witness:
        prep.append(CNOT(s0, _ES_W))
    prep += _bell_pair(_ES_R2, d0) + _encode(s0, (s1, s2)) + _encode(d0, (d1, d2))
    base = apply_circuit(PureState.zeros(9 if witness else 8), prep)
    swapped = _bell_measure_and_correct(base, _ES_R1, _ES_R2, _ES_D, _ES_D)
    decode = _decode(s0, s1, s2) + _decode(d0, d1, d2)
    for pattern in patterns:
        for br in swapped:
            yield pattern, br.weight, apply_circuit(pattern.apply(br.state), decode)


def ecc_swap_experiment(p: float) -> ExperimentResult:
    """Swap between two (3,1)-encoded end blocks, X noise on both blocks.

    Scored like :func:`repetition_code_experiment`.
    """
    s0, d0 = _ES_S[0], _ES_D[0]
    patterns = [pat for pat in error_patterns(_ES_S + _ES_D, p) if pat.weight > 0.0]
    raw = math.fsum(
        pat.weight * w * ghz_overlap(out, (s0, d0, _ES_W))
        for pat, w, out in _ecc_swap_outputs(patterns, True)
    )
    pair = math.fsum(
        pat.weight * w * bell_overlap(out, s0, d0)
        for pat, w, out in _ecc_swap_outputs(patterns, False)
    )
    return ExperimentResult(1.0, raw, raw, pair_fidelity=pair)


def ecc_swap_outcome(flips: Iterable[int]) -> BellState:
    """Bell state of the decoded s-d pair for one fixed flip set.

    Flip indices: s block ``0, 1, 2`` then d block ``5, 6, 7``.
    """
    pattern = ErrorPattern.from_flips(flips, _ES_S + _ES_D)
    results = {
        classify_bell(out, _ES_S[0], _ES_D[0])
        for _, _, out in _ecc_swap_outputs([pattern], False)
    }
    if len(results) != 1:
        raise AssertionError(f"measurement branches disagree: {results}")
    return results.pop()


def _concatenated_block(levels: int, start: int) -> tuple[list[Gate], list[Gate], list[int]]:
    """Encode/decode gates for a ``levels``-deep block whose data sits at ``start``.

    Block layout is recursive: sub-block ``j`` occupies
    ``start + j * 3**(levels-1)`` onwards, its own data qubit first.
    """
    if levels == 0:
        return [], [], [start]
    width = 3 ** (levels - 1)
    heads = [start, start + width, start + 2 * width]
    encode = _encode(heads[0], heads[1:])
    decode_inner, qubits = [], []
    for h in heads:
        enc, dec, qs = _concatenated_block(levels - 1, h)
        encode += enc
        decode_inner += dec
        qubits += qs
    return encode, decode_inner + _decode(*heads), qubits


def concatenated_success_probability(levels: int, p: float, brute_force: bool | None = None) -> float:
    """Probability that one logical qubit survives ``levels`` of concatenation.

    Up to two levels this runs the encode / flip / recursive-decode circuit
    on the state vector for all ``2**(3**levels)`` flip patterns.  Deeper
    levels fall back on the recursion ``s -> s**3 + 3 (1 - s) s**2``.
    """
    if levels < 0:
        raise ValueError("levels must be non-negative")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if brute_force is None:
        brute_force = levels <= 2
    if brute_force and levels > 2:
        raise PatternSpaceTooLarge(f"2**{3**levels} patterns is too many to enumerate")
    if not brute_force:
        s = 1.0 - p
        for _ in range(levels):
            s = s**3 + 3.0 * (1.0 - s) * s * s
        return s

    # data-qubit 0 starts entangled with a noiseless witness; success is
    # the Phi+ overlap between them after decoding
    encode, decode, qubits = _concatenated_block(levels, 0)
    witness = 3**levels
    base = apply_circuit(PureState.zeros(witness + 1), _bell_pair(0, witness) + encode)
    terms = []
    for pattern, noisy in enumerate_channel(base, qubits, p):
        if pattern.weight == 0.0:
            continue
        terms.append(pattern.weight * bell_overlap(apply_circuit(noisy, decode), 0, witness))
    return math.fsum(terms)


def p_grid(points: int = 21) -> list[float]:
    """Evenly spaced probabilities on [0, 1], endpoints included."""
    return [i / (points - 1) for i in range(points)]
