"""Detector events per dwell interval, with Poisson statistics.

One dwell interval is one protocol trial.  Pair production is Poissonian
(``pair_rate * dwell`` per interval, the defaults giving the operating point
of one coincidence per interval) and each detector adds independent Poisson
dark counts.  A trial is kept only when exactly one event landed on exactly
one detector per side, so kept trials are single-photon-faithful; a dark
count paired with an empty interval can still fake a record with random
bits, which is the instrumental error channel.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import qmath
from .optics import MeasBasis
from .states import EveConfig, TwoQubitState, angle_from_basis, basis_from_angle, dephase_bob


@dataclass(frozen=True)
class DetectorConfig:
    dwell: float = 0.1          # seconds per counting interval
    pair_rate: float = 10.0     # entangled pairs per second
    dark_rate: float = 0.1      # dark counts per second per detector

    def __post_init__(self):
        if self.dwell < 0 or self.pair_rate < 0 or self.dark_rate < 0:
            raise ValueError("detector rates and dwell must be nonnegative")


@dataclass
class TrialRecord:
    """Outcome of one dwell interval."""

    trial_index: int
    alice_basis: MeasBasis
    bob_basis: MeasBasis
    eve_applied: bool = False
    eve_basis: MeasBasis | None = None
    alice_bit: int | None = None
    bob_bit: int | None = None
    kept: bool = False


_PROJ4_CACHE: dict[tuple[str, str], list[np.ndarray]] = {}


def _joint_projectors(a: MeasBasis, b: MeasBasis) -> list[np.ndarray]:
    key = (a.value, b.value)
    if key not in _PROJ4_CACHE:
        ap, am = a.projectors()
        bp, bm = b.projectors()
        # order matches joint_probs: (1,1), (1,0), (0,1), (0,0)
        _PROJ4_CACHE[key] = [qmath.tensor(ap, bp), qmath.tensor(ap, bm),
                             qmath.tensor(am, bp), qmath.tensor(am, bm)]
    return _PROJ4_CACHE[key]


_BIT_PAIRS = ((1, 1), (1, 0), (0, 1), (0, 0))


def joint_probs(s: TwoQubitState, a: MeasBasis, b: MeasBasis) -> np.ndarray:
    """Joint outcome probabilities (p11, p10, p01, p00) for one pair."""
    rho = s.rho
    probs = np.array([np.trace(rho @ proj).real for proj in _joint_projectors(a, b)])
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def sample_trial(s: TwoQubitState, a: MeasBasis, b: MeasBasis, rng) -> tuple[int, int]:
    """Draw one (alice_bit, bob_bit) pair from the joint distribution."""
    cum = np.cumsum(joint_probs(s, a, b))
    k = int(np.searchsorted(cum, rng.random(), side="right"))
    return _BIT_PAIRS[min(k, 3)]


class _OutcomeSampler:
    """Precomputed categorical tables for fast per-pair sampling.

    Scenario keys name the state of the pair after Eve's (possible) action;
    intercept-resend folds her outcome into an 8-way joint table so a single
    uniform draw settles one pair.
    """

    def __init__(self, base: TwoQubitState, eve: EveConfig):
        self.base = base
        self.states: dict = {"base": [(1.0, base)]}
        if eve.mode == "dephasing":
            for angle in self._eve_angles(eve):
                self.states[("deph", angle)] = [(1.0, dephase_bob(base, angle, eve.strength))]
        elif eve.mode == "intercept_resend":
            for basis in self._eve_bases(eve):
                plus2, minus2 = basis.projectors()
                branches = []
                for proj2 in (minus2, plus2):  # index by eve bit
                    op = qmath.tensor(np.eye(2, dtype=complex), proj2)
                    p = float(np.trace(base.rho @ op).real)
                    if p > 0.0:
                        branches.append((p, TwoQubitState(op @ base.rho @ op / p)))
                    else:
                        branches.append((0.0, None))
                self.states[("ir", basis.value)] = branches
        self._tables: dict = {}

    @staticmethod
    def _eve_bases(eve: EveConfig) -> list[MeasBasis]:
        if eve.basis_policy == "random_per_trial":
            return [MeasBasis.HV, MeasBasis.DA]
        return [basis_from_angle(eve.basis_angle)]

    @staticmethod
    def _eve_angles(eve: EveConfig) -> list[float]:
        if eve.basis_policy == "random_per_trial":
            return [0.0, 45.0]
        return [eve.basis_angle]

    def table(self, key, a: MeasBasis, b: MeasBasis):
        """(cumulative weights, outcome list) for one scenario and basis pair."""
        tkey = (key, a.value, b.value)
        if tkey not in self._tables:
            weights, outcomes = [], []
            for p_branch, state in self.states[key]:
                if state is None:
                    continue
                probs = joint_probs(state, a, b)
                for p, bits in zip(probs, _BIT_PAIRS):
                    weights.append(p_branch * p)
                    outcomes.append(bits)
            cum = np.cumsum(weights)
            cum /= cum[-1]
            self._tables[tkey] = (cum, outcomes)
        return self._tables[tkey]


_BASES = (MeasBasis.HV, MeasBasis.DA)


def simulate_dwell_stream(s: TwoQubitState, config: DetectorConfig, n_intervals: int,
                          basis_policy, eve: EveConfig, rng) -> list[TrialRecord]:
    """Simulate ``n_intervals`` dwell intervals and return their records.

    ``basis_policy`` is either the string ``"random"`` (both parties draw HV
    or DA uniformly each interval) or a fixed ``(alice, bob)`` pair of
    :class:`MeasBasis`.  The stream is sequential and fully determined by the
    supplied generator; identical seeds reproduce identical record lists.
    """
    if n_intervals < 1:
        raise ValueError("n_intervals must be >= 1")
    sampler = _OutcomeSampler(s, eve)
    mu_pairs = config.pair_rate * config.dwell
    lam_dark = config.dark_rate * config.dwell
    fixed = None if basis_policy == "random" else tuple(basis_policy)
    records = []
    for i in range(n_intervals):
        if fixed is None:
            a_basis = _BASES[rng.integers(2)]
            b_basis = _BASES[rng.integers(2)]
        else:
            a_basis, b_basis = fixed

        eve_applied = False
        eve_basis = None
        key = "base"
        if eve.mode != "absent":
            eve_applied = rng.random() < eve.intercept_fraction
            if eve_applied:
                if eve.mode == "intercept_resend":
                    if eve.basis_policy == "random_per_trial":
                        eve_basis = _BASES[rng.integers(2)]
                    else:
                        eve_basis = basis_from_angle(eve.basis_angle)
                    key = ("ir", eve_basis.value)
                else:
                    if eve.basis_policy == "random_per_trial":
                        eve_basis = _BASES[rng.integers(2)]
                        angle = angle_from_basis(eve_basis)
                    else:
                        angle = eve.basis_angle
                        eve_basis = basis_from_angle(angle)
                    key = ("deph", angle)

        n_pairs = int(rng.poisson(mu_pairs))
        alice_counts = [0, 0]
        bob_counts = [0, 0]
        if n_pairs:
            cum, outcomes = sampler.table(key, a_basis, b_basis)
            for _ in range(n_pairs):
                k = int(np.searchsorted(cum, rng.random(), side="right"))
                a_bit, b_bit = outcomes[min(k, len(outcomes) - 1)]
                alice_counts[a_bit] += 1
                bob_counts[b_bit] += 1
        if lam_dark > 0.0:
            darks = rng.poisson(lam_dark, size=4)
            alice_counts[0] += int(darks[0])
            alice_counts[1] += int(darks[1])
            bob_counts[0] += int(darks[2])
            bob_counts[1] += int(darks[3])

        kept = (alice_counts[0] + alice_counts[1] == 1
                and bob_counts[0] + bob_counts[1] == 1)
        record = TrialRecord(trial_index=i, alice_basis=a_basis, bob_basis=b_basis,
                             eve_applied=eve_applied, eve_basis=eve_basis, kept=kept)
        if kept:
            record.alice_bit = 1 if alice_counts[1] == 1 else 0
            record.bob_bit = 1 if bob_counts[1] == 1 else 0
        records.append(record)
    return records


CSV_COLUMNS = ("trial_index", "alice_basis", "bob_basis", "eve_basis",
               "alice_bit", "bob_bit", "kept")


def records_to_csv(records: list[TrialRecord], path=None) -> str:
    """Serialize records; writes to ``path`` when given, returns the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([
            r.trial_index, r.alice_basis.value, r.bob_basis.value,
            r.eve_basis.value if r.eve_basis is not None else "",
            "" if r.alice_bit is None else r.alice_bit,
            "" if r.bob_bit is None else r.bob_bit,
            int(r.kept),
        ])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def records_from_csv(source) -> list[TrialRecord]:
    """Parse records written by :func:`records_to_csv` (path or text)."""
    if isinstance(source, str) and "\n" in source:
        fh = io.StringIO(source)
        rows = list(csv.reader(fh))
    else:
        with open(source, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    if rows and rows[0] == list(CSV_COLUMNS):
        rows = rows[1:]
    records = []
    for row in rows:
        idx, ab, bb, eb, abit, bbit, kept = row
        records.append(TrialRecord(
            trial_index=int(idx),
            alice_basis=MeasBasis(ab),
            bob_basis=MeasBasis(bb),
            eve_applied=bool(eb),
            eve_basis=MeasBasis(eb) if eb else None,
            alice_bit=int(abit) if abit != "" else None,
            bob_bit=int(bbit) if bbit != "" else None,
            kept=bool(int(kept)),
        ))
    return records
