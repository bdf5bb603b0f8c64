"""End-to-end Monte Carlo simulation of the dense-coding circuits.

A strategy is compiled once per run: the encoding unitaries, GXOR split,
dilation couplings, and POVMs are built and applied as actual operators, and
every branch's exact outcome distribution is extracted from the evolved
states. Trials then sample from those distributions, so the empirical
statistics are circuit-derived while staying fast and bit-reproducible.

Randomness contract (per trial): one bounded-integer draw for the message,
one uniform draw per executed separation stage, one uniform draw for each
concluding measurement; the deterministic system-2 outcome consumes nothing.
Trials are grouped in fixed-size blocks; block b uses the generator derived
from (seed, b), so reports are identical for any worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import COEFF_TOL, Message, SchmidtState, encode, symmetric_state
from .discrimination import (
    FINAL_ABSTAIN,
    FINAL_ME,
    StagePlan,
    dilation_unitary,
    me_measurement,
    separation_map,
)
from .gates import gxor
from .tensor_core import (
    INCONCLUSIVE,
    Ket,
    apply,
    born_probabilities,
    derived_rng,
    project_subsystem,
    tensor,
)

_BLOCK = 4096


@dataclass(frozen=True)
class DecodingStrategy:
    """Receiver policy: plain ME, separation-then-ME, or a multistage plan."""

    kind: str
    xi: float = 1.0
    plan: StagePlan | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("me", "sep_me", "multistage"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError("xi must lie in [0, 1]")
        if self.kind == "multistage" and self.plan is None:
            raise ValueError("multistage strategy requires a plan")

    @classmethod
    def me(cls) -> "DecodingStrategy":
        return cls(kind="me")

    @classmethod
    def sep_me(cls, xi: float) -> "DecodingStrategy":
        return cls(kind="sep_me", xi=xi)

    @classmethod
    def multistage(cls, plan: StagePlan) -> "DecodingStrategy":
        return cls(kind="multistage", plan=plan)

    @classmethod
    def from_dict(cls, obj: dict) -> "DecodingStrategy":
        kind = obj["kind"]
        if kind == "me":
            return cls.me()
        if kind == "sep_me":
            return cls.sep_me(float(obj.get("xi", 1.0)))
        if kind == "multistage":
            stages = tuple(float(st.get("xi", 1.0)) for st in obj.get("stages", []))
            final = obj.get("final", FINAL_ABSTAIN)
            return cls.multistage(StagePlan(stages, final))
        raise ValueError(f"unknown strategy kind {kind!r}")

    def normalized(self) -> tuple:
        """(separation stages, final action) normal form."""
        if self.kind == "me":
            return (), FINAL_ME
        if self.kind == "sep_me":
            return (self.xi,), FINAL_ABSTAIN
        return self.plan.stages, self.plan.final_action

    def describe(self) -> str:
        if self.kind == "me":
            return "me"
        if self.kind == "sep_me":
            return f"sep_me(xi={self.xi:g})"
        stages = ",".join(f"{xi:g}" for xi in self.plan.stages)
        return f"multistage([{stages}], final={self.plan.final_action})"


@dataclass(frozen=True)
class TrialRecord:
    """One simulated round; inferred carries INCONCLUSIVE when decoding abstained."""

    message: tuple
    inferred: tuple
    stage_reached: int
    ancilla_outcomes: tuple


class _CompiledFamily:
    """Branch tree of a strategy over one symmetric family.

    stage_entries[n] = (success probability, outcome table, outcome cdf,
    record offset) for the n-th constructible stage. Stages stop early when
    the failure family collapses to one dimension (nothing left to separate)
    or a stage succeeds with certainty.
    """

    def __init__(self, family, coeffs: np.ndarray, rank: int, dim: int, stages, final: str):
        self.rank = rank
        self.dim = dim
        self.final = final
        povm = me_measurement(rank, dim)
        self.stage_entries: list = []
        records: list = []

        def outcome_table(states) -> np.ndarray:
            rows = np.empty((rank, rank))
            for j, state in enumerate(states):
                probs = born_probabilities(state, povm)
                if probs[rank:].sum() > 1e-10:
                    raise ValueError("complement POVM element fired on a subspace state")
                rows[j] = probs[:rank]
            return rows

        current = list(family)
        current_coeffs = np.asarray(coeffs, dtype=float)
        for xi in stages:
            if int(np.sum(current_coeffs > COEFF_TOL)) < 2:
                break
            smap = separation_map(current_coeffs, xi, dim=dim)
            coupling = dilation_unitary(smap)
            probs = []
            succeeded = []
            failed = []
            for state in current:
                evolved = apply(coupling, tensor(state, Ket.basis(2, 0)))
                p_ok, ket_ok = project_subsystem(evolved, (dim, 2), "B", 0)
                probs.append(p_ok)
                succeeded.append(ket_ok)
                if p_ok < 1.0 - 1e-12:
                    failed.append(project_subsystem(evolved, (dim, 2), "B", 1)[1])
            if max(probs) - min(probs) > 1e-10:
                raise ValueError("stage success probability depends on the hypothesis")
            p_stage = float(np.mean(probs))
            table = outcome_table(succeeded)
            offset = len(records)
            records += [f"s{len(self.stage_entries) + 1}:{l}" for l in range(rank)]
            self.stage_entries.append((p_stage, table, np.cumsum(table, axis=1), offset))
            if p_stage >= 1.0 - 1e-12:
                break
            current = failed
            current_coeffs = smap.failure_coeffs
        self.final_family = current
        self.final_coeffs = current_coeffs
        if final == FINAL_ME:
            self.final_table = outcome_table(current)
            self.final_cdf = np.cumsum(self.final_table, axis=1)
            self.final_offset = len(records)
            records += [f"f:{l}" for l in range(rank)]
            self.inc_index = None
        else:
            self.final_table = None
            self.final_cdf = None
            self.final_offset = None
            self.inc_index = len(records)
            records.append("inc")
        self.records = tuple(records)

    def branch_weights(self) -> list:
        """(record offset or None-for-inc, reach weight, table or None)."""
        out = []
        weight = 1.0
        for p_stage, table, _, offset in self.stage_entries:
            out.append((offset, weight * p_stage, table))
            weight *= 1.0 - p_stage
        if self.final == FINAL_ME:
            out.append((self.final_offset, weight, self.final_table))
        else:
            out.append((self.inc_index, weight, None))
        return out


class _Compiled:
    """Full dense-coding run context: verified channel plus a compiled family."""

    def __init__(self, s: SchmidtState, strat: DecodingStrategy):
        stages, final = strat.normalized()
        if len(stages) > max(s.D - 1, 0):
            raise ValueError("plan exceeds channel stages")
        self.d2 = s.d2
        self.n_messages = s.n_messages
        gate = gxor(s.d1, s.d2)
        family = []
        for j in range(s.D):
            reference = symmetric_state(s, j)
            for k in range(s.d2):
                split = apply(gate, encode(s, Message(j, k)))
                p_k, residual = project_subsystem(split, (s.d1, s.d2), "B", k)
                if p_k < 1.0 - 1e-10:
                    raise ValueError("system-2 outcome is not deterministic")
                if np.max(np.abs(residual.amplitudes - reference.amplitudes)) > 1e-10:
                    raise ValueError("decoded carrier state mismatch")
            family.append(reference)
        self.family = _CompiledFamily(family, s.coeffs, s.D, s.d1, stages, final)


def _draw_rows(cdf: np.ndarray, hypotheses: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(size=hypotheses.size)
    rows = cdf[hypotheses]
    idx = (rows <= u[:, None]).sum(axis=1)
    return np.minimum(idx, cdf.shape[1] - 1)


def _sample_one(comp: _Compiled, rng: np.random.Generator) -> TrialRecord:
    fam = comp.family
    msg = int(rng.integers(0, comp.n_messages, size=1)[0])
    j, k = msg // comp.d2, msg % comp.d2
    ancilla = []
    for p_stage, _, cdf, _ in fam.stage_entries:
        u = rng.random(size=1)[0]
        if u < p_stage:
            ancilla.append(0)
            l = int(_draw_rows(cdf, np.array([j]), rng)[0])
            return TrialRecord((j, k), (l, k), len(ancilla), tuple(ancilla))
        ancilla.append(1)
    if fam.final_cdf is not None:
        l = int(_draw_rows(fam.final_cdf, np.array([j]), rng)[0])
        return TrialRecord((j, k), (l, k), len(ancilla), tuple(ancilla))
    return TrialRecord((j, k), (INCONCLUSIVE, k), len(ancilla), tuple(ancilla))


def run_trial(s: SchmidtState, strat: DecodingStrategy, rng: np.random.Generator) -> TrialRecord:
    """Simulate a single round: encode, split, run the decoding branch tree."""
    return _sample_one(_Compiled(s, strat), rng)


def _tally_block(comp: _Compiled, rng: np.random.Generator, n: int):
    fam = comp.family
    counts = np.zeros((fam.rank, comp.d2, len(fam.records)), dtype=np.int64)
    attempts = np.zeros(len(fam.stage_entries), dtype=np.int64)
    successes = np.zeros(len(fam.stage_entries), dtype=np.int64)
    msg = rng.integers(0, comp.n_messages, size=n)
    j_all = msg // comp.d2
    k_all = msg % comp.d2
    active = np.arange(n)
    for s_idx, (p_stage, _, cdf, offset) in enumerate(fam.stage_entries):
        if active.size == 0:
            break
        u = rng.random(size=active.size)
        ok = u < p_stage
        attempts[s_idx] += active.size
        successes[s_idx] += int(ok.sum())
        concluded = active[ok]
        if concluded.size:
            ls = _draw_rows(cdf, j_all[concluded], rng)
            np.add.at(counts, (j_all[concluded], k_all[concluded], offset + ls), 1)
        active = active[~ok]
    if active.size:
        if fam.final_cdf is not None:
            ls = _draw_rows(fam.final_cdf, j_all[active], rng)
            np.add.at(counts, (j_all[active], k_all[active], fam.final_offset + ls), 1)
        else:
            np.add.at(counts, (j_all[active], k_all[active], fam.inc_index), 1)
    return counts, attempts, successes


@dataclass(frozen=True, eq=False)
class SimulationReport:
    """Tallies of one seeded run; identical for any worker count."""

    n_trials: int
    seed: int
    strategy: str
    state: dict
    outcome_labels: tuple
    joint_counts: np.ndarray
    stage_attempts: tuple
    stage_successes: tuple
    empirical_mutual_info_bits: float

    @property
    def empirical_success_rate(self) -> tuple:
        rates = []
        for att, suc in zip(self.stage_attempts, self.stage_successes):
            rates.append(suc / att if att else None)
        return tuple(rates)

    def counts_dict(self) -> dict:
        """Counts keyed "j,k|record:m"; the system-2 outcome m always equals k."""
        rank, d2, _ = self.joint_counts.shape
        out = {}
        for j in range(rank):
            for k in range(d2):
                for r, label in enumerate(self.outcome_labels):
                    c = int(self.joint_counts[j, k, r])
                    if c:
                        out[f"{j},{k}|{label}:{k}"] = c
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_trials": self.n_trials,
                "seed": self.seed,
                "strategy": self.strategy,
                "state": self.state,
                "outcome_labels": list(self.outcome_labels),
                "counts": self.counts_dict(),
                "stage_attempts": list(self.stage_attempts),
                "stage_successes": list(self.stage_successes),
                "empirical_success_rate": [
                    None if r is None else r for r in self.empirical_success_rate
                ],
                "empirical_mutual_info_bits": self.empirical_mutual_info_bits,
            },
            indent=2,
            sort_keys=True,
        )

    def csv_rows(self) -> list:
        rows = []
        rank, d2, _ = self.joint_counts.shape
        for j in range(rank):
            for k in range(d2):
                for r, label in enumerate(self.outcome_labels):
                    rows.append([j, k, label, int(self.joint_counts[j, k, r])])
        return rows


def run_simulation(
    s: SchmidtState,
    strat: DecodingStrategy,
    n_trials: int,
    seed: int,
    threads: int | None = None,
) -> SimulationReport:
    """Seed-deterministic Monte Carlo run; serial and threaded results agree."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    comp = _Compiled(s, strat)
    sizes = [_BLOCK] * (n_trials // _BLOCK)
    if n_trials % _BLOCK:
        sizes.append(n_trials % _BLOCK)
    rngs = [derived_rng(seed, b) for b in range(len(sizes))]
    workers = max(1, int(threads)) if threads else 1
    if workers == 1:
        parts = [_tally_block(comp, rng, n) for rng, n in zip(rngs, sizes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda args: _tally_block(comp, *args), zip(rngs, sizes)))
    fam = comp.family
    counts = np.zeros((fam.rank, comp.d2, len(fam.records)), dtype=np.int64)
    attempts = np.zeros(len(fam.stage_entries), dtype=np.int64)
    successes = np.zeros(len(fam.stage_entries), dtype=np.int64)
    for c, a, u in parts:
        counts += c
        attempts += a
        successes += u
    counts.setflags(write=False)
    info_bits = _counts_mutual_info(counts, n_trials, comp.d2)
    return SimulationReport(
        n_trials=n_trials,
        seed=int(seed),
        strategy=strat.describe(),
        state=s.to_dict(),
        outcome_labels=fam.records,
        joint_counts=counts,
        stage_attempts=tuple(int(x) for x in attempts),
        stage_successes=tuple(int(x) for x in successes),
        empirical_mutual_info_bits=info_bits,
    )


def _expand_joint(counts: np.ndarray, normalizer: float, d2: int) -> np.ndarray:
    """Full (message) x (record, m) table; m is the deterministic k readout."""
    rank, _, n_records = counts.shape
    joint = np.zeros((rank * d2, n_records * d2))
    for j in range(rank):
        for k in range(d2):
            joint[j * d2 + k, k::d2] = counts[j, k, :] / normalizer
    return joint


def _counts_mutual_info(counts: np.ndarray, n_trials: int, d2: int) -> float:
    from .infometrics import mutual_info_from_joint

    return mutual_info_from_joint(_expand_joint(counts.astype(float), n_trials, d2))


def empirical_mutual_info(report: SimulationReport) -> float:
    """Plug-in mutual information over the full joint table; inconclusive
    outcomes are a distinct symbol, never a guess."""
    _, d2, _ = report.joint_counts.shape
    return _counts_mutual_info(report.joint_counts, report.n_trials, d2)


def analytic_record_distribution(s: SchmidtState, strat: DecodingStrategy):
    """Exact per-hypothesis distribution over outcome records, circuit-derived.

    Returns (record labels, array of shape (D, n_records)) with rows summing
    to 1: the branch reach weights composed with each branch's POVM table.
    """
    comp = _Compiled(s, strat)
    fam = comp.family
    dist = np.zeros((fam.rank, len(fam.records)))
    for index, weight, table in fam.branch_weights():
        if weight <= 0.0:
            continue
        if table is None:
            dist[:, index] += weight
        else:
            width = table.shape[1]
            dist[:, index : index + width] += weight * table
    return fam.records, dist


def analytic_joint(s: SchmidtState, strat: DecodingStrategy) -> np.ndarray:
    """Exact joint distribution over (message) x (record, m), circuit-derived.

    Row index is j*d2 + k, column index record*d2 + m, with uniform message
    priors folded in. Independent of the closed-form strategy totals.
    """
    comp = _Compiled(s, strat)
    fam = comp.family
    d2 = comp.d2
    prior = 1.0 / comp.n_messages
    probs = np.zeros((fam.rank, d2, len(fam.records)))
    for index, weight, table in fam.branch_weights():
        if weight <= 0.0:
            continue
        for j in range(fam.rank):
            row = weight * (table[j] if table is not None else np.array([1.0]))
            width = row.size
            probs[j, :, index : index + width] += prior * row[None, :]
    return _expand_joint(probs, 1.0, d2)
