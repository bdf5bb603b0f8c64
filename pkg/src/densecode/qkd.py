"""Quantitative intercept-resend analysis of the symmetric-state B92-style
key distribution: the sender transmits one of D symmetric carrier states, the
receiver sifts by unambiguous discrimination, and an optional eavesdropper
applies any decoding strategy, resending the pure state matching her
inference. All errors in the sifted key are eavesdropper-induced.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import COEFF_TOL, SchmidtState, symmetric_state
from .discrimination import (
    FINAL_ABSTAIN,
    FINAL_ME,
    me_measurement,
    me_outcome_probs,
    separation_map,
)
from .protocol_sim import DecodingStrategy, _CompiledFamily, _draw_rows
from .tensor_core import born_probabilities, derived_rng

_BLOCK = 4096

GUESS_UNIFORM = "uniform"
GUESS_ME = "me"


@dataclass(frozen=True)
class EveStrategy:
    """Eavesdropper policy; the fallback fires only on an inconclusive record."""

    kind: str
    strategy: DecodingStrategy | None = None
    fallback: str = GUESS_UNIFORM

    def __post_init__(self) -> None:
        if self.kind not in ("absent", "intercept"):
            raise ValueError(f"unknown eavesdropper kind {self.kind!r}")
        if self.kind == "intercept" and self.strategy is None:
            raise ValueError("intercepting eavesdropper requires a strategy")
        if self.fallback not in (GUESS_UNIFORM, GUESS_ME):
            raise ValueError("fallback must be 'uniform' or 'me'")

    @classmethod
    def absent(cls) -> "EveStrategy":
        return cls(kind="absent")

    @classmethod
    def intercept(cls, strategy: DecodingStrategy, fallback: str = GUESS_UNIFORM) -> "EveStrategy":
        return cls(kind="intercept", strategy=strategy, fallback=fallback)

    @classmethod
    def from_dict(cls, obj: dict) -> "EveStrategy":
        if obj["kind"] == "absent":
            return cls.absent()
        return cls.intercept(
            DecodingStrategy.from_dict(obj["strategy"]),
            obj.get("fallback", GUESS_UNIFORM),
        )

    def describe(self) -> str:
        if self.kind == "absent":
            return "absent"
        return f"intercept({self.strategy.describe()}, fallback={self.fallback})"


@dataclass(frozen=True, eq=False)
class QkdReport:
    """Tallies of one seeded key-distribution run."""

    n_rounds: int
    seed: int
    eve: str
    state: dict
    kept: int
    errors: int
    sift_rate: float
    sifted_error_rate: float
    eve_info_bits: float
    eve_record_labels: tuple
    eve_counts: np.ndarray | None

    def to_json(self) -> str:
        counts = {}
        if self.eve_counts is not None:
            for j in range(self.eve_counts.shape[0]):
                for r, label in enumerate(self.eve_record_labels):
                    c = int(self.eve_counts[j, r])
                    if c:
                        counts[f"{j}|{label}"] = c
        return json.dumps(
            {
                "n_rounds": self.n_rounds,
                "seed": self.seed,
                "eve": self.eve,
                "state": self.state,
                "kept": self.kept,
                "errors": self.errors,
                "sift_rate": self.sift_rate,
                "sifted_error_rate": self.sifted_error_rate,
                "eve_info_bits": self.eve_info_bits,
                "eve_counts": counts,
            },
            indent=2,
            sort_keys=True,
        )

    def csv_row(self) -> dict:
        return {
            "eve": self.eve,
            "n_rounds": self.n_rounds,
            "seed": self.seed,
            "sift_rate": self.sift_rate,
            "sifted_error_rate": self.sifted_error_rate,
            "eve_info_bits": self.eve_info_bits,
        }


class _QkdEngine:
    """Compiled per-round machinery shared by the Monte Carlo blocks."""

    def __init__(self, s: SchmidtState, eve: EveStrategy):
        if s.D < 2:
            raise ValueError("sifting requires channel rank >= 2")
        family = [symmetric_state(s, j) for j in range(s.D)]
        self.rank = s.D
        # Receiver sift: full separation then ME, conclusive outcomes exact.
        bob = _CompiledFamily(family, s.coeffs, s.D, s.d1, (1.0,), FINAL_ABSTAIN)
        p_keep, table, _, _ = bob.stage_entries[0]
        if np.max(np.abs(table - np.eye(s.D))) > 1e-9:
            raise ValueError("sifting measurement is not unambiguous")
        self.p_keep = p_keep
        self.eve_fam = None
        self.fallback = eve.fallback
        self.fallback_cdf = None
        self.records: tuple = ()
        if eve.kind == "intercept":
            stages, final = eve.strategy.normalized()
            if len(stages) > max(s.D - 1, 0):
                raise ValueError("plan exceeds channel stages")
            fam = _CompiledFamily(family, s.coeffs, s.D, s.d1, stages, final)
            records = list(fam.records)
            if fam.inc_index is not None:
                if eve.fallback == GUESS_ME:
                    povm = me_measurement(s.D, s.d1)
                    rows = np.empty((s.D, s.D))
                    for j, state in enumerate(fam.final_family):
                        rows[j] = born_probabilities(state, povm)[: s.D]
                    self.fallback_cdf = np.cumsum(rows, axis=1)
                    self.fallback_offset = len(records)
                    records += [f"g:{l}" for l in range(s.D)]
                else:
                    self.fallback_offset = len(records)
                    records += [f"u:{g}" for g in range(s.D)]
            self.eve_fam = fam
            self.records = tuple(records)

    def eve_round(self, j_all: np.ndarray, rng: np.random.Generator):
        """Per-round (record index, inferred dit); draw order is stage-major."""
        n = j_all.size
        record = np.zeros(n, dtype=np.int64)
        dit = np.zeros(n, dtype=np.int64)
        fam = self.eve_fam
        active = np.arange(n)
        for p_stage, _, cdf, offset in fam.stage_entries:
            if active.size == 0:
                break
            u = rng.random(size=active.size)
            ok = u < p_stage
            concluded = active[ok]
            if concluded.size:
                ls = _draw_rows(cdf, j_all[concluded], rng)
                record[concluded] = offset + ls
                dit[concluded] = ls
            active = active[~ok]
        if active.size:
            if fam.final_cdf is not None:
                ls = _draw_rows(fam.final_cdf, j_all[active], rng)
                record[active] = fam.final_offset + ls
                dit[active] = ls
            elif self.fallback == GUESS_ME:
                ls = _draw_rows(self.fallback_cdf, j_all[active], rng)
                record[active] = self.fallback_offset + ls
                dit[active] = ls
            else:
                guess = rng.integers(0, self.rank, size=active.size)
                record[active] = self.fallback_offset + guess
                dit[active] = guess
        return record, dit


def _qkd_block(engine: _QkdEngine, rng: np.random.Generator, n: int):
    j_all = rng.integers(0, engine.rank, size=n)
    if engine.eve_fam is not None:
        record, dit = engine.eve_round(j_all, rng)
    else:
        record, dit = None, j_all
    keep = rng.random(size=n) < engine.p_keep
    kept = int(keep.sum())
    errors = int(np.sum(keep & (dit != j_all)))
    counts = None
    if record is not None:
        counts = np.zeros((engine.rank, len(engine.records)), dtype=np.int64)
        np.add.at(counts, (j_all[keep], record[keep]), 1)
    return kept, errors, counts


def simulate_qkd(
    s: SchmidtState,
    eve: EveStrategy,
    n_rounds: int,
    seed: int,
    threads: int | None = None,
) -> QkdReport:
    """Seed-deterministic intercept-resend run."""
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    engine = _QkdEngine(s, eve)
    sizes = [_BLOCK] * (n_rounds // _BLOCK)
    if n_rounds % _BLOCK:
        sizes.append(n_rounds % _BLOCK)
    rngs = [derived_rng(seed, b) for b in range(len(sizes))]
    workers = max(1, int(threads)) if threads else 1
    if workers == 1:
        parts = [_qkd_block(engine, rng, n) for rng, n in zip(rngs, sizes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda args: _qkd_block(engine, *args), zip(rngs, sizes)))
    kept = sum(p[0] for p in parts)
    errors = sum(p[1] for p in parts)
    counts = None
    if engine.eve_fam is not None:
        counts = np.zeros((engine.rank, len(engine.records)), dtype=np.int64)
        for _, _, c in parts:
            counts += c
        counts.setflags(write=False)
    eve_info = 0.0
    if counts is not None and kept:
        from .infometrics import mutual_info_from_joint

        eve_info = mutual_info_from_joint(counts.astype(float) / kept)
    return QkdReport(
        n_rounds=n_rounds,
        seed=int(seed),
        eve=eve.describe(),
        state=s.to_dict(),
        kept=kept,
        errors=errors,
        sift_rate=kept / n_rounds,
        sifted_error_rate=errors / kept if kept else 0.0,
        eve_info_bits=eve_info,
        eve_record_labels=engine.records,
        eve_counts=counts,
    )


def analytic_sift_rate(coeffs) -> float:
    """Receiver keep probability: the full-separation success probability."""
    return separation_map(np.asarray(coeffs, dtype=float), 1.0).p_success


def analytic_qkd_error(coeffs, eve: EveStrategy) -> float:
    """Exact sifted-key error rate by composing the eavesdropper's branch
    confusion with the receiver's error-free sift."""
    if eve.kind == "absent":
        return 0.0
    current = np.asarray(coeffs, dtype=float)
    rank = current.size
    stages, final = eve.strategy.normalized()
    err = 0.0
    weight = 1.0
    for xi in stages:
        if int(np.sum(current > COEFF_TOL)) < 2:
            break
        smap = separation_map(current, xi)
        err += weight * smap.p_success * (1.0 - me_outcome_probs(smap.b_coeffs)[0])
        if smap.failure_coeffs is None:
            return err
        weight *= 1.0 - smap.p_success
        current = smap.failure_coeffs
    if final == FINAL_ME or eve.fallback == GUESS_ME:
        err += weight * (1.0 - me_outcome_probs(current)[0])
    else:
        err += weight * (1.0 - 1.0 / rank)
    return err
