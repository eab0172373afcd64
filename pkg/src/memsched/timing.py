"""Timing configuration and ASAP/ALAP analysis.

ASAP is a forward longest path over intra-iteration edges using per-kind
operator latencies; ALAP is the backward pass from the cadence (the cycles
available per algorithm iteration).  The scheduler derives an operation's
mobility at cycle t as alap(v) - t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .sfg import ARITH_KINDS, SFG, topo_order

DEFAULT_LATENCY = {"add": 1, "sub": 1, "mul": 1, "alu": 1}


class InfeasibleError(Exception):
    """Critical path exceeds the cadence; no non-pipelined schedule exists."""


@dataclass(frozen=True)
class TimingConfig:
    cadence: int
    latency: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_LATENCY))
    w_seq: int = 1
    w_rand: int = 2

    def __post_init__(self):
        if self.cadence < 1:
            raise ValueError("cadence must be >= 1")
        if self.w_seq > self.w_rand:
            raise ValueError("w_seq must not exceed w_rand")
        if self.w_seq < 1:
            raise ValueError("access costs must be >= 1")
        for kind, lat in self.latency.items():
            if lat < 1:
                raise ValueError(f"latency for {kind} must be >= 1, got {lat}")

    def lat(self, kind: str) -> int:
        return self.latency.get(kind, 0) if kind in ARITH_KINDS else 0


@dataclass
class TimingAnalysis:
    asap: dict[str, int]
    alap: dict[str, int]
    critical_path: int

    def mobility(self, vid: str, cycle: int) -> int:
        return self.alap[vid] - cycle


def timing_analysis(sfg: SFG, cfg: TimingConfig) -> TimingAnalysis:
    """Compute ASAP/ALAP start cycles; raises InfeasibleError on a cadence miss."""
    order = topo_order(sfg)
    preds: dict[str, list[str]] = {v.id: [] for v in sfg.vertices}
    succs: dict[str, list[str]] = {v.id: [] for v in sfg.vertices}
    for s, d in sfg.sched_edges():
        preds[d].append(s)
        succs[s].append(d)

    asap: dict[str, int] = {}
    for vid in order:
        asap[vid] = max(
            (asap[p] + cfg.lat(sfg.vertex(p).kind) for p in preds[vid]), default=0
        )
    critical = max(asap[vid] + cfg.lat(sfg.vertex(vid).kind) for vid in asap)
    if critical > cfg.cadence:
        raise InfeasibleError(
            f"critical path {critical} cycles exceeds cadence {cfg.cadence}"
        )

    alap: dict[str, int] = {}
    for vid in reversed(order):
        lat = cfg.lat(sfg.vertex(vid).kind)
        alap[vid] = min((alap[s] for s in succs[vid]), default=cfg.cadence) - lat
    return TimingAnalysis(asap=asap, alap=alap, critical_path=critical)
