"""Multi-span link bookkeeping: NLI accumulation, EDFA gain and ASE, WSS equalisation.

Per span and per channel the order of operations is

1. add the span's NLI, ``eta_i * P_i^3``, computed from the powers launched
   into the span;
2. apply fiber loss ``exp(-alpha L)`` and the lumped (plus WSS) loss to
   signal, ASE and NLI alike;
3. amplify all three and add fresh ASE;
4. if the span ends in a WSS, reset signal powers to the launch profile.

NLI from successive spans adds incoherently.  With ``coherence_epsilon > 0``
the n-th span contributes ``n^(1+eps) - (n-1)^(1+eps)`` times its
single-span NLI, so ``n`` identical spans total ``n^(1+eps)`` times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import ChannelPlan, LinkConfig, SpanConfig, db_to_linear, dbm_to_watt

PLANCK = 6.62607015e-34  # J s, exact in SI


@dataclass(frozen=True)
class ChannelState:
    channel_index: int
    signal_power: float
    ase_power: float = 0.0
    nli_power: float = 0.0

    def __post_init__(self):
        for name in ("signal_power", "ase_power", "nli_power"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class ChannelRecord:
    channel_index: int
    freq: float  # absolute, Hz
    signal_power: float
    ase_power: float
    nli_power: float
    gsnr_db: float


@dataclass(frozen=True)
class LinkReport:
    per_span: tuple[tuple[ChannelRecord, ...], ...]
    model_tag: str

    def __post_init__(self):
        object.__setattr__(self, "per_span", tuple(tuple(s) for s in self.per_span))
        widths = {len(s) for s in self.per_span}
        if len(widths) > 1:
            raise ValueError("every span must report the same channels")
        for span in self.per_span:
            for rec in span:
                if not math.isfinite(rec.gsnr_db):
                    raise ValueError(f"non-finite GSNR for channel {rec.channel_index}")

    @property
    def shape(self):
        return len(self.per_span), len(self.per_span[0]) if self.per_span else 0

    def gsnr_matrix(self) -> np.ndarray:
        """GSNR in dB, shape (spans, channels)."""
        return np.array([[r.gsnr_db for r in span] for span in self.per_span])

    @property
    def channel_indices(self) -> list[int]:
        return [r.channel_index for r in self.per_span[0]]


def ase_power(gain_db, nf_db, abs_freq, ref_bandwidth):
    """h f NF (G - 1) B_ref in W; the noise figure carries the dual-polarisation factor."""
    if gain_db < 0:
        raise ValueError("amplifier gain must be >= 0 dB")
    if ref_bandwidth < 0 or abs_freq <= 0:
        raise ValueError("frequency must be > 0 and bandwidth >= 0")
    return PLANCK * abs_freq * db_to_linear(nf_db) * (db_to_linear(gain_db) - 1.0) * ref_bandwidth


def gsnr_db(state: ChannelState) -> float:
    noise = state.ase_power + state.nli_power
    if not noise > 0:
        raise ValueError(f"channel {state.channel_index}: zero noise, GSNR is unbounded")
    return 10.0 * math.log10(state.signal_power / noise)


def initial_states(plan: ChannelPlan) -> list[ChannelState]:
    return [ChannelState(ch.index, ch.launch_power) for ch in plan.channels]


class EtaCache:
    """Per-channel total eta keyed on (fiber, launch powers): spans with the same
    launch profile reuse the same evaluation."""

    def __init__(self, model):
        self.model = model
        self._store: dict = {}
        self.evaluations = 0

    def eta(self, plan: ChannelPlan, fiber) -> np.ndarray:
        key = (fiber, plan.absolute_ref_freq, tuple(plan.indices), plan.powers.tobytes())
        hit = self._store.get(key)
        if hit is None:
            results = self.model.evaluate_plan(plan, fiber)
            hit = np.array([r.eta_total for r in results])
            hit.flags.writeable = False
            self._store[key] = hit
            self.evaluations += 1
        return hit


def _check_alignment(states: Sequence[ChannelState], plan: ChannelPlan):
    if [s.channel_index for s in states] != plan.indices:
        raise ValueError("channel states are not aligned with the plan channels")


def propagate_span(states: Sequence[ChannelState], span: SpanConfig, plan: ChannelPlan, model,
                   *, launch_profile: ChannelPlan | None = None, nli_weight: float = 1.0,
                   cache: EtaCache | None = None) -> list[ChannelState]:
    """One span of fiber, lumped loss, amplifier and optional WSS.

    ``plan`` fixes the channel layout; the NLI is evaluated at the powers in
    ``states``.  ``launch_profile`` is what a WSS equalises to (defaults to
    ``plan``).  ``nli_weight`` scales this span's NLI (coherent accumulation).
    """
    _check_alignment(states, plan)
    launch_profile = launch_profile or plan
    p_in = np.array([s.signal_power for s in states])
    if span.fiber.gamma == 0:
        nli_new = np.zeros(len(states))
    else:
        current = plan.with_powers(p_in)
        eta = (cache or EtaCache(model)).eta(current, span.fiber)
        nli_new = nli_weight * eta * p_in ** 3
    loss_db = (10.0 * math.log10(math.e) * span.fiber.alpha * span.fiber.length
               + span.lumped_loss_db + (span.wss_loss_db if span.wss else 0.0))
    net = db_to_linear(span.amp_gain_db - loss_db)
    if abs(net - 1.0) < 1e-12:
        # gain set to the span loss: keep powers bit-stable so cached eta stays valid
        net = 1.0
    abs_f = plan.absolute_freqs()
    out = []
    for n, (st, ch) in enumerate(zip(states, plan.channels)):
        fresh = 0.0 if span.noiseless else ase_power(span.amp_gain_db, span.amp_nf_db,
                                                     abs_f[n], ch.bandwidth)
        signal = st.signal_power * net
        if span.wss:
            signal = launch_profile.channels[n].launch_power
        out.append(ChannelState(st.channel_index, signal,
                                st.ase_power * net + fresh,
                                (st.nli_power + nli_new[n]) * net))
    return out


def simulate_link(link: LinkConfig, plan: ChannelPlan, model, cache: EtaCache | None = None) -> LinkReport:
    cache = cache or EtaCache(model)
    states = initial_states(plan)
    abs_f = plan.absolute_freqs()
    eps = link.coherence_epsilon
    per_span = []
    for n, span in enumerate(link.spans, start=1):
        weight = 1.0 if eps == 0 else n ** (1 + eps) - (n - 1) ** (1 + eps)
        states = propagate_span(states, span, plan, model, nli_weight=weight, cache=cache)
        per_span.append(tuple(ChannelRecord(s.channel_index, float(abs_f[k]), s.signal_power,
                                            s.ase_power, s.nli_power, gsnr_db(s))
                              for k, s in enumerate(states)))
    return LinkReport(tuple(per_span), model.name)


# -- launch power -------------------------------------------------------------

POWER_GRID_DBM = tuple(-4.0 + 0.25 * k for k in range(33))


def band_membership(plan: ChannelPlan, band_partition) -> list[list[int]]:
    """Plan positions of the channels in each band; bands are absolute [lo, hi] Hz ranges."""
    abs_f = plan.absolute_freqs()
    members = []
    for lo, hi in band_partition:
        idx = [n for n, f in enumerate(abs_f) if lo <= f <= hi]
        if not idx:
            raise ValueError(f"band [{lo:.6g}, {hi:.6g}] Hz holds no channel")
        members.append(idx)
    flat = sorted(n for band in members for n in band)
    if flat != list(range(len(plan))):
        raise ValueError("bands must cover every channel exactly once")
    return members


def single_span_gsnr(plan: ChannelPlan, span: SpanConfig, model, cache: EtaCache | None = None) -> np.ndarray:
    states = propagate_span(initial_states(plan), replace(span, wss=False),
                            plan, model, cache=cache)
    return np.array([gsnr_db(s) for s in states])


def optimize_uniform_launch_power(plan: ChannelPlan, span: SpanConfig, model,
                                  band_partition, fixed_dbm: dict | None = None) -> list[float]:
    """Per-band launch power (dBm) maximising the mean single-span GSNR.

    Each band sweeps ``POWER_GRID_DBM`` with the other bands held fixed
    (coordinate descent, two rounds, starting from 0 dBm everywhere).  Only a
    strict improvement moves the optimum, so ties resolve to the lower power.
    Bands listed in ``fixed_dbm`` (position -> dBm) keep that power.
    """
    members = band_membership(plan, band_partition)
    fixed_dbm = fixed_dbm or {}
    best = [float(fixed_dbm.get(b, 0.0)) for b in range(len(members))]
    cache = EtaCache(model)

    def score(levels):
        powers = watts_per_band(levels, members, len(plan))
        return float(np.mean(single_span_gsnr(plan.with_powers(powers), span, model, cache)))

    for _ in range(2):
        for b in range(len(members)):
            if b in fixed_dbm:
                continue
            top_val, top_lvl = -math.inf, None
            for lvl in POWER_GRID_DBM:
                trial = list(best)
                trial[b] = lvl
                val = score(trial)
                if val > top_val:
                    top_val, top_lvl = val, lvl
            best[b] = top_lvl
    return best


def watts_per_band(levels_dbm, members, n_channels) -> np.ndarray:
    powers = np.empty(n_channels)
    for band, lvl in zip(members, levels_dbm):
        powers[band] = dbm_to_watt(lvl)
    return powers


__all__ = ["ChannelState", "ChannelRecord", "LinkReport", "EtaCache", "ase_power", "gsnr_db",
           "propagate_span", "simulate_link", "optimize_uniform_launch_power", "band_membership",
           "single_span_gsnr", "watts_per_band", "POWER_GRID_DBM", "PLANCK"]
