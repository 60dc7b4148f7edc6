"""Multi-day sets: per-day scenario sets chained by a bound on the normalized overnight step."""

from dataclasses import dataclass

import numpy as np

from ._rng import as_generator
from ._validation import HOURS, check_points, check_vector
from .exceptions import ChainSamplingExhausted, DimensionMismatch, PusError
from .polytope import INSIDE, LinearRow, Verdict, merge_exports

MAX_BACKTRACKS = 10
CANDIDATE_BATCH = 256


@dataclass(frozen=True)
class DayChain:
    """``scenarios[i]`` is the :class:`~pusgen.scenarios.ScenarioPUS` of day ``i``."""

    scenarios: tuple
    c: float
    boundary: object
    n_attributes: int

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if not self.scenarios:
            raise PusError("a chain needs at least one day")
        if not self.c > 0:
            raise PusError(f"continuity parameter c must be positive, got {self.c}")
        if self.boundary.mu_delta.shape != (self.n_attributes,):
            raise DimensionMismatch("boundary statistics do not match the attribute count")
        if any(s.dim != HOURS * self.n_attributes for s in self.scenarios):
            raise DimensionMismatch("scenario dimensions do not match the attribute count")

    @property
    def n_days(self):
        return len(self.scenarios)

    @property
    def day_dim(self):
        return HOURS * self.n_attributes

    @property
    def dim(self):
        return self.n_days * self.day_dim

    @property
    def keys(self):
        return [s.key for s in self.scenarios]


def normalized_steps(chain, prev_day, next_day):
    """``(V_next[:, 0] - V_prev[:, 23] - mu) / sigma`` for day vectors (rows may be batched)."""
    n = chain.n_attributes
    prev = np.asarray(prev_day).reshape(-1, n, HOURS)
    nxt = np.asarray(next_day).reshape(-1, n, HOURS)
    step = nxt[:, :, 0] - prev[:, :, HOURS - 1]
    return (step - chain.boundary.mu_delta) / chain.boundary.sigma_delta


def chain_membership(chain, v):
    """Per-day scenario membership plus ``|normalized overnight step| <= c`` for each attribute."""
    v = check_vector(v, chain.dim, "chain profile")
    days = v.reshape(chain.n_days, chain.day_dim)
    for i, (scen, day) in enumerate(zip(chain.scenarios, days)):
        verdict = scen.membership(day)
        if not verdict:
            return verdict.located(day=i)
    for i in range(chain.n_days - 1):
        z = normalized_steps(chain, days[i], days[i + 1])[0]
        if np.any(np.abs(z) > chain.c + 1e-9):
            bad = np.flatnonzero(np.abs(z) > chain.c + 1e-9).tolist()
            return Verdict(False, "continuity", f"attributes {bad} step beyond c={chain.c}", day=i + 1)
    return INSIDE


def _sample_one_chain(chain, rng, max_attempts_per_day, stats):
    days = [None] * chain.n_days
    days[0] = chain.scenarios[0].sample(1, rng)[0]
    backtracks = 0
    i = 1
    while i < chain.n_days:
        found = None
        tried = 0
        while tried < max_attempts_per_day and found is None:
            batch = min(CANDIDATE_BATCH, max_attempts_per_day - tried)
            cand = chain.scenarios[i].sample(batch, rng)
            ok = np.all(np.abs(normalized_steps(chain, days[i - 1], cand)) <= chain.c, axis=1)
            hit = np.flatnonzero(ok)
            tried_now = int(hit[0]) + 1 if hit.size else batch
            tried += tried_now
            stats["attempts"][i] += tried_now
            if hit.size:
                found = cand[hit[0]]
        if found is not None:
            stats["accepted"][i] += 1
            days[i] = found
            i += 1
            continue
        if backtracks >= MAX_BACKTRACKS:
            raise ChainSamplingExhausted(
                f"day {i}: no candidate met the continuity bound after {max_attempts_per_day} attempts "
                f"and {backtracks} backtracks",
                day=i,
                stats={k: list(v) for k, v in stats.items()},
            )
        backtracks += 1
        stats["backtracks"][i] += 1
        # resample the previous day and retry
        prev = i - 1
        if prev == 0:
            days[0] = chain.scenarios[0].sample(1, rng)[0]
        else:
            i = prev
    return np.concatenate(days)


def chain_sample(chain, count, seed=None, max_attempts_per_day=1000):
    """Sequential rejection sampling of ``count`` multi-day realizations.

    Day ``i + 1`` is redrawn until its first hour meets the continuity bound
    against day ``i``; after ``max_attempts_per_day`` failures the previous
    day is redrawn (at most 10 times per chain). Every returned row passes
    :func:`chain_membership`.
    """
    count = int(count)
    if count < 1:
        raise PusError(f"sample count must be >= 1, got {count}")
    rng = as_generator(seed)
    stats = {key: [0] * chain.n_days for key in ("attempts", "accepted", "backtracks")}
    out = np.empty((count, chain.dim))
    for j in range(count):
        out[j] = _sample_one_chain(chain, rng, int(max_attempts_per_day), stats)
        if not chain_membership(chain, out[j]):
            raise PusError("sampled chain failed membership; numerical inconsistency")
    return out


def chain_membership_many(chain, V):
    V = check_points(V, dim=chain.dim)
    return [chain_membership(chain, row) for row in V]


def export_chain(chain):
    """Block export: every day's lifted rows plus two continuity rows per attribute and night."""
    n, dd = chain.n_attributes, chain.day_dim
    parts = [s.export(prefix=f"d{i}.", v_offset=i * dd, v_dim=chain.dim) for i, s in enumerate(chain.scenarios)]
    out = merge_exports(parts, chain.dim)
    w_blocks = {b.name: b for b in out.w_bar}

    def component_affine(component):
        """``(constant, terms)`` of v[component] as an affine function of the lifted variables."""
        const = 0.0
        terms = {}
        for vb in out.v_blocks:
            hit = np.flatnonzero(vb.rows == component)
            if not hit.size:
                continue
            row = vb.matrix[hit[0]]
            wb = w_blocks[vb.source]
            const += float(row @ wb.offset)
            for var, mat in wb.terms:
                coeffs = row @ np.asarray(mat)
                for idx, cf in enumerate(coeffs):
                    if cf != 0.0:
                        terms[(var, idx)] = terms.get((var, idx), 0.0) + float(cf)
        return const, terms

    mu, sigma, c = chain.boundary.mu_delta, chain.boundary.sigma_delta, chain.c
    for i in range(chain.n_days - 1):
        for a in range(n):
            c_next, t_next = component_affine((i + 1) * dd + a * HOURS)
            c_prev, t_prev = component_affine(i * dd + a * HOURS + HOURS - 1)
            terms = dict(t_next)
            for k, cf in t_prev.items():
                terms[k] = terms.get(k, 0.0) - cf
            const = c_next - c_prev
            # |const + terms.z - mu| <= c * sigma
            items = tuple((var, idx, cf) for (var, idx), cf in sorted(terms.items()))
            upper = float(mu[a] + c * sigma[a] - const)
            lower = float(c * sigma[a] - mu[a] + const)
            out.constraints.append(LinearRow(items, "<=", upper))
            out.constraints.append(LinearRow(tuple((var, idx, -cf) for var, idx, cf in items), "<=", lower))
    out.meta = {
        "kind": "chain",
        "keys": ["-".join(str(k) for k in s.key) for s in chain.scenarios],
        "c": float(c),
    }
    return out
