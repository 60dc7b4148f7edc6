"""Group-scenario polyhedral uncertainty sets in the truncated PCA basis.

A set is parametrised by per-axis quantile bounds ``xi_lb <= xi_ub`` and the
budgets ``phi`` and ``psi``. A point ``w`` is written as
``w = xi_lb * (1 - lam) + xi_ub * lam`` with ``lam = (z_plus - z_minus + 1) / 2``
and ``0 <= z_minus, z_plus <= 1``; the budgets bound ``u = z_minus + z_plus``:

* ``sum(u) <= phi``
* ``u_i + u_j <= psi`` for axes ``i, j < s`` (``i == j`` included by default)

Closed-form membership: for fixed ``lam`` every feasible witness has
``u_i >= |2 lam_i - 1|`` and the witness ``z_plus = max(2 lam - 1, 0)``,
``z_minus = max(1 - 2 lam, 0)`` attains it. All budget rows have nonnegative
coefficients on ``u``, so a point is a member iff that minimal witness
satisfies them.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from ._rng import as_generator
from ._validation import check_points, check_vector, frozen
from .density import quantile
from .exceptions import DimensionMismatch, PusError

EXPORT_VERSION = 1
MEMBERSHIP_TOL = 1e-9
PILOT_DRAWS = 1000
MIN_ACCEPTANCE = 0.01


@dataclass(frozen=True)
class PusParams:
    alpha: float = 0.05
    phi: float = 5.0
    psi: float = 1.5
    s: int = 24
    pairwise_includes_diagonal: bool = True

    def __post_init__(self):
        if not 0.0 < self.alpha < 0.5:
            raise PusError(f"alpha must lie in (0, 0.5), got {self.alpha}")
        if not (self.phi >= 0 and self.psi >= 0):
            raise PusError(f"phi and psi must be nonnegative, got phi={self.phi}, psi={self.psi}")
        if int(self.s) != self.s or self.s < 0:
            raise PusError(f"s must be a nonnegative integer, got {self.s}")
        object.__setattr__(self, "s", int(self.s))

    def for_rank(self, r):
        """Copy with ``s`` capped at the available number of axes."""
        if self.s <= r:
            return self
        return PusParams(self.alpha, self.phi, self.psi, r, self.pairwise_includes_diagonal)


@dataclass(frozen=True)
class GroupScenarioPUS:
    xi_lb: np.ndarray
    xi_ub: np.ndarray
    params: PusParams
    basis_ref: str = ""

    def __post_init__(self):
        lb, ub = frozen(self.xi_lb), frozen(self.xi_ub)
        if lb.shape != ub.shape or lb.ndim != 1:
            raise DimensionMismatch("xi_lb and xi_ub must be vectors of equal length")
        if not (np.all(np.isfinite(lb)) and np.all(np.isfinite(ub))):
            raise PusError("quantile bounds must be finite")
        if np.any(lb > ub):
            raise PusError("xi_lb must not exceed xi_ub")
        if self.params.s > lb.size:
            raise PusError(f"pairwise scope s={self.params.s} exceeds rank {lb.size}")
        object.__setattr__(self, "xi_lb", lb)
        object.__setattr__(self, "xi_ub", ub)

    @property
    def rank(self):
        return self.xi_lb.size

    @property
    def midpoint(self):
        return (self.xi_lb + self.xi_ub) / 2

    @property
    def half_width(self):
        return (self.xi_ub - self.xi_lb) / 2


@dataclass(frozen=True)
class Verdict:
    """Membership outcome; truthy when inside. ``reason`` names the violated constraint family."""

    inside: bool
    reason: str = None
    detail: str = ""
    day: int = None
    group: str = None

    def __bool__(self):
        return self.inside

    def __str__(self):
        if self.inside:
            return "inside"
        where = []
        if self.day is not None:
            where.append(f"day {self.day}")
        if self.group is not None:
            where.append(f"group {self.group}")
        prefix = f"{', '.join(where)}: " if where else ""
        return f"outside({prefix}{self.reason})"

    def located(self, **kw):
        return Verdict(self.inside, self.reason, self.detail, kw.get("day", self.day), kw.get("group", self.group))


INSIDE = Verdict(True)


def build_pus(kdes, params, basis_ref=""):
    """Per-axis bounds ``xi_lb = F^-1(alpha)``, ``xi_ub = F^-1(1 - alpha)``."""
    kdes = list(kdes)
    params = params.for_rank(len(kdes))
    lb = np.array([quantile(k, params.alpha) for k in kdes])
    ub = np.array([quantile(k, 1 - params.alpha) for k in kdes])
    return GroupScenarioPUS(lb, ub, params, basis_ref)


def _degenerate_axes(pus):
    return (pus.xi_ub - pus.xi_lb) <= 1e-12 * np.maximum(1.0, np.abs(pus.xi_lb))


def minimal_dispersion(pus, w):
    """Per-axis ``|2 lam - 1|`` for points inside the box, NaN rows for points outside.

    ``w`` is ``(count, r)``; returns ``(d, box_ok)``.
    """
    lo, hi = pus.xi_lb, pus.xi_ub
    tol = MEMBERSHIP_TOL * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
    degen = _degenerate_axes(pus)
    box_ok = np.all((w >= lo - tol) & (w <= hi + tol), axis=1)
    width = np.where(degen, 1.0, hi - lo)
    lam = np.clip((w - lo) / width, 0.0, 1.0)
    lam = np.where(degen, 0.5, lam)
    return np.abs(2 * lam - 1), box_ok


def _budget_checks(pus, d):
    p = pus.params
    tol = MEMBERSHIP_TOL
    budget_ok = d.sum(axis=1) <= p.phi + tol
    pair_ok = np.ones(d.shape[0], dtype=bool)
    if p.s >= 1:
        head = -np.sort(-d[:, : p.s], axis=1)
        if p.pairwise_includes_diagonal:
            pair_ok &= 2 * head[:, 0] <= p.psi + tol
        if p.s >= 2:
            pair_ok &= head[:, 0] + head[:, 1] <= p.psi + tol
    return budget_ok, pair_ok


def membership_mask(pus, points):
    """Vectorised membership: boolean array over the rows of ``points``."""
    w = check_points(points, dim=pus.rank)
    d, box_ok = minimal_dispersion(pus, w)
    budget_ok, pair_ok = _budget_checks(pus, d)
    return box_ok & budget_ok & pair_ok


def membership(pus, w_bar):
    """Decide ``w_bar`` in the set, reporting the first violated family (box, budget, pairwise)."""
    w = check_vector(w_bar, pus.rank, "w_bar")[None, :]
    d, box_ok = minimal_dispersion(pus, w)
    if not box_ok[0]:
        bad = np.flatnonzero((w[0] < pus.xi_lb) | (w[0] > pus.xi_ub))
        return Verdict(False, "box", f"axes {bad.tolist()} outside quantile bounds")
    budget_ok, pair_ok = _budget_checks(pus, d)
    if not budget_ok[0]:
        return Verdict(False, "budget", f"sum of dispersions {d.sum():.6g} > phi={pus.params.phi}")
    if not pair_ok[0]:
        return Verdict(False, "pairwise", f"pairwise dispersion exceeds psi={pus.params.psi}")
    return INSIDE


def from_lambda(pus, lam):
    return pus.xi_lb * (1 - lam) + pus.xi_ub * lam


def _hit_and_run(pus, count, rng):
    export = export_lifted(pus)
    A, b = export.inequality_matrix()
    r = pus.rank
    # z = 0 is a vertex where almost every direction has zero range; step to
    # the middle of the feasible segment along the all-ones direction first
    z = np.zeros(2 * r)
    ones = np.ones(2 * r)
    rate = A @ ones
    reach = (b[rate > 0] / rate[rate > 0]).min(initial=np.inf)
    if np.isfinite(reach) and reach > 0:
        z = 0.5 * reach * ones
    burn_in = 50 * r
    thin = max(1, r)
    out = np.empty((count, r))
    C = np.hstack([-np.diag(pus.half_width), np.diag(pus.half_width)])
    taken = 0
    step = 0
    while taken < count:
        direction = rng.standard_normal(2 * r)
        direction /= np.linalg.norm(direction)
        slack = np.maximum(b - A @ z, 0.0)
        rate = A @ direction
        with np.errstate(divide="ignore", invalid="ignore"):
            bound = slack / rate
        upper = bound[rate > 1e-15].min(initial=np.inf)
        lower = bound[rate < -1e-15].max(initial=-np.inf)
        if np.isfinite(upper) and np.isfinite(lower) and upper > lower:
            z = z + rng.uniform(lower, upper) * direction
            z = np.clip(z, 0.0, 1.0)
        step += 1
        if step > burn_in and (step - burn_in) % thin == 0:
            out[taken] = pus.midpoint + C @ z
            taken += 1
    return out


def sample(pus, count, seed=None):
    """Draw ``count`` members of the set.

    Rejection sampling of ``lam`` uniform on the unit box; if a pilot of 1000
    draws accepts under 1%, hit-and-run in the lifted ``(z_minus, z_plus)``
    polytope from ``z = 0`` takes over. Every returned row passes
    :func:`membership`.
    """
    count = int(count)
    if count < 1:
        raise PusError(f"sample count must be >= 1, got {count}")
    rng = as_generator(seed)
    r = pus.rank
    pilot = from_lambda(pus, rng.random((PILOT_DRAWS, r)))
    ok = membership_mask(pus, pilot)
    if ok.mean() < MIN_ACCEPTANCE:
        out = _hit_and_run(pus, count, rng)
        # clip numerical drift onto the box, then insist on membership
        out = np.clip(out, pus.xi_lb, pus.xi_ub)
        if not np.all(membership_mask(pus, out)):
            raise PusError("hit-and-run produced a non-member; the set may be numerically degenerate")
        return out
    accepted = [pilot[ok]]
    n = accepted[0].shape[0]
    batch = max(PILOT_DRAWS, int(2 * count / max(ok.mean(), MIN_ACCEPTANCE)))
    while n < count:
        draw = from_lambda(pus, rng.random((batch, r)))
        keep = draw[membership_mask(pus, draw)]
        accepted.append(keep)
        n += keep.shape[0]
    return np.concatenate(accepted)[:count]


@dataclass(frozen=True)
class LinearRow:
    """``sum(coeff * var[index]) rel rhs`` with ``rel`` in ``{"<=", "="}``."""

    terms: tuple
    rel: str
    rhs: float


@dataclass(frozen=True)
class AffineBlock:
    """``target = offset + sum(matrix @ var)`` over the listed variable terms."""

    name: str
    offset: np.ndarray
    terms: tuple


@dataclass(frozen=True)
class VBlock:
    """Writes ``matrix @ w_bar[source]`` into the components ``rows`` of ``v``."""

    source: str
    rows: np.ndarray
    matrix: np.ndarray


@dataclass
class LiftedPolytopeExport:
    variables: list
    constraints: list
    w_bar: list
    v_blocks: list = field(default_factory=list)
    v_dim: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_variables(self):
        return sum(dim for _, dim in self.variables)

    def variable_offsets(self):
        offsets, pos = {}, 0
        for name, dim in self.variables:
            offsets[name] = pos
            pos += dim
        return offsets

    def inequality_matrix(self):
        """Dense ``A x <= b`` over the stacked variables (equality rows emitted twice)."""
        offsets = self.variable_offsets()
        rows, rhs = [], []
        for row in self.constraints:
            a = np.zeros(self.n_variables)
            for var, idx, coeff in row.terms:
                a[offsets[var] + idx] += coeff
            rows.append(a)
            rhs.append(row.rhs)
            if row.rel == "=":
                rows.append(-a)
                rhs.append(-row.rhs)
        return np.array(rows).reshape(-1, self.n_variables), np.array(rhs)

    def stack(self, values):
        offsets = self.variable_offsets()
        x = np.zeros(self.n_variables)
        for name, dim in self.variables:
            x[offsets[name]: offsets[name] + dim] = check_vector(values[name], dim, name)
        return x

    def violation(self, values):
        """Largest row violation (<= 0 means all rows hold) for a variable assignment."""
        A, b = self.inequality_matrix()
        return float(np.max(A @ self.stack(values) - b, initial=-np.inf))

    def evaluate_w_bar(self, values):
        out = {}
        for blk in self.w_bar:
            w = np.array(blk.offset, dtype=float)
            for var, mat in blk.terms:
                w = w + np.asarray(mat) @ np.asarray(values[var], dtype=float)
            out[blk.name] = w
        return out

    def evaluate_v(self, values):
        w = self.evaluate_w_bar(values)
        v = np.zeros(self.v_dim)
        for blk in self.v_blocks:
            v[blk.rows] += blk.matrix @ w[blk.source]
        return v

    def to_dict(self):
        return {
            "version": EXPORT_VERSION,
            "meta": self.meta,
            "variables": [{"name": n, "dim": d} for n, d in self.variables],
            "constraints": [
                {"row": [[v, int(i), float(c)] for v, i, c in row.terms], "rel": row.rel, "rhs": float(row.rhs)}
                for row in self.constraints
            ],
            "affine_maps": {
                "w_bar": [
                    {
                        "name": blk.name,
                        "offset": np.asarray(blk.offset, dtype=float).tolist(),
                        "terms": [{"var": var, "matrix": np.asarray(m, dtype=float).tolist()} for var, m in blk.terms],
                    }
                    for blk in self.w_bar
                ],
                "v": {
                    "dim": int(self.v_dim),
                    "blocks": [
                        {"source": blk.source, "rows": np.asarray(blk.rows).tolist(),
                         "matrix": np.asarray(blk.matrix, dtype=float).tolist()}
                        for blk in self.v_blocks
                    ],
                },
            },
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, doc):
        if doc.get("version") != EXPORT_VERSION:
            raise PusError(f"unsupported export version {doc.get('version')!r}")
        maps = doc["affine_maps"]
        return cls(
            variables=[(v["name"], int(v["dim"])) for v in doc["variables"]],
            constraints=[LinearRow(tuple((t[0], int(t[1]), float(t[2])) for t in c["row"]), c["rel"], float(c["rhs"]))
                         for c in doc["constraints"]],
            w_bar=[AffineBlock(b["name"], np.array(b["offset"], dtype=float),
                               tuple((t["var"], np.array(t["matrix"], dtype=float)) for t in b["terms"]))
                   for b in maps["w_bar"]],
            v_blocks=[VBlock(b["source"], np.array(b["rows"], dtype=int), np.array(b["matrix"], dtype=float))
                      for b in maps["v"]["blocks"]],
            v_dim=int(maps["v"]["dim"]),
            meta=doc.get("meta", {}),
        )


def pus_rows(pus, zm, zp):
    """Box, budget and pairwise rows of one group-scenario set over variables ``zm``/``zp``."""
    r = pus.rank
    p = pus.params
    rows = []
    for var in (zm, zp):
        for i in range(r):
            rows.append(LinearRow(((var, i, -1.0),), "<=", 0.0))
            rows.append(LinearRow(((var, i, 1.0),), "<=", 1.0))
    rows.append(LinearRow(tuple((var, i, 1.0) for var in (zm, zp) for i in range(r)), "<=", float(p.phi)))
    for i in range(p.s):
        for j in range(i, p.s):
            if i == j:
                if p.pairwise_includes_diagonal:
                    rows.append(LinearRow(((zm, i, 2.0), (zp, i, 2.0)), "<=", float(p.psi)))
            else:
                rows.append(LinearRow(((zm, i, 1.0), (zp, i, 1.0), (zm, j, 1.0), (zp, j, 1.0)), "<=", float(p.psi)))
    return rows


def export_lifted(pus, basis=None, prefix="", v_rows=None, v_dim=None):
    """Linear description of the set over the auxiliary ``z_minus``/``z_plus`` variables.

    With ``basis``, also emits the map ``v = P.T [w_bar; 0]`` into the
    components ``v_rows`` of a vector of length ``v_dim`` (defaults: the
    basis dimension).
    """
    zm, zp = f"{prefix}z_minus", f"{prefix}z_plus"
    r = pus.rank
    h = pus.half_width
    w_name = f"{prefix}w_bar"
    export = LiftedPolytopeExport(
        variables=[(zm, r), (zp, r)],
        constraints=pus_rows(pus, zm, zp),
        w_bar=[AffineBlock(w_name, pus.midpoint, ((zm, -np.diag(h)), (zp, np.diag(h))))],
    )
    if basis is not None:
        if basis.rank != r:
            raise DimensionMismatch(f"basis rank {basis.rank} does not match set dimension {r}")
        rows = np.arange(basis.dim) if v_rows is None else np.asarray(v_rows, dtype=int)
        if rows.size != basis.dim:
            raise DimensionMismatch(f"{rows.size} target rows for a basis of dimension {basis.dim}")
        export.v_blocks.append(VBlock(w_name, rows, np.array(basis.truncated.T)))
        export.v_dim = int(v_dim if v_dim is not None else basis.dim)
    return export


def merge_exports(parts, v_dim):
    """Concatenate independent exports into one (variable names must already be disjoint)."""
    out = LiftedPolytopeExport([], [], [], [], int(v_dim))
    for part in parts:
        out.variables.extend(part.variables)
        out.constraints.extend(part.constraints)
        out.w_bar.extend(part.w_bar)
        out.v_blocks.extend(part.v_blocks)
    names = [n for n, _ in out.variables]
    if len(set(names)) != len(names):
        raise PusError("variable names collide while merging exports")
    return out


def minimal_witness(pus, w_bar):
    """The ``(z_minus, z_plus)`` witness of smallest total dispersion for an in-box point."""
    w = check_vector(w_bar, pus.rank, "w_bar")
    degen = _degenerate_axes(pus)
    width = np.where(degen, 1.0, pus.xi_ub - pus.xi_lb)
    lam = np.where(degen, 0.5, np.clip((w - pus.xi_lb) / width, 0.0, 1.0))
    t = 2 * lam - 1
    return np.maximum(-t, 0.0), np.maximum(t, 0.0)
