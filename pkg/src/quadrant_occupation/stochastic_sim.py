r"""Monte Carlo estimation of quadrant occupation times.

Each path is a Gaussian random walk sampled on ``n_steps`` equal intervals of
[0, 1].  Path ``i`` draws its increments from a Philox stream keyed by
``(i, seed)``; the first ``n_steps`` normals drive ``X`` and the next
``n_steps`` drive ``Y``.  A path is therefore the same whatever the batching or
thread count, and the ``X`` component is shared between regions.

Two counting conventions are available.

``"bridge"`` (default)
    Each interval contributes the expected fraction of time the Brownian
    bridge between the sampled endpoints spends in the region.  This is
    :math:`E[T \mid \text{grid values}]`, so it is unbiased for every
    functional that is linear in :math:`T` and removes the atom at ``T = 0``
    that grid counting produces for paths started on the boundary.
``"midpoint"``
    Each interval counts fully if the region holds at the average of its two
    endpoint values.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import stats
from scipy.optimize import brentq
from scipy.special import erfcx, ndtr, ndtri

from .errors import DomainError, PreconditionError
from .regions import Region

__all__ = ["SimConfig", "OccupationSampleSet", "EmpiricalDistribution", "simulate",
           "simulate_regions", "feynman_kac_estimate", "symmetry_check", "symmetry_threshold",
           "bias_study", "BiasReport", "bridge_fraction"]

COUNTING = ("bridge", "midpoint")
_SQ2PI_4 = math.sqrt(2.0 * math.pi) / 4.0
_SQRT_HALF = math.sqrt(0.5)
# beyond a*b = 18.5 the bridge crosses zero with probability below 1e-16
_FAR = 18.5
_BATCH = 256
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class SimConfig:
    n_paths: int
    n_steps: int = 10_000
    seed: int = 0
    region: Region = Region.OPPOSITE_QUADRANTS
    start: tuple = (0.0, 0.0)
    counting: str = "bridge"

    def __post_init__(self):
        object.__setattr__(self, "region", Region.parse(self.region))
        object.__setattr__(self, "start", tuple(float(c) for c in self.start))
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise DomainError("n_paths must be a positive integer")
        if int(self.n_steps) != self.n_steps or self.n_steps < 100:
            raise DomainError("n_steps must be an integer >= 100")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if len(self.start) != 2:
            raise DomainError("start must be a point (x, y)")
        if self.counting not in COUNTING:
            raise DomainError(f"counting must be one of {COUNTING}")

    def to_dict(self):
        d = asdict(self)
        d["region"] = self.region.value
        d["start"] = list(self.start)
        return d


@dataclass(frozen=True)
class OccupationSampleSet:
    samples: np.ndarray
    config: SimConfig

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape != (self.config.n_paths,):
            raise DomainError("one sample per path is required")
        if s.size and (s.min() < 0.0 or s.max() > 1.0):
            raise DomainError("occupation times must lie in [0, 1]")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted samples with CDF queries and moment estimates."""

    sorted_samples: np.ndarray = field(repr=False)

    @classmethod
    def from_samples(cls, samples):
        s = np.sort(np.asarray(getattr(samples, "samples", samples), dtype=float))
        s.setflags(write=False)
        return cls(s)

    @property
    def n(self):
        return self.sorted_samples.size

    def cdf(self, u):
        """Right-continuous empirical CDF."""
        return np.searchsorted(self.sorted_samples, u, side="right") / self.n

    def moment(self, k: int):
        """Return (estimate, standard error) of E[T^k]."""
        p = self.sorted_samples ** k
        return float(p.mean()), float(p.std(ddof=1) / math.sqrt(self.n))

    def ks(self, cdf):
        """One-sample KS distance and p-value against a continuous CDF."""
        res = stats.kstest(self.sorted_samples, cdf)
        return float(res.statistic), float(res.pvalue)


# ---------------------------------------------------------------------------
# bridge occupation fractions
# ---------------------------------------------------------------------------

def bridge_fraction(a, b):
    r"""Expected fraction of [0, 1] a Brownian bridge from ``a`` to ``b`` spends above 0.

    ``a`` and ``b`` are in units of the bridge's standard deviation scale
    (the bridge has variance :math:`u(1-u)`).  If the endpoints have opposite
    signs the fraction is
    :math:`1/2 + (\sqrt{2\pi}/4)(a+b)\,\mathrm{erfcx}(|b-a|/\sqrt2)`;
    if both are positive it is :math:`1 - c` and if both negative :math:`c`,
    with :math:`c = e^{-2ab}\,(1/2 - (\sqrt{2\pi}/4)\,w\,\mathrm{erfcx}(w/\sqrt2))`
    and :math:`w = |a+b|`.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = a + b
    cross = a * b <= 0.0
    out = np.empty(np.broadcast(a, b).shape)
    opp = _SQ2PI_4 * s * erfcx(np.abs(b - a) * _SQRT_HALF)
    w = np.abs(s)
    with np.errstate(over="ignore", invalid="ignore"):
        c = np.exp(-2.0 * a * b) * (0.5 - _SQ2PI_4 * w * erfcx(w * _SQRT_HALF))
    out = np.where(cross, 0.5 + opp, np.where(s > 0, 1.0 - c, c))
    return np.clip(out, 0.0, 1.0)


def _pointwise_above(a, b, u):
    """P(bridge from a to b is above 0 at fraction u), u broadcast on a trailing axis."""
    a = a[:, None]
    b = b[:, None]
    return ndtr((a + (b - a) * u) / np.sqrt(u * (1.0 - u)))


# nodes u = sin^2(pi s / 2) cluster at both ends where the bridge is pinned
_U_NODES = np.sin(0.25 * math.pi * (_GL_X + 1.0)) ** 2
_U_WEIGHTS = _GL_W * 0.25 * math.pi * np.sin(0.5 * math.pi * (_GL_X + 1.0))


def _joint_fractions(ax, bx, ay, by):
    """Fractions of time with (X>0, Y>0) and with (X<0, Y<0) on doubly near intervals."""
    px = _pointwise_above(ax, bx, _U_NODES)
    py = _pointwise_above(ay, by, _U_NODES)
    both = (px * py) @ _U_WEIGHTS
    neither = ((1.0 - px) * (1.0 - py)) @ _U_WEIGHTS
    return both, neither


# ---------------------------------------------------------------------------
# path generation
# ---------------------------------------------------------------------------

def _normals(path_index: int, seed: int, count: int) -> np.ndarray:
    gen = np.random.Philox(key=np.array([path_index, seed], dtype=np.uint64))
    raw = gen.random_raw(count)
    return ndtri(((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53)


def _walks(config: SimConfig, lo: int, hi: int, dims: int):
    """Walk values (in units of the step standard deviation) for paths lo..hi-1."""
    n = config.n_steps
    z = np.empty((dims, hi - lo, n))
    for row, i in enumerate(range(lo, hi)):
        draws = _normals(i, int(config.seed), dims * n)
        for d in range(dims):
            z[d, row] = draws[d * n:(d + 1) * n]
    walks = np.cumsum(z, axis=2)
    scale = math.sqrt(n)
    starts = []
    for d in range(dims):
        x0 = config.start[d] * scale
        walks[d] += x0
        starts.append(x0)
    return walks, starts


def _endpoints(walk, x0):
    prev = np.empty_like(walk)
    prev[:, 0] = x0
    prev[:, 1:] = walk[:, :-1]
    return prev, walk


def _fraction_above(prev, cur):
    """Per-interval fraction of time above 0 (bridge convention)."""
    frac = (prev + cur > 0).astype(float)
    near = prev * cur < _FAR
    frac[near] = bridge_fraction(prev[near], cur[near])
    return frac, near


def _occupations(config: SimConfig, regions, lo: int, hi: int):
    dims = 1 if all(r is Region.HALF_PLANE for r in regions) else 2
    walks, starts = _walks(config, lo, hi, dims)
    n = config.n_steps
    px, cx = _endpoints(walks[0], starts[0])
    if config.counting == "midpoint":
        ix = (px + cx) > 0
        out = {}
        if dims == 2:
            py, cy = _endpoints(walks[1], starts[1])
            iy = (py + cy) > 0
        for r in regions:
            if r is Region.HALF_PLANE:
                hit = ix
            elif r is Region.SINGLE_QUADRANT:
                hit = ix & iy
            else:
                hit = ix == iy
            out[r] = np.count_nonzero(hit, axis=1) / n
        return out
    fx, nx = _fraction_above(px, cx)
    out = {}
    if Region.HALF_PLANE in regions:
        out[Region.HALF_PLANE] = fx.sum(axis=1) / n
    if dims == 2:
        py, cy = _endpoints(walks[1], starts[1])
        fy, ny = _fraction_above(py, cy)
        # independent coordinates: if at most one is near zero the other is
        # (to 1e-16) constant over the interval and the fractions multiply
        both = fx * fy
        neither = (1.0 - fx) * (1.0 - fy)
        dbl = nx & ny
        if dbl.any():
            b, nb = _joint_fractions(px[dbl], cx[dbl], py[dbl], cy[dbl])
            both[dbl] = b
            neither[dbl] = nb
        if Region.SINGLE_QUADRANT in regions:
            out[Region.SINGLE_QUADRANT] = both.sum(axis=1) / n
        if Region.OPPOSITE_QUADRANTS in regions:
            out[Region.OPPOSITE_QUADRANTS] = (both + neither).sum(axis=1) / n
    return {r: np.clip(v, 0.0, 1.0) for r, v in out.items()}


def simulate_regions(config: SimConfig, regions, workers: int = 1):
    """Simulate once and return an OccupationSampleSet for each region.

    All regions are measured on the same paths (``config.region`` is ignored).
    """
    regions = tuple(dict.fromkeys(Region.parse(r) for r in regions))
    if not regions:
        raise DomainError("at least one region is required")
    bounds = [(lo, min(lo + _BATCH, config.n_paths)) for lo in range(0, config.n_paths, _BATCH)]
    if workers <= 1:
        parts = [_occupations(config, regions, lo, hi) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _occupations(config, regions, *b), bounds))
    return {r: OccupationSampleSet(np.concatenate([p[r] for p in parts]), replace(config, region=r))
            for r in regions}


def simulate(config: SimConfig, workers: int = 1) -> OccupationSampleSet:
    """Occupation times of ``config.region`` for ``config.n_paths`` paths."""
    return simulate_regions(config, (config.region,), workers)[config.region]


# ---------------------------------------------------------------------------
# functionals and checks
# ---------------------------------------------------------------------------

def _require_opposite_origin(samples, what):
    cfg = samples.config
    if cfg.region is not Region.OPPOSITE_QUADRANTS or any(c != 0.0 for c in cfg.start):
        raise PreconditionError(
            f"{what} needs the union of opposite quadrants and a start at the origin: the "
            "Brownian scaling that turns the Laplace-transformed occupation into a "
            "functional of T on [0, 1] only holds for a cone observed from its apex")


def feynman_kac_estimate(samples: OccupationSampleSet, alpha: float, lam: float):
    """Monte Carlo estimate of E[1/(alpha + lam*T)] with its standard error."""
    _require_opposite_origin(samples, "feynman_kac_estimate")
    if not alpha > 0 or not lam >= 0:
        raise DomainError("need alpha > 0 and lambda >= 0")
    base = 1.0 / alpha
    # deviations from 1/alpha keep lambda = 0 exact and reduce rounding
    dev = 1.0 / (alpha + lam * samples.samples) - base
    se = float(dev.std(ddof=1) / math.sqrt(dev.size)) if dev.size > 1 else math.inf
    return base + float(dev.mean()), se


def symmetry_check(samples: OccupationSampleSet) -> float:
    """KS distance between the samples ``T_i`` and their reflections ``1 - T_i``."""
    t = samples.samples
    return float(stats.ks_2samp(t, 1.0 - t).statistic)


def symmetry_threshold(n: int, level: float = 0.01) -> float:
    r"""Critical value for :func:`symmetry_check` under exact symmetry.

    For a continuous law symmetric about 1/2 the distance is
    :math:`\sup_u |P_n(T\le u) - P_n(T\ge 1-u)|`, a mean of variables in
    {-1, 0, 1} with variance :math:`2F(u)` for :math:`u<1/2`.  Scaled by
    :math:`\sqrt n` it converges to :math:`\sup_{s\le 1}|B_s|`, whose tail is
    :math:`1-(4/\pi)\sum_k (-1)^k e^{-(2k+1)^2\pi^2/(8c^2)}/(2k+1)`.
    """
    if n < 30:
        raise PreconditionError("asymptotic threshold needs n >= 30")

    def tail(c):
        k = np.arange(50)
        return 1.0 - 4.0 / math.pi * np.sum((-1.0) ** k / (2 * k + 1)
                                             * np.exp(-(2 * k + 1) ** 2 * math.pi ** 2 / (8 * c * c)))

    c = brentq(lambda c: tail(c) - level, 0.5, 10.0, xtol=1e-12)
    return c / math.sqrt(n)


@dataclass(frozen=True)
class BiasReport:
    step_counts: tuple
    mean: tuple
    mean_se: tuple
    p_quarter: tuple
    second_moment: tuple
    reference: dict
    bias_order: dict

    def to_dict(self):
        return asdict(self)


def _fit_order(step_counts, errors):
    e = np.abs(np.asarray(errors, dtype=float))
    if np.any(e == 0) or len(e) < 2:
        return float("nan")
    slope = np.polyfit(np.log(step_counts), np.log(e), 1)[0]
    return float(-slope)


def bias_study(template: SimConfig, step_counts, reference=None) -> BiasReport:
    """Run ``template`` at each step count with the same seed and report drift.

    ``reference`` maps statistic names (``"mean"``, ``"p_quarter"``,
    ``"m2"``) to exact values; for each one given, the fitted order ``p`` of
    ``|estimate - reference| ~ n_steps^(-p)`` is reported.
    """
    steps = [int(s) for s in step_counts]
    if len(steps) < 3 or any(b <= a for a, b in zip(steps, steps[1:])):
        raise PreconditionError("need at least 3 increasing step counts")
    means, ses, pq, m2 = [], [], [], []
    for n in steps:
        emp = EmpiricalDistribution.from_samples(simulate(replace(template, n_steps=n)))
        m, se = emp.moment(1)
        means.append(m)
        ses.append(se)
        pq.append(float(emp.cdf(0.25)))
        m2.append(emp.moment(2)[0])
    reference = dict(reference or {})
    series = {"mean": means, "p_quarter": pq, "m2": m2}
    orders = {k: _fit_order(steps, np.asarray(series[k]) - v) for k, v in reference.items()}
    return BiasReport(tuple(steps), tuple(means), tuple(ses), tuple(pq), tuple(m2),
                      reference, orders)
