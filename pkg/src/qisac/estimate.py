"""Phase estimation from detector counts.

Implements the two-observable expectation estimator (invert the empirical
cosine and sine of the accumulated phase, then average on the circle), the
grid-plus-golden-section maximum-likelihood estimator over the combined
single-pass / multi-pass likelihood, and the Monte-Carlo drivers for bias
and pass-count studies.

Detector counts are grouped per observable and per pass group; outcome
classes with probability (1 +/- contrast * cos) / (1 +/- contrast * sin)
are what the likelihood sees:

    class 1 (1 + cos):  observable O1, detectors 1 and 4
    class 2 (1 - cos):  observable O1, detectors 2 and 3
    class 3 (1 + sin):  observable O2, detectors 1 and 3
    class 4 (1 - sin):  observable O2, detectors 2 and 4
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

TWO_PI = 2.0 * np.pi

# Maximum-likelihood search: coarse grid over [0, 2pi) followed by a
# golden-section polish inside the winning cell.
GRID_POINTS = 100_000
GRID_RESOLUTION = TWO_PI / GRID_POINTS
REFINE_TOL = 1e-9
EPS_FLOOR = 1e-12
# Two grid maxima are "the same peak" below this separation and
# "degenerate" within this log-likelihood difference.
AMBIGUITY_LOGLIK_TOL = 1e-6
AMBIGUITY_MIN_SEPARATION = 10

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - np.sqrt(5.0)) / 2.0


class InsufficientDataError(ValueError):
    """A requested estimate has no counts to work from."""


@dataclass
class CountTable:
    """Detector counts per (observable, pass group).

    Arrays hold counts for detectors 1..4.  The "single" group sensed the
    phase once, the "multi" group ``n_passes`` times; either group may be
    empty.
    """

    n_passes: int = 1
    o1_single: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=np.int64))
    o2_single: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=np.int64))
    o1_multi: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=np.int64))
    o2_multi: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=np.int64))

    def __post_init__(self):
        for name in ("o1_single", "o2_single", "o1_multi", "o2_multi"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            if arr.shape != (4,):
                raise ValueError(f"{name} must hold 4 detector counts, got {arr.shape}")
            if arr.min() < 0:
                raise ValueError(f"{name} has negative counts: {arr!r}")
            setattr(self, name, arr)
        if self.n_passes < 1:
            raise ValueError(f"n_passes must be >= 1, got {self.n_passes!r}")

    def groups(self):
        """Yield (pass_count, o1_counts, o2_counts) for the two groups."""
        yield 1, self.o1_single, self.o2_single
        yield self.n_passes, self.o1_multi, self.o2_multi

    def group(self, which: str):
        if which == "single":
            return self.o1_single, self.o2_single
        if which == "multi":
            return self.o1_multi, self.o2_multi
        raise ValueError(f"unknown group {which!r}, expected 'single' or 'multi'")

    def total(self) -> int:
        return int(self.o1_single.sum() + self.o2_single.sum()
                   + self.o1_multi.sum() + self.o2_multi.sum())

    @classmethod
    def from_transcript(cls, transcript) -> "CountTable":
        """Assemble the table from a protocol transcript's count records."""
        counts = transcript.counts
        table = cls(
            n_passes=transcript.config["n_passes"],
            o1_single=counts.get(("O1", "single"), np.zeros(4, dtype=np.int64)),
            o2_single=counts.get(("O2", "single"), np.zeros(4, dtype=np.int64)),
            o1_multi=counts.get(("O1", "multi"), np.zeros(4, dtype=np.int64)),
            o2_multi=counts.get(("O2", "multi"), np.zeros(4, dtype=np.int64)),
        )
        if table.total() != transcript.n_message:
            raise ValueError("count table does not cover every message pair")
        return table


def _class_counts(o1: np.ndarray, o2: np.ndarray) -> np.ndarray:
    """Aggregate detector counts into the four probability classes."""
    return np.array([
        o1[..., 0] + o1[..., 3],
        o1[..., 1] + o1[..., 2],
        o2[..., 0] + o2[..., 2],
        o2[..., 1] + o2[..., 3],
    ], dtype=float).T


@dataclass(frozen=True)
class EstimationResult:
    """A phase estimate and how it was obtained.

    ``theta_est`` lies in [0, 2pi) for full-range methods and in the
    principal window [0, 2pi/N) when only N-pass data constrains it.
    """

    theta_est: float
    method: str
    theta1: float | None = None
    theta2: float | None = None
    grid_resolution: float | None = None
    loglik_at_max: float | None = None
    ambiguous: bool = False
    n_maxima: int = 1


def expectations_from_counts(counts: CountTable, group: str) -> tuple[float, float]:
    """Empirical expectation values (E1, E2) of the two observables for one group."""
    o1, o2 = counts.group(group)
    t1, t2 = int(o1.sum()), int(o2.sum())
    if t1 == 0 or t2 == 0:
        raise InsufficientDataError(
            f"group {group!r} has no counts for at least one observable")
    e1 = float((-o1[0] + o1[1] + o1[2] - o1[3]) / t1)
    e2 = float((-o2[0] + o2[1] - o2[2] + o2[3]) / t2)
    return float(np.clip(e1, -1.0, 1.0)), float(np.clip(e2, -1.0, 1.0))


def _invert_expectations(e1, e2):
    """Vectorized branch resolution: angles (a1, a2, circular mean) of N*theta."""
    c = np.clip(-np.asarray(e1, dtype=float), -1.0, 1.0)
    s = np.clip(-np.asarray(e2, dtype=float), -1.0, 1.0)
    a1 = np.arccos(c)
    a1 = np.where(s < 0.0, TWO_PI - a1, a1)
    a2 = np.arcsin(s)
    a2 = np.where(c < 0.0, np.pi - a2, a2)
    a2 = np.mod(a2, TWO_PI)
    z = np.exp(1j * a1) + np.exp(1j * a2)
    mean = np.mod(np.angle(z), TWO_PI)
    mean = np.where(np.abs(z) < 1e-12, a1, mean)
    return a1, a2, mean


def theta_from_expectations(e1: float, e2: float, n_passes: int) -> EstimationResult:
    """Invert <O1> = -cos(N theta), <O2> = -sin(N theta) and average on the circle.

    The quadrant of N*theta is fixed by the sign pair (-E1, -E2); both
    per-observable angles are placed on that branch before averaging, so
    the result covers [0, 2pi) for N = 1 and the principal window
    [0, 2pi/N) otherwise.
    """
    if n_passes < 1:
        raise ValueError(f"n_passes must be >= 1, got {n_passes!r}")
    a1, a2, mean = _invert_expectations(e1, e2)
    return EstimationResult(
        theta_est=float(mean) / n_passes,
        method="expectation",
        theta1=float(a1) / n_passes,
        theta2=float(a2) / n_passes,
    )


def _group_log_terms(theta, n_passes: int) -> np.ndarray:
    """Log of the four class probabilities (up to constants) at N*theta."""
    x = np.asarray(theta, dtype=float) * n_passes
    c, s = np.cos(x), np.sin(x)
    args = np.stack([1.0 + c, 1.0 - c, 1.0 + s, 1.0 - s])
    return np.log(np.maximum(args, EPS_FLOOR))


def log_likelihood(counts: CountTable, theta) -> np.ndarray | float:
    """Log-likelihood of the table at phase theta (scalar or array), constants dropped."""
    theta = np.asarray(theta, dtype=float)
    total = np.zeros(theta.shape)
    for n_passes, o1, o2 in counts.groups():
        cls = _class_counts(o1, o2)
        if cls.sum() == 0:
            continue
        total = total + cls @ _group_log_terms(theta, n_passes)
    if theta.ndim == 0:
        return float(total)
    return total


def _golden_max(f, lo: float, hi: float, tol: float = REFINE_TOL) -> tuple[float, float]:
    """Golden-section maximization of a unimodal scalar function on [lo, hi]."""
    dist = hi - lo
    c = lo + _INVPHI2 * dist
    d = lo + _INVPHI * dist
    yc, yd = f(c), f(d)
    while dist > tol:
        if yc > yd:
            hi, d, yd = d, c, yc
            dist = hi - lo
            c = lo + _INVPHI2 * dist
            yc = f(c)
        else:
            lo, c, yc = c, d, yd
            dist = hi - lo
            d = lo + _INVPHI * dist
            yd = f(d)
    x = 0.5 * (lo + hi)
    return x, f(x)


def _count_peak_clusters(indices: np.ndarray, n_grid: int, min_sep: int) -> int:
    """Number of well-separated clusters in a circular index set."""
    if len(indices) == 0:
        return 0
    breaks = int((np.diff(indices) > min_sep).sum())
    if indices[0] + n_grid - indices[-1] > min_sep:
        breaks += 1
    return max(breaks, 1)


def mle_combined(counts: CountTable) -> EstimationResult:
    """Maximum-likelihood phase estimate over the combined pass groups.

    Grid search over [0, 2pi) at resolution 2pi/100000 followed by
    golden-section refinement inside the winning cell.  When several
    well-separated grid maxima tie within AMBIGUITY_LOGLIK_TOL the result
    is flagged ambiguous and the smallest-theta peak is reported.
    """
    if counts.total() == 0:
        raise InsufficientDataError("all count groups are empty; likelihood is flat")
    grid = np.arange(GRID_POINTS) * GRID_RESOLUTION
    ll = log_likelihood(counts, grid)
    best = int(np.argmax(ll))
    is_local_max = (ll >= np.roll(ll, 1)) & (ll >= np.roll(ll, -1))
    near_top = is_local_max & (ll >= ll[best] - AMBIGUITY_LOGLIK_TOL)
    n_maxima = _count_peak_clusters(np.flatnonzero(near_top), GRID_POINTS,
                                    AMBIGUITY_MIN_SEPARATION)
    refined, ll_max = _golden_max(
        lambda t: log_likelihood(counts, t),
        grid[best] - GRID_RESOLUTION, grid[best] + GRID_RESOLUTION)
    return EstimationResult(
        theta_est=float(np.mod(refined, TWO_PI)),
        method="mle",
        grid_resolution=GRID_RESOLUTION,
        loglik_at_max=float(ll_max),
        ambiguous=n_maxima > 1,
        n_maxima=n_maxima,
    )


# ---------------------------------------------------------------------------
# Count sampling and Monte-Carlo drivers
# ---------------------------------------------------------------------------

def _detector_probs(theta: float, n_passes: int, e: float) -> tuple[np.ndarray, np.ndarray]:
    """Detector distributions for both observables on random-bit message pairs.

    A depolarizing channel with single-pass QBER ``e`` on both transits
    attenuates the detector contrast to (1-2e)^2.
    """
    kappa = (1.0 - 2.0 * e) ** 2
    c = kappa * np.cos(n_passes * theta)
    s = kappa * np.sin(n_passes * theta)
    p1 = 0.25 * np.array([1.0 + c, 1.0 - c, 1.0 - c, 1.0 + c])
    p2 = 0.25 * np.array([1.0 + s, 1.0 - s, 1.0 + s, 1.0 - s])
    return p1, p2


def _sample_group(nu: int, theta: float, n_passes: int, p_o: float, e: float,
                  rng: np.random.Generator, repeats: int):
    """Detector counts of one pass group, vectorized over repeats."""
    p1, p2 = _detector_probs(theta, n_passes, e)
    n_o1 = rng.binomial(nu, p_o, size=repeats)
    o1 = rng.multinomial(n_o1, p1)
    o2 = rng.multinomial(nu - n_o1, p2)
    return o1, o2


def split_counts(nu: int, single_pass_fraction: float) -> tuple[int, int]:
    """Partition nu message pairs into (single-pass, multi-pass) group sizes."""
    if not 0.0 <= single_pass_fraction <= 1.0:
        raise ValueError(f"single_pass_fraction must be in [0, 1], got {single_pass_fraction!r}")
    n_single = int(np.floor(single_pass_fraction * nu))
    return n_single, nu - n_single


def sample_count_table(nu: int, theta: float, n_passes: int,
                       single_pass_fraction: float, rng: np.random.Generator,
                       p_o: float = 0.5, e: float = 0.0) -> CountTable:
    """Draw one count table for nu message pairs with the configured split."""
    n_single, n_multi = split_counts(nu, single_pass_fraction)
    o1s, o2s = _sample_group(n_single, theta, 1, p_o, e, rng, 1)
    o1m, o2m = _sample_group(n_multi, theta, n_passes, p_o, e, rng, 1)
    return CountTable(n_passes=n_passes, o1_single=o1s[0], o2_single=o2s[0],
                      o1_multi=o1m[0], o2_multi=o2m[0])


def wrap_error(delta):
    """Wrap a phase difference to (-pi, pi]."""
    d = np.mod(np.asarray(delta, dtype=float), TWO_PI)
    return np.where(d > np.pi, d - TWO_PI, d)


def _mle_batch(class_single: np.ndarray, class_multi: np.ndarray, n_passes: int,
               refine: bool = True) -> np.ndarray:
    """Grid (plus optional golden-section) MLE for a batch of class-count rows."""
    grid = np.arange(GRID_POINTS) * GRID_RESOLUTION
    basis = np.vstack([_group_log_terms(grid, 1), _group_log_terms(grid, n_passes)])
    counts = np.hstack([class_single, class_multi])
    ll = counts @ basis
    best = np.argmax(ll, axis=1)
    estimates = grid[best]
    if not refine:
        return estimates
    out = np.empty(len(estimates))
    for i, (row, b) in enumerate(zip(counts, best)):
        def f(t, row=row):
            terms = np.concatenate([
                _group_log_terms(t, 1).ravel(),
                _group_log_terms(t, n_passes).ravel()])
            return float(row @ terms)
        x, _ = _golden_max(f, grid[b] - GRID_RESOLUTION, grid[b] + GRID_RESOLUTION)
        out[i] = np.mod(x, TWO_PI)
    return out


@dataclass
class BiasTable:
    """Per-theta bias statistics of a repeated estimation experiment."""

    nu: int
    n_passes: int
    estimator: str
    repeats: int
    theta: np.ndarray
    mean_bias: np.ndarray
    std: np.ndarray

    def stderr(self) -> np.ndarray:
        return self.std / np.sqrt(self.repeats)

    def rows(self):
        for t, v, s in zip(self.theta, self.mean_bias, self.stderr()):
            yield {"theta": t, "n": self.nu, "value": v, "stderr": s}


def monte_carlo_bias(nu: int, theta_grid, repeats: int, n_passes: int = 1,
                     single_pass_fraction: float = 0.0, p_o: float = 0.5,
                     e: float = 0.0, estimator: str = "expectation",
                     seed: int = 0) -> BiasTable:
    """Mean signed bias (wrapped to (-pi, pi]) of an estimator over a theta grid.

    The "expectation" estimator works on a single pass group
    (single_pass_fraction must be 0); "mle" uses the combined groups.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats!r}")
    theta_grid = np.asarray(theta_grid, dtype=float)
    if estimator not in ("expectation", "mle"):
        raise ValueError(f"unknown estimator {estimator!r}")
    if estimator == "expectation" and single_pass_fraction != 0.0:
        raise ValueError("the expectation estimator works on a single pass group")
    rng = np.random.default_rng(seed)
    mean_bias = np.empty(len(theta_grid))
    std = np.empty(len(theta_grid))
    for k, theta in enumerate(theta_grid):
        if estimator == "expectation":
            o1, o2 = _sample_group(nu, theta, n_passes, p_o, e, rng, repeats)
            t1 = o1.sum(axis=1)
            t2 = o2.sum(axis=1)
            t1s = np.where(t1 > 0, t1, 1)
            t2s = np.where(t2 > 0, t2, 1)
            e1 = (-o1[:, 0] + o1[:, 1] + o1[:, 2] - o1[:, 3]) / t1s
            e2 = (-o2[:, 0] + o2[:, 1] - o2[:, 2] + o2[:, 3]) / t2s
            _, _, mean = _invert_expectations(e1, e2)
            est = mean / n_passes
        else:
            n_single, n_multi = split_counts(nu, single_pass_fraction)
            o1s, o2s = _sample_group(n_single, theta, 1, p_o, e, rng, repeats)
            o1m, o2m = _sample_group(n_multi, theta, n_passes, p_o, e, rng, repeats)
            est = _mle_batch(_class_counts(o1s, o2s), _class_counts(o1m, o2m), n_passes)
        err = wrap_error(est - theta)
        mean_bias[k] = err.mean()
        std[k] = est.std(ddof=1) if repeats > 1 else 0.0
    return BiasTable(nu=nu, n_passes=n_passes, estimator=estimator, repeats=repeats,
                     theta=theta_grid.copy(), mean_bias=mean_bias, std=std)


@dataclass
class ScanResult:
    """Bias of the combined estimator across pass counts and true phases.

    Each heatmap cell holds the mean absolute wrapped error over the
    repeats; scatter values average the cells over the phase grid.
    """

    pair_counts: list[int]
    n_values: list[int]
    theta_grid: np.ndarray
    repeats: int
    single_pass_fraction: float
    heatmaps: dict          # nu -> array (len(n_values), len(theta_grid))
    scatter: dict           # nu -> array (len(n_values),)
    single_pass_reference: dict  # nu -> theta-averaged bias, single-pass data only
    best_n: dict            # nu -> (argmin N, runner-up N)


def optimal_n_scan(pair_counts, n_values, theta_grid, repeats: int,
                   single_pass_fraction: float = 0.1, p_o: float = 0.5,
                   e: float = 0.0, seed: int = 0, refine: bool = True) -> ScanResult:
    """Scan the combined estimator's bias over the number of sensing passes.

    For each (pair count, N, theta) cell the combined MLE runs ``repeats``
    times; the cell records the mean absolute wrapped error.  The
    single-pass reference repeats the exercise with the multi-pass group
    discarded, which is the level the large-N plateau approaches once the
    multi-pass likelihood comb becomes too dense to add information.
    """
    theta_grid = np.asarray(theta_grid, dtype=float)
    n_values = [int(n) for n in n_values]
    heatmaps, scatter, reference, best = {}, {}, {}, {}
    seed_seq = np.random.SeedSequence(seed)
    for nu, child in zip(pair_counts, seed_seq.spawn(len(pair_counts))):
        n_single, n_multi = split_counts(nu, single_pass_fraction)
        grid_bias = np.empty((len(n_values), len(theta_grid)))
        streams = child.spawn(len(n_values) + 1)
        for i, n_passes in enumerate(n_values):
            rng = np.random.default_rng(streams[i])
            for j, theta in enumerate(theta_grid):
                o1s, o2s = _sample_group(n_single, theta, 1, p_o, e, rng, repeats)
                o1m, o2m = _sample_group(n_multi, theta, n_passes, p_o, e, rng, repeats)
                est = _mle_batch(_class_counts(o1s, o2s), _class_counts(o1m, o2m),
                                 n_passes, refine=refine)
                grid_bias[i, j] = np.abs(wrap_error(est - theta)).mean()
        heatmaps[nu] = grid_bias
        scatter[nu] = grid_bias.mean(axis=1)
        rng = np.random.default_rng(streams[-1])
        ref = np.empty(len(theta_grid))
        empty = np.zeros((repeats, 4))
        for j, theta in enumerate(theta_grid):
            o1s, o2s = _sample_group(n_single, theta, 1, p_o, e, rng, repeats)
            est = _mle_batch(_class_counts(o1s, o2s), empty, 1, refine=refine)
            ref[j] = np.abs(wrap_error(est - theta)).mean()
        reference[nu] = float(ref.mean())
        order = np.argsort(scatter[nu])
        best[nu] = (n_values[int(order[0])],
                    n_values[int(order[1])] if len(order) > 1 else n_values[int(order[0])])
    return ScanResult(pair_counts=list(pair_counts), n_values=n_values,
                      theta_grid=theta_grid.copy(), repeats=repeats,
                      single_pass_fraction=single_pass_fraction,
                      heatmaps=heatmaps, scatter=scatter,
                      single_pass_reference=reference, best_n=best)


def estimate_from_transcript(transcript, method: str = "expectation") -> EstimationResult:
    """Run an estimator on a protocol transcript, undoing any guard shift."""
    table = CountTable.from_transcript(transcript)
    guard = transcript.config.get("guard_delta", 0.0)
    if method == "expectation":
        group = "multi" if table.o1_multi.sum() + table.o2_multi.sum() > 0 else "single"
        group_passes = table.n_passes if group == "multi" else 1
        e1, e2 = expectations_from_counts(table, group)
        res = theta_from_expectations(e1, e2, group_passes)
        window = TWO_PI / group_passes
    elif method == "mle":
        res = mle_combined(table)
        window = TWO_PI
    else:
        raise ValueError(f"unknown method {method!r}")
    if guard:
        res = replace(res, theta_est=float(np.mod(res.theta_est - guard, window)))
    return res
