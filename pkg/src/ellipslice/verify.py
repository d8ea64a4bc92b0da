"""Statistical checks of the kernel properties, one seedable function each.

Every check returns a :class:`VerificationReport` holding its estimates,
their standard errors and the :class:`Rule` that turns them into a
decision.  Checks draw all randomness from a stream keyed by the seed and
the test name, so a report is reproducible from ``(name, seed, params)``
alone and does not depend on the order in which a suite is run.

Negative controls are available through ``fault`` arguments: a wrong case
split in the shrinkage loop (``"linear_split"``) and non-Gaussian inputs for
the rotation check (``"uniform_cube"``).  Each must make its check fail.
"""
from __future__ import annotations

import inspect
import json
import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .circle import TICK, TWO_PI, Angle, ArcSet, Icirc, as_angle, reflect
from .errors import ConfigError, PreconditionViolated
from .ess import TargetModel, ess_step, ess_step_batch, ess_step_murray
from .gaussian import CovarianceSpec, SpectralCovariance, power_law, rotate_pair
from .likelihoods import GaussianLikelihood, IndicatorCube, Mixture
from .rng import RngStream
from .shrinkage import DEFAULT_CAP, estimate_Q, shrink_batch, unstopped_batch

__all__ = [
    "Rule", "VerificationReport", "test_q_detailed_balance", "test_q_psd", "test_q_pushforward",
    "test_rotation_invariance", "test_h_reversibility", "test_h_psd",
    "test_nontermination_probability", "test_alg_equivalence", "test_anchor_conditional",
    "test_termination_tail", "conjugate_model", "gaussian_2d_model", "mixture_model",
    "SUITE", "DEFAULT_SUITE", "run_test", "run_suite", "summarize",
]

# keep pytest from collecting the check functions when this module is imported in tests
__test__ = False

DECISIONS = ("pass", "fail", "inconclusive")
CHUNK = 1 << 17  # rows per vectorized ESS batch


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class Rule:
    """Decision rule applied to every ``(estimate, std_error)`` pair.

    ``kind`` is one of

    * ``"abs_z"``: ``|e| <= t * se`` (two-sided z band)
    * ``"lower_z"``: ``e >= -t * se``
    * ``"abs_lt"``: ``|e| < t``
    * ``"abs_le"``: ``|e| <= t``
    * ``"greater"``: ``e > t``
    * ``"at_most"``: ``e <= t``
    * ``"inconclusive"``: never decides; the check is informative only

    ``threshold`` may be a scalar or one value per estimate.
    """

    kind: str
    threshold: object = 0.0

    _TEXT = {
        "abs_z": "|estimate| <= {t} * std_error",
        "lower_z": "estimate >= -{t} * std_error",
        "abs_lt": "|estimate| < {t}",
        "abs_le": "|estimate| <= {t}",
        "greater": "estimate > {t}",
        "at_most": "estimate <= {t}",
        "inconclusive": "informative only (no exact reference distribution)",
    }

    def __post_init__(self):
        if self.kind not in self._TEXT:
            raise ValueError(f"unknown rule kind {self.kind!r}")

    def describe(self) -> str:
        return self._TEXT[self.kind].format(t=self.threshold) + " for every estimate"

    def holds(self, estimates, std_errors) -> np.ndarray:
        e = np.asarray(estimates, dtype=np.float64)
        se = np.asarray(std_errors, dtype=np.float64)
        t = np.broadcast_to(np.asarray(self.threshold, dtype=np.float64), e.shape)
        if self.kind == "abs_z":
            return np.abs(e) <= t * se
        if self.kind == "lower_z":
            return e >= -t * se
        if self.kind == "abs_lt":
            return np.abs(e) < t
        if self.kind == "abs_le":
            return np.abs(e) <= t
        if self.kind == "greater":
            return e > t
        if self.kind == "at_most":
            return e <= t
        return np.ones(e.shape, dtype=bool)

    def decide(self, estimates, std_errors) -> str:
        if self.kind == "inconclusive":
            return "inconclusive"
        return "pass" if bool(np.all(self.holds(estimates, std_errors))) else "fail"


@dataclass
class VerificationReport:
    test_name: str
    claim: str
    estimates: list
    std_errors: list
    decision: str
    n_samples: int
    seed: int
    runtime_ms: int
    rule: str
    labels: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.decision == "pass"

    @property
    def failed(self) -> bool:
        return self.decision == "fail"

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("runtime_ms")
        return d

    def to_json(self, timing: bool = False) -> str:
        """Stable JSON rendering.  Timing is left out by default so the
        document only depends on the name, seed and parameters."""
        return json.dumps(_plain(self.to_dict(timing)), indent=2, sort_keys=True, allow_nan=True)

    def line(self) -> str:
        return f"{self.decision.upper():<12} {self.test_name} ({self.n_samples} samples, seed {self.seed})"


def _plain(obj):
    """Convert numpy scalars and arrays to JSON-compatible builtins."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _report(name, claim, labels, estimates, std_errors, rule: Rule, n, seed, start, details=None):
    estimates = [float(v) for v in estimates]
    std_errors = [float(v) for v in std_errors]
    return VerificationReport(
        test_name=name, claim=claim, estimates=estimates, std_errors=std_errors,
        decision=rule.decide(estimates, std_errors), n_samples=int(n), seed=int(seed),
        runtime_ms=int(round((time.perf_counter() - start) * 1000)), rule=rule.describe(),
        labels=list(labels), details=_plain(details or {}),
    )


def _stream(seed: int, name: str) -> RngStream:
    return RngStream(int(seed), zlib.crc32(name.encode()))


def _mean_se(v):
    v = np.asarray(v, dtype=np.float64)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0


def _arcs(arcs) -> ArcSet:
    if isinstance(arcs, ArcSet):
        return arcs
    return ArcSet.from_radians(arcs)


def _require_open(S: ArcSet, what="S"):
    if S.length_ticks == 0:
        raise ConfigError(f"{what} must be non-empty", field=what)
    if not S.is_open_on_circle:
        raise ConfigError(f"{what} must be open on the circle (use open arcs)", field=what)


# ---------------------------------------------------------------------------
# shrinkage kernel


def test_q_detailed_balance(S, F, G, n: int = 10**6, seed: int = 0, cap: int = DEFAULT_CAP, *,
                            fault: Optional[str] = None, z: float = 4.0) -> VerificationReport:
    """Two-sample check of ``P(theta in G, theta' in F) = P(theta in F, theta' in G)``.

    ``theta ~ U_S`` and ``theta'`` is one shrinkage transition from it.  The
    two sides use independent samples of size ``n``.
    """
    name = "q_detailed_balance"
    start = time.perf_counter()
    S, F, G = _arcs(S), _arcs(F), _arcs(G)
    _require_open(S)
    for label, A in (("F", F), ("G", G)):
        if not S.contains_set(A):
            raise ConfigError(f"{label} is not contained in S", field=label)
    rng = _stream(seed, name).generator
    sides, ses, caps = [], [], 0
    for A, B in ((G, F), (F, G)):
        theta = S.sample_ticks(n, rng)
        res = shrink_batch(theta, S, rng, cap, fault=fault)
        v = A.contains_ticks(theta) & res.accepted & B.contains_ticks(res.angle)
        m, se = _mean_se(v)
        sides.append(m)
        ses.append(se)
        caps += int((~res.accepted).sum())
    diff, se = sides[0] - sides[1], math.hypot(*ses)
    return _report(name, "the shrinkage kernel is reversible with respect to the uniform law on S",
                   ["lhs - rhs"], [diff], [se], Rule("abs_z", z), n, seed, start,
                   {"lhs": sides[0], "rhs": sides[1], "lhs_se": ses[0], "rhs_se": ses[1],
                    "cap_hits": caps, "fault": fault, "z": diff / se if se > 0 else 0.0})


def _psd_functions(S: ArcSet):
    first = ArcSet([S.arcs[0]])
    share = first.length_ticks / S.length_ticks
    pieces = S.pieces() * TICK
    mean_cos = float(np.sum(np.sin(pieces[:, 1]) - np.sin(pieces[:, 0]))) / S.length
    return {
        "constant": lambda t: np.ones_like(t),
        "first_arc": lambda t: first.contains_ticks(np.round(t / TICK).astype(np.int64)).astype(float),
        "first_arc_centered": lambda t: first.contains_ticks(np.round(t / TICK).astype(np.int64)) - share,
        "cos": np.cos,
        "sin": np.sin,
        "cos2": lambda t: np.cos(2 * t),
        "sin2": lambda t: np.sin(2 * t),
        "cos_centered": lambda t: np.cos(t) - mean_cos,
    }


def test_q_psd(S, n: int = 10**6, seed: int = 0, cap: int = DEFAULT_CAP, *,
               z: float = 3.0) -> VerificationReport:
    """``E[f(theta) f(theta')] >= 0`` for eight fixed functions on ``S``.

    Runs that hit the cap contribute ``f(theta') = 0``.
    """
    name = "q_psd"
    start = time.perf_counter()
    S = _arcs(S)
    _require_open(S)
    rng = _stream(seed, name).generator
    theta = S.sample_ticks(n, rng)
    res = shrink_batch(theta, S, rng, cap)
    t0 = theta * TICK
    t1 = res.angle * TICK
    labels, est, ses = [], [], []
    for label, f in _psd_functions(S).items():
        v = f(t0) * np.where(res.accepted, f(t1), 0.0)
        m, se = _mean_se(v)
        labels.append(label)
        est.append(m)
        ses.append(se)
    return _report(name, "the shrinkage kernel is a positive semi-definite operator on L2(U_S)",
                   labels, est, ses, Rule("lower_z", z), n, seed, start,
                   {"cap_hits": int((~res.accepted).sum())})


def test_q_pushforward(S, theta, alpha, B, n: int = 10**6, seed: int = 0, cap: int = DEFAULT_CAP, *,
                       z: float = 4.0) -> VerificationReport:
    """Compare ``Q_S(alpha, B)`` with the kernel of the reflected problem.

    The reflected problem replaces ``S``, ``alpha`` and ``B`` by their
    images under ``g(a) = (theta - a) mod 2pi``.  ``B = S`` is compared as a
    second, degenerate case.
    """
    name = "q_pushforward"
    start = time.perf_counter()
    S, B = _arcs(S), _arcs(B)
    theta, alpha = as_angle(theta), as_angle(alpha)
    _require_open(S)
    if alpha not in S:
        raise ConfigError("alpha must lie in S", field="alpha")
    if not S.contains_set(B):
        raise ConfigError("B is not contained in S", field="B")
    try:
        S2, B2 = S.reflected(theta), B.reflected(theta)
    except PreconditionViolated as exc:
        raise ConfigError(str(exc), field="S") from None
    alpha2 = reflect(theta, alpha)
    rng = _stream(seed, name).generator
    labels, est, ses, details = [], [], [], {}
    for label, target, target2 in (("B", B, B2), ("S", S, S2)):
        q1 = estimate_Q(S, alpha, target, n, rng, cap)
        q2 = estimate_Q(S2, alpha2, target2, n, rng, cap)
        labels.append(f"Q({label}) - Q(reflected {label})")
        est.append(q1.estimate - q2.estimate)
        ses.append(math.hypot(q1.std_error, q2.std_error))
        details[label] = {"original": q1.estimate, "reflected": q2.estimate,
                          "cap_hits": q1.cap_hits + q2.cap_hits}
    return _report(name, "the shrinkage kernel commutes with the reflections g_theta",
                   labels, est, ses, Rule("abs_z", z), n, seed, start, details)


def test_anchor_conditional(S, n_steps: int = 5, n: int = 10**6, seed: int = 0, *,
                            classes: int = 4, cells: int = 4, alpha: float = 0.01) -> VerificationReport:
    """Given the bracket after ``n_steps``, the anchor is uniform on ``S`` inside it.

    For ``Theta ~ U_S`` and an unstopped run anchored at ``Theta`` the
    statistic ``U = U_S(I(gmin, Theta)) / U_S(I(gmin, gmax))`` is uniform on
    [0, 1) independently of the bracket.  The runs are split into
    ``classes`` groups by the S-measure of the bracket and ``U`` into
    ``cells`` equal cells, giving a ``classes x cells`` table whose rows are
    tested for uniformity with one chi-square statistic.
    """
    name = "anchor_conditional"
    start = time.perf_counter()
    S = _arcs(S)
    _require_open(S)
    rng = _stream(seed, name).generator
    anchor = S.sample_ticks(n, rng)
    _, gmin, gmax = unstopped_batch(anchor, n_steps, rng)
    total = S.overlap_ticks(gmin, gmax)
    below = S.overlap_ticks(gmin, anchor)
    u = below / total
    edges = np.unique(np.quantile(total, np.linspace(0, 1, classes + 1)[1:-1]))
    cls = np.searchsorted(edges, total, side="right")
    cell = np.minimum((u * cells).astype(np.int64), cells - 1)
    table = np.zeros((len(edges) + 1, cells), dtype=np.int64)
    np.add.at(table, (cls, cell), 1)
    table = table[table.sum(axis=1) > 0]
    expected = table.sum(axis=1, keepdims=True) / cells
    chi2 = float(((table - expected) ** 2 / expected).sum())
    dof = table.shape[0] * (cells - 1)
    p = float(stats.chi2.sf(chi2, dof))
    return _report(name, "given the current bracket the anchor is uniform on S restricted to it",
                   ["chi-square p-value"], [p], [0.0], Rule("greater", alpha), n, seed, start,
                   {"chi2": chi2, "dof": dof, "bins": int(table.size), "n_steps": n_steps,
                    "table": table.tolist()})


def test_termination_tail(eps: float = 0.3, n: int = 10**5, seed: int = 0, *, anchor: float = 1.0,
                          max_n: int = 50, confidence: float = 0.99) -> VerificationReport:
    """``P(tau > k) <= (1 - eps/2pi)**(k-1)`` for an arc of half-width ``eps``.

    For each ``k <= max_n`` the one-sided Clopper-Pearson lower confidence
    bound of the empirical tail must not exceed the geometric bound.
    """
    name = "termination_tail"
    start = time.perf_counter()
    S = ArcSet([Icirc(anchor - eps, anchor + eps)])
    rng = _stream(seed, name).generator
    a = as_angle(anchor).ticks
    res = shrink_batch(np.full(n, a, dtype=np.int64), S, rng, cap=max_n + 1)
    tau = np.where(res.accepted, res.iterations, np.iinfo(np.int64).max)
    ks = np.arange(1, max_n + 1)
    exceed = (tau[None, :] > ks[:, None]).sum(axis=1)
    lower = np.where(exceed > 0, stats.beta.ppf(1 - confidence, exceed, n - exceed + 1), 0.0)
    bound = (1 - eps / TWO_PI) ** (ks - 1)
    return _report(name, "the stopping time of the shrinkage loop has a geometric tail",
                   [f"k={k}" for k in ks], lower - bound, np.zeros(max_n), Rule("at_most", 0.0),
                   n, seed, start,
                   {"empirical_tail": (exceed / n).tolist(), "bound": bound.tolist(),
                    "mean_tau": float(res.iterations.mean())})


# ---------------------------------------------------------------------------
# Gaussian rotation


def _rotation_functionals(x, y, m):
    """Named functionals of pairs ``(x, y)`` restricted to ``m`` coordinates."""
    out = {}
    v = np.concatenate([x[:, :m], y[:, :m]], axis=1)
    names = [f"x{k}" for k in range(m)] + [f"y{k}" for k in range(m)]
    for a in range(2 * m):
        out[f"E[{names[a]}]"] = v[:, a]
    for a in range(2 * m):
        for b in range(a, 2 * m):
            out[f"E[{names[a]}*{names[b]}]"] = v[:, a] * v[:, b]
    x0, y0 = x[:, 0], y[:, 0]
    out.update({
        "x0": x0, "y0": y0, "x0^2": x0 ** 2, "x0*y0": x0 * y0,
        "x0^4": x0 ** 4, "x0^2*y0^2": x0 ** 2 * y0 ** 2,
    })
    return out


def test_rotation_invariance(cov: CovarianceSpec, theta, n: int = 10**5, seed: int = 0, *,
                             fault: Optional[str] = None, z: float = 4.0,
                             coords: int = 2) -> VerificationReport:
    """Independent ``X, Y ~ N(0, C)`` versus the rotated pair.

    Two independent samples are drawn; the second is rotated by
    :func:`rotate_pair` and every functional is compared with a two-sample
    z statistic.  ``fault="uniform_cube"`` draws both components uniformly
    on the unit cube instead, which rotation does not preserve.
    """
    name = "rotation_invariance"
    start = time.perf_counter()
    if fault not in (None, "uniform_cube"):
        raise ConfigError(f"unknown fault {fault!r} for {name}", field="fault")
    rng = _stream(seed, name).generator
    d = cov.dim

    def draw():
        if fault == "uniform_cube":
            return rng.random((n, d)), rng.random((n, d))
        return cov.sample(rng, n), cov.sample(rng, n)

    x1, y1 = draw()
    x2, y2 = rotate_pair(*draw(), theta)
    m = min(d, coords)
    f1, f2 = _rotation_functionals(x1, y1, m), _rotation_functionals(x2, y2, m)
    labels, est, ses = [], [], []
    for label in f1:
        a, sa = _mean_se(f1[label])
        b, sb = _mean_se(f2[label])
        labels.append(label)
        est.append(a - b)
        ses.append(math.hypot(sa, sb))
    return _report(name, "rotating a pair of i.i.d. centered Gaussians leaves its law unchanged",
                   labels, est, ses, Rule("abs_z", z), n, seed, start,
                   {"theta": as_angle(theta).value, "fault": fault, "dim": d})


# ---------------------------------------------------------------------------
# ESS kernel


def _ess_batch(model, X, rng, cap, fault=None):
    Y = np.empty_like(X)
    caps = 0
    for s in range(0, X.shape[0], CHUNK):
        out = ess_step_batch(model, X[s:s + CHUNK], rng, cap, fault=fault)
        Y[s:s + CHUNK] = out.x_out
        caps += int(out.cap_hit.sum())
    return Y, caps


def _stationary_draws(model, n, rng, cap, warm_start_steps):
    """Exact posterior draws if available, else a warm-started batch of chains."""
    if model.has_exact_posterior:
        return model.posterior_sampler()(rng, n), True
    X = model.prior.sample(rng, n)
    for _ in range(warm_start_steps):
        X, _ = _ess_batch(model, X, rng, cap)
    return X, False


def _reversibility_family(d):
    if d == 1:
        return {"x": lambda X: X[:, 0], "x^2": lambda X: X[:, 0] ** 2,
                "x^3": lambda X: X[:, 0] ** 3, "x^4": lambda X: X[:, 0] ** 4}
    return {"x0": lambda X: X[:, 0], "x0^2": lambda X: X[:, 0] ** 2,
            "x1": lambda X: X[:, 1], "x0*x1": lambda X: X[:, 0] * X[:, 1]}


def _psd_family(d):
    j = min(1, d - 1)
    return {"x0": lambda X: X[:, 0], "x0^2": lambda X: X[:, 0] ** 2, "x0^3": lambda X: X[:, 0] ** 3,
            "sin(x0)": lambda X: np.sin(X[:, 0]), f"cos(x{j})": lambda X: np.cos(X[:, j]),
            f"|x{j}|": lambda X: np.abs(X[:, j])}


def test_h_reversibility(model: TargetModel, n: int = 10**6, seed: int = 0, cap: int = DEFAULT_CAP, *,
                         z: float = 4.0, warm_start_steps: int = 200) -> VerificationReport:
    """``E[phi(X) psi(Y)] = E[psi(X) phi(Y)]`` for ``X ~ mu``, ``Y`` one ESS step.

    Four functions give six pairs; each pair is tested through the paired
    differences.  Without an exact posterior sampler ``X`` comes from
    warm-started chains and the report is inconclusive by design.
    """
    name = "h_reversibility"
    start = time.perf_counter()
    rng = _stream(seed, name).generator
    X, exact = _stationary_draws(model, n, rng, cap, warm_start_steps)
    Y, caps = _ess_batch(model, X, rng, cap)
    fam = _reversibility_family(model.dim)
    keys = list(fam)
    vx = {k: fam[k](X) for k in keys}
    vy = {k: fam[k](Y) for k in keys}
    labels, est, ses = [], [], []
    for i, a in enumerate(keys):
        for b in keys[i + 1:]:
            m, se = _mean_se(vx[a] * vy[b] - vx[b] * vy[a])
            labels.append(f"({a}, {b})")
            est.append(m)
            ses.append(se)
    rule = Rule("abs_z", z) if exact else Rule("inconclusive")
    details = {"dim": model.dim, "model": model.name, "cap_hits": caps, "exact_start": exact}
    if not exact:
        details["warm_start_steps"] = warm_start_steps
        details["within_band"] = Rule("abs_z", z).holds(est, ses).tolist()
    return _report(name, "the ESS transition kernel is reversible with respect to the posterior",
                   labels, est, ses, rule, n, seed, start, details)


def test_h_psd(model: TargetModel, n: int = 10**5, seed: int = 0, cap: int = DEFAULT_CAP, *,
               z: float = 3.0, warm_start_steps: int = 200) -> VerificationReport:
    """``E[f(X) f(Y)] >= 0`` for six centered functions, ``X ~ mu``, ``Y`` one ESS step.

    Each function is centered by its pooled sample mean over ``X`` and
    ``Y``; the resulting bias is of order ``1/n``, far below the band.
    """
    name = "h_psd"
    start = time.perf_counter()
    rng = _stream(seed, name).generator
    X, exact = _stationary_draws(model, n, rng, cap, warm_start_steps)
    Y, caps = _ess_batch(model, X, rng, cap)
    labels, est, ses = [], [], []
    for label, f in _psd_family(model.dim).items():
        fx, fy = f(X), f(Y)
        c = 0.5 * (fx.mean() + fy.mean())
        m, se = _mean_se((fx - c) * (fy - c))
        labels.append(label)
        est.append(m)
        ses.append(se)
    rule = Rule("lower_z", z) if exact else Rule("inconclusive")
    return _report(name, "the ESS transition kernel is a positive semi-definite operator",
                   labels, est, ses, rule, n, seed, start,
                   {"dim": model.dim, "model": model.name, "cap_hits": caps, "exact_start": exact})


def test_nontermination_probability(d: int = 2, eps: float = 0.1, n: int = 10**5, seed: int = 0,
                                    cap: int = DEFAULT_CAP, *, tol: float = 0.006) -> VerificationReport:
    """Cap-hit frequency of ESS on the indicator-cube likelihood at ``x = 0``.

    The loop cannot stop exactly when the threshold exceeds ``eps`` and the
    auxiliary draw ``w`` has coordinates of both signs; that event has
    probability ``(2**d - 2) / (2**d (1 + eps))``.  The event is also
    evaluated directly from the same variates, and every row must agree
    with the observed cap hit.
    """
    name = "nontermination_probability"
    start = time.perf_counter()
    if d < 2:
        raise ConfigError("d must be at least 2", field="d")
    model = TargetModel(IndicatorCube(eps), SpectralCovariance(np.ones(d)), name="indicator_cube")
    stream = _stream(seed, name)
    target = (2 ** d - 2) / (2 ** d * (1 + eps))
    cap_hits = events = mismatches = 0
    for i, s in enumerate(range(0, n, CHUNK)):
        m = min(CHUNK, n - s)
        X = np.zeros((m, d))
        g = stream.at_step(i)
        log_t = model.log_likelihood(X) + np.log(g.random(m))
        w = model.prior.sample(g, m)
        event = ~(math.log(eps) > log_t) & np.any(w > 0, axis=1) & np.any(w < 0, axis=1)
        out = ess_step_batch(model, X, stream.at_step(i), cap)
        cap_hits += int(out.cap_hit.sum())
        events += int(event.sum())
        mismatches += int((event != out.cap_hit).sum())
    labels = ["cap-hit frequency - target", "event frequency - target", "row mismatches"]
    est = [cap_hits / n - target, events / n - target, mismatches]
    se = math.sqrt(target * (1 - target) / n)
    return _report(name, "with a discontinuous likelihood the shrinkage loop fails to stop with "
                   "probability (2^d - 2) / (2^d (1 + eps))",
                   labels, est, [se, se, 0.0], Rule("abs_le", [tol, tol, 0.0]), n, seed, start,
                   {"d": d, "eps": eps, "target": target, "cap_hit_frequency": cap_hits / n,
                    "event_frequency": events / n, "cap": cap})


def test_alg_equivalence(model: TargetModel, n_steps: int = 10**4, seed: int = 0, cap: int = DEFAULT_CAP, *,
                         tol: float = 1e-12, fault: Optional[str] = None, x0=None) -> VerificationReport:
    """Signed-bracket and shrinkage forms of ESS give the same transitions.

    Both are run from the same state with the same step generator; the
    chain follows the shrinkage form.  ``fault`` is injected into the
    shrinkage form only.
    """
    name = "alg_equivalence"
    start = time.perf_counter()
    stream = _stream(seed, name)
    x = np.zeros(model.dim) if x0 is None else model.check_state(x0)
    ll = float(model.log_likelihood(x))
    worst = 0.0
    worst_angle = 0.0
    caps = flag_mismatch = iters = 0
    for i in range(n_steps):
        a = ess_step(model, x, stream.at_step(i), cap, log_lik_in=ll, fault=fault)
        b = ess_step_murray(model, x, stream.at_step(i), cap, log_lik_in=ll)
        worst = max(worst, float(np.max(np.abs(a.x_out - b.x_out))))
        if a.angle is not None and b.angle is not None:
            da = abs(a.angle - b.angle)
            worst_angle = max(worst_angle, min(da, TWO_PI - da))
        caps += a.cap_hit + b.cap_hit
        flag_mismatch += a.cap_hit != b.cap_hit
        iters += a.shrink_iterations
        x, ll = a.x_out, a.log_lik_out
    return _report(name, "the two formulations of ESS produce identical transitions from shared variates",
                   ["max |x_out difference|", "cap-hit disagreements"], [worst, flag_mismatch], [0.0, 0.0],
                   Rule("abs_lt", [tol, 0.5]), n_steps, seed, start,
                   {"model": model.name, "max_angle_difference": worst_angle, "cap_hits": caps,
                    "mean_shrink_iterations": iters / n_steps, "fault": fault})


# ---------------------------------------------------------------------------
# models and suite


def conjugate_model(d: int = 1) -> TargetModel:
    """Gaussian likelihood with Gaussian prior.

    ``d = 1``: prior N(0, 1), one observation 1 with unit noise, posterior
    N(0.5, 0.5).  Otherwise: power-law spectral prior ``i**-2`` and noisy
    observations of the first three coordinates (fewer if ``d < 3``).
    """
    if d == 1:
        return TargetModel(GaussianLikelihood([1.0], 1.0), SpectralCovariance([1.0]), name="conjugate_1d")
    return TargetModel(GaussianLikelihood([0.8, -0.5, 0.3][:d], 0.5, dim=d), power_law(d, 2.0),
                       name=f"conjugate_{d}d")


def gaussian_2d_model() -> TargetModel:
    return TargetModel(GaussianLikelihood([1.0, -0.5], 0.5), SpectralCovariance([1.0, 1.0]),
                       name="gaussian_2d")


def mixture_model() -> TargetModel:
    """Two narrow, well separated bumps: slices are small, so runs shrink several times."""
    return TargetModel(Mixture([0.5, 0.5], [[1.5, 0.0], [-1.5, 0.5]], [0.25, 0.25]),
                       SpectralCovariance([1.0, 1.0]), name="mixture_2d")


TWO_ARCS = ((0.0, math.pi / 2), (math.pi, 1.5 * math.pi))
ASYMMETRIC = ((0.3, 1.4), (2.0, 4.5))


@dataclass(frozen=True)
class SuiteEntry:
    func: Callable
    params: dict
    fault: Optional[str] = None  # fault mode used under fault injection
    fault_params: dict = field(default_factory=dict)  # smaller runs suffice for a control


SUITE = {
    "q_detailed_balance": SuiteEntry(test_q_detailed_balance, dict(
        S=TWO_ARCS, F=((0.0, math.pi / 4),), G=((math.pi, 1.25 * math.pi),), n=10**6), "linear_split"),
    "q_psd": SuiteEntry(test_q_psd, dict(S=TWO_ARCS, n=10**6)),
    "q_pushforward": SuiteEntry(test_q_pushforward, dict(
        S=ASYMMETRIC, theta=1.7, alpha=1.0, B=((2.5, 3.5),), n=10**6)),
    "rotation_invariance": SuiteEntry(test_rotation_invariance, dict(
        cov=SpectralCovariance([1.0, 1.0]), theta=math.pi / 3, n=10**5), "uniform_cube"),
    "h_reversibility_1d": SuiteEntry(test_h_reversibility, dict(model=conjugate_model(1), n=10**6)),
    "h_reversibility_16d": SuiteEntry(test_h_reversibility, dict(model=conjugate_model(16), n=10**6)),
    "h_reversibility_mixture": SuiteEntry(test_h_reversibility, dict(
        model=mixture_model(), n=5 * 10**4, warm_start_steps=50)),
    "h_psd_1d": SuiteEntry(test_h_psd, dict(model=conjugate_model(1), n=10**5)),
    "h_psd_16d": SuiteEntry(test_h_psd, dict(model=conjugate_model(16), n=10**5)),
    "nontermination_d2": SuiteEntry(test_nontermination_probability, dict(d=2, eps=0.1, n=10**5)),
    "nontermination_d3": SuiteEntry(test_nontermination_probability, dict(d=3, eps=0.1, n=10**5)),
    "alg_equivalence_gaussian": SuiteEntry(test_alg_equivalence, dict(
        model=gaussian_2d_model(), n_steps=10**4), "linear_split", dict(n_steps=500)),
    "alg_equivalence_mixture": SuiteEntry(test_alg_equivalence, dict(
        model=mixture_model(), n_steps=10**4), "linear_split", dict(n_steps=500)),
    "anchor_conditional": SuiteEntry(test_anchor_conditional, dict(S=TWO_ARCS, n_steps=5, n=10**6)),
    "termination_tail": SuiteEntry(test_termination_tail, dict(eps=0.3, n=10**5)),
}
DEFAULT_SUITE = tuple(SUITE)


def run_test(name: str, seed: int = 0, *, fault_injection: bool = False, cap: Optional[int] = None,
             **overrides) -> VerificationReport:
    """Run one suite entry, with optional parameter overrides.

    Under ``fault_injection`` entries with a negative-control mode run with
    that fault; the others run unchanged.
    """
    try:
        entry = SUITE[name]
    except KeyError:
        raise ConfigError(f"unknown test {name!r}; choose from {sorted(SUITE)}", field="verify.tests") from None
    params = dict(entry.params)
    if fault_injection and entry.fault is not None:
        params.update(entry.fault_params)
    accepted = inspect.signature(entry.func).parameters
    for key, value in overrides.items():
        if key not in accepted or key in ("seed", "fault"):
            raise ConfigError(f"test {name!r} has no parameter {key!r}", field=f"verify.params.{name}.{key}")
        params[key] = value
    if cap is not None and "cap" in accepted:
        params["cap"] = cap
    if fault_injection and entry.fault is not None:
        params["fault"] = entry.fault
    report = entry.func(seed=seed, **params)
    report.test_name = name
    if fault_injection and entry.fault is not None:
        report.details["fault"] = entry.fault
    return report


def run_suite(names: Sequence[str] = DEFAULT_SUITE, seed: int = 0, *, fault_injection: bool = False,
              cap: Optional[int] = None, params: Optional[dict] = None, threads: int = 1) -> list:
    """Run several suite entries; reports come back in the order of ``names``."""
    names = list(names)
    if not names:
        raise ConfigError("the test list is empty", field="verify.tests")
    params = params or {}
    for name in names:
        if name not in SUITE:
            raise ConfigError(f"unknown test {name!r}; choose from {sorted(SUITE)}", field="verify.tests")

    def job(name):
        return run_test(name, seed, fault_injection=fault_injection, cap=cap, **params.get(name, {}))

    if threads <= 1:
        return [job(name) for name in names]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, names))


def summarize(reports) -> dict:
    """Aggregate document: overall pass unless some report failed."""
    counts = {k: sum(r.decision == k for r in reports) for k in DECISIONS}
    return {
        "overall": "fail" if counts["fail"] else "pass",
        "counts": counts,
        "tests": {r.test_name: r.decision for r in reports},
    }
