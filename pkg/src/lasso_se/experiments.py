"""Monte-Carlo harness comparing finite-size Lasso fits with state evolution.

One run draws, for every replicate, a Gaussian design, a signal from the
configured prior and Gaussian noise; fits the whole lambda path; evaluates
the data-driven estimators, the selection rules and three Wasserstein
diagnostics; and lines all of that up against the predictions.

Random numbers come from counter-based Philox streams keyed by
``(seed, replicate, purpose)``, so a replicate's draws do not depend on
which worker ran it or in what order.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.special import gammaln

from . import estimators, lasso, selection
from . import state_evolution as se
from .errors import ConfigError, DegenerateError, DomainError, InfeasibleError, LassoSEError
from .mmse import MmsePrior, mmse_limit
from .scalar_gaussian import soft_threshold

CSV_COLUMNS = (
    "replicate", "lambda", "risk_emp", "risk_pred", "resid_emp", "resid_pred",
    "pred_err_emp", "pred_err_pred", "support_frac", "s_star", "tau_hat", "tau_star",
    "sigma_hat_sq", "sure", "cv_risk", "subgrad_norm", "kappa_star", "w2_lasso",
    "w2_debiased", "w2_subgrad", "sel_est", "sel_sure", "sel_cv", "lambda_theory",
    "lambda_minimax", "mmse_limit",
)

_TAGS = {"design": 1, "signal": 2, "noise": 3, "folds": 4, "w2": 5, "ladder": 6}

EXACT_W2_CAP = 1024


def stream(seed, replicate, purpose):
    """Independent generator for one ``(seed, replicate, purpose)`` triple."""
    ss = np.random.SeedSequence([int(seed), int(replicate), _TAGS[purpose]])
    return np.random.Generator(np.random.Philox(ss))


def worker_count(default=None):
    """Threads to use: ``LASSO_SE_THREADS`` if set (0 means one per CPU)."""
    raw = os.environ.get("LASSO_SE_THREADS", "" if default is None else str(default)).strip()
    if raw == "":
        return 1
    try:
        k = int(raw)
    except ValueError:
        raise ConfigError(f"LASSO_SE_THREADS must be an integer, got {raw!r}") from None
    if k < 0:
        raise ConfigError(f"LASSO_SE_THREADS must be >= 0, got {k}")
    return k if k > 0 else (os.cpu_count() or 1)


# --------------------------------------------------------------------- priors

@dataclass(frozen=True)
class PriorSpec:
    """Signal prior.

    ``sparse-gaussian``: exactly ``round(s N)`` standard Gaussian entries at
    random positions.  ``lp``: Gaussian entries rescaled so that
    ``mean |theta|^p = xi^p``.  ``ladder``: the deterministic vector
    ``(N, 2N, ..., kN, 0, ..., 0)``.
    """

    kind: str = "sparse-gaussian"
    s: float = 0.1
    p: float = 1.0
    xi: float = 0.1
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("sparse-gaussian", "lp", "ladder"):
            raise ConfigError(f"unknown prior kind {self.kind!r}")
        if self.kind == "sparse-gaussian" and not 0.0 <= self.s <= 1.0:
            raise ConfigError(f"sparsity s must lie in [0, 1], got {self.s}")
        if self.kind == "lp" and (self.p <= 0 or self.xi <= 0):
            raise ConfigError(f"lp prior needs p > 0 and xi > 0, got p={self.p}, xi={self.xi}")
        if self.kind == "ladder" and self.k < 0:
            raise ConfigError(f"ladder length must be >= 0, got {self.k}")

    @classmethod
    def parse(cls, text):
        kind, _, rest = text.strip().partition(":")
        kw = {}
        for part in filter(None, (p.strip() for p in rest.split(","))):
            key, eq, val = part.partition("=")
            key = key.strip()
            if not eq or key not in ("s", "p", "xi", "k"):
                raise ConfigError(f"bad prior parameter {part!r} in {text!r}")
            try:
                kw[key] = int(val) if key == "k" else float(val)
            except ValueError:
                raise ConfigError(f"bad number {val!r} in prior {text!r}") from None
        return cls(kind=kind.strip(), **kw)

    def __str__(self):
        if self.kind == "sparse-gaussian":
            return f"sparse-gaussian:s={self.s!r}"
        if self.kind == "lp":
            return f"lp:p={self.p!r},xi={self.xi!r}"
        return f"ladder:k={self.k}"


def _abs_gauss_moment(p):
    # E|G|^p for a standard Gaussian
    return math.exp(0.5 * p * math.log(2.0) + gammaln(0.5 * (p + 1.0)) - 0.5 * math.log(math.pi))


def gen_signal(prior, N, seed):
    if isinstance(prior, str):
        prior = PriorSpec.parse(prior)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    theta = np.zeros(N)
    if prior.kind == "sparse-gaussian":
        k = int(round(prior.s * N))
        pos = rng.choice(N, size=k, replace=False)
        theta[np.sort(pos)] = rng.standard_normal(k)
    elif prior.kind == "lp":
        g = rng.standard_normal(N)
        theta = g * (prior.xi / np.mean(np.abs(g) ** prior.p) ** (1.0 / prior.p))
    else:
        if prior.k > N:
            raise ConfigError(f"ladder length k={prior.k} exceeds N={N}")
        theta[:prior.k] = N * np.arange(1, prior.k + 1, dtype=float)
    return theta


def population_law(prior, N, n_atoms=2001):
    """Signal law the predictions are computed from (shared by all replicates)."""
    if prior.kind == "sparse-gaussian":
        return se.AtomDistribution.sparse_gaussian(round(prior.s * N) / N, n_atoms)
    if prior.kind == "lp":
        scale = prior.xi / _abs_gauss_moment(prior.p) ** (1.0 / prior.p)
        return se.AtomDistribution.sparse_gaussian(1.0, n_atoms, scale=scale)
    return se.AtomDistribution.from_vector(gen_signal(prior, N, 0))


# -------------------------------------------------------------------- designs

def gen_design_iid(n, N, seed):
    """``n x N`` matrix with i.i.d. ``N(0, 1/n)`` entries."""
    if n < 1 or N < 1:
        raise DomainError("design dimensions must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return np.asfortranarray(rng.standard_normal((N, n)).T) / np.sqrt(n)


def gen_design_ar(n, N, phi, seed):
    """Columns from the recursion ``x_{j+1} = (phi x_j + u_j) / sqrt(1 + phi^2)``.

    Each column is marginally ``N(0, I/n)`` and neighbours have correlation
    ``phi / sqrt(1 + phi^2)``.
    """
    if n < 1 or N < 1:
        raise DomainError("design dimensions must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    U = rng.standard_normal((N, n)) / np.sqrt(n)
    X = np.empty((n, N), order="F")
    X[:, 0] = U[0]
    c = 1.0 / np.sqrt(1.0 + phi * phi)
    for j in range(1, N):
        X[:, j] = (phi * X[:, j - 1] + U[j]) * c
    return X


# ------------------------------------------------------------------ transport

def w2_distance(a, b, method="exact", directions=64, rng=0, cap=EXACT_W2_CAP):
    """Wasserstein-2 distance between two equal-size uniform point clouds.

    One-dimensional clouds are matched by sorting, which is exact.  In two
    dimensions ``exact`` solves the assignment problem (at most ``cap``
    points) and ``sliced`` averages the sorted one-dimensional costs over
    random directions; the sliced value never exceeds the exact one.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape != b.shape:
        raise DomainError(f"cloud shapes differ: {a.shape} vs {b.shape}")
    m, d = a.shape
    if d not in (1, 2):
        raise DomainError(f"clouds must live in R^1 or R^2, got dimension {d}")
    if d == 1:
        return float(np.sqrt(np.mean((np.sort(a[:, 0]) - np.sort(b[:, 0])) ** 2)))
    if method == "exact":
        if m > cap:
            raise DomainError(f"exact W2 is limited to {cap} points, got {m}")
        cost = cdist(a, b, "sqeuclidean")
        rows, cols = linear_sum_assignment(cost)
        return float(np.sqrt(cost[rows, cols].mean()))
    if method == "sliced":
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        ang = rng.uniform(0.0, np.pi, directions)
        dirs = np.column_stack((np.cos(ang), np.sin(ang)))
        pa = np.sort(a @ dirs.T, axis=0)
        pb = np.sort(b @ dirs.T, axis=0)
        return float(np.sqrt(np.mean((pa - pb) ** 2)))
    raise DomainError(f"unknown W2 method {method!r}")


# ---------------------------------------------------------------- experiments

@dataclass(frozen=True)
class ExperimentConfig:
    N: int = 2000
    delta: float = 0.8
    sigma: float = 0.2
    prior: PriorSpec = field(default_factory=PriorSpec)
    design: str = "iid"
    phi: float = 2.0
    lambda_count: int = 40
    lambda_min: float | None = None
    lambda_max: float | None = None
    lambda_values: tuple | None = None
    folds: int = 4
    replicates: int = 8
    seed: int = 0
    sure_sigma_source: str = "true"
    minimax_s0: float | None = None
    se_atoms: int = 2001
    w2_points: int = EXACT_W2_CAP
    w2_directions: int = 64

    def __post_init__(self):
        if isinstance(self.prior, str):
            object.__setattr__(self, "prior", PriorSpec.parse(self.prior))
        if self.lambda_values is not None:
            object.__setattr__(self, "lambda_values", tuple(float(v) for v in self.lambda_values))
        checks = [
            (self.N >= 10, f"N must be >= 10, got {self.N}"),
            (self.delta > 0, f"delta must be > 0, got {self.delta}"),
            (self.sigma > 0, f"sigma must be > 0, got {self.sigma}"),
            (self.design in ("iid", "ar"), f"design must be 'iid' or 'ar', got {self.design!r}"),
            (self.lambda_count >= 1, f"lambda_count must be >= 1, got {self.lambda_count}"),
            (self.folds == 0 or self.folds >= 2, f"folds must be 0 (off) or >= 2, got {self.folds}"),
            (self.replicates >= 1, f"replicates must be >= 1, got {self.replicates}"),
            (self.seed >= 0, f"seed must be >= 0, got {self.seed}"),
            (self.sure_sigma_source in estimators.SIGMA_SOURCES,
             f"sure_sigma_source must be one of {estimators.SIGMA_SOURCES}"),
            (self.se_atoms >= 1, f"se_atoms must be >= 1, got {self.se_atoms}"),
            (2 <= self.w2_points <= EXACT_W2_CAP, f"w2_points must lie in [2, {EXACT_W2_CAP}]"),
            (self.w2_directions >= 1, "w2_directions must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        if self.n < 1:
            raise ConfigError(f"n = round(delta * N) must be >= 1 (delta={self.delta}, N={self.N})")
        if self.folds > self.n:
            raise ConfigError(f"folds={self.folds} exceeds n={self.n}")
        for name in ("lambda_min", "lambda_max", "minimax_s0"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be > 0, got {v}")
        if self.lambda_values is not None:
            if not self.lambda_values or any(v <= 0 for v in self.lambda_values):
                raise ConfigError("lambda_values must be non-empty and positive")
            if len(set(self.lambda_values)) != len(self.lambda_values):
                raise ConfigError("lambda_values must be distinct")
        if self.prior.kind == "ladder" and self.prior.k > self.N:
            raise ConfigError(f"ladder length k={self.prior.k} exceeds N={self.N}")

    @property
    def n(self):
        return int(round(self.delta * self.N))

    @property
    def effective_delta(self):
        return self.n / self.N

    def lambda_grid(self):
        """Ascending grid: explicit values, or geometric between the bounds."""
        if self.lambda_values is not None:
            return np.array(sorted(self.lambda_values))
        lo = 0.1 * self.sigma if self.lambda_min is None else self.lambda_min
        hi = 2.0 * selection.theory_lambda(self.sigma, self.N) if self.lambda_max is None else self.lambda_max
        if self.lambda_count == 1:
            return np.array([lo])
        if not hi > lo:
            raise ConfigError(f"lambda_max ({hi}) must exceed lambda_min ({lo})")
        return np.geomspace(lo, hi, self.lambda_count)

    def nominal_s0(self):
        if self.minimax_s0 is not None:
            return self.minimax_s0
        if self.prior.kind == "sparse-gaussian" and self.prior.s > 0:
            return self.prior.s
        return None


@dataclass
class RunRecord:
    """Empirical and predicted quantities for one replicate at one lambda."""

    replicate: int
    lam: float
    risk_emp: float
    risk_pred: float
    resid_emp: float
    resid_pred: float
    pred_err_emp: float
    pred_err_pred: float
    support_frac: float
    s_star: float
    tau_hat: float
    tau_star: float
    sigma_hat_sq: float
    r_hat: float
    sure: float
    cv_risk: float
    subgrad_norm: float
    kappa_star: float
    w2_lasso: float
    w2_debiased: float
    w2_subgrad: float
    sel_est: float
    sel_sure: float
    sel_cv: float
    lambda_theory: float
    lambda_minimax: float
    mmse_limit: float
    extras: dict = field(default_factory=dict)

    def row(self):
        """Values in ``CSV_COLUMNS`` order."""
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "extras"}
        d["lambda"] = d.pop("lam")
        return [d[c] for c in CSV_COLUMNS]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    grid: np.ndarray
    fixed_points: list
    records: list
    failures: list
    summary: dict
    replicate_info: dict = field(default_factory=dict)


def replicate_problem(config, replicate):
    """Regenerate the design, signal and noise of one replicate."""
    n, N = config.n, config.N
    g = stream(config.seed, replicate, "design")
    if config.design == "iid":
        X = gen_design_iid(n, N, g)
    else:
        X = gen_design_ar(n, N, config.phi, g)
    theta = gen_signal(config.prior, N, stream(config.seed, replicate, "signal"))
    z = stream(config.seed, replicate, "noise").standard_normal(n)
    return lasso.DesignProblem(X, X @ theta + config.sigma * z), theta


def _safe(fn, *args):
    try:
        return fn(*args)
    except DegenerateError:
        return float("nan")


def _w2_pair(emp, ref, idx, config, rng):
    exact = w2_distance(emp[idx], ref[idx], "exact") ** 2
    sliced = w2_distance(emp, ref, "sliced", directions=config.w2_directions, rng=rng) ** 2
    return exact, sliced


def _run_replicate(config, rep, grid, fps, constants):
    problem, theta = replicate_problem(config, rep)
    n, N = problem.n, problem.N
    fits = lasso.path(problem, grid)
    sigma = config.sigma if config.sure_sigma_source == "true" else None

    cv = np.full(grid.size, np.nan)
    if config.folds:
        cv = estimators.cv_risk(problem, grid, config.folds, stream(config.seed, rep, "folds"))

    tau_curve = np.array([_safe(estimators.tau_hat, f, problem) for f in fits])
    s2_curve = np.array([_safe(estimators.sigma_hat_sq, f, problem) for f in fits])
    if sigma is None:
        sure_curve = np.array([estimators.sure(f, problem, max(s2, 0.0)) if np.isfinite(s2) else np.nan
                               for f, s2 in zip(fits, s2_curve)])
    else:
        sure_curve = np.array([estimators.sure(f, problem, sigma * sigma) for f in fits])
    sel = {
        "est": selection.select("EST", problem, grid, fits=fits, curve=tau_curve, theta_star=theta),
        "sure": selection.select("SURE", problem, grid, fits=fits, curve=sure_curve, theta_star=theta),
    }
    if config.folds:
        sel["cv"] = selection.select("CV", problem, grid, fits=fits, curve=cv, theta_star=theta)
    theory_fit = lasso.fit(problem, constants["lambda_theory"])
    info = {
        "risk_theory": float(np.sum((theory_fit.theta_hat - theta) ** 2) / N),
        "risk_at": {k: v.achieved_risk for k, v in sel.items()},
        "pred_err_at": {},
    }

    w2_rng = stream(config.seed, rep, "w2")
    z_ref = w2_rng.standard_normal(N)
    idx = np.sort(w2_rng.choice(N, size=config.w2_points, replace=False)) if N > config.w2_points else np.arange(N)

    records = []
    for j, (f, fp) in enumerate(zip(fits, fps)):
        err = f.theta_hat - theta
        fitted_gap = problem.X @ err
        r = f.residual
        v = f.subgradient
        emp = np.column_stack((f.theta_hat, theta))
        w2_l, w2_ls = _w2_pair(emp, se.mu_star_cloud(theta, z_ref, fp), idx, config, w2_rng)
        if f.debiased is not None:
            w2_d, w2_ds = _w2_pair(np.column_stack((f.debiased, theta)),
                                   se.mu_debiased_cloud(theta, z_ref, fp), idx, config, w2_rng)
        else:
            w2_d = w2_ds = float("nan")
        w2_v, w2_vs = _w2_pair(np.column_stack((v, theta)), se.nu_star_cloud(theta, z_ref, fp),
                               idx, config, w2_rng)
        records.append(RunRecord(
            replicate=rep,
            lam=float(grid[j]),
            risk_emp=float(np.dot(err, err) / N),
            risk_pred=fp.r_star,
            resid_emp=float(np.dot(r, r) / n),
            resid_pred=fp.beta_star ** 2,
            pred_err_emp=float(np.dot(fitted_gap, fitted_gap) / n),
            pred_err_pred=fp.p_star,
            support_frac=f.support_size / N,
            s_star=fp.s_star,
            tau_hat=float(tau_curve[j]),
            tau_star=fp.tau_star,
            sigma_hat_sq=float(s2_curve[j]),
            r_hat=_safe(estimators.r_hat, f, problem),
            sure=float(sure_curve[j]),
            cv_risk=float(cv[j]),
            subgrad_norm=float(np.dot(v, v) / N),
            kappa_star=fp.kappa_star,
            w2_lasso=w2_l,
            w2_debiased=w2_d,
            w2_subgrad=w2_v,
            sel_est=sel["est"].lambda_selected,
            sel_sure=sel["sure"].lambda_selected,
            sel_cv=sel["cv"].lambda_selected if "cv" in sel else float("nan"),
            lambda_theory=constants["lambda_theory"],
            lambda_minimax=constants["lambda_minimax"],
            mmse_limit=constants["mmse_limit"],
            extras={"w2_lasso_sliced": w2_ls, "w2_debiased_sliced": w2_ds, "w2_subgrad_sliced": w2_vs,
                    "sweeps": f.sweeps, "kkt_residual": f.kkt_residual},
        ))
    for key, s in sel.items():
        info["pred_err_at"][key] = records[s.index].pred_err_emp
    return records, info


def run_constants(config):
    """Replicate-independent reference values: theory, minimax and Bayes lambdas/limits."""
    lam_theory = selection.theory_lambda(config.sigma, config.N)
    lam_mm = float("nan")
    s0 = config.nominal_s0()
    if s0 is not None:
        try:
            lam_mm = selection.minimax_lambda(s0, config.effective_delta, config.sigma)
        except InfeasibleError:
            pass
    mm = float("nan")
    if config.prior.kind == "sparse-gaussian":
        mm = mmse_limit(config.effective_delta, config.sigma, MmsePrior(config.prior.s))
    return {"lambda_theory": lam_theory, "lambda_minimax": lam_mm, "mmse_limit": mm}


def summarize(records, grid):
    """Per-lambda means and standard errors of every numeric CSV column."""
    cols = [c for c in CSV_COLUMNS if c not in ("replicate", "lambda")]
    out = {}
    for j, lam in enumerate(grid):
        rows = np.array([r.row()[2:] for r in records if r.lam == lam], dtype=float)
        if rows.size == 0:
            continue
        count = np.sum(np.isfinite(rows), axis=0)
        # columns that are NaN for every replicate (e.g. CV switched off) stay NaN
        mean = np.where(count > 0, np.nansum(rows, axis=0) / np.maximum(count, 1), np.nan)
        sd = np.array([np.nanstd(rows[:, i], ddof=1) if count[i] > 1 else np.nan for i in range(len(cols))])
        se_ = sd / np.sqrt(np.maximum(count, 1))
        out[float(lam)] = {c: (float(m), float(s)) for c, m, s in zip(cols, mean, se_)}
    return out


def run_experiment(config, threads=None):
    """Run every replicate of ``config``.

    Replicates run on ``threads`` workers (default from
    ``LASSO_SE_THREADS``).  A replicate that raises a package error is
    recorded in ``failures`` and skipped; the others still report.  Output
    order is by replicate, then ascending lambda, whatever the thread count.
    """
    grid = config.lambda_grid()
    law = population_law(config.prior, config.N, config.se_atoms)
    fps = se.se_path(law, config.effective_delta, config.sigma, grid)
    constants = run_constants(config)
    workers = worker_count() if threads is None else max(1, int(threads))

    def job(rep):
        try:
            return rep, _run_replicate(config, rep, grid, fps, constants), None
        except (LassoSEError, np.linalg.LinAlgError, FloatingPointError) as exc:
            return rep, None, f"{type(exc).__name__}: {exc}"

    if workers == 1:
        results = [job(rep) for rep in range(config.replicates)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(config.replicates)))
    records, failures, info = [], [], {}
    for rep, out, err in sorted(results, key=lambda t: t[0]):
        if err is not None:
            failures.append((rep, err))
            continue
        records.extend(out[0])
        info[rep] = out[1]
    summary = {"per_lambda": summarize(records, grid), "failed": len(failures),
               "replicates": config.replicates, **constants}
    return ExperimentResult(config, grid, fps, records, failures, summary, info)


def sweep(config, key, values, threads=None):
    """Run ``config`` once per value of ``key`` (``delta`` or the prior's ``s``).

    Returns ``[(value, ExperimentResult), ...]`` in ascending ``value`` order.
    """
    out = []
    for v in sorted(float(x) for x in values):
        if key == "delta":
            cfg = replace(config, delta=v)
        elif key == "s":
            if config.prior.kind != "sparse-gaussian":
                raise ConfigError("a sparsity sweep needs the sparse-gaussian prior")
            cfg = replace(config, prior=replace(config.prior, s=v))
        else:
            raise ConfigError(f"cannot sweep over {key!r}")
        out.append((v, run_experiment(cfg, threads=threads)))
    return out


def ladder_demo(N, k, lam=0.0, tau=1.0, seed=0, replicates=50, method=None):
    """Non-concentration of the joint empirical law for the ladder signal.

    Works in the sequence model ``y = theta* + tau z`` with soft
    thresholding at ``lam``.  Each replicate compares the empirical law of
    ``(theta_hat_i, theta*_i)`` with a sample of the predicted law built on
    the same atoms and fresh noise, and checks ``W2 >= sqrt(k/N)``.
    """
    if not 0 <= k <= N:
        raise DomainError(f"need 0 <= k <= N, got k={k}, N={N}")
    if lam < 0 or tau <= 0:
        raise DomainError("need lam >= 0 and tau > 0")
    if method is None:
        method = "exact" if N <= EXACT_W2_CAP else "sliced"
    theta = gen_signal(PriorSpec(kind="ladder", k=k), N, 0)
    w2 = np.empty(replicates)
    for rep in range(replicates):
        z = stream(seed, rep, "noise").standard_normal(N)
        ref_rng = stream(seed, rep, "ladder")
        z_ref = ref_rng.standard_normal(N)
        emp = np.column_stack((soft_threshold(theta + tau * z, lam), theta))
        ref = np.column_stack((soft_threshold(theta + tau * z_ref, lam), theta))
        w2[rep] = w2_distance(emp, ref, method, rng=ref_rng)
    bound = math.sqrt(k / N)
    return {"w2_values": w2, "bound": bound, "frac_exceeding": float(np.mean(w2 >= bound))}
