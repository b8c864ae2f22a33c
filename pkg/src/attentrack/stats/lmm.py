"""Linear mixed model with one random intercept per group.

Model: y_ij = x_ij' beta + u_i + e_ij with u_i ~ N(0, sigma_u^2) and
e_ij ~ N(0, sigma^2). Writing lambda = sigma_u^2 / sigma^2, the
covariance of group i is sigma^2 (I + lambda J), whose inverse is
(I - c_i J) / sigma^2 with c_i = lambda / (1 + lambda n_i). Everything
the likelihood needs then reduces to per-group sufficient statistics
(sums of x, y, and cross products), so one evaluation costs
O(groups * p^2) regardless of n:

    A(lambda) = X'X - sum_i c_i S_i S_i'      (= X' V^-1 X)
    b(lambda) = X'y - sum_i c_i S_i t_i       (= X' V^-1 y)
    beta      = A^-1 b
    RSS       = y'y - sum_i c_i t_i^2 - beta' b
    sigma^2   = RSS / n                        (ML; REML divides by n-p)
    loglik    = -(n log(2 pi sigma^2) + sum_i log(1 + lambda n_i) + n) / 2

The profile likelihood is maximized over log lambda: a coarse grid
brackets the optimum and golden-section search refines it to
|d log lambda| < tol. The boundary lambda = 0 (no group variance,
plain least squares) is always evaluated and wins ties.

Wald inference: z = beta / se with se from sigma^2 A^-1, two-sided
normal p-values, and fixed +-1.96 confidence bounds. Group intercepts
are the usual shrinkage predictions u_i = lambda * sum(e_i) / (1 + lambda n_i).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ..dataset import Dataset
from .contingency import StatsError

LMM_SCHEMA = "attentrack-lmm/1"

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class LmmError(StatsError):
    pass


@dataclass(frozen=True)
class LmmFit:
    coef_names: tuple[str, ...]
    beta: np.ndarray
    se: np.ndarray
    z: np.ndarray
    p: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    sigma_u2: float
    sigma2: float
    loglik: float
    method: str  # "ml" or "reml"
    converged: bool
    n_iter: int
    n_obs: int
    n_groups: int
    blups: dict[str, float]

    def to_json_dict(self) -> dict:
        return {
            "schema": LMM_SCHEMA,
            "method": self.method,
            "converged": self.converged,
            "n_iter": self.n_iter,
            "n_obs": self.n_obs,
            "n_groups": self.n_groups,
            "loglik": self.loglik,
            "sigma_u2": self.sigma_u2,
            "sigma2": self.sigma2,
            "coefficients": [
                {
                    "name": self.coef_names[j],
                    "estimate": float(self.beta[j]),
                    "se": float(self.se[j]),
                    "z": float(self.z[j]),
                    "p": float(self.p[j]),
                    "ci_low": float(self.ci_low[j]),
                    "ci_high": float(self.ci_high[j]),
                }
                for j in range(len(self.coef_names))
            ],
            "blups": {k: float(v) for k, v in sorted(self.blups.items())},
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    def format(self) -> str:
        lines = [
            f"random-intercept model ({self.method}), {self.n_obs} observations, "
            f"{self.n_groups} groups",
            f"sigma_u^2 = {self.sigma_u2:.4f}, sigma^2 = {self.sigma2:.4f}, "
            f"loglik = {self.loglik:.4f}",
        ]
        for j, name in enumerate(self.coef_names):
            lines.append(
                f"  {name}: {self.beta[j]:.4f} (se {self.se[j]:.4f}, z {self.z[j]:.2f}, "
                f"p {self.p[j]:.3g}, ci [{self.ci_low[j]:.4f}, {self.ci_high[j]:.4f}])"
            )
        return "\n".join(lines)


@dataclass(frozen=True)
class _SuffStats:
    n: int
    p: int
    XtX: np.ndarray
    Xty: np.ndarray
    yty: float
    group_labels: tuple[str, ...]
    n_i: np.ndarray  # (G,)
    S: np.ndarray    # (G, p) per-group sums of x
    t: np.ndarray    # (G,) per-group sums of y


def _suffstats(y: np.ndarray, X: np.ndarray, groups) -> _SuffStats:
    n, p = X.shape
    labels = sorted({str(g) for g in groups})
    index = {g: i for i, g in enumerate(labels)}
    gi = np.fromiter((index[str(g)] for g in groups), dtype=np.int64, count=n)
    G = len(labels)
    S = np.zeros((G, p), dtype=np.float64)
    np.add.at(S, gi, X)
    t = np.bincount(gi, weights=y, minlength=G)
    n_i = np.bincount(gi, minlength=G).astype(np.float64)
    return _SuffStats(
        n=n,
        p=p,
        XtX=X.T @ X,
        Xty=X.T @ y,
        yty=float(y @ y),
        group_labels=tuple(labels),
        n_i=n_i,
        S=S,
        t=t,
    )


def _profile(lam: float, st: _SuffStats, reml: bool):
    """Profiled log-likelihood and the GLS fit at a given lambda."""
    c = lam / (1.0 + lam * st.n_i)
    A = st.XtX - st.S.T @ (c[:, None] * st.S)
    b = st.Xty - st.S.T @ (c * st.t)
    try:
        beta = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        raise LmmError("design matrix is singular") from None
    yv = st.yty - float(np.dot(c, st.t * st.t))
    rss = max(yv - float(beta @ b), 1e-300)
    logdet_v = float(np.sum(np.log1p(lam * st.n_i)))
    if reml:
        dof = st.n - st.p
        sigma2 = rss / dof
        sign, logdet_a = np.linalg.slogdet(A)
        if sign <= 0:
            raise LmmError("design matrix is singular")
        ll = -0.5 * (dof * math.log(2.0 * math.pi * sigma2) + logdet_v + logdet_a + dof)
    else:
        sigma2 = rss / st.n
        ll = -0.5 * (st.n * math.log(2.0 * math.pi * sigma2) + logdet_v + st.n)
    return ll, beta, sigma2, A


def fit_random_intercept(y, X, groups, coef_names=None, reml: bool = False,
                         lambda_fixed: float | None = None, max_iter: int = 200,
                         tol: float = 1e-8) -> LmmFit:
    """Fit the model; see the module docstring for the parameterization.

    ``lambda_fixed`` pins the variance ratio instead of profiling it
    (0.0 reduces to ordinary least squares). ``tol`` is the width of
    the final log-lambda bracket; exceeding ``max_iter`` golden-section
    steps raises.
    """
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise LmmError("X must be (n, p) and y (n,)")
    n, p = X.shape
    groups = list(groups)
    if len(groups) != n:
        raise LmmError("groups must have one label per observation")
    if n <= p:
        raise LmmError("need more observations than coefficients")
    if np.linalg.matrix_rank(X) < p:
        raise LmmError("design matrix is rank deficient")
    if coef_names is None:
        coef_names = tuple(f"x{j}" for j in range(p))
    elif len(coef_names) != p:
        raise LmmError("coef_names must match the number of columns")

    st = _suffstats(y, X, groups)

    n_iter = 0
    if lambda_fixed is not None:
        if lambda_fixed < 0:
            raise LmmError("lambda_fixed must be non-negative")
        lam = float(lambda_fixed)
        converged = True
    else:
        # Boundary candidate first, then bracket the interior optimum on
        # the log scale and refine by golden section.
        ll0 = _profile(0.0, st, reml)[0]
        thetas = np.linspace(-25.0, 30.0, 56)
        lls = [_profile(math.exp(th), st, reml)[0] for th in thetas]
        j = int(np.argmax(lls))
        lo = thetas[max(j - 1, 0)]
        hi = thetas[min(j + 1, len(thetas) - 1)]
        a, b_ = lo, hi
        x1 = b_ - _GOLDEN * (b_ - a)
        x2 = a + _GOLDEN * (b_ - a)
        f1 = _profile(math.exp(x1), st, reml)[0]
        f2 = _profile(math.exp(x2), st, reml)[0]
        while b_ - a > tol:
            n_iter += 1
            if n_iter > max_iter:
                raise LmmError(f"no optimum within {max_iter} iterations")
            if f1 >= f2:
                b_, x2, f2 = x2, x1, f1
                x1 = b_ - _GOLDEN * (b_ - a)
                f1 = _profile(math.exp(x1), st, reml)[0]
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + _GOLDEN * (b_ - a)
                f2 = _profile(math.exp(x2), st, reml)[0]
        theta = 0.5 * (a + b_)
        lam = math.exp(theta)
        if ll0 >= _profile(lam, st, reml)[0]:
            lam = 0.0
        converged = True

    ll, beta, sigma2, A = _profile(lam, st, reml)
    cov = sigma2 * np.linalg.inv(A)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, beta / np.where(se > 0, se, 1.0), np.inf * np.sign(beta))
    pvals = np.array([math.erfc(abs(v) / math.sqrt(2.0)) for v in z])
    ci_low = beta - 1.96 * se
    ci_high = beta + 1.96 * se

    resid_sums = st.t - st.S @ beta
    shrink = lam / (1.0 + lam * st.n_i)
    blups = {g: float(shrink[i] * resid_sums[i]) for i, g in enumerate(st.group_labels)}

    return LmmFit(
        coef_names=tuple(coef_names),
        beta=beta,
        se=se,
        z=z,
        p=pvals,
        ci_low=ci_low,
        ci_high=ci_high,
        sigma_u2=float(lam * sigma2),
        sigma2=float(sigma2),
        loglik=float(ll),
        method="reml" if reml else "ml",
        converged=converged,
        n_iter=n_iter,
        n_obs=n,
        n_groups=len(st.group_labels),
        blups=blups,
    )


def fit_lmm(ds: Dataset, reml: bool = False, lambda_fixed: float | None = None) -> LmmFit:
    """Response time on attention and attention squared, user intercepts."""
    if not ds.records:
        raise LmmError("dataset has no records")
    y = np.array([float(r.response_time_s) for r in ds.records])
    a = np.array([float(r.attention) for r in ds.records])
    X = np.column_stack([np.ones_like(a), a, a * a])
    groups = [r.user_id for r in ds.records]
    return fit_random_intercept(
        y, X, groups,
        coef_names=("intercept", "attention", "attention_sq"),
        reml=reml,
        lambda_fixed=lambda_fixed,
    )
