"""Engines behind the command-line subcommands.

Each function returns plain data (dicts, dataclasses) and never touches
``sys.argv`` or exit codes; :mod:`ftangle.cli` does the I/O.  Batch work is
split into the ``CHUNK``-sized pieces of :func:`ftangle.state.random_states`
and farmed out to a thread pool whose size is capped by ``FTANGLE_THREADS``.
Results are combined with max/min reductions or kept in chunk order, so the
output never depends on the number of workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import bures
from .cxmat import herm_eig, partial_transpose_2, product_spectrum
from .density import block_identity_residual, canonicalize, lambda_matrix, partial_trace, rho_from_params
from .errors import FtangleError
from .measures import (
    cn_bounds, measure_report, negativity_oracle, pt_spectrum_closed, residual_tangles,
    rho_spectrum_closed, spin_flip, spinflip_spectrum_closed, wootters_oracle,
)
from .state import (
    CHUNK, FamilyParams, amplitudes, chunk_sizes, invariant_H, invariant_L,
    invariants, make_params, random_chunk,
)

CSV_HEADER = "concurrence,negativity,eta,r,s,entangled"
BOUND_TOL = 1e-10
FD_STEP = 1e-6
FD_TOL = 1e-8
K_IDENTITY_TOL = 1e-11
INVERSE_TOL = 1e-10
# keeps the tangent stream apart from the state stream of the same chunk
_TANGENT_STREAM = 1


def worker_count() -> int:
    cap = os.environ.get("FTANGLE_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValueError(f"FTANGLE_THREADS must be a positive integer, got {cap!r}") from None
    return n


def _map_chunks(fn: Callable, jobs: Iterable) -> list:
    jobs = list(jobs)
    workers = min(worker_count(), len(jobs))
    if workers <= 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def _scalar(v):
    v = np.asarray(v)
    if v.dtype.kind == "c":
        return [float(v.real), float(v.imag)]
    if v.dtype.kind == "b":
        return bool(v)
    if v.dtype.kind in "US":
        return str(v)
    return float(v)


def _jsonable(v):
    v = np.asarray(v)
    if v.ndim == 0:
        return _scalar(v)
    return [_jsonable(item) for item in v]


# -- measures -------------------------------------------------------------

def measures_report(w, z, normalize: bool = False) -> dict:
    """Every per-state quantity as one nested, JSON-ready document."""
    p = make_params(w, z, normalize=normalize)
    if p.batch_shape:
        raise ValueError("measures takes a single state, not a batch")
    inv = invariants(p)
    tangles = residual_tangles(inv, p, check=True)
    return {
        "state": {"w": _jsonable(p.w), "z": _jsonable(p.z)},
        "measures": {k: _jsonable(v) for k, v in asdict(measure_report(inv)).items()},
        "tangles": {**{k: _jsonable(v) for k, v in asdict(tangles).items()},
                    "monogamy_saturated": bool(tangles.saturated)},
        "invariants": {k: _jsonable(v) for k, v in asdict(inv).items()},
    }


# -- sample ---------------------------------------------------------------

def _sample_chunk(seed: int, chunk: int, size: int) -> np.ndarray:
    inv = invariants(random_chunk(seed, chunk, size), check=False)
    rep = measure_report(inv)
    return np.stack([rep.concurrence, rep.negativity, inv.eta, inv.r, inv.s,
                     rep.entangled.astype(float)], axis=-1)


def sample_rows(n: int, seed: int, entangled_only: bool = False) -> np.ndarray:
    """``n`` sample records as an ``(n, 6)`` array in CSV column order.

    With ``entangled_only`` separable draws are skipped and chunks keep coming
    (indices ``0, 1, 2, ...``) until ``n`` entangled records exist.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not entangled_only:
        return np.concatenate(_map_chunks(_sample_chunk, [(seed, c, k) for c, k in enumerate(chunk_sizes(n))]))
    kept, total, chunk = [], 0, 0
    while total < n:
        batch = worker_count()
        blocks = _map_chunks(_sample_chunk, [(seed, c, CHUNK) for c in range(chunk, chunk + batch)])
        chunk += batch
        for rows in blocks:
            rows = rows[rows[:, 5] == 1.0]
            kept.append(rows)
            total += len(rows)
    return np.concatenate(kept)[:n]


def format_rows(rows: np.ndarray) -> str:
    lines = [CSV_HEADER]
    for c, neg, eta, r, s, ent in rows:
        lines.append(f"{c:.17g},{neg:.17g},{eta:.17g},{r:.17g},{s:.17g},{int(ent)}")
    return "\n".join(lines) + "\n"


def bound_violations(rows: np.ndarray, tol: float = BOUND_TOL) -> int:
    """Entangled rows whose negativity leaves the concurrence-dependent band."""
    ent = rows[rows[:, 5] == 1.0]
    lower, upper = cn_bounds(ent[:, 0])
    return int(np.sum((ent[:, 1] < lower - tol) | (ent[:, 1] > upper + tol)))


# -- verify ---------------------------------------------------------------

@dataclass
class VerifyReport:
    n: int
    max_dev_concurrence: float = 0.0
    max_dev_negativity: float = 0.0
    max_dev_purity: float = 0.0
    max_monogamy_violation: float = 0.0
    failures: int = 0
    details: dict = field(default_factory=dict)

    def merge(self, other: "VerifyReport") -> None:
        for name in ("max_dev_concurrence", "max_dev_negativity", "max_dev_purity", "max_monogamy_violation"):
            setattr(self, name, max(getattr(self, name), getattr(other, name)))
        self.failures += other.failures
        for k, v in other.details.items():
            self.details[k] = max(self.details.get(k, 0.0), v)


def _max(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def _verify_chunk(seed: int, chunk: int, size: int, tol: float, fault: float) -> VerifyReport:
    p = random_chunk(seed, chunk, size)
    inv = invariants(p, check=False)
    rep = measure_report(inv)
    rho = rho_from_params(p)
    psi = amplitudes(p)

    conc = rep.concurrence + fault
    dev_c = np.abs(conc - wootters_oracle(rho))
    dev_n = np.abs(rep.negativity - negativity_oracle(rho))
    dev_p = np.abs(rep.purity - np.einsum("...ij,...ji->...", rho, rho).real)

    dev_spec = np.maximum.reduce([
        np.max(np.abs(herm_eig(rho).eigenvalues - rho_spectrum_closed(inv)), axis=-1),
        np.max(np.abs(product_spectrum(rho, spin_flip(rho)) - spinflip_spectrum_closed(inv)), axis=-1),
        np.max(np.abs(herm_eig(partial_transpose_2(rho)).eigenvalues - pt_spectrum_closed(inv)), axis=-1),
    ])
    dev_hl = np.maximum(np.abs(invariant_H(psi) - inv.H), np.abs(invariant_L(psi) - inv.L))

    tangles = residual_tangles(inv)
    dev_cross = np.maximum(
        np.abs(wootters_oracle(partial_trace(psi, (1, 3))) - np.sqrt(tangles.c2_13)),
        np.abs(wootters_oracle(partial_trace(psi, (2, 4))) - np.sqrt(tangles.c2_24)),
    )
    dev_pairs = np.max(np.abs(np.stack(
        [wootters_oracle(partial_trace(psi, keep)) for keep in ((1, 2), (1, 4), (2, 3), (3, 4))]
    ) - conc), axis=0)
    mono = np.maximum(tangles.identity_residual, np.maximum(0.0, -np.minimum(tangles.sigma1, tangles.sigma2)))

    bad = ((dev_c > tol) | (dev_n > tol) | (dev_p > tol) | (dev_spec > tol) | (dev_hl > tol)
           | (dev_cross > tol) | (dev_pairs > tol) | (mono > tol))
    return VerifyReport(
        n=size,
        max_dev_concurrence=_max(dev_c), max_dev_negativity=_max(dev_n), max_dev_purity=_max(dev_p),
        max_monogamy_violation=_max(mono), failures=int(np.sum(bad)),
        details={"max_dev_spectra": _max(dev_spec), "max_dev_H_L": _max(dev_hl),
                 "max_dev_cross_concurrence": _max(dev_cross), "max_dev_pair_concurrence": _max(dev_pairs)},
    )


def run_verify(n: int, seed: int, tol: float, fault: float = 0.0) -> VerifyReport:
    """Closed forms against oracles on ``n`` random states.

    ``fault`` is added to every closed-form concurrence before comparison;
    it exists so tests can check that a wrong formula is caught.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    total = VerifyReport(n=n)
    for part in _map_chunks(_verify_chunk, [(seed, c, k, tol, fault) for c, k in enumerate(chunk_sizes(n))]):
        total.merge(part)
    return total


# -- bures-check -------------------------------------------------------------

@dataclass
class BuresReport:
    n: int
    eta_min: float
    max_dev_closed_trace: float = 0.0
    max_k_identity_residual: float = 0.0
    max_vanishing_trace: float = 0.0
    max_dk_fd: float = 0.0
    max_drho_fd: float = 0.0
    max_inverse_residual: float = 0.0
    max_quadratic_residual: float = 0.0
    min_ds2: float = np.inf
    uhlmann_ratio_min: float = np.nan
    uhlmann_ratio_mean: float = np.nan
    uhlmann_ratio_max: float = np.nan
    failures: list = field(default_factory=list)


def _accepted_states(n: int, seed: int, eta_min: float) -> list[tuple[int, FamilyParams]]:
    parts, have, chunk = [], 0, 0
    while have < n:
        p = random_chunk(seed, chunk, min(CHUNK, max(n - have, 1) * 2 + 16))
        eta = invariants(p, check=False).eta
        p = p[eta >= eta_min][: n - have]
        parts.append((chunk, p))
        have += len(p)
        chunk += 1
    return parts


def _bures_chunk(seed: int, chunk: int, p: FamilyParams) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk, _TANGENT_STREAM)))
    t = bures.random_tangent(p, rng)
    closed = bures.bures_closed(p, t)
    trace, vanishing = bures.bures_trace_oracle(p, t, return_residual=True)

    k = bures.k_components(p.w, p.z)
    eta2 = invariants(p, check=False).eta ** 2
    k_res = np.abs(1 - np.sum(k * k, axis=-1) - eta2)

    h = FD_STEP
    plus = (p.w + h * t.dw, p.z + h * t.dz)
    minus = (p.w - h * t.dw, p.z - h * t.dz)
    dk_fd = (bures.k_components(*plus) - bures.k_components(*minus)) / (2 * h)
    drho_fd = (lambda_matrix(*plus) - lambda_matrix(*minus)) / (8 * h)
    dk_dev = np.max(np.abs(dk_fd - bures.dk(p, t)), axis=-1)
    drho_dev = np.max(np.abs(drho_fd - 0.25 * bures.d_lambda(p, t)), axis=(-2, -1))

    inv_res = np.max(np.abs(rho_from_params(p) @ bures.rho_inverse(p) - np.eye(4)), axis=(-2, -1))
    doubled = bures.bures_closed(p, bures.TangentParams(2 * t.dw, 2 * t.dz))
    quad = np.abs(doubled - 4 * closed) / np.maximum(1.0, 4 * closed)

    regular = invariants(p, check=False).eta >= bures.ETA_MIN_DIAGNOSTIC
    ratio = bures.bures_uhlmann_diagnostic(p[regular], bures.TangentParams(t.dw[regular], t.dz[regular]))[1]
    return {
        "closed_trace": _max(closed - trace), "k_identity": _max(k_res), "vanishing": _max(vanishing),
        "dk_fd": _max(dk_dev), "drho_fd": _max(drho_dev), "inverse": _max(inv_res), "quadratic": _max(quad),
        "min_ds2": float(np.min(closed, initial=np.inf)), "ratio": ratio,
    }


def run_bures_check(n: int, seed: int, eta_min: float) -> BuresReport:
    """All Bures-metric properties on ``n`` states with ``eta >= eta_min``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 < eta_min < 1:
        raise ValueError("eta_min must lie strictly between 0 and 1 (the metric degenerates at eta = 0)")
    rep = BuresReport(n=n, eta_min=eta_min)
    jobs = [(seed, c, p) for c, p in _accepted_states(n, seed, max(eta_min, bures.ETA_MIN)) if len(p)]
    try:
        parts = _map_chunks(_bures_chunk, jobs)
    except FtangleError as exc:
        rep.failures.append(f"{type(exc).__name__}: {exc}")
        return rep
    except AssertionError as exc:
        rep.failures.append(f"{type(exc).__name__}: {exc}")
        return rep

    pick = lambda key: max(part[key] for part in parts)
    rep.max_dev_closed_trace = pick("closed_trace")
    rep.max_k_identity_residual = pick("k_identity")
    rep.max_vanishing_trace = pick("vanishing")
    rep.max_dk_fd = pick("dk_fd")
    rep.max_drho_fd = pick("drho_fd")
    rep.max_inverse_residual = pick("inverse")
    rep.max_quadratic_residual = pick("quadratic")
    rep.min_ds2 = min(part["min_ds2"] for part in parts)
    ratios = np.concatenate([part["ratio"] for part in parts])
    if ratios.size:
        rep.uhlmann_ratio_min = float(ratios.min())
        rep.uhlmann_ratio_mean = float(ratios.mean())
        rep.uhlmann_ratio_max = float(ratios.max())

    limits = [
        ("closed vs trace form", rep.max_dev_closed_trace, bures.TRACE_TOL),
        ("eta^2 = 1 - |k|^2", rep.max_k_identity_residual, K_IDENTITY_TOL),
        ("Tr(dL L dL) = 0", rep.max_vanishing_trace, bures.TRACE_TOL),
        ("dk vs finite differences", rep.max_dk_fd, FD_TOL),
        ("drho vs finite differences", rep.max_drho_fd, FD_TOL),
        ("rho rho^-1 = 1", rep.max_inverse_residual, INVERSE_TOL),
        ("ds^2 quadratic in the tangent", rep.max_quadratic_residual, 1e-12),
    ]
    for name, value, limit in limits:
        if not value <= limit:
            rep.failures.append(f"{name}: {value:.3e} > {limit:g}")
    if not rep.min_ds2 > 0:
        rep.failures.append(f"ds^2 not positive (min {rep.min_ds2:.3e})")
    return rep


# -- canonical ------------------------------------------------------------

def canonical_dump(w, z) -> dict:
    p = make_params(w, z)
    if p.batch_shape:
        raise ValueError("canonical takes a single state, not a batch")
    cf = canonicalize(p)
    out = {name: _jsonable(getattr(cf, name))
           for name in ("rho", "U", "V", "rho_prime", "alpha", "beta", "w_prime", "z_prime")}
    out["xshape_residual"] = float(cf.xshape_residual)
    out["block_identity_residual"] = float(block_identity_residual(cf))
    return out
