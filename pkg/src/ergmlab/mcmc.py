"""Samplers, exact spectral theory, and normalizing-constant estimators.

The single-parameter independent-edge model is exactly solvable: its
Metropolis chain is a product chain whose 2^m eigenpairs, chi-square
distance to stationarity, and estimator variances are all closed forms.
Those closed forms live here next to the general-purpose Glauber sampler
and the three standard estimators of normalizing constants, so every
estimator can be tested against exact enumeration at small n and against
the spectral formulas at every n.

Scaling convention: a ModelSpec statistic T is a sum of homomorphism
densities, and the sampled law puts mass proportional to exp(n^2 T(G)) on
each graph. The single-parameter model exp(beta E(G)) corresponds to an
edge-only ModelSpec with coefficient beta/2.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from math import lgamma

import numpy as np

from .errors import (
    DomainError,
    EstimatorCollapseError,
    InstanceTooLargeError,
    OverflowGuardError,
)
from .graphs import Graph, Motif, classify_motif, hom_density_graph_fast
from .variational import ModelSpec, maximize_scalar

ENUMERATION_MAX_VERTICES = 6
DENSE_MATRIX_MAX_PAIRS = 12
CHI_SQUARE_MAX_VERTICES = 10_000
BURN_IN_FRACTION = 0.10


def _rng_from_seed(seed: int) -> np.random.Generator:
    """Counter-based generator so chains replicate exactly from a 64-bit seed."""
    return np.random.default_rng(np.random.Philox(key=int(seed) & (2**64 - 1)))


# -- chain configuration and state ---------------------------------------------


@dataclass
class ChainConfig:
    """Where and how a single chain runs.

    start is "empty", "complete", or a Graph; steps may be None for
    estimator use, where the run length is derived from the sample request
    (10% burn-in plus thinning times the sample count). er_beta selects the
    single-parameter add/delete Metropolis chain for trace runs.
    """

    n: int
    steps: int | None = None
    seed: int = 0
    start: object = "empty"
    er_beta: float | None = None
    model: ModelSpec | None = None

    def start_graph(self) -> Graph:
        if isinstance(self.start, Graph):
            if self.start.n != self.n:
                raise DomainError("start graph size does not match chain n")
            return self.start
        if self.start == "empty":
            return Graph.empty(self.n)
        if self.start == "complete":
            return Graph.complete(self.n)
        raise DomainError(f"unknown start {self.start!r}")


class _ChainState:
    """Mutable adjacency with incrementally tracked edge/degree/triangle counts."""

    __slots__ = ("n", "rows", "deg", "edges", "triangles")

    def __init__(self, g: Graph):
        self.n = g.n
        self.rows = list(g.rows)
        self.deg = g.degrees()
        self.edges = g.edge_count()
        self.triangles = g.triangle_count()

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.rows[i] >> j & 1)

    def common(self, i: int, j: int) -> int:
        return (self.rows[i] & self.rows[j]).bit_count()

    def toggle(self, i: int, j: int):
        c = self.common(i, j)
        sign = -1 if self.has_edge(i, j) else 1
        self.rows[i] ^= 1 << j
        self.rows[j] ^= 1 << i
        self.deg[i] += sign
        self.deg[j] += sign
        self.edges += sign
        self.triangles += sign * c

    def graph(self) -> Graph:
        return Graph(self.n, self.rows)


def _compile_terms(model: ModelSpec):
    """Attach the fast-path classification to each model term once."""
    return [(classify_motif(m), m, b) for m, b in model.terms]


def _state_statistic(state: _ChainState, compiled) -> float:
    n = state.n
    total = 0.0
    for kind, motif, b in compiled:
        if b == 0.0:
            continue
        if kind[0] == "edge":
            total += b * 2.0 * state.edges / n**2
        elif kind[0] == "star":
            j = kind[1]
            total += b * sum(d**j for d in state.deg) / n ** (j + 1)
        elif kind[0] == "triangle":
            total += b * 6.0 * state.triangles / n**3
        else:
            total += b * hom_density_graph_fast(motif, state.graph())
    return total


def _toggle_exponent(state: _ChainState, compiled, i: int, j: int) -> float:
    """n^2 (T with edge ij present - T with it absent), from local counts."""
    n = state.n
    present = state.has_edge(i, j)
    delta = 0.0
    slow_terms = []
    for kind, motif, b in compiled:
        if b == 0.0:
            continue
        if kind[0] == "edge":
            delta += 2.0 * b
        elif kind[0] == "star":
            jj = kind[1]
            ai = state.deg[i] - (1 if present else 0)
            aj = state.deg[j] - (1 if present else 0)
            dh = ((ai + 1) ** jj - ai**jj) + ((aj + 1) ** jj - aj**jj)
            delta += b * dh * n**2 / n ** (jj + 1)
        elif kind[0] == "triangle":
            delta += 6.0 * b * state.common(i, j) / n
        else:
            slow_terms.append((motif, b))
    if slow_terms:
        g = state.graph()
        g_on = g if present else g.with_edge_toggled(i, j)
        g_off = g.with_edge_toggled(i, j) if present else g
        for m, b in slow_terms:
            delta += b * n**2 * (
                hom_density_graph_fast(m, g_on) - hom_density_graph_fast(m, g_off)
            )
    return delta


# -- single steps (pure: return a new Graph) -------------------------------------


def metropolis_step(g: Graph, beta: float, rng) -> Graph:
    """One move of the add/delete chain for the law proportional to e^{beta E}.

    Pick a uniform vertex pair; add the edge if absent, else delete it with
    probability e^{-beta}. Requires beta >= 0; for negative beta run the
    chain on the complement graph at -beta instead.
    """
    if beta < 0.0:
        raise DomainError(
            "metropolis_step requires beta >= 0; apply the complement "
            "transformation (run at -beta on the complemented graph)"
        )
    n = g.n
    i, j = _random_pair(n, rng)
    if not g.has_edge(i, j):
        return g.with_edge_toggled(i, j)
    if rng.random() < math.exp(-beta):
        return g.with_edge_toggled(i, j)
    return g


def glauber_step(g: Graph, model: ModelSpec, rng) -> Graph:
    """Resample one uniformly chosen edge slot from its conditional law."""
    state = _ChainState(g)
    compiled = _compile_terms(model)
    i, j = _random_pair(g.n, rng)
    expo = _toggle_exponent(state, compiled, i, j)
    p_on = 1.0 / (1.0 + math.exp(-expo))
    want = rng.random() < p_on
    if want != g.has_edge(i, j):
        return g.with_edge_toggled(i, j)
    return g


def _random_pair(n: int, rng) -> tuple[int, int]:
    idx = int(rng.integers(0, n * (n - 1) // 2))
    # row-major unrank of the pair index
    i = int((2 * n - 1 - math.sqrt((2 * n - 1) ** 2 - 8 * idx)) // 2)
    offset = idx - i * (2 * n - i - 1) // 2
    return i, i + 1 + offset


# -- chain runners ----------------------------------------------------------------


@dataclass
class TraceRecord:
    step: int
    edges: int
    triangles: int
    statistic: float


def run_chain(config: ChainConfig, record_every: int = 100) -> tuple[list[TraceRecord], Graph]:
    """Run a configured chain, recording counts every record_every steps.

    Records the initial state as step 0 and then every record_every steps,
    including the final step. Returns the trace and the final graph.
    """
    if config.steps is None or config.steps < 0:
        raise DomainError("run_chain needs steps >= 0")
    if (config.er_beta is None) == (config.model is None):
        raise DomainError("set exactly one of er_beta (Metropolis) or model (Glauber)")
    rng = _rng_from_seed(config.seed)
    state = _ChainState(config.start_graph())
    compiled = _compile_terms(config.model) if config.model is not None else None
    if config.er_beta is not None and config.er_beta < 0.0:
        raise DomainError(
            "er chains require beta >= 0; apply the complement transformation"
        )
    trace = [TraceRecord(0, state.edges, state.triangles, _trace_stat(state, compiled, config))]
    pairs = list(itertools.combinations(range(config.n), 2))
    m = len(pairs)
    exp_neg_beta = math.exp(-config.er_beta) if config.er_beta is not None else 0.0
    CHUNK = 4096
    done = 0
    while done < config.steps:
        count = min(CHUNK, config.steps - done)
        pair_idx = rng.integers(0, m, size=count)
        coins = rng.random(count)
        for t in range(count):
            i, j = pairs[pair_idx[t]]
            if compiled is None:
                if not state.has_edge(i, j):
                    state.toggle(i, j)
                elif coins[t] < exp_neg_beta:
                    state.toggle(i, j)
            else:
                expo = _toggle_exponent(state, compiled, i, j)
                want = coins[t] < 1.0 / (1.0 + math.exp(-expo))
                if want != state.has_edge(i, j):
                    state.toggle(i, j)
            done += 1
            if done % record_every == 0 or done == config.steps:
                trace.append(
                    TraceRecord(done, state.edges, state.triangles, _trace_stat(state, compiled, config))
                )
    return trace, state.graph()


def _trace_stat(state: _ChainState, compiled, config: ChainConfig) -> float:
    if compiled is not None:
        return _state_statistic(state, compiled)
    return config.er_beta * state.edges / state.n**2


def _auto_is_er(model: ModelSpec) -> float | None:
    """If the law is a nonnegative independent-edge law, its Metropolis beta."""
    if all(m.edge_count == 1 for m, _ in model.terms):
        beta = 2.0 * sum(b for _, b in model.terms)
        if beta >= 0.0:
            return beta
    return None


def sample_motif_densities(
    law: ModelSpec,
    motifs: list[Motif],
    n_samples: int,
    chain: ChainConfig,
    thinning: int = 1,
) -> np.ndarray:
    """Draw n_samples motif-density vectors from a chain targeting the law.

    Uses the add/delete Metropolis chain when the law is a nonnegative
    independent-edge law (where it is exactly solvable) and Glauber dynamics
    otherwise. Burn-in is 10% of the total run, then one record per
    thinning steps.
    """
    if thinning < 1:
        raise DomainError("thinning must be >= 1")
    rng = _rng_from_seed(chain.seed)
    state = _ChainState(chain.start_graph())
    compiled = _compile_terms(law)
    er_beta = _auto_is_er(law)
    pairs = list(itertools.combinations(range(chain.n), 2))
    m = len(pairs)
    exp_neg_beta = math.exp(-er_beta) if er_beta is not None else 0.0
    span = n_samples * thinning
    burn = math.ceil(span / 9.0)  # 10% of the total run
    total = burn + span
    out = np.empty((n_samples, len(motifs)))
    kinds = [classify_motif(mm) for mm in motifs]
    rec = 0
    done = 0
    CHUNK = 4096
    while done < total:
        count = min(CHUNK, total - done)
        pair_idx = rng.integers(0, m, size=count)
        coins = rng.random(count)
        for t in range(count):
            i, j = pairs[pair_idx[t]]
            if er_beta is not None:
                if not state.has_edge(i, j):
                    state.toggle(i, j)
                elif coins[t] < exp_neg_beta:
                    state.toggle(i, j)
            else:
                expo = _toggle_exponent(state, compiled, i, j)
                want = coins[t] < 1.0 / (1.0 + math.exp(-expo))
                if want != state.has_edge(i, j):
                    state.toggle(i, j)
            done += 1
            if done > burn and (done - burn) % thinning == 0 and rec < n_samples:
                out[rec] = _density_vector(state, motifs, kinds)
                rec += 1
    return out


def _density_vector(state: _ChainState, motifs, kinds) -> list[float]:
    n = state.n
    vec = []
    for motif, kind in zip(motifs, kinds):
        if kind[0] == "edge":
            vec.append(2.0 * state.edges / n**2)
        elif kind[0] == "star":
            j = kind[1]
            vec.append(sum(d**j for d in state.deg) / n ** (j + 1))
        elif kind[0] == "triangle":
            vec.append(6.0 * state.triangles / n**3)
        else:
            vec.append(hom_density_graph_fast(motif, state.graph()))
    return vec


# -- exact spectral theory of the independent-edge chain ---------------------------


@dataclass
class SpectralComponent:
    """One eigenpair of the add/delete chain, indexed by a 0/1 vector."""

    xi: tuple[int, ...]
    eigenvalue: float
    weight: int
    beta: float

    def evaluate(self, x) -> float:
        """Eigenfunction value at the edge-indicator vector x."""
        if len(x) != len(self.xi):
            raise DomainError("edge-indicator length does not match xi")
        dot = sum(a & b for a, b in zip(self.xi, x))
        return (-1.0) ** dot * math.exp(0.5 * self.beta * (self.weight - 2 * dot))


def er_eigen(xi, beta: float, m: int) -> SpectralComponent:
    """Eigenpair of the add/delete chain for the component pattern xi.

    The chain is a product of m two-state chains; the eigenvalue depends on
    xi only through its weight: 1 - |xi| (1 + e^{-beta})/m.
    """
    xi = tuple(int(b) for b in xi)
    if len(xi) != m:
        raise DomainError(f"xi has length {len(xi)}, expected m = {m}")
    if any(b not in (0, 1) for b in xi):
        raise DomainError("xi must be a 0/1 vector")
    weight = sum(xi)
    eigenvalue = 1.0 - weight * (1.0 + math.exp(-beta)) / m
    return SpectralComponent(xi, eigenvalue, weight, beta)


def edge_indicator(g: Graph) -> tuple[int, ...]:
    """Edge-indicator vector of a graph in lexicographic pair order."""
    return tuple(
        1 if g.has_edge(i, j) else 0 for i, j in itertools.combinations(range(g.n), 2)
    )


def er_transition_matrix(beta: float, n: int) -> np.ndarray:
    """Dense transition matrix of the add/delete chain on all 2^m graphs."""
    if beta < 0.0:
        raise DomainError("er chains require beta >= 0")
    m = math.comb(n, 2)
    if m > DENSE_MATRIX_MAX_PAIRS:
        raise InstanceTooLargeError(
            f"instance too large: dense chain matrix needs m <= {DENSE_MATRIX_MAX_PAIRS}, got {m}"
        )
    size = 1 << m
    k = np.zeros((size, size))
    del_p = math.exp(-beta)
    for s in range(size):
        for t in range(m):
            if not s >> t & 1:
                k[s, s | (1 << t)] += 1.0 / m
            else:
                k[s, s & ~(1 << t)] += del_p / m
                k[s, s] += (1.0 - del_p) / m
    return k


def er_stationary(beta: float, n: int) -> np.ndarray:
    m = math.comb(n, 2)
    sizes = np.array([int(s).bit_count() for s in range(1 << m)])
    logw = beta * sizes - m * np.logaddexp(0.0, beta)
    return np.exp(logw)


def glauber_transition_matrix(model: ModelSpec, n: int) -> np.ndarray:
    """Dense transition matrix of Glauber dynamics for an arbitrary model."""
    m = math.comb(n, 2)
    if m > DENSE_MATRIX_MAX_PAIRS:
        raise InstanceTooLargeError(
            f"instance too large: dense chain matrix needs m <= {DENSE_MATRIX_MAX_PAIRS}, got {m}"
        )
    pairs = list(itertools.combinations(range(n), 2))
    compiled = _compile_terms(model)
    size = 1 << m
    k = np.zeros((size, size))
    for s in range(size):
        g = _graph_from_mask(n, s, pairs)
        state = _ChainState(g)
        for t, (i, j) in enumerate(pairs):
            expo = _toggle_exponent(state, compiled, i, j)
            p_on = 1.0 / (1.0 + math.exp(-expo))
            k[s, s | (1 << t)] += p_on / m
            k[s, s & ~(1 << t)] += (1.0 - p_on) / m
    return k


def _graph_from_mask(n: int, mask: int, pairs) -> Graph:
    edges = [pairs[t] for t in range(len(pairs)) if mask >> t & 1]
    return Graph.from_edges(n, edges)


def model_log_weights(model: ModelSpec, n: int) -> np.ndarray:
    """log of exp(n^2 T(G)) over all graphs, in edge-mask order."""
    m = math.comb(n, 2)
    if m > DENSE_MATRIX_MAX_PAIRS:
        raise InstanceTooLargeError(
            f"instance too large: enumeration needs m <= {DENSE_MATRIX_MAX_PAIRS}, got {m}"
        )
    pairs = list(itertools.combinations(range(n), 2))
    masks = np.arange(1 << m, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(m)[None, :]) & 1).astype(np.int8)
    dens = batch_motif_densities([mm for mm, _ in model.terms], n, bits)
    betas = np.array([b for _, b in model.terms])
    return n**2 * (dens @ betas)


# -- chi-square distance and cutoff ------------------------------------------------


def chi_square_distance(
    start: str, beta: float, n: int, ell: float, log: bool = False
) -> float:
    """Chi-square distance to stationarity after ell steps, in closed form.

    Sums, over component weights j = 1..m, the binomially weighted squared
    eigenfunction mass e^{+-beta j} C(m, j) |1 - j(1+e^{-beta})/m|^{2 ell},
    evaluated with log-domain binomials. Raises OverflowGuardError when the
    value exceeds double range unless log=True.
    """
    if start not in ("empty", "complete"):
        raise DomainError("start must be 'empty' or 'complete'")
    if beta < 0.0:
        raise DomainError("chi_square_distance requires beta >= 0")
    if n < 2 or n > CHI_SQUARE_MAX_VERTICES:
        raise InstanceTooLargeError(
            f"instance too large: chi_square_distance supports 2 <= n <= {CHI_SQUARE_MAX_VERTICES}"
        )
    m = math.comb(n, 2)
    sign = 1.0 if start == "empty" else -1.0
    rate = 1.0 + math.exp(-beta)
    best = -math.inf
    total_log = -math.inf
    for lo in range(1, m + 1, 1_000_000):
        js = np.arange(lo, min(lo + 1_000_000, m + 1), dtype=np.float64)
        logc = (
            lgamma(m + 1) - np.array([lgamma(j + 1) + lgamma(m - j + 1) for j in js])
        )
        base = np.abs(1.0 - js * rate / m)
        with np.errstate(divide="ignore"):
            decay = np.where(base > 0.0, 2.0 * ell * np.log(base), -np.inf)
        if ell == 0:
            decay = np.zeros_like(base)
        terms = sign * beta * js + logc + decay
        chunk_max = float(np.max(terms))
        if chunk_max == -math.inf:
            continue
        best = max(best, chunk_max)
        total_log = np.logaddexp(total_log, chunk_max + math.log(np.exp(terms - chunk_max).sum()))
    if log:
        return float(total_log)
    if total_log > 700.0:
        raise OverflowGuardError(
            f"chi-square value exp({total_log:.1f}) exceeds double range; call with log=True"
        )
    return float(math.exp(total_log))


def mixing_cutoff(n: int, beta: float, c: float) -> float:
    """Step count m(log m + c)/(2(1 + e^{-beta})) around which convergence happens."""
    if not 0.0 <= beta <= 1.0:
        warnings.warn(
            f"cutoff constants are proved for 0 <= beta <= 1; got beta = {beta}",
            stacklevel=2,
        )
    m = math.comb(n, 2)
    return m * (math.log(m) + c) / (2.0 * (1.0 + math.exp(-beta)))


def er_log_partition(beta: float, n: int) -> float:
    """log of the independent-edge normalizing constant, m log(1 + e^beta)."""
    if n < 2:
        raise DomainError("er_log_partition needs n >= 2")
    return math.comb(n, 2) * float(np.logaddexp(0.0, beta))


# -- batched statistics over edge-indicator matrices -------------------------------


def batch_motif_densities(motifs: list[Motif], n: int, bits: np.ndarray) -> np.ndarray:
    """Density vectors for a batch of graphs given as edge-indicator rows.

    bits has one row per graph and one column per vertex pair in
    lexicographic order. Edges, stars, and triangles are fully vectorized;
    other motifs fall back to a per-graph loop.
    """
    pairs = list(itertools.combinations(range(n), 2))
    m = len(pairs)
    if bits.shape[1] != m:
        raise DomainError(f"bits must have {m} columns for n = {n}")
    nsamp = bits.shape[0]
    out = np.empty((nsamp, len(motifs)))
    pair_index = {p: t for t, p in enumerate(pairs)}
    incidence = None
    triple_idx = None
    slow_graphs = None
    for col, motif in enumerate(motifs):
        kind = classify_motif(motif)
        if kind[0] == "edge":
            out[:, col] = 2.0 * bits.sum(axis=1) / n**2
        elif kind[0] == "star":
            if incidence is None:
                incidence = np.zeros((m, n), dtype=np.int64)
                for t, (i, j) in enumerate(pairs):
                    incidence[t, i] = incidence[t, j] = 1
            deg = bits.astype(np.int64) @ incidence
            out[:, col] = (deg ** kind[1]).sum(axis=1) / n ** (kind[1] + 1)
        elif kind[0] == "triangle":
            if triple_idx is None:
                trips = list(itertools.combinations(range(n), 3))
                triple_idx = (
                    np.array([pair_index[(a, b)] for a, b, c in trips]),
                    np.array([pair_index[(a, c)] for a, b, c in trips]),
                    np.array([pair_index[(b, c)] for a, b, c in trips]),
                )
            ia, ib, ic = triple_idx
            cnt = (bits[:, ia] & bits[:, ib] & bits[:, ic]).sum(axis=1)
            out[:, col] = 6.0 * cnt / n**3
        else:
            if slow_graphs is None:
                slow_graphs = [
                    Graph.from_edges(n, [pairs[t] for t in np.nonzero(row)[0]])
                    for row in bits
                ]
            out[:, col] = [hom_density_graph_fast(motif, g) for g in slow_graphs]
    return out


# -- exact enumeration oracle -------------------------------------------------------


def enumerate_psi_n(model: ModelSpec, n: int) -> float:
    """Exact scaled log normalizing constant by summing over all 2^C(n,2) graphs."""
    if n > ENUMERATION_MAX_VERTICES:
        raise InstanceTooLargeError(
            f"instance too large: enumeration supports n <= {ENUMERATION_MAX_VERTICES}"
        )
    logw = model_log_weights(model, n)
    return float(_logsumexp(logw)) / n**2


def _logsumexp(v: np.ndarray) -> float:
    mx = float(np.max(v))
    if mx == -math.inf:
        return -math.inf
    return mx + math.log(np.exp(v - mx).sum())


# -- estimators ---------------------------------------------------------------------


@dataclass
class EstimatorResult:
    """Outcome of a normalizing-constant estimator, kept in log domain.

    For importance sampling the target is the full normalizing sum
    sum_G exp(n^2 T(G)); for the two ratio estimators it is the ratio of the
    target model's normalizing sum to the reference model's.
    """

    estimate_log: float
    n_samples: int
    estimator_kind: str
    seed: int
    variance_bound_log: float | None = None

    def to_text(self) -> str:
        lines = [
            f"estimator {self.estimator_kind}",
            f"seed {self.seed}",
            f"n_samples {self.n_samples}",
            f"estimate_log {self.estimate_log:.12g}",
        ]
        if self.variance_bound_log is not None:
            lines.append(f"variance_bound_log {self.variance_bound_log:.12g}")
        return "\n".join(lines) + "\n"


def estimate_importance(
    model: ModelSpec,
    n: int,
    n_samples: int,
    seed: int,
    proposal_p: float | None = None,
    self_normalized: bool = False,
    batch: int = 100_000,
) -> EstimatorResult:
    """Importance-sample the normalizing sum from an independent-edge proposal.

    Draws independent graphs with every edge present with probability
    proposal_p (default: the scalar-problem maximizer, which makes the
    proposal near-optimal in the certified regimes) and averages
    exp(n^2 T(G)) / Q(G). With self_normalized=True the proposal mass is
    used only up to its normalizing constant, as when Q comes from an
    unnormalized chain law.
    """
    if proposal_p is None:
        proposal_p = max(maximize_scalar(model).maximizers)
    if not 0.0 < proposal_p < 1.0:
        raise DomainError("proposal_p must lie in (0, 1)")
    rng = _rng_from_seed(seed)
    m = math.comb(n, 2)
    motifs = [mm for mm, _ in model.terms]
    betas = np.array([b for _, b in model.terms])
    log_p, log_q = math.log(proposal_p), math.log1p(-proposal_p)
    num_log = -math.inf
    den_log = -math.inf
    remaining = n_samples
    while remaining > 0:
        take = min(batch, remaining)
        bits = (rng.random((take, m)) < proposal_p).astype(np.int8)
        dens = batch_motif_densities(motifs, n, bits)
        stat = n**2 * (dens @ betas)
        e_counts = bits.sum(axis=1)
        if self_normalized:
            log_qbar = e_counts * (log_p - log_q)
            num_log = np.logaddexp(num_log, _logsumexp(stat - log_qbar))
            den_log = np.logaddexp(den_log, _logsumexp(-log_qbar))
        else:
            log_mass = e_counts * log_p + (m - e_counts) * log_q
            num_log = np.logaddexp(num_log, _logsumexp(stat - log_mass))
        remaining -= take
    if self_normalized:
        estimate_log = num_log - den_log + m * math.log(2.0)
    else:
        estimate_log = num_log - math.log(n_samples)
    return EstimatorResult(float(estimate_log), n_samples, "importance", seed)


def estimate_mcmle(
    model: ModelSpec,
    model0: ModelSpec,
    n_samples: int,
    chain: ChainConfig,
    thinning: int = 1,
) -> EstimatorResult:
    """Reweighting estimate of the ratio of normalizing sums.

    Samples from a chain targeting the reference model0 and averages
    exp(n^2 (T - T0)(G)). Unbiased for the ratio (target over reference),
    but its relative standard deviation grows exponentially in n^2 for any
    fixed parameter gap; for independent-edge pairs the closed-form bound is
    attached in log domain.
    """
    _require_same_motifs(model, model0)
    motifs = [mm for mm, _ in model.terms]
    dbeta = np.array([b for _, b in model.terms]) - np.array(
        [b for _, b in model0.terms]
    )
    dens = sample_motif_densities(model0, motifs, n_samples, chain, thinning=thinning)
    logw = chain.n**2 * (dens @ dbeta)
    estimate_log = _logsumexp(logw) - math.log(n_samples)
    bound = None
    target_beta = _auto_is_er(model)
    chain_beta = _auto_is_er(model0)
    if target_beta is not None and chain_beta is not None:
        consts = er_mcmle_variance_constants(target_beta, chain_beta, chain.n)
        bound = consts.log_variance_ratio + 2.0 * consts.log_mean
    return EstimatorResult(
        float(estimate_log), n_samples, "mcmle", chain.seed, variance_bound_log=bound
    )


def estimate_acceptance_ratio(
    model: ModelSpec,
    model0: ModelSpec,
    alpha_kind: str,
    n_samples_ref: int,
    n_samples_target: int,
    chain: ChainConfig,
    thinning: int = 1,
) -> EstimatorResult:
    """Two-chain ratio estimate of the normalizing-sum ratio.

    One chain samples the reference law and weights by exp(n^2 T) alpha(G);
    the other samples the target law and weights by exp(n^2 T0) alpha(G).
    The ratio is consistent for any positive alpha; the two standard choices
    are "constant" and "geometric-mean", the inverse geometric mean of the
    two unnormalized densities (alpha = exp(-n^2 (T + T0)/2)), which evens
    out the two weight spreads and lowers the variance.
    """
    if alpha_kind not in ("constant", "geometric-mean"):
        raise DomainError("alpha_kind must be 'constant' or 'geometric-mean'")
    _require_same_motifs(model, model0)
    motifs = [mm for mm, _ in model.terms]
    betas = np.array([b for _, b in model.terms])
    betas0 = np.array([b for _, b in model0.terms])
    child_seeds = np.random.SeedSequence(chain.seed).generate_state(2, dtype=np.uint64)
    cfg_ref = ChainConfig(chain.n, seed=int(child_seeds[0]), start=chain.start)
    cfg_tgt = ChainConfig(chain.n, seed=int(child_seeds[1]), start=chain.start)
    dens_ref = sample_motif_densities(model0, motifs, n_samples_ref, cfg_ref, thinning)
    dens_tgt = sample_motif_densities(model, motifs, n_samples_target, cfg_tgt, thinning)
    n2 = chain.n**2

    def log_alpha(dens):
        if alpha_kind == "constant":
            return np.zeros(len(dens))
        return -0.5 * n2 * (dens @ (betas + betas0))

    log_num = _logsumexp(n2 * (dens_ref @ betas) + log_alpha(dens_ref)) - math.log(
        n_samples_ref
    )
    log_den = _logsumexp(n2 * (dens_tgt @ betas0) + log_alpha(dens_tgt)) - math.log(
        n_samples_target
    )
    if not np.isfinite(log_den):
        raise EstimatorCollapseError(
            "denominator sample mean collapsed to zero; the two laws are too far apart"
        )
    return EstimatorResult(
        float(log_num - log_den),
        n_samples_ref + n_samples_target,
        "acceptance_ratio",
        chain.seed,
    )


def _require_same_motifs(model: ModelSpec, model0: ModelSpec):
    if [m for m, _ in model.terms] != [m for m, _ in model0.terms]:
        raise DomainError("ratio estimators need models sharing one motif list")


# -- closed-form coefficients and variances -----------------------------------------


def fourier_coeff_exp_edges(
    a: float, beta: float, j: int, m: int, normalized: bool = False
) -> float:
    """Expansion coefficient of e^{a E(G)} against a weight-j eigenfunction.

    The unnormalized product form is (1 - e^a)^j (1 + e^{a+beta})^{m-j},
    which depends on the component pattern only through its weight j. The
    normalized=True form divides by the partition sum and restores the
    e^{beta j / 2} component factor, giving the true inner product against
    the stationary law; the two are verified against dense summation in the
    test suite.
    """
    if not 0 <= j <= m:
        raise DomainError("need 0 <= j <= m")
    raw = (1.0 - math.exp(a)) ** j * (1.0 + math.exp(a + beta)) ** (m - j)
    if not normalized:
        return raw
    return raw * math.exp(0.5 * beta * j) / (1.0 + math.exp(beta)) ** m


@dataclass
class VarianceResult:
    exact: float
    asymptotic: float
    bound: float


def variance_mcmc_mean(coefficients, eigenvalues, n_samples: int) -> VarianceResult:
    """Variance of a stationary chain average from spectral data.

    coefficients are the normalized expansion coefficients of the averaged
    function on the nonconstant eigenfunctions, aligned with their
    eigenvalues. The finite-sample weight per component is
    (N - 2 b - N b^2 + 2 b^{N+1})/(1-b)^2, which matches the stationary
    covariance double sum (and equals N at b = 0, giving variance
    ||f||^2 / N). Also returns the large-N asymptotic sum
    (1+b)/(1-b) per component and the crude bound 2 ||f||^2 / (1 - b_max).
    """
    coeffs = np.asarray(coefficients, dtype=float)
    eigs = np.asarray(eigenvalues, dtype=float)
    if coeffs.shape != eigs.shape:
        raise DomainError("coefficient and eigenvalue lists must align")
    if n_samples < 1:
        raise DomainError("need n_samples >= 1")
    if np.any(eigs >= 1.0):
        raise DomainError("eigenvalue 1 among nonconstant components: chain not ergodic")
    nn = n_samples
    w = (nn - 2.0 * eigs - nn * eigs**2 + 2.0 * eigs ** (nn + 1)) / (1.0 - eigs) ** 2
    exact = float(np.sum(coeffs**2 * w)) / nn**2
    asymptotic = float(np.sum(coeffs**2 * (1.0 + eigs) / (1.0 - eigs)))
    norm_sq = float(np.sum(coeffs**2))
    bound = 2.0 * norm_sq / (1.0 - float(np.max(eigs)))
    return VarianceResult(exact, asymptotic, bound)


@dataclass
class McmleVarianceConstants:
    """Closed-form constants behind the MCMLE impracticality bound.

    For a chain at parameter beta estimating toward beta0 in the
    independent-edge model: the per-edge mean of the reweighting factor, the
    per-edge variance growth factor, the spectral prefactor denominator
    2(1 + e^{-beta}), and the resulting relative standard deviation
    sigma/mu, all exactly as the worked bound evaluates them.
    """

    m: int
    per_edge_mean: float
    per_edge_variance_factor: float
    prefactor_denominator: float
    log_mean: float
    log_variance_ratio: float
    sigma_over_mu: float


def er_mcmle_variance_constants(
    beta_target: float, beta_chain: float, n: int
) -> McmleVarianceConstants:
    """Evaluate the MCMLE variance-bound constants for an independent-edge pair.

    sigma^2/mu^2 = (m / (2(1+e^{-beta_chain}))) (F^m - 1) with
    F = 1 + ((1 - e^{beta_target - beta_chain}) / (1 + e^{beta_target}))^2;
    the relative standard deviation explodes exponentially in m whenever the
    parameters differ.
    """
    m = math.comb(n, 2)
    a = beta_target - beta_chain
    per_edge_mean = (1.0 + math.exp(beta_target)) / (1.0 + math.exp(beta_chain))
    factor = 1.0 + ((1.0 - math.exp(a)) / (1.0 + math.exp(a + beta_chain))) ** 2
    denom = 2.0 * (1.0 + math.exp(-beta_chain))
    log_mean = m * math.log(per_edge_mean)
    log_ratio = math.log(m / denom) + _log_expm1(m * math.log(factor))
    return McmleVarianceConstants(
        m=m,
        per_edge_mean=per_edge_mean,
        per_edge_variance_factor=factor,
        prefactor_denominator=denom,
        log_mean=log_mean,
        log_variance_ratio=log_ratio,
        sigma_over_mu=math.exp(0.5 * log_ratio) if log_ratio < 1400.0 else math.inf,
    )


def _log_expm1(x: float) -> float:
    if x > 50.0:
        return x
    return math.log(math.expm1(x))
