"""Sign-bit trellis shaping and per-user nested-lattice coset selection.

Both schemes realize selective mapping under the independency condition:
the transmitter may alter each data symbol only in ways each receiver can
undo on its own coordinate(s).

Sign-bit shaping maps payload bits onto PAM symbols (one sign bit plus
magnitude bits per symbol) and XORs the sign bits with a codeword of a
binary convolutional code; every codeword yields the same information, so
the transmitter searches the coset {u(payload, c) : c in C} for the vector
minimizing gamma = u^T Q u. Because Q couples all dimensions, branch
metrics come from the triangular factorization Q = L L^T: with G = L^T,
gamma = ||G u||^2 and component i of G u depends only on u_i..u_M, so the
code tree is searched in reverse symbol order with exact additive metric
increments (a depth-first branch-and-bound over the trellis; see
``trellis_shape``).

Nested-lattice selection gives each user K a partition Lambda/Lambda' of a
scaled integer lattice in 2*n_u dimensions; shifting a user's block by any
element of Lambda' preserves its information modulo Lambda', and the
transmitter exhaustively minimizes gamma over the Cartesian product of
per-user shift sets.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import linalg
from .errors import (
    ConfigError,
    DimensionMismatchError,
    LengthMismatchError,
    SearchBudgetExceededError,
)
from .precoders import SEARCH_BUDGET, PrecodeResult, offset_range
from .theory import ChannelMatrix

ORACLE_BUDGET = 2**16


# ---------------------------------------------------------------------------
# Convolutional shaping code
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShapingCode:
    """Feed-forward binary convolutional code of rate k_s/n_s.

    ``generators[i][j]`` is the tap mask of output i over input stream j:
    bit ``memory`` of the mask taps the current input bit, bit
    ``memory - d`` taps the input delayed by d steps (the usual
    most-significant-digit-first octal convention, e.g. 0o7 = 1 + D + D^2
    and 0o5 = 1 + D^2 at memory 2). Each input stream drives its own
    shift register of ``memory`` bits; the encoder state is their
    concatenation, 2**(k_s * memory) states in all.
    """

    k_s: int
    n_s: int
    generators: Tuple[Tuple[int, ...], ...]
    memory: int

    @property
    def n_states(self) -> int:
        return 1 << (self.k_s * self.memory)

    def codeword_count(self, n_steps: int) -> int:
        """Number of distinct terminated input sequences over n_steps."""
        free = max(0, n_steps - self.term_steps) * self.k_s
        return 1 << free

    @property
    def term_steps(self) -> int:
        """Zero-input steps needed to drive the encoder back to state 0."""
        return self.memory  # one register bit retired per step, per stream


def shaping_code(generators, k_s: int = 1, memory: Optional[int] = None) -> ShapingCode:
    """Build a ShapingCode from tap masks.

    ``generators`` is a sequence of n_s masks (ints, already in numeric
    form — write them as octal literals) for k_s = 1, or a sequence of n_s
    length-k_s mask sequences for k_s > 1. ``memory`` defaults to the
    largest tap degree.
    """
    if k_s < 1:
        raise ConfigError("k_s must be >= 1")
    rows: List[Tuple[int, ...]] = []
    for g in generators:
        if isinstance(g, (int, np.integer)):
            row = (int(g),)
        else:
            row = tuple(int(x) for x in g)
        if len(row) != k_s:
            raise ConfigError(
                f"each generator needs {k_s} tap mask(s), got {len(row)}"
            )
        if any(x < 0 for x in row):
            raise ConfigError("tap masks must be non-negative")
        rows.append(row)
    n_s = len(rows)
    if n_s <= k_s:
        raise ConfigError(f"need n_s > k_s >= 1, got k_s={k_s}, n_s={n_s}")
    max_deg = max((x.bit_length() - 1 for row in rows for x in row if x), default=0)
    if memory is None:
        memory = max_deg
    memory = int(memory)
    if memory < 0 or max_deg > memory:
        raise ConfigError(
            f"generator degree {max_deg} exceeds declared memory {memory}"
        )
    return ShapingCode(k_s=k_s, n_s=n_s, generators=tuple(rows), memory=memory)


def code_from_octal(spec: str, k_s: int = 1, memory: Optional[int] = None) -> ShapingCode:
    """Parse a comma-separated octal generator string, e.g. "7,5"."""
    toks = [t.strip() for t in str(spec).split(",") if t.strip()]
    if not toks:
        raise ConfigError(f"no generators in {spec!r}")
    try:
        masks = [int(t, 8) for t in toks]
    except ValueError as exc:
        raise ConfigError(f"bad octal generator in {spec!r}: {exc}") from None
    return shaping_code(masks, k_s=k_s, memory=memory)


DEFAULT_CODE_SPEC = "7,5"


def default_code() -> ShapingCode:
    """The canonical small shaping code: rate (1,2), generators (7,5) octal."""
    return code_from_octal(DEFAULT_CODE_SPEC)


def _as_bits(bits, name: str) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise LengthMismatchError(f"{name} must be a flat bit sequence")
    arr = arr.astype(np.int64)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise LengthMismatchError(f"{name} must contain only 0/1 values")
    return arr


def conv_encode(code: ShapingCode, bits) -> np.ndarray:
    """Encode from the all-zero state, n_s output bits per k_s input bits."""
    bits = _as_bits(bits, "input bits")
    if bits.size % code.k_s:
        raise LengthMismatchError(
            f"input length {bits.size} is not a multiple of k_s={code.k_s}"
        )
    steps = bits.size // code.k_s
    state = [0] * code.k_s
    out = np.empty(steps * code.n_s, dtype=np.int64)
    for t in range(steps):
        windows = [
            (int(bits[t * code.k_s + j]) << code.memory) | state[j]
            for j in range(code.k_s)
        ]
        for i in range(code.n_s):
            acc = 0
            for j in range(code.k_s):
                acc ^= (code.generators[i][j] & windows[j]).bit_count() & 1
            out[t * code.n_s + i] = acc
        state = [w >> 1 for w in windows]
    return out


# ---------------------------------------------------------------------------
# Partitioned PAM constellation (sign bit + magnitude bits)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PartitionedConstellation:
    """Uniform PAM levels partitioned by sign patterns for shaping.

    Each symbol carries ``bits_per_symbol`` bits: one sign bit (1 means
    negative) followed by magnitude bits (natural binary, 0 = innermost
    level). One trellis step controls the sign bits of ``n_s`` consecutive
    symbols; ``subset_of`` labels each n_s-symbol block with its sign
    pattern (first symbol's sign is the most significant bit), giving the
    2**n_s shaping subsets of the block signal set.
    """

    pam_levels: np.ndarray
    spacing: float
    tau: float
    n_s: int
    bits_per_symbol: int
    subset_of: Dict[Tuple[float, ...], int]

    @property
    def n_levels(self) -> int:
        return self.pam_levels.size

    def sign_bit(self, x: float) -> int:
        return 1 if x < 0 else 0

    def magnitude_index(self, x: float) -> int:
        k = int(round(abs(x) / self.spacing - 0.5))
        if not (0 <= k < self.n_levels // 2) or abs(
            abs(x) - self.spacing * (k + 0.5)
        ) > 1e-6 * self.spacing:
            raise ValueError(f"{x!r} is not a constellation level")
        return k

    def level(self, sign: int, magnitude: int) -> float:
        if not 0 <= magnitude < self.n_levels // 2:
            raise ValueError(f"magnitude index {magnitude} out of range")
        return (1.0 - 2.0 * sign) * self.spacing * (magnitude + 0.5)

    def subset_label(self, block: Sequence[float]) -> int:
        if len(block) != self.n_s:
            raise LengthMismatchError(
                f"block needs {self.n_s} symbols, got {len(block)}"
            )
        label = 0
        for x in block:
            label = (label << 1) | self.sign_bit(float(x))
        return label


def pam_constellation(
    n_levels: int,
    spacing: float = 1.0,
    n_s: int = 2,
    tau: Optional[float] = None,
) -> PartitionedConstellation:
    """Symmetric uniform PAM with a sign/magnitude bit labeling.

    Levels are spacing*(k + 1/2) for k = 0..n_levels/2 - 1 and their
    negatives; ``tau`` (default n_levels*spacing) is the modulo period and
    strictly contains every level in [-tau/2, tau/2).
    """
    n_levels = int(n_levels)
    if n_levels < 2 or n_levels & (n_levels - 1):
        raise ConfigError(f"n_levels must be a power of two >= 2, got {n_levels}")
    if spacing <= 0.0:
        raise ConfigError("spacing must be positive")
    if n_s < 1:
        raise ConfigError("n_s must be >= 1")
    if tau is None:
        tau = n_levels * spacing
    tau = float(tau)
    levels = spacing * (np.arange(n_levels) - (n_levels - 1) / 2.0)
    if levels[0] < -tau / 2.0 or levels[-1] >= tau / 2.0:
        raise ConfigError("PAM levels must lie inside [-tau/2, tau/2)")
    subset: Dict[Tuple[float, ...], int] = {}
    for block in itertools.product(levels.tolist(), repeat=n_s):
        label = 0
        for x in block:
            label = (label << 1) | (1 if x < 0 else 0)
        subset[block] = label
    return PartitionedConstellation(
        pam_levels=levels,
        spacing=float(spacing),
        tau=tau,
        n_s=n_s,
        bits_per_symbol=int(math.log2(n_levels)),
        subset_of=subset,
    )


def payload_to_coset(payload_bits, codeword_bits, cons: PartitionedConstellation) -> np.ndarray:
    """Map payload bits to PAM symbols, sign bits XORed with a codeword.

    The payload supplies ``bits_per_symbol`` bits per symbol, sign bit
    first; the codeword supplies one XOR bit per symbol. All codewords of
    the shaping code therefore carry the same information.
    """
    payload = _as_bits(payload_bits, "payload bits")
    codeword = _as_bits(codeword_bits, "codeword bits")
    bps = cons.bits_per_symbol
    n_sym = codeword.size
    if payload.size != n_sym * bps:
        raise LengthMismatchError(
            f"payload has {payload.size} bits but {n_sym} symbols need {n_sym * bps}"
        )
    u = np.empty(n_sym, dtype=np.float64)
    for j in range(n_sym):
        sign = int(payload[j * bps]) ^ int(codeword[j])
        k = 0
        for bit in payload[j * bps + 1 : (j + 1) * bps]:
            k = (k << 1) | int(bit)
        u[j] = cons.level(sign, k)
    return u


def coset_to_payload(u, codeword_bits, cons: PartitionedConstellation) -> np.ndarray:
    """Invert payload_to_coset from received symbols and the codeword.

    Each receiver reads its own coordinate: the magnitude bits come from
    the level's subset-free magnitude index, and the payload sign bit is
    the received sign XOR the codeword bit.
    """
    u = linalg.as_vector(u, "u")
    codeword = _as_bits(codeword_bits, "codeword bits")
    if u.size != codeword.size:
        raise LengthMismatchError(
            f"{u.size} symbols but {codeword.size} codeword bits"
        )
    bps = cons.bits_per_symbol
    payload = np.empty(u.size * bps, dtype=np.int64)
    for j, x in enumerate(u):
        k = cons.magnitude_index(float(x))
        payload[j * bps] = cons.sign_bit(float(x)) ^ int(codeword[j])
        for pos in range(bps - 1):
            payload[j * bps + 1 + pos] = (k >> (bps - 2 - pos)) & 1
    return payload


# ---------------------------------------------------------------------------
# Minimum-energy coset search over the code trellis
# ---------------------------------------------------------------------------


def _check_trellis_args(ch: ChannelMatrix, payload_bits, code: ShapingCode,
                        cons: PartitionedConstellation):
    if code.k_s != 1:
        raise ConfigError("trellis search supports k_s = 1 codes only")
    if code.n_s != cons.n_s:
        raise ConfigError(
            f"code emits {code.n_s} bits per step but constellation groups {cons.n_s}"
        )
    m = ch.m
    if m % code.n_s:
        raise DimensionMismatchError(
            f"M = {m} is not divisible by symbols-per-step n_s = {code.n_s}"
        )
    payload = _as_bits(payload_bits, "payload bits")
    if payload.size != m * cons.bits_per_symbol:
        raise LengthMismatchError(
            f"payload has {payload.size} bits but M = {m} symbols need "
            f"{m * cons.bits_per_symbol}"
        )
    return payload


def _symbol_options(payload: np.ndarray, cons: PartitionedConstellation, m: int) -> np.ndarray:
    """u_opt[j, c] = value of symbol j when its codeword bit is c."""
    bps = cons.bits_per_symbol
    u_opt = np.empty((m, 2), dtype=np.float64)
    for j in range(m):
        sign = int(payload[j * bps])
        k = 0
        for bit in payload[j * bps + 1 : (j + 1) * bps]:
            k = (k << 1) | int(bit)
        u_opt[j, 0] = cons.level(sign, k)
        u_opt[j, 1] = cons.level(sign ^ 1, k)
    return u_opt


def _reachable_states(code: ShapingCode, n_steps: int) -> np.ndarray:
    """reach[t, s] = encoder can be in state s at time t on a terminated path."""
    m_reg = code.memory
    n_states = 1 << m_reg
    reach = np.zeros((n_steps + 1, n_states), dtype=bool)
    reach[0, 0] = True
    for t in range(n_steps):
        inputs = (0,) if t >= n_steps - m_reg else (0, 1)
        for s in range(n_states):
            if reach[t, s]:
                for u in inputs:
                    nxt = ((u << (m_reg - 1)) | (s >> 1)) if m_reg else 0
                    reach[t + 1, nxt] = True
    return reach


def _result_from_u(ch: ChannelMatrix, u: np.ndarray, index: int, count: int,
                   meta: dict) -> PrecodeResult:
    s = ch.h_inv @ u
    return PrecodeResult(
        u_chosen=u,
        s=s,
        gamma=float(s @ s),
        candidate_index=index,
        n_candidates=count,
        meta=meta,
    )


def trellis_shape(
    ch: ChannelMatrix,
    payload_bits,
    code: ShapingCode,
    cons: PartitionedConstellation,
) -> PrecodeResult:
    """Exact minimum-energy coset member via search over the code trellis.

    The encoder runs M/n_s steps (the last ``memory`` with forced zero
    inputs so every codeword is terminated). gamma = ||G u||^2 with
    G = L^T upper triangular, so the search walks the trellis backward
    from the final all-zero state: stepping from time t+1 to t fixes the
    step's output bits, hence symbols t*n_s..t*n_s+n_s-1, completing
    components t*n_s..t*n_s+n_s-1 of G u — exact additive metric
    increments. A branch is pruned when its partial metric already exceeds
    the incumbent energy. Among exact energy ties the lexicographically
    smallest codeword wins; the result is bit-identical to exhaustive
    coset enumeration under the same tie-break.
    """
    payload = _check_trellis_args(ch, payload_bits, code, cons)
    m = ch.m
    n_s = code.n_s
    n_steps = m // n_s
    m_reg = code.memory
    u_opt = _symbol_options(payload, cons, m)
    reach = _reachable_states(code, n_steps)
    if not reach[n_steps, 0]:
        raise ConfigError("shaping code cannot terminate in the given step count")
    g_upper = ch.chol.T
    masks = [row[0] for row in code.generators]

    u_vec = np.zeros(m, dtype=np.float64)
    cw = np.zeros(m, dtype=np.int64)
    inputs = np.zeros(n_steps, dtype=np.int64)

    best_gamma = math.inf
    best_cw: Optional[Tuple[int, ...]] = None
    best_u: Optional[np.ndarray] = None
    best_inputs: Optional[np.ndarray] = None
    best_metric = math.inf

    def expand(t_next: int, state_next: int, partial: float):
        """Assign step t = t_next - 1; steps t_next..end already fixed."""
        nonlocal best_gamma, best_cw, best_u, best_inputs, best_metric
        if t_next == 0:
            gamma = ch.energy(u_vec)
            cw_tuple = tuple(int(b) for b in cw)
            if gamma < best_gamma or (gamma == best_gamma and
                                      (best_cw is None or cw_tuple < best_cw)):
                best_gamma = gamma
                best_cw = cw_tuple
                best_u = u_vec.copy()
                best_inputs = inputs.copy()
                best_metric = partial
            return
        t = t_next - 1
        base = t * n_s
        if m_reg:
            u_in = (state_next >> (m_reg - 1)) & 1
            low = state_next & ((1 << (m_reg - 1)) - 1)
            prevs = [((low << 1) | b, u_in) for b in (0, 1)]
        else:
            prevs = [(0, 0), (0, 1)]
        children = []
        for state_prev, u_in in prevs:
            if not reach[t, state_prev]:
                continue
            window = (u_in << m_reg) | state_prev
            bits = [(masks[i] & window).bit_count() & 1 for i in range(n_s)]
            inc = 0.0
            for i in range(n_s):
                u_vec[base + i] = u_opt[base + i, bits[i]]
            for i in range(n_s):
                comp = float(g_upper[base + i, base + i:] @ u_vec[base + i:])
                inc += comp * comp
            children.append((inc, bits, state_prev, u_in,
                             u_vec[base:base + n_s].copy()))
        children.sort(key=lambda c: (c[0], c[1]))
        slack = 1e-9 * (1.0 + abs(best_gamma)) if math.isfinite(best_gamma) else math.inf
        for inc, bits, state_prev, u_in, block in children:
            if partial + inc > best_gamma + slack:
                break  # children are sorted; the rest prune too
            u_vec[base:base + n_s] = block
            cw[base:base + n_s] = bits
            inputs[t] = u_in
            expand(t, state_prev, partial + inc)

    expand(n_steps, 0, 0.0)
    assert best_u is not None  # the all-zero codeword path always exists

    free = max(0, n_steps - m_reg)
    index = 0
    for t in range(free):
        index = (index << 1) | int(best_inputs[t])
    meta = {
        "codeword": np.array(best_cw, dtype=np.int64),
        "inputs": best_inputs,
        "payload": payload.copy(),
        "path_metric": best_metric,
        "tau": cons.tau,
    }
    return _result_from_u(ch, best_u, index, code.codeword_count(n_steps), meta)


def exhaustive_shape(
    ch: ChannelMatrix,
    payload_bits,
    code: ShapingCode,
    cons: PartitionedConstellation,
    budget: int = ORACLE_BUDGET,
) -> PrecodeResult:
    """Oracle mode: enumerate every terminated codeword and scan for the minimum.

    Semantics are identical to ``trellis_shape`` (same tie-break); kept as
    an independently coded cross-check and refused beyond ``budget``
    codewords.
    """
    payload = _check_trellis_args(ch, payload_bits, code, cons)
    m = ch.m
    n_steps = m // code.n_s
    free = max(0, n_steps - code.memory)
    count = 1 << free
    if count > budget:
        raise SearchBudgetExceededError(
            f"{count} codewords exceed the oracle budget {budget}"
        )
    best: Optional[Tuple[float, Tuple[int, ...], int, np.ndarray, np.ndarray]] = None
    for v in range(count):
        in_bits = [(v >> (free - 1 - t)) & 1 for t in range(free)]
        in_bits += [0] * (n_steps - free)
        codeword = conv_encode(code, in_bits)
        u = payload_to_coset(payload, codeword, cons)
        gamma = ch.energy(u)
        key = (gamma, tuple(int(b) for b in codeword))
        if best is None or key < best[:2]:
            best = key + (v, u, codeword)
    assert best is not None
    gamma, cw_tuple, v, u, codeword = best
    meta = {
        "codeword": codeword,
        "inputs": np.array(
            [(v >> (free - 1 - t)) & 1 for t in range(free)] + [0] * (n_steps - free),
            dtype=np.int64,
        ),
        "payload": payload.copy(),
        "tau": cons.tau,
    }
    return _result_from_u(ch, u, v, count, meta)


# ---------------------------------------------------------------------------
# Per-user nested-lattice partition
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LatticePartition:
    """Self-similar partition Lambda/Lambda' of a scaled integer lattice.

    Lambda = spacing * Z^(2 n_u) per user and Lambda' = q * Lambda, so
    |Lambda/Lambda'| = q^(2 n_u). ``cosets`` holds the coset
    representatives (one point per coset) inside the fundamental domain
    [-q*spacing/2, q*spacing/2)^(2 n_u); they double as the per-user
    constellation. The search shift set is Lambda'-valued:
    q*spacing times an integer from the same centered range used by
    vector perturbation.
    """

    n_u: int
    q: int
    spacing: float
    cosets: np.ndarray

    @property
    def dim(self) -> int:
        return 2 * self.n_u

    @property
    def coset_count(self) -> int:
        return self.q ** self.dim

    @property
    def modulo_period(self) -> float:
        """Per-coordinate period of Lambda': q * spacing."""
        return self.q * self.spacing

    def offsets(self) -> np.ndarray:
        """The q^(2 n_u) Lambda' shift vectors searched per user."""
        rng = self.q * self.spacing * offset_range(self.q)
        grids = np.meshgrid(*([rng] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)


def lattice_partition(n_u: int, q: int, spacing: float = 1.0) -> LatticePartition:
    """Build the self-similar partition Lambda / q*Lambda in 2*n_u dimensions."""
    n_u = int(n_u)
    q = int(q)
    if n_u < 1:
        raise ConfigError("n_u must be >= 1")
    if q < 1:
        raise ConfigError("q must be >= 1")
    if spacing <= 0.0:
        raise ConfigError("spacing must be positive")
    # Residues centered into the half-open fundamental domain of Lambda'.
    reps = spacing * np.arange(-(q // 2), q - (q // 2))
    dim = 2 * n_u
    grids = np.meshgrid(*([reps] * dim), indexing="ij")
    cosets = np.stack([g.ravel() for g in grids], axis=-1)
    return LatticePartition(n_u=n_u, q=q, spacing=float(spacing), cosets=cosets)


def nested_select(
    ch: ChannelMatrix,
    user_symbols,
    part: LatticePartition,
    budget: int = SEARCH_BUDGET,
) -> PrecodeResult:
    """Jointly minimize gamma over the per-user Lambda' shift sets.

    ``user_symbols`` is a (K, 2*n_u) array of per-user blocks with
    K * 2*n_u = M. Every combination of per-user shifts (q^(2*n_u) each,
    |Lambda/Lambda'|^K in total) is evaluated; ties go to the
    lexicographically smallest flattened shift vector. Receivers recover
    their block by folding modulo q*spacing per coordinate.
    """
    symbols = np.asarray(user_symbols, dtype=np.float64)
    if symbols.ndim == 1:
        symbols = symbols.reshape(-1, part.dim)
    if symbols.ndim != 2 or symbols.shape[1] != part.dim:
        raise DimensionMismatchError(
            f"user_symbols must be (K, {part.dim}), got {symbols.shape}"
        )
    k_users = symbols.shape[0]
    m = k_users * part.dim
    if m != ch.m:
        raise DimensionMismatchError(
            f"K * 2n_u = {m} does not match channel dimension {ch.m}"
        )
    per_user = part.coset_count
    total = per_user**k_users
    if total > budget:
        raise SearchBudgetExceededError(
            f"q^(2 n_u K) = {total} exceeds the exhaustive-search budget {budget}"
        )
    offsets = part.offsets()
    # Joint enumeration, user 0 varying slowest: lexicographic in the
    # flattened shift vector because each user's offset rows already are.
    idx_grids = np.meshgrid(*([np.arange(per_user)] * k_users), indexing="ij")
    idx = np.stack([g.ravel() for g in idx_grids], axis=-1)  # (total, K)
    u0 = symbols.reshape(-1)
    candidates = np.empty((total, m), dtype=np.float64)
    for k in range(k_users):
        candidates[:, k * part.dim : (k + 1) * part.dim] = (
            symbols[k][None, :] + offsets[idx[:, k]]
        )
    energies = ch.energies(candidates)
    best = int(np.argmin(energies))
    u = candidates[best].copy()
    meta = {
        "offset": (u - u0).copy(),
        "user_offset_indices": idx[best].copy(),
        "q": part.q,
        "spacing": part.spacing,
        "tau": part.modulo_period,
    }
    return _result_from_u(ch, u, best, total, meta)
