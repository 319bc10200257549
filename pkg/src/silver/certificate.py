"""Recursively glued rate certificates and their exact verification.

A certificate at level ``k`` (horizon ``n = 2**k - 1``) is a table of
non-negative multipliers ``lam[i, j]`` over ``i != j`` in ``{0..n, *}`` with

    sum lam[i,j] Q[i,j] = |x0|^2 - |x_n - c_k g_n|^2 + 2 c_k (f* - f_n)

where ``Q[i,j] = 2(f_i - f_j) + 2<g_j, x_j - x_i> - |g_j - g_i|^2`` is the
co-coercivity of the pair and ``x* = 0``, ``g* = 0``.  Both sides are expanded
over the Gram basis ``(x0, g_0, ..., g_n)`` plus the function values, with
iterates written as ``x_t = x0 - sum_{s<t} alpha_s g_s``.  The identity holds
iff every coefficient of the difference is canonically zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from .exact_scalar import (
    ONE,
    RHO,
    SQRT2,
    ZERO,
    CertScalar,
    Interval,
    RadicalScalar,
    Sign,
    decimal_str,
    ring_eval,
    ring_sign,
    rho_pow,
)
from .schedule import Schedule, horizon, schedule_direct, silver_step

__all__ = [
    "STAR",
    "Index",
    "index_key",
    "MultiplierMatrix",
    "GramForm",
    "VerifyReport",
    "LinearHelper",
    "QuadraticHelper",
    "expand_Q",
    "base_cert_n0",
    "base_cert_n1",
    "glue",
    "glue_parts",
    "build_cert",
    "verify",
    "check_star_multipliers",
    "helper_linear_forms",
    "helper_quadratic_forms",
    "export_cert",
]

STAR = "*"
Index = Union[int, str]
Pair = Tuple[Index, Index]


def index_key(i: Index) -> Tuple[int, int]:
    """Sort key putting iterates first, in order, and ``*`` last."""
    return (1, 0) if i == STAR else (0, i)


def pair_key(p: Pair) -> Tuple:
    return (index_key(p[0]), index_key(p[1]))


def _check_index(i: Index, n: int) -> None:
    if i == STAR:
        return
    if not isinstance(i, int) or not 0 <= i <= n:
        raise ValueError(f"index {i!r} outside 0..{n}")


# --------------------------------------------------------------------------
# data types
# --------------------------------------------------------------------------


@dataclass
class MultiplierMatrix:
    """Sparse multipliers ``lam[i, j]``; absent pairs and the diagonal are 0."""

    n: int
    entries: Dict[Pair, CertScalar] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (i, j), v in self.entries.items():
            if i == j:
                raise ValueError("diagonal multipliers are structurally zero")
            _check_index(i, self.n)
            _check_index(j, self.n)
            v = CertScalar.coerce(v)
            if v:
                clean[(i, j)] = v
        self.entries = clean

    def __getitem__(self, pair: Pair) -> CertScalar:
        return self.entries.get(pair, CertScalar())

    def __len__(self) -> int:
        return len(self.entries)

    def items(self) -> Iterator[Tuple[Pair, CertScalar]]:
        for p in sorted(self.entries, key=pair_key):
            yield p, self.entries[p]

    def with_entry(self, i: Index, j: Index, value) -> "MultiplierMatrix":
        out = dict(self.entries)
        out[(i, j)] = CertScalar.coerce(value)
        return MultiplierMatrix(self.n, out)

    def has_star_sparsity(self) -> bool:
        return all(self[(i, STAR)].is_zero() for i in range(self.n))

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiplierMatrix):
            return NotImplemented
        return self.n == other.n and self.entries == other.entries


class GramForm:
    """Quadratic form over ``(x0, g_0..g_n)`` plus linear form over ``(f_0..f_n, f*)``.

    ``quad[(p, q)]`` with ``p <= q`` is the full coefficient of ``<e_p, e_q>``
    (so off-diagonal pairs are stored once, not halved).  Basis position 0 is
    ``x0`` and position ``t + 1`` is ``g_t``.
    """

    __slots__ = ("n", "quad", "lin")

    def __init__(self, n: int) -> None:
        self.n = n
        self.quad: Dict[Tuple[int, int], CertScalar] = {}
        self.lin: Dict[Index, CertScalar] = {}

    @property
    def size(self) -> int:
        return self.n + 2

    def add_lin(self, i: Index, coef) -> None:
        _bump(self.lin, i, CertScalar.coerce(coef))

    def add_inner(self, u: Mapping[int, RadicalScalar], w: Mapping[int, RadicalScalar], coef=ONE) -> None:
        """Add ``coef * <u, w>`` for sparse vectors ``u``, ``w`` in the basis."""
        coef = CertScalar.coerce(coef)
        for p, up in u.items():
            cp = coef.scale(up)
            for q, wq in w.items():
                key = (p, q) if p <= q else (q, p)
                _bump(self.quad, key, cp.scale(wq))

    def add_scaled(self, other: "GramForm", lam) -> None:
        lam = CertScalar.coerce(lam)
        if not lam:
            return
        if lam.is_constant():
            c = lam.constant_part()
            for key, v in other.quad.items():
                _bump(self.quad, key, v.scale(c))
            for key, v in other.lin.items():
                _bump(self.lin, key, v.scale(c))
        else:
            for key, v in other.quad.items():
                _bump(self.quad, key, v * lam)
            for key, v in other.lin.items():
                _bump(self.lin, key, v * lam)

    def __sub__(self, other: "GramForm") -> "GramForm":
        out = self.copy()
        out.add_scaled(other, CertScalar.const(-1))
        return out

    def copy(self) -> "GramForm":
        out = GramForm(self.n)
        out.quad = dict(self.quad)
        out.lin = dict(self.lin)
        return out

    def is_zero(self) -> bool:
        return not self.quad and not self.lin

    def coefficients(self) -> Iterator[Tuple[str, CertScalar]]:
        for (p, q), v in sorted(self.quad.items()):
            yield f"<{_basis_name(p)},{_basis_name(q)}>", v
        for i in sorted(self.lin, key=index_key):
            yield f"f{i}", self.lin[i]

    def max_abs(self, bits: int = 256) -> Interval:
        """Enclosure of the largest coefficient magnitude."""
        lo = hi = Fraction(0)
        for _, v in self.coefficients():
            iv = ring_eval(v, bits)
            a_lo = max(iv.lo, -iv.hi, Fraction(0))
            a_hi = max(abs(iv.lo), abs(iv.hi))
            lo, hi = max(lo, a_lo), max(hi, a_hi)
        return Interval.hull(Interval.from_fraction(lo, bits), Interval.from_fraction(hi, bits))

    def __eq__(self, other) -> bool:
        if not isinstance(other, GramForm):
            return NotImplemented
        return self.n == other.n and self.quad == other.quad and self.lin == other.lin


def _bump(d: dict, key, val: CertScalar) -> None:
    if not val:
        return
    prev = d.get(key)
    if prev is None:
        d[key] = val
        return
    s = prev + val
    if s:
        d[key] = s
    else:
        del d[key]


def _basis_name(p: int) -> str:
    return "x0" if p == 0 else f"g{p - 1}"


# --------------------------------------------------------------------------
# trajectory vectors in the Gram basis
# --------------------------------------------------------------------------


def _steps_of(sched) -> Tuple[RadicalScalar, ...]:
    if isinstance(sched, Schedule):
        return sched.steps
    return tuple(sched)


def _x(t: Index, steps: Sequence[RadicalScalar]) -> Dict[int, RadicalScalar]:
    """``x_t = x0 - sum_{s<t} alpha_s g_s``; ``x* = 0``."""
    if t == STAR:
        return {}
    vec = {0: ONE}
    for s in range(t):
        vec[s + 1] = -steps[s]
    return vec


def _g(t: Index) -> Dict[int, RadicalScalar]:
    if t == STAR:
        return {}
    return {t + 1: ONE}


def _axpy(*pairs) -> Dict[int, RadicalScalar]:
    """Linear combination of sparse vectors given as (coef, vec) pairs."""
    out: Dict[int, RadicalScalar] = {}
    for c, vec in pairs:
        c = RadicalScalar.coerce(c)
        for p, v in vec.items():
            s = out.get(p, ZERO) + c * v
            if s:
                out[p] = s
            else:
                out.pop(p, None)
    return out


def _diff_x(i: Index, j: Index, steps) -> Dict[int, RadicalScalar]:
    """``x_j - x_i`` without materialising both prefixes."""
    if i == STAR or j == STAR:
        return _axpy((1, _x(j, steps)), (-1, _x(i, steps)))
    if j >= i:
        return {s + 1: -steps[s] for s in range(i, j)}
    return {s + 1: steps[s] for s in range(j, i)}


def expand_Q(i: Index, j: Index, sched, n: Optional[int] = None) -> GramForm:
    """Co-coercivity ``Q[i,j]`` written in the Gram basis."""
    steps = _steps_of(sched)
    if n is None:
        n = len(steps)
    if i == j:
        raise ValueError("Q[i,i] is identically zero; pairs must be distinct")
    _check_index(i, n)
    _check_index(j, n)
    form = GramForm(n)
    form.add_lin(i, 2)
    form.add_lin(j, -2)
    gj = _g(j)
    form.add_inner(gj, _diff_x(i, j, steps), 2)
    dg = _axpy((1, gj), (-1, _g(i)))
    form.add_inner(dg, dg, -1)
    return form


def _linear_part(i: Index, j: Index) -> Dict[Index, int]:
    return {i: 2, j: -2}


def rhs_form(k: int, sched=None) -> GramForm:
    """``|x0|^2 - |x_n - C_k g_n|^2 + 2 C_k (f* - f_n)``."""
    n = horizon(k)
    steps = _steps_of(sched) if sched is not None else _level_steps(k)
    ck = CertScalar.symbol(k)
    form = GramForm(n)
    x0 = {0: ONE}
    form.add_inner(x0, x0)
    xn = _x(n, steps)
    gn = _g(n)
    form.add_inner(xn, xn, -1)
    form.add_inner(xn, gn, ck.scale(2))
    form.add_inner(gn, gn, -(ck * ck))
    form.add_lin(STAR, ck.scale(2))
    form.add_lin(n, ck.scale(-2))
    return form


def _level_steps(k: int) -> Tuple[RadicalScalar, ...]:
    return schedule_direct(k).steps if k >= 1 else ()


def lhs_form(lam: MultiplierMatrix, steps: Sequence[RadicalScalar]) -> GramForm:
    """``sum lam[i,j] Q[i,j]``, expanding one pair at a time."""
    acc = GramForm(lam.n)
    for (i, j), v in lam.items():
        acc.add_scaled(expand_Q(i, j, steps, lam.n), v)
    return acc


# --------------------------------------------------------------------------
# construction
# --------------------------------------------------------------------------


def base_cert_n0() -> MultiplierMatrix:
    return MultiplierMatrix(0, {(STAR, 0): CertScalar.const(1)})


def base_cert_n1() -> MultiplierMatrix:
    return MultiplierMatrix(
        1,
        {
            (0, 1): RHO,
            (1, 0): ONE,
            (1, STAR): SQRT2,
            (STAR, 0): SQRT2,
            (STAR, 1): CertScalar.symbol(1),
        },
    )


@dataclass(frozen=True)
class GlueParts:
    theta: MultiplierMatrix
    xi: MultiplierMatrix
    delta: MultiplierMatrix


def glue_parts(sigma: MultiplierMatrix, k: int) -> GlueParts:
    """The three components whose sum is the level ``k + 1`` certificate."""
    n = horizon(k)
    if sigma.n != n:
        raise ValueError(f"level {k} certificate must have horizon {n}, got {sigma.n}")
    if not sigma.has_star_sparsity():
        raise ValueError("gluing needs a certificate with *-sparsity")
    N = 2 * n + 1
    amp = ONE + 2 * RHO

    def shift(i: Index) -> Index:
        return STAR if i == STAR else i + n + 1

    theta: Dict[Pair, CertScalar] = {}
    for (i, j), v in sigma.entries.items():
        theta[(i, j)] = theta.get((i, j), CertScalar()) + v
        sp = (shift(i), shift(j))
        theta[sp] = theta.get(sp, CertScalar()) + v.scale(amp)

    xi: Dict[Pair, CertScalar] = {}
    for t in range(n + 1, N):
        a = silver_step(t) * RHO
        xi[(n, t)] = CertScalar.const(a)
        xi[(N, t)] = CertScalar.const(a)
        xi[(STAR, t)] = CertScalar.const(-2 * a)

    ck = CertScalar.symbol(k)
    delta = {
        (n, N): CertScalar.const(RHO),
        (n, STAR): CertScalar.const(1 - rho_pow(k)),
        (N, n): CertScalar.const(rho_pow(k)),
        (N, STAR): CertScalar.const(2 * RHO - SQRT2 * rho_pow(k + 1)),
        (STAR, n): (1 + rho_pow(k - 1)) - ck,
        (STAR, N): CertScalar.symbol(k + 1) - ck.scale(amp),
    }
    return GlueParts(MultiplierMatrix(N, theta), MultiplierMatrix(N, xi), MultiplierMatrix(N, delta))


def _sum_matrices(*mats: MultiplierMatrix) -> MultiplierMatrix:
    out: Dict[Pair, CertScalar] = {}
    for m in mats:
        for p, v in m.entries.items():
            out[p] = out.get(p, CertScalar()) + v
    return MultiplierMatrix(mats[0].n, out)


def glue(sigma: MultiplierMatrix, k: int) -> MultiplierMatrix:
    """Level ``k + 1`` certificate from a level ``k`` one: Theta + Xi + Delta."""
    parts = glue_parts(sigma, k)
    return _sum_matrices(parts.theta, parts.xi, parts.delta)


def build_cert(k: int) -> MultiplierMatrix:
    if k < 1:
        raise ValueError("level k must be >= 1")
    lam = base_cert_n1()
    for j in range(1, k):
        lam = glue(lam, j)
    return lam


# --------------------------------------------------------------------------
# checks
# --------------------------------------------------------------------------


def check_star_multipliers(sigma: MultiplierMatrix, k: int) -> bool:
    """Multipliers touching ``*``: ``rho^k - 1``, ``C_k`` and the steps."""
    n = horizon(k)
    if sigma.n != n:
        return False
    if sigma[(n, STAR)] != rho_pow(k) - 1:
        return False
    if sigma[(STAR, n)] != CertScalar.symbol(k):
        return False
    return all(sigma[(STAR, t)] == silver_step(t) for t in range(n))


@dataclass
class LinearHelper:
    """Coefficients on ``u = (f_n, f_{2n+1}, f*)``."""

    k: int
    e: Tuple[CertScalar, ...]
    s: Tuple[CertScalar, ...]
    l: Tuple[CertScalar, ...]
    failures: List[str]

    @property
    def ok(self) -> bool:
        return not self.failures


@dataclass
class QuadraticHelper:
    """4x4 matrices on ``v = (x_n, g_n, x_{2n+1}, g_{2n+1})``."""

    k: int
    E: Tuple[Tuple[CertScalar, ...], ...]
    S: Tuple[Tuple[CertScalar, ...], ...]
    L: Tuple[Tuple[CertScalar, ...], ...]
    failures: List[str]

    @property
    def ok(self) -> bool:
        return not self.failures


def _linear_sum(lam: MultiplierMatrix) -> Dict[Index, CertScalar]:
    out: Dict[Index, CertScalar] = {}
    for (i, j), v in lam.entries.items():
        _bump(out, i, v.scale(2))
        _bump(out, j, v.scale(-2))
    return out


def _restrict(vec: Dict[Index, CertScalar], support: Sequence[Index], what: str, failures: List[str]):
    extra = sorted((i for i in vec if i not in support), key=index_key)
    if extra:
        failures.append(f"{what}: nonzero f-coefficients off (f_n, f_2n+1, f*): {extra}")
    return tuple(vec.get(i, CertScalar()) for i in support)


def linear_closed_forms(k: int):
    """Closed-form ``e``, ``s``, ``l`` written with ``1/r = 2C``.

    The ``f*`` entry of ``e`` is ``1/r_{k+1} - 2(1 + rho)/r_k``: the three
    entries must sum to zero since every ``F_ij`` does.
    """
    ck2 = CertScalar.symbol(k).scale(2)
    ck12 = CertScalar.symbol(k + 1).scale(2)
    amp = ONE + 2 * RHO
    e = (ck2, ck2.scale(amp) - ck12, ck12 - ck2.scale(2 + 2 * RHO))
    w = 2 * RHO * (rho_pow(k) - 1)
    s = tuple(CertScalar.const(w * c) for c in (1, 1, -2))
    l = tuple(ei - si for ei, si in zip(e, s))
    return e, s, l


def helper_linear_forms(k: int, sigma: Optional[MultiplierMatrix] = None) -> LinearHelper:
    """Succinct linear forms of one gluing step from level ``k``.

    ``e`` is the gluing error, ``s`` comes from the sparse correction Delta,
    ``l`` from the rank-one correction Xi.  All three are obtained by direct
    expansion and then compared with their closed forms.  The closed-form
    vectors printed in the source derivation carry the Delta/Xi labels the
    other way round; ``s`` from Delta equals the printed ``l`` and vice versa.
    """
    if k < 1:
        raise ValueError("helper forms are defined for k >= 1")
    sigma = build_cert(k) if sigma is None else sigma
    parts = glue_parts(sigma, k)
    n = horizon(k)
    N = 2 * n + 1
    u = (n, N, STAR)
    failures: List[str] = []

    err: Dict[Index, CertScalar] = {}
    ck1 = CertScalar.symbol(k + 1)
    _bump(err, STAR, ck1.scale(2))
    _bump(err, N, ck1.scale(-2))
    for i, v in _linear_sum(parts.theta).items():
        _bump(err, i, -v)
    e = _restrict(err, u, "gluing error", failures)
    s = _restrict(_linear_sum(parts.delta), u, "sparse correction", failures)
    l = _restrict(_linear_sum(parts.xi), u, "rank-one correction", failures)

    e_cf, s_cf, l_cf = linear_closed_forms(k)
    names = ("f_n", "f_2n+1", "f*")
    for a in range(3):
        if e[a] != e_cf[a]:
            failures.append(f"e[{names[a]}] = {e[a]}, closed form {e_cf[a]}")
        if s[a] != l_cf[a]:
            failures.append(f"s[{names[a]}] = {s[a]}, closed form {l_cf[a]}")
        if l[a] != s_cf[a]:
            failures.append(f"l[{names[a]}] = {l[a]}, closed form {s_cf[a]}")
        resid = e[a] - s[a] - l[a]
        if resid:
            failures.append(f"(e - s - l)[{names[a]}] = {resid}")
    return LinearHelper(k, e, s, l, failures)


Mat4 = Tuple[Tuple[CertScalar, ...], ...]


def _sym4(upper: Sequence[Sequence]) -> Mat4:
    """Symmetric 4x4 from its upper triangle given row by row."""
    m = [[CertScalar()] * 4 for _ in range(4)]
    for a in range(4):
        for b in range(a, 4):
            v = CertScalar.coerce(upper[a][b - a])
            m[a][b] = v
            m[b][a] = v
    return tuple(tuple(r) for r in m)


def quadratic_closed_forms(k: int, delta: MultiplierMatrix):
    """Closed-form ``E``, ``S`` (in terms of Delta), ``L`` with ``1/(2r) = C``."""
    n = horizon(k)
    N = 2 * n + 1
    ck = CertScalar.symbol(k)
    ck1 = CertScalar.symbol(k + 1)
    amp = ONE + 2 * RHO
    spike = ONE + rho_pow(k - 1)
    E = _sym4(
        [
            [-2 * RHO, (amp * spike) - ck, 0, 0],
            [ck * ck - amp * spike * spike, 0, 0],
            [2 * RHO, ck1 - ck.scale(amp)],
            [(ck * ck).scale(amp) - ck1 * ck1],
        ]
    )
    D = lambda i, j: delta[(i, j)]  # noqa: E731
    S = _sym4(
        [
            [0, D(N, n) + D(STAR, n), 0, -D(n, N)],
            [-(D(n, STAR) + D(STAR, n) + D(N, n) + D(n, N)), -D(N, n), D(n, N) + D(N, n)],
            [0, D(n, N) + D(STAR, N)],
            [-(D(n, N) + D(N, n) + D(N, STAR) + D(STAR, N))],
        ]
    )
    pk, pk1 = rho_pow(k), rho_pow(k - 1)
    L = _sym4(
        [
            [RHO * -2, RHO * (2 + pk1), 0, RHO],
            [RHO * (-1 - pk - 2 * pk1), RHO * pk1, RHO * (-1 - pk1)],
            [RHO * 2, -RHO],
            [RHO * (1 - pk)],
        ]
    )
    return E, S, L


def _v_vectors(k: int, steps) -> List[Dict[int, RadicalScalar]]:
    n = horizon(k)
    N = 2 * n + 1
    return [_x(n, steps), _g(n), _x(N, steps), _g(N)]


def _expand_matrix(M: Mat4, vs, n: int) -> GramForm:
    form = GramForm(n)
    for a in range(4):
        for b in range(4):
            if M[a][b]:
                form.add_inner(vs[a], vs[b], M[a][b])
    return form


def _invert(mat: List[List[RadicalScalar]]) -> List[List[RadicalScalar]]:
    """Gauss-Jordan inverse over Q(sqrt2)."""
    size = len(mat)
    aug = [list(row) + [ONE if r == c else ZERO for c in range(size)] for r, row in enumerate(mat)]
    for col in range(size):
        piv = next(r for r in range(col, size) if aug[r][col])
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = aug[col][col].inverse()
        aug[col] = [v * inv for v in aug[col]]
        for r in range(size):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[size:] for row in aug]


def _extract4(form: GramForm, k: int, steps, what: str, failures: List[str]) -> Mat4:
    """Recover the unique symmetric ``M`` with ``form = <M, v v^T>``.

    Reads the form on four pivot coordinates ``(x0, g_n, g_{n+1}, g_{2n+1})``
    where the ``v`` vectors are independent, solves for ``M``, then
    re-expands ``M`` and reports any coefficient the 4 variables cannot
    account for.
    """
    n = horizon(k)
    N = 2 * n + 1
    pivots = [0, n + 1, n + 2, N + 1]
    vs = _v_vectors(k, steps)
    V = [[vec.get(p, ZERO) for p in pivots] for vec in vs]
    W = _invert(V)
    G = [[CertScalar()] * 4 for _ in range(4)]
    for a, p in enumerate(pivots):
        for b, q in enumerate(pivots):
            key = (p, q) if p <= q else (q, p)
            v = form.quad.get(key, CertScalar())
            G[a][b] = v if a == b else v.scale(Fraction(1, 2))
    # M = W^T G W with W = V^-1 acting on pivot coordinates
    GW = [[sum((G[a][c].scale(W[c][b]) for c in range(4)), CertScalar()) for b in range(4)] for a in range(4)]
    M = tuple(
        tuple(sum((GW[c][b].scale(W[c][a]) for c in range(4)), CertScalar()) for b in range(4))
        for a in range(4)
    )
    rebuilt = _expand_matrix(M, vs, form.n)
    if rebuilt.quad != form.quad:
        stray = sorted(set(form.quad) ^ set(rebuilt.quad) | {k for k in form.quad if rebuilt.quad.get(k) != form.quad[k]})
        names = [f"<{_basis_name(p)},{_basis_name(q)}>" for p, q in stray[:5]]
        failures.append(f"{what}: not a quadratic form in (x_n, g_n, x_2n+1, g_2n+1); stray {names}")
    return M


def _quad_only(form: GramForm) -> GramForm:
    out = form.copy()
    out.lin = {}
    return out


def helper_quadratic_forms(k: int, sigma: Optional[MultiplierMatrix] = None) -> QuadraticHelper:
    """Succinct quadratic forms of one gluing step from level ``k``.

    ``E`` is the gluing error, ``S`` comes from Delta and ``L`` from Xi.
    Each is extracted from a full Gram expansion at horizon ``2n + 1``,
    checked to live on the four vectors only, and compared with its closed
    form before checking ``E - S - L = 0``.
    """
    if k < 1:
        raise ValueError("helper forms are defined for k >= 1")
    sigma = build_cert(k) if sigma is None else sigma
    parts = glue_parts(sigma, k)
    steps = _level_steps(k + 1)
    failures: List[str] = []

    err = _quad_only(rhs_form(k + 1, steps)) - _quad_only(lhs_form(parts.theta, steps))
    E = _extract4(err, k, steps, "gluing error", failures)
    S = _extract4(_quad_only(lhs_form(parts.delta, steps)), k, steps, "sparse correction", failures)
    L = _extract4(_quad_only(lhs_form(parts.xi, steps)), k, steps, "rank-one correction", failures)

    E_cf, S_cf, L_cf = quadratic_closed_forms(k, parts.delta)
    for name, got, want in (("E", E, E_cf), ("S", S, S_cf), ("L", L, L_cf)):
        for a in range(4):
            for b in range(a, 4):
                if got[a][b] != want[a][b]:
                    failures.append(f"{name}[{a},{b}] = {got[a][b]}, closed form {want[a][b]}")
    for a in range(4):
        for b in range(a, 4):
            resid = E[a][b] - S[a][b] - L[a][b]
            if resid:
                failures.append(f"(E - S - L)[{a},{b}] = {resid}")
    return QuadraticHelper(k, E, S, L, failures)


@dataclass
class VerifyReport:
    k: int
    identity_ok: bool
    residual_max_abs: Interval
    nonneg_ok: bool
    sparsity_ok: bool
    lemma2_ok: bool
    helper_linear_ok: Optional[bool]  # None where no gluing step applies
    helper_quadratic_ok: Optional[bool]
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        flags = (
            self.identity_ok,
            self.nonneg_ok,
            self.sparsity_ok,
            self.lemma2_ok,
            self.helper_linear_ok,
            self.helper_quadratic_ok,
        )
        return all(f is not False for f in flags)

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "n": horizon(self.k),
            "passed": self.passed,
            "identity_ok": self.identity_ok,
            "residual_max_abs": [str(self.residual_max_abs.lo), str(self.residual_max_abs.hi)],
            "nonneg_ok": self.nonneg_ok,
            "sparsity_ok": self.sparsity_ok,
            "lemma2_ok": self.lemma2_ok,
            "helper_linear_ok": self.helper_linear_ok,
            "helper_quadratic_ok": self.helper_quadratic_ok,
            "failures": list(self.failures),
        }


def verify(lam: MultiplierMatrix, k: int, max_bits: int = 4096, helpers: bool = True) -> VerifyReport:
    """Check a level-``k`` certificate exactly.

    Order: identity, non-negativity, *-sparsity, the ``*`` multipliers, then
    the succinct helper forms of the next gluing step (``k >= 1`` only).
    """
    n = horizon(k)
    if lam.n != n:
        raise ValueError(f"level {k} certificate must have horizon {n}, got {lam.n}")
    steps = _level_steps(k)
    failures: List[str] = []

    residual = lhs_form(lam, steps) - rhs_form(k, steps)
    identity_ok = residual.is_zero()
    if not identity_ok:
        for name, v in list(residual.coefficients())[:5]:
            failures.append(f"identity residual {name}: {v}")

    nonneg_ok = True
    for (i, j), v in lam.items():
        if ring_sign(v, max_bits).verdict is Sign.NEGATIVE:
            nonneg_ok = False
            failures.append(f"negative multiplier ({i},{j}) = {v}")

    sparsity_ok = lam.has_star_sparsity()
    if not sparsity_ok:
        failures.append("*-sparsity violated")

    if k >= 1:
        lemma2_ok = check_star_multipliers(lam, k)
    else:
        lemma2_ok = lam[(STAR, 0)] == 1
    if not lemma2_ok:
        failures.append("multipliers involving * do not match rho^k - 1, C_k, alpha_t")

    lin_ok = quad_ok = None
    if helpers and k >= 1:
        if sparsity_ok:
            lin = helper_linear_forms(k, lam)
            quad = helper_quadratic_forms(k, lam)
            lin_ok, quad_ok = lin.ok, quad.ok
            failures.extend(lin.failures + quad.failures)
        else:
            lin_ok = quad_ok = False

    return VerifyReport(
        k=k,
        identity_ok=identity_ok,
        residual_max_abs=residual.max_abs(),
        nonneg_ok=nonneg_ok,
        sparsity_ok=sparsity_ok,
        lemma2_ok=lemma2_ok,
        helper_linear_ok=lin_ok,
        helper_quadratic_ok=quad_ok,
        failures=failures,
    )


def export_cert(lam: MultiplierMatrix, fmt: str = "exact", digits: int = 17) -> str:
    """Deterministic dump of the non-zero multipliers."""
    rows = [(i, j, v) for (i, j), v in lam.items()]
    if fmt == "exact":
        return "".join(f"({i},{j}) = {v}  ~ {decimal_str(v, digits)}\n" for i, j, v in rows)
    if fmt == "csv":
        import csv
        import io

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "j", "exact", "decimal"])
        for i, j, v in rows:
            w.writerow([i, j, str(v), decimal_str(v, digits)])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")
