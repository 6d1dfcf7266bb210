"""Block-diagonal LMI model of the equiangular-lines SDP and SDPA text I/O.

A problem reads

    maximize  objective_constant + sum_j objective_coeffs[j] * x_j
    s.t.      A_0^b + sum_j x_j A_j^b  >= 0   for every block b,

with dense PSD blocks and diagonal (componentwise nonnegativity) blocks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from eqlines.gegenbauer import gegenbauer_eval
from eqlines.numerics import RationalLike, SymMatrixExact, as_rational, is_psd_exact
from eqlines.threepoint import s_matrix

DENSE = "dense"
DIAG = "diag"

NUM_VARS = 6


@dataclass(frozen=True)
class Block:
    kind: str
    mats: tuple[SymMatrixExact, ...]
    label: str = ""
    row_labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (DENSE, DIAG):
            raise ValueError(f"unknown block kind {self.kind!r}")
        dims = {m.dim for m in self.mats}
        if len(dims) != 1:
            raise ValueError(f"block {self.label!r}: coefficient matrices differ in size {sorted(dims)}")
        if self.kind == DIAG and not all(m.is_diagonal() for m in self.mats):
            raise ValueError(f"block {self.label!r}: diagonal block holds off-diagonal entries")

    @property
    def dim(self) -> int:
        return self.mats[0].dim

    def row_label(self, i: int) -> str:
        if i < len(self.row_labels):
            return self.row_labels[i]
        return f"{self.label}[{i}]"

    def float_mats(self) -> list[np.ndarray]:
        """A_0..A_m as float arrays; diagonal blocks come back as 1-d vectors."""
        out = []
        for m in self.mats:
            a = m.to_float().array
            out.append(np.diag(a).copy() if self.kind == DIAG else a.copy())
        return out


@dataclass(frozen=True)
class LinearMatrixProblem:
    num_vars: int
    objective_constant: Fraction
    objective_coeffs: tuple[Fraction, ...]
    blocks: tuple[Block, ...]
    sense: str = "maximize"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.objective_coeffs) != self.num_vars:
            raise ValueError("objective length does not match num_vars")
        for b in self.blocks:
            if len(b.mats) != self.num_vars + 1:
                raise ValueError(f"block {b.label!r} has {len(b.mats)} matrices, "
                                 f"expected {self.num_vars + 1}")

    def block_dims(self) -> list[int]:
        return [b.dim for b in self.blocks]

    def objective(self, x: Sequence) -> float:
        return float(self.objective_constant) + float(
            sum(float(c) * float(xi) for c, xi in zip(self.objective_coeffs, x)))

    def origin_feasible(self) -> bool:
        """Exact check that x = 0 satisfies every block."""
        return all(is_psd_exact(b.mats[0]) for b in self.blocks)


def build_equiangular_sdp(n: int, a: RationalLike, p: int = 5) -> LinearMatrixProblem:
    """Assemble the three-point SDP bounding equiangular sets with inner products +-a.

    Variables x_1..x_6 weight the triple types (a,a,1), (-a,-a,1), (a,a,a),
    (a,a,-a), (a,-a,-a), (-a,-a,-a).
    """
    a = as_rational(a)
    if not 0 < a < 1:
        raise ValueError(f"angle cosine must lie in (0, 1), got {a}")
    if n < 3 or p < 0:
        raise ValueError(f"need n >= 3 and p >= 0, got n={n}, p={p}")
    third = Fraction(1, 3)
    corner = SymMatrixExact(((0, 0), (0, 1)))
    head = Block(
        DENSE,
        (SymMatrixExact.identity(2),
         SymMatrixExact(((0, third), (third, third))),
         SymMatrixExact(((0, third), (third, third))),
         corner, corner, corner, corner),
        label="moments",
    )
    blocks = [head]
    triples = [(1, 1, 1), (a, a, 1), (-a, -a, 1), (a, a, a), (a, a, -a), (a, -a, -a), (-a, -a, -a)]
    for k in range(p + 1):
        mats = tuple(s_matrix(n, p, k, tr).m for tr in triples)
        blocks.append(Block(DENSE, mats, label=f"S-block k={k}"))

    lin = [[Fraction(3)] * (p + 1),
           [gegenbauer_eval(n, k, a) for k in range(p + 1)],
           [gegenbauer_eval(n, k, -a) for k in range(p + 1)]]
    lin += [[Fraction(0)] * (p + 1) for _ in range(4)]
    blocks.append(Block(DIAG, tuple(SymMatrixExact.diagonal(v) for v in lin), label="linear",
                        row_labels=tuple(f"linear k={k}" for k in range(p + 1))))

    nonneg = [SymMatrixExact.zeros(NUM_VARS)]
    for j in range(NUM_VARS):
        nonneg.append(SymMatrixExact.diagonal([int(i == j) for i in range(NUM_VARS)]))
    blocks.append(Block(DIAG, tuple(nonneg), label="nonneg",
                        row_labels=tuple(f"nonneg x{j + 1}" for j in range(NUM_VARS))))

    return LinearMatrixProblem(
        num_vars=NUM_VARS,
        objective_constant=Fraction(1),
        objective_coeffs=(third, third, Fraction(0), Fraction(0), Fraction(0), Fraction(0)),
        blocks=tuple(blocks),
        meta={"n": n, "a": a, "p": p},
    )


def with_objective_cap(prob: LinearMatrixProblem, cap: RationalLike) -> LinearMatrixProblem:
    """Add the row cap - objective >= 0; the optimum becomes min(cap, original optimum)."""
    cap = as_rational(cap)
    row = [SymMatrixExact.diagonal([cap - prob.objective_constant])]
    row += [SymMatrixExact.diagonal([-c]) for c in prob.objective_coeffs]
    block = Block(DIAG, tuple(row), label="objective cap", row_labels=("objective cap",))
    meta = dict(prob.meta, cap=cap)
    return LinearMatrixProblem(prob.num_vars, prob.objective_constant, prob.objective_coeffs,
                               prob.blocks + (block,), prob.sense, meta)


# --- SDPA sparse format --------------------------------------------------------


class SdpaFormatError(ValueError):
    """Malformed SDPA text; ``lineno`` is 1-based in the input."""

    def __init__(self, msg: str, lineno: Optional[int] = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


class SdpaStructureError(SdpaFormatError):
    pass


def _fmt(x: Fraction) -> str:
    v = float(x)
    s = f"{v:.17g}"
    # prefer the shortest string that round-trips
    short = repr(v)
    return short if float(short) == v and len(short) <= len(s) else s


def _objective_text(prob: LinearMatrixProblem) -> str:
    nz = [(j, c) for j, c in enumerate(prob.objective_coeffs) if c]
    const = prob.objective_constant
    if not nz:
        return f"{const}"
    vals = {c for _, c in nz}
    if len(vals) == 1 and next(iter(vals)).numerator == 1:
        c = next(iter(vals))
        inner = "+".join(f"x{j + 1}" for j, _ in nz)
        body = f"({inner})/{c.denominator}" if c.denominator != 1 else f"({inner})"
    else:
        body = " + ".join(f"{c}*x{j + 1}" for j, c in nz)
    return f"{const} + {body}"


def export_sdpa(prob: LinearMatrixProblem) -> str:
    """Render ``prob`` as SDPA sparse text (``.dat-s``).

    SDPA minimizes c'x subject to sum_i x_i F_i - F_0 >= 0, so the file holds
    c = -objective_coeffs, F_0 = -A_0 and F_j = A_j. The maximized value is
    objective_constant - (SDPA optimum); the comment header records this.
    """
    lines = [
        f"* objective = {_objective_text(prob)} ; {prob.sense}",
        f"* sdpa optimum v maps back as {prob.objective_constant} - v "
        "(c = -objective, F0 = -A0, Fj = Aj)",
        f"* objective_constant = {prob.objective_constant}",
        "* labels = " + " | ".join(b.label for b in prob.blocks),
    ]
    lines.append(str(prob.num_vars))
    lines.append(str(len(prob.blocks)))
    lines.append(" ".join(str(-b.dim if b.kind == DIAG else b.dim) for b in prob.blocks))
    lines.append(" ".join(_fmt(-c) for c in prob.objective_coeffs))
    for matno in range(prob.num_vars + 1):
        for bno, b in enumerate(prob.blocks, start=1):
            m = b.mats[matno]
            for i in range(b.dim):
                for j in range(i, b.dim):
                    v = m[i, j]
                    if v == 0:
                        continue
                    if matno == 0:
                        v = -v
                    lines.append(f"{matno} {bno} {i + 1} {j + 1} {_fmt(v)}")
    return "\n".join(lines) + "\n"


_SEP = re.compile(r"[,{}()]")


def _recover(v: float) -> Fraction:
    """Rational with small denominator that rounds to ``v``, else the exact binary value."""
    f = Fraction(v).limit_denominator(10**9)
    return f if float(f) == v else Fraction(v)


def import_sdpa(text: str) -> LinearMatrixProblem:
    """Parse SDPA sparse text back into a problem (inverse of :func:`export_sdpa`)."""
    const = Fraction(0)
    labels: list[str] = []
    data: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith(("*", '"')):
            body = stripped.lstrip('*"').strip()
            if body.startswith("objective_constant ="):
                const = Fraction(body.split("=", 1)[1].strip())
            elif body.startswith("labels ="):
                labels = [s.strip() for s in body.split("=", 1)[1].split("|")]
            continue
        if not stripped:
            continue
        data.append((lineno, _SEP.sub(" ", stripped).split()))
    if len(data) < 4:
        where = data[-1][0] + 1 if data else 1
        raise SdpaFormatError("truncated header (need mDIM, nBLOCK, block sizes, c)", where)

    def ints(lineno, toks, what):
        try:
            return [int(t) for t in toks]
        except ValueError:
            raise SdpaFormatError(f"expected integers for {what}", lineno) from None

    (l1, t1), (l2, t2), (l3, t3), (l4, t4) = data[:4]
    if len(t1) < 1:
        raise SdpaFormatError("missing mDIM", l1)
    mdim = ints(l1, t1[:1], "mDIM")[0]
    if len(t2) < 1:
        raise SdpaFormatError("missing nBLOCK", l2)
    nblock = ints(l2, t2[:1], "nBLOCK")[0]
    sizes = ints(l3, t3, "block sizes")
    if mdim < 1 or nblock < 1:
        raise SdpaFormatError("mDIM and nBLOCK must be positive", l1 if mdim < 1 else l2)
    if len(sizes) != nblock or any(s == 0 for s in sizes):
        raise SdpaStructureError(f"nBLOCK={nblock} but {len(sizes)} block sizes given", l3)
    try:
        c = [float(t) for t in t4]
    except ValueError:
        raise SdpaFormatError("bad objective vector", l4) from None
    if len(c) != mdim:
        raise SdpaFormatError(f"objective has {len(c)} entries, expected {mdim}", l4)

    if not labels or len(labels) != nblock:
        labels = [f"block {b + 1}" for b in range(nblock)]
    vals = [[{} for _ in range(nblock)] for _ in range(mdim + 1)]
    for lineno, toks in data[4:]:
        if len(toks) != 5:
            raise SdpaFormatError("entry line needs 'matno blockno i j value'", lineno)
        try:
            matno, bno, i, j = (int(t) for t in toks[:4])
            v = float(toks[4])
        except ValueError:
            raise SdpaFormatError("unparseable entry", lineno) from None
        if not 0 <= matno <= mdim:
            raise SdpaFormatError(f"matrix number {matno} out of range 0..{mdim}", lineno)
        if not 1 <= bno <= nblock:
            raise SdpaFormatError(f"block number {bno} out of range 1..{nblock}", lineno)
        d = abs(sizes[bno - 1])
        name = labels[bno - 1]
        if not (1 <= i <= d and 1 <= j <= d):
            raise SdpaStructureError(
                f"entry ({i},{j}) outside block {bno} ({name!r}) of size {d}", lineno)
        if sizes[bno - 1] < 0 and i != j:
            raise SdpaStructureError(
                f"off-diagonal entry ({i},{j}) in diagonal block {bno} ({name!r})", lineno)
        i, j = min(i, j), max(i, j)
        vals[matno][bno - 1][(i - 1, j - 1)] = _recover(-v if matno == 0 else v)

    blocks = []
    for b, size in enumerate(sizes):
        d = abs(size)
        mats = []
        for matno in range(mdim + 1):
            rows = [[Fraction(0)] * d for _ in range(d)]
            for (i, j), v in vals[matno][b].items():
                rows[i][j] = rows[j][i] = v
            mats.append(SymMatrixExact(tuple(tuple(r) for r in rows)))
        blocks.append(Block(DIAG if size < 0 else DENSE, tuple(mats), label=labels[b]))
    return LinearMatrixProblem(
        num_vars=mdim,
        objective_constant=const,
        objective_coeffs=tuple(_recover(-x) for x in c),
        blocks=tuple(blocks),
    )
