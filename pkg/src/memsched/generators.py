"""Parameterized DSP benchmark generators (FIR, LMS, radix-2 FFT).

Sample windows are modelled as ageing vectors: x(0) holds the newest value
and x(1..n-1) are delay vertices shifted from it.  Adaptive-filter
coefficients h(i) are loopback delays: read at the start of an iteration,
rewritten at its end.  Accumulations are emitted as chains so that one
multiply-accumulate pair sustains one new product per cycle.
"""

from __future__ import annotations

import math

from .sfg import SFG, Vertex, polarize


def _ageing_vector(vertices, edges, name: str, n: int, feed: str | None):
    """Emit x(0) as a data head plus n-1 delay vertices chained behind it."""
    head = f"{name}(0)"
    vertices.append(Vertex(head, "data", head))
    if feed:
        edges.append((feed, head))
    prev = head
    for i in range(1, n):
        vid = f"{name}({i})"
        vertices.append(Vertex(vid, "delay", vid))
        edges.append((prev, vid))
        prev = vid


def _acc_chain(vertices, edges, terms: list[str], prefix: str) -> str:
    """Chain-add the given product vertices; returns the final value's id."""
    acc = terms[0]
    for i, term in enumerate(terms[1:], start=1):
        vid = f"{prefix}{i:04d}"
        vertices.append(Vertex(vid, "add"))
        edges.append((acc, vid))
        edges.append((term, vid))
        acc = vid
    return acc


def gen_fir(n: int) -> SFG:
    """n-tap FIR: y = sum h(i)*x(i) with an n-deep sample ageing vector."""
    if n < 1:
        raise ValueError("tap count must be >= 1")
    vertices: list[Vertex] = []
    edges: list[tuple[str, str]] = []

    vertices.append(Vertex("x_in", "input"))
    for i in range(n):
        vertices.append(Vertex(f"h({i})", "constant", f"h({i})"))
    _ageing_vector(vertices, edges, "x", n, feed="x_in")

    muls = []
    for i in range(n):
        vid = f"m{i:04d}"
        vertices.append(Vertex(vid, "mul"))
        edges.append((f"h({i})", vid))
        edges.append((f"x({i})", vid))
        muls.append(vid)
    acc = _acc_chain(vertices, edges, muls, "a")

    vertices.append(Vertex("y", "output"))
    edges.append((acc, "y"))

    sfg = SFG(vertices, edges)
    polarize(sfg)
    return sfg


def gen_lms(n: int) -> SFG:
    """n-tap LMS adaptive filter: FIR section, error term, coefficient update."""
    if n < 1:
        raise ValueError("tap count must be >= 1")
    vertices: list[Vertex] = []
    edges: list[tuple[str, str]] = []

    vertices.append(Vertex("x_in", "input"))
    vertices.append(Vertex("d_in", "input"))
    vertices.append(Vertex("deux_mu", "constant", "deux_mu"))

    # Coefficients are loopback delays: the update adders feed them below.
    for i in range(n):
        vertices.append(Vertex(f"h({i})", "delay", f"h({i})"))
    _ageing_vector(vertices, edges, "x", n, feed="x_in")

    muls = []
    for i in range(n):
        vid = f"m{i:04d}"
        vertices.append(Vertex(vid, "mul"))
        edges.append((f"h({i})", vid))
        edges.append((f"x({i})", vid))
        muls.append(vid)
    acc = _acc_chain(vertices, edges, muls, "a")
    vertices.append(Vertex("y", "output"))
    edges.append((acc, "y"))

    # e = d - y ; adapt = deux_mu * e, kept in a register
    vertices.append(Vertex("err", "sub"))
    edges.append(("d_in", "err"))
    edges.append((acc, "err"))
    vertices.append(Vertex("madapt", "mul"))
    edges.append(("deux_mu", "madapt"))
    edges.append(("err", "madapt"))
    vertices.append(Vertex("adapt", "data", "adapt"))
    edges.append(("madapt", "adapt"))

    # h(i) <- h(i) + adapt * x(i)
    for i in range(n):
        um = f"um{i:04d}"
        vertices.append(Vertex(um, "mul"))
        edges.append(("adapt", um))
        edges.append((f"x({i})", um))
        ua = f"ua{i:04d}"
        vertices.append(Vertex(ua, "add"))
        edges.append((f"h({i})", ua))
        edges.append((um, ua))
        edges.append((ua, f"h({i})"))

    sfg = SFG(vertices, edges)
    polarize(sfg)
    return sfg


def gen_fft(n: int) -> SFG:
    """Radix-2 decimation-in-frequency FFT over 2n real/imaginary sample data."""
    if n < 2 or n & (n - 1):
        raise ValueError("point count must be a power of two >= 2")
    stages = int(math.log2(n))
    vertices: list[Vertex] = []
    edges: list[tuple[str, str]] = []

    re = []
    im = []
    for i in range(n):
        rid, iid = f"re({i})", f"im({i})"
        vertices.append(Vertex(rid, "data", rid))
        vertices.append(Vertex(iid, "data", iid))
        re.append(rid)
        im.append(iid)

    twiddles: dict[int, tuple[str, str]] = {}

    def twiddle(e: int) -> tuple[str, str]:
        if e not in twiddles:
            cr, ci = f"tw_re_{e}", f"tw_im_{e}"
            vertices.append(Vertex(cr, "constant", cr))
            vertices.append(Vertex(ci, "constant", ci))
            twiddles[e] = (cr, ci)
        return twiddles[e]

    counter = [0]

    def op(kind: str, *ins: str) -> str:
        vid = f"{kind[0]}{counter[0]:05d}"
        counter[0] += 1
        vertices.append(Vertex(vid, kind))
        for src in ins:
            edges.append((src, vid))
        return vid

    size = n
    while size >= 2:
        half = size // 2
        stride = n // size
        for base in range(0, n, size):
            for j in range(half):
                a, b = base + j, base + j + half
                top_re = op("add", re[a], re[b])
                top_im = op("add", im[a], im[b])
                d_re = op("sub", re[a], re[b])
                d_im = op("sub", im[a], im[b])
                e = j * stride
                if e:
                    cr, ci = twiddle(e)
                    bot_re = op("sub", op("mul", d_re, cr), op("mul", d_im, ci))
                    bot_im = op("add", op("mul", d_re, ci), op("mul", d_im, cr))
                else:
                    bot_re, bot_im = d_re, d_im
                re[a], im[a] = top_re, top_im
                re[b], im[b] = bot_re, bot_im
        size = half

    for i in range(n):
        yr, yi = f"yre({i})", f"yim({i})"
        vertices.append(Vertex(yr, "output"))
        vertices.append(Vertex(yi, "output"))
        edges.append((re[i], yr))
        edges.append((im[i], yi))

    sfg = SFG(vertices, edges)
    polarize(sfg)
    return sfg


GENERATORS = {"fir": gen_fir, "lms": gen_lms, "fft": gen_fft}
