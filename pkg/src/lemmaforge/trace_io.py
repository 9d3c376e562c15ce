"""Reading and writing trace files and their sidecars.

Trace line grammar::

    <RULE><SIZE>[ <dep>]*[ #comment]

The parser works on fixed-size byte blocks with numpy so that traces with
tens of millions of lines never materialise one Python object per line.
"""

from __future__ import annotations

import contextlib
import io
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

from .graph import DEFAULT_AXIOM_RULES, NamedSet, ProofGraph, index_dtype

BLOCK_SIZE = 1 << 22

_SEP = re.compile(rb"[ \t\r]+")
_DIGITS = re.compile(rb"[0-9]+")
_MAX_DIGITS = 18


class TraceParseError(ValueError):
    def __init__(self, message: str, lineno: int | None = None, source: str | None = None):
        where = ""
        if source:
            where += f"{source}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)
        self.lineno = lineno
        self.source = source


class SidecarError(ValueError):
    pass


@dataclass(frozen=True)
class TraceLine:
    rule: str
    size: int
    deps: tuple[int, ...]

    def format(self) -> str:
        return " ".join([f"{self.rule}{self.size}", *map(str, self.deps)])


def parse_line(line: str | bytes, serial: int | None = None) -> TraceLine | None:
    """Parse one trace line; ``None`` for blank or comment-only lines.

    When ``serial`` is given, dependencies must be strictly smaller.
    """
    if isinstance(line, str):
        line = line.encode("utf-8")
    line = line.split(b"#", 1)[0].rstrip(b"\n")
    tokens = [t for t in _SEP.split(line) if t]
    if not tokens:
        return None
    head, rest = tokens[0], tokens[1:]
    rule = head[:1]
    if not (0x21 <= rule[0] < 0x7F) or rule.isdigit():
        raise TraceParseError(f"expected a rule character, got {head[:1]!r}")
    if not _DIGITS.fullmatch(head[1:]):
        raise TraceParseError(f"expected digits after rule {rule.decode()!r}, got {head[1:]!r}")
    if len(head) - 1 > _MAX_DIGITS:
        raise TraceParseError("size too large")
    size = int(head[1:])
    if size < 1:
        raise TraceParseError("size must be positive")
    deps = []
    for tok in rest:
        if not _DIGITS.fullmatch(tok):
            raise TraceParseError(f"dependency {tok!r} is not a number")
        if len(tok) > _MAX_DIGITS:
            raise TraceParseError(f"dependency {tok.decode()} too large")
        d = int(tok)
        if d == 0:
            raise TraceParseError("dependency serial 0 is invalid")
        if serial is not None and d >= serial:
            raise TraceParseError(f"forward reference to {d} from node {serial}")
        deps.append(d)
    return TraceLine(rule.decode(), size, tuple(deps))


# -- streaming parser --------------------------------------------------------


def _iter_blocks(stream: IO[bytes], block_size: int) -> Iterator[bytes]:
    """Yield byte blocks that end exactly at a newline (last one may not)."""
    tail = b""
    while True:
        chunk = stream.read(block_size)
        if not chunk:
            break
        buf = tail + chunk
        cut = buf.rfind(b"\n")
        if cut < 0:
            tail = buf
            continue
        yield buf[: cut + 1]
        tail = buf[cut + 1 :]
    if tail:
        yield tail + b"\n"


class _BlockParser:
    def __init__(self, source: str | None):
        self.source = source
        self.serial = 0  # serials consumed so far
        self.lineno = 0  # physical lines consumed so far
        self.rules: list[np.ndarray] = []
        self.sizes: list[np.ndarray] = []
        self.degrees: list[np.ndarray] = []
        self.deps: list[np.ndarray] = []

    def feed(self, block: bytes) -> None:
        b = np.frombuffer(block, dtype=np.uint8)
        nl = b == 10
        nl_pos = np.flatnonzero(nl)
        n_lines = nl_pos.size
        line_of = np.cumsum(nl, dtype=np.int32)
        line_of -= nl  # newline byte belongs to its own line

        # strip comments: everything from the first '#' of a line onward
        hashes = np.cumsum(b == 35, dtype=np.int32)
        line_start = np.empty(n_lines, dtype=np.int64)
        line_start[0] = 0
        line_start[1:] = nl_pos[:-1] + 1
        before = np.where(line_start > 0, hashes[np.maximum(line_start - 1, 0)], 0)
        in_comment = hashes > before[line_of]

        sep = (b == 32) | (b == 9) | (b == 13) | nl | in_comment
        tok = ~sep
        tpos = np.flatnonzero(tok)
        if tpos.size == 0:
            self.lineno += n_lines
            return
        prev_tok = np.zeros_like(tok)
        prev_tok[1:] = tok[:-1]
        next_tok = np.zeros_like(tok)
        next_tok[:-1] = tok[1:]
        t_start = np.flatnonzero(tok & ~prev_tok)
        t_end = np.flatnonzero(tok & ~next_tok) + 1
        t_line = line_of[t_start]
        first = np.ones(t_start.size, dtype=bool)
        first[1:] = t_line[1:] != t_line[:-1]

        # token id of every token byte
        t_of = np.cumsum((tok & ~prev_tok)[tpos], dtype=np.int64) - 1
        tb = b[tpos]
        is_digit = (tb >= 48) & (tb <= 57)
        head_byte = np.zeros(tpos.size, dtype=bool)
        head_byte[np.searchsorted(tpos, t_start[first])] = True

        bad_byte = (~is_digit & ~head_byte) | (head_byte & (is_digit | (tb < 0x21) | (tb >= 0x7F)))
        digits_len = (t_end - t_start) - first
        bad = np.bincount(t_of, weights=bad_byte, minlength=t_start.size) > 0
        bad |= (digits_len == 0) | (digits_len > _MAX_DIGITS)

        pos_from_end = np.minimum(t_end[t_of] - 1 - tpos, _MAX_DIGITS).astype(np.int64)
        contrib = np.where(is_digit, tb.astype(np.int64) - 48, 0) * (10**pos_from_end)
        values = np.add.reduceat(contrib, np.searchsorted(tpos, t_start))

        node_of_tok = np.cumsum(first) - 1  # 0-based within block
        n_nodes = int(first.sum())
        serials = self.serial + 1 + node_of_tok  # 1-based global serial of owning node
        is_dep = ~first
        dep_vals = values[is_dep]
        sizes = values[first]
        bad[first] |= sizes < 1
        bad[is_dep] |= (dep_vals < 1) | (dep_vals >= serials[is_dep])
        if bad.any():
            self._fail(block, line_start, int(t_line[np.argmax(bad)]))

        self.rules.append(b[t_start[first]].copy())
        self.sizes.append(sizes)
        self.degrees.append(np.bincount(node_of_tok[is_dep], minlength=n_nodes))
        limit = self.serial + n_nodes
        self.deps.append((dep_vals - 1).astype(index_dtype(limit)))
        self.serial = limit
        self.lineno += n_lines

    def _fail(self, block: bytes, line_start: np.ndarray, line: int) -> None:
        start = int(line_start[line])
        end = block.index(b"\n", start)
        text = block[start:end]
        nonblank_before = self._count_nonblank(block[:start])
        lineno = self.lineno + line + 1
        try:
            parse_line(text, self.serial + nonblank_before + 1)
        except TraceParseError as exc:
            raise TraceParseError(str(exc).strip(), lineno, self.source) from None
        raise TraceParseError("malformed line", lineno, self.source)

    @staticmethod
    def _count_nonblank(data: bytes) -> int:
        count = 0
        for raw in data.split(b"\n"):
            if _SEP.sub(b"", raw.split(b"#", 1)[0]):
                count += 1
        return count

    def finish(self, axiom_rules) -> ProofGraph:
        n = self.serial
        if not self.rules:
            return ProofGraph.empty().with_axiom_rules(axiom_rules)
        rules = np.concatenate(self.rules)
        sizes = np.concatenate(self.sizes)
        degrees = np.concatenate(self.degrees)
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(degrees, out=ptr[1:])
        dt = index_dtype(n)
        deps = np.concatenate([d.astype(dt, copy=False) for d in self.deps])
        return ProofGraph(rules, sizes, ptr, deps, axiom_rules, validate=False)


@contextlib.contextmanager
def _open_binary(source) -> Iterator[tuple[IO[bytes], str | None]]:
    if isinstance(source, (bytes, bytearray)):
        yield io.BytesIO(source), None
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            yield fh, str(source)
    elif isinstance(source, io.TextIOBase):
        yield io.BytesIO(source.read().encode("utf-8")), getattr(source, "name", None)
    else:
        yield source, getattr(source, "name", None)


def parse_trace(
    source, axiom_rules: Iterable[str] = DEFAULT_AXIOM_RULES, block_size: int = BLOCK_SIZE
) -> ProofGraph:
    """Parse a trace from a path, bytes, or binary stream.

    Node ``k`` comes from the ``k``-th non-blank line.  Everything after ``#``
    is ignored.
    """
    with _open_binary(source) as (stream, name):
        parser = _BlockParser(name)
        for block in _iter_blocks(stream, block_size):
            parser.feed(block)
        return parser.finish(axiom_rules)


def parse_trace_text(text: str, **kw) -> ProofGraph:
    return parse_trace(text.encode("utf-8"), **kw)


def iter_trace_lines(graph: ProofGraph, chunk: int = 1 << 16) -> Iterator[str]:
    ptr = graph.dep_ptr
    for lo in range(0, graph.n, chunk):
        hi = min(lo + chunk, graph.n)
        rules = graph.rules[lo:hi].tobytes().decode("ascii")
        sizes = graph.sizes[lo:hi].tolist()
        deps = (graph.dep_idx[ptr[lo] : ptr[hi]].astype(np.int64) + 1).tolist()
        offs = (ptr[lo : hi + 1] - ptr[lo]).tolist()
        out = []
        for k in range(hi - lo):
            d = deps[offs[k] : offs[k + 1]]
            if d:
                out.append(f"{rules[k]}{sizes[k]} {' '.join(map(str, d))}\n")
            else:
                out.append(f"{rules[k]}{sizes[k]}\n")
        yield "".join(out)


def write_trace(graph: ProofGraph, out: IO[str] | None = None) -> str | None:
    """Write ``graph`` in trace format; returns the text when ``out`` is None."""
    if out is None:
        return "".join(iter_trace_lines(graph))
    for piece in iter_trace_lines(graph):
        out.write(piece)
    return None


# -- sidecars ----------------------------------------------------------------


@dataclass
class SidecarMaps:
    """Per-serial side information.

    Key arrays hold small integer class ids (equal id <=> equal key) indexed by
    ``serial - 1``; ``-1`` marks a node without a key.
    """

    n: int
    names: NamedSet = field(default_factory=NamedSet)
    raw_keys: np.ndarray | None = None
    alpha_keys: np.ndarray | None = None
    statements: dict[int, str] | None = None
    duplicates: dict[str, int] = field(default_factory=dict)

    def keys(self, kind: str) -> np.ndarray:
        arr = self.raw_keys if kind == "raw" else self.alpha_keys
        if arr is None:
            raise SidecarError(f"{kind} key sidecar is required but was not supplied")
        return arr


def _iter_text_lines(source) -> Iterator[tuple[int, str, str]]:
    if isinstance(source, os.PathLike) or (
        isinstance(source, str) and "\n" not in source and os.path.isfile(source)
    ):
        name = str(source)
        with open(source, encoding="utf-8") as fh:
            for i, line in enumerate(fh, 1):
                yield i, line.rstrip("\n").rstrip("\r"), name
        return
    if isinstance(source, str):
        source = io.StringIO(source)
    name = getattr(source, "name", "<stream>")
    for i, line in enumerate(source, 1):
        yield i, line.rstrip("\n").rstrip("\r"), name


def _read_pairs(source, n: int | None, kind: str, sep: str | None, dup: dict[str, int]) -> dict[int, str]:
    out: dict[int, str] = {}
    for lineno, line, name in _iter_text_lines(source):
        if not line.strip():
            continue
        parts = line.split(sep, 1) if sep else line.split(None, 1)
        if len(parts) != 2 or not parts[0].strip().isdigit():
            raise SidecarError(f"{name}:{lineno}: expected '<serial> <value>' in {kind} file")
        serial, value = int(parts[0]), parts[1].strip() if sep is None else parts[1]
        if serial < 1 or (n is not None and serial > n):
            raise SidecarError(f"{name}:{lineno}: serial {serial} not in trace (1..{n})")
        if serial in out:
            dup[kind] = dup.get(kind, 0) + 1
        out[serial] = value
    return out


def _factorize(keys: dict[int, str], n: int) -> np.ndarray:
    arr = np.full(n, -1, dtype=np.int64)
    ids: dict[str, int] = {}
    for serial, key in keys.items():
        arr[serial - 1] = ids.setdefault(key.lower(), len(ids))
    return arr


def parse_names(source, n: int | None = None, dup: dict[str, int] | None = None) -> NamedSet:
    pairs = _read_pairs(source, n, "names", None, {} if dup is None else dup)
    try:
        return NamedSet(pairs)
    except ValueError as exc:
        raise SidecarError(f"names file: {exc}") from None


def parse_statements(source, n: int | None = None) -> dict[int, str]:
    return _read_pairs(source, n, "statements", "\t", {})


def parse_sidecars(
    graph_or_n,
    names=None,
    raw_keys=None,
    alpha_keys=None,
    statements=None,
) -> SidecarMaps:
    n = graph_or_n if isinstance(graph_or_n, int) else graph_or_n.n
    dup: dict[str, int] = {}
    maps = SidecarMaps(n, duplicates=dup)
    if names is not None:
        maps.names = parse_names(names, n, dup)
    if raw_keys is not None:
        maps.raw_keys = _factorize(_read_pairs(raw_keys, n, "raw_keys", None, dup), n)
    if alpha_keys is not None:
        maps.alpha_keys = _factorize(_read_pairs(alpha_keys, n, "alpha_keys", None, dup), n)
    if statements is not None:
        maps.statements = _read_pairs(statements, n, "statements", "\t", dup)
    return maps


def format_names(named: NamedSet) -> str:
    return "".join(f"{s} {name}\n" for s, name in named.items())


def format_keys(keys: np.ndarray) -> str:
    return "".join(f"{i + 1} {k:x}\n" for i, k in enumerate(keys.tolist()) if k >= 0)


@contextlib.contextmanager
def atomic_write(path, mode: str = "w", **kw):
    """Write to a temp file beside ``path`` and rename into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **kw) as fh:
            yield fh
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise
