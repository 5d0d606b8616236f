"""Dependency graph construction and deterministic recalculation.

Formulas compile once into closures over the workbook's value cache;
streaming a million records never re-walks an AST or rebuilds the
graph. Recalculation is synchronous: when it returns, every cached
value is consistent, so callers can never observe a half-finished
calculation.
"""

from __future__ import annotations

import math

from .errors import ConfigError
from .formula import Binary, Call, CellRef, Literal, NameRef, RangeRef, Unary
from .functions import RANGE_ONLY, SCALAR, lookup
from .values import (
    BLANK,
    BINARY_OPS,
    CellError,
    CellValue,
    NAME_ERROR,
    NUM_ERROR,
    RangeValue,
    REF_ERROR,
    UNARY_OPS,
    VALUE_ERROR,
)
from .workbook import CellAddress, Workbook, format_a1

__all__ = [
    "DependencyGraph",
    "CycleError",
    "UnknownNameError",
    "EvalContext",
    "build_graph",
    "recalculate",
    "evaluate",
    "evaluate_source",
]


class CycleError(ConfigError):
    """The formula cells contain a reference cycle."""

    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("formula cycle: " + " -> ".join(cycle))


class UnknownNameError(ConfigError):
    """A formula references a defined name that does not exist."""


class EvalContext:
    """Workbook view a single formula evaluates against (read-only)."""

    __slots__ = ("workbook", "sheet")

    def __init__(self, workbook: Workbook, sheet: str):
        self.workbook = workbook
        self.sheet = sheet.upper()


# --- Compilation to closures -------------------------------------------------


def _compile(ast, ctx: EvalContext):
    """Compile an AST into a zero-argument closure producing a CellValue."""
    values = ctx.workbook.values
    cls = ast.__class__

    if cls is Literal:
        v = ast.value
        if v.__class__ is int:
            v = float(v)
        if v.__class__ is float and not math.isfinite(v):
            v = NUM_ERROR  # numbers are finite end-to-end
        return lambda: v

    if cls is CellRef:
        wb = ctx.workbook
        if not (1 <= ast.row <= wb.max_rows and 1 <= ast.col <= wb.max_cols):
            return lambda: REF_ERROR
        key = (ctx.sheet, ast.row, ast.col)
        get = values.get
        return lambda: get(key, BLANK)

    if cls is RangeRef:
        key_rows = _range_keys(ctx.sheet, ast.start.row, ast.start.col, ast.end.row, ast.end.col)
        get = values.get
        return lambda: RangeValue(
            [[get(k, BLANK) for k in row] for row in key_rows]
        )

    if cls is NameRef:
        wb = ctx.workbook
        if not wb.has_name(ast.name):
            return lambda: NAME_ERROR
        rng = wb.resolve_name(ast.name)
        get = values.get
        if rng.size() == 1:
            key = next(rng.keys())
            return lambda: get(key, BLANK)
        key_rows = _range_keys(
            rng.start.sheet.upper(),
            rng.start.row,
            rng.start.col,
            rng.end.row,
            rng.end.col,
        )
        return lambda: RangeValue(
            [[get(k, BLANK) for k in row] for row in key_rows]
        )

    if cls is Unary:
        op = UNARY_OPS[ast.op]
        inner = _compile(ast.operand, ctx)

        def run_unary():
            v = inner()
            if v.__class__ is CellError:
                return v
            if v.__class__ is RangeValue:
                return VALUE_ERROR
            return op(v)

        return run_unary

    if cls is Binary:
        op = BINARY_OPS[ast.op]
        left = _compile(ast.left, ctx)
        right = _compile(ast.right, ctx)

        def run_binary():
            a = left()
            if a.__class__ is CellError:
                return a
            b = right()
            if b.__class__ is CellError:
                return b
            return op(a, b)

        return run_binary

    if cls is Call:
        sig = lookup(ast.name)
        if sig is None:
            return lambda: NAME_ERROR
        if len(ast.args) < sig.min_args or (
            sig.max_args is not None and len(ast.args) > sig.max_args
        ):
            return lambda: VALUE_ERROR
        arg_fns = tuple(_compile(arg, ctx) for arg in ast.args)
        kinds = tuple(
            sig.arg_kinds[min(i, len(sig.arg_kinds) - 1)] for i in range(len(arg_fns))
        )
        impl = sig.impl
        scalar_only = all(kind is SCALAR for kind in kinds)

        if scalar_only:

            def run_call_scalar():
                args = []
                append = args.append
                for fn in arg_fns:
                    v = fn()
                    c = v.__class__
                    if c is CellError:
                        return v
                    if c is RangeValue:
                        return VALUE_ERROR
                    append(v)
                return impl(args)

            return run_call_scalar

        def run_call():
            args = []
            append = args.append
            for fn, kind in zip(arg_fns, kinds):
                v = fn()
                c = v.__class__
                if c is CellError:
                    return v
                if c is RangeValue:
                    if kind is SCALAR:
                        return VALUE_ERROR
                    # first error inside the block propagates
                    for member in v:
                        if member.__class__ is CellError:
                            return member
                elif kind is RANGE_ONLY:
                    return VALUE_ERROR
                append(v)
            return impl(args)

        return run_call

    raise TypeError(f"not an AST node: {ast!r}")


def _range_keys(sheet, row1, col1, row2, col2):
    return tuple(
        tuple((sheet, r, c) for c in range(col1, col2 + 1))
        for r in range(row1, row2 + 1)
    )


def evaluate(ast, ctx: EvalContext) -> CellValue:
    """Evaluate an AST against the context's cached cell values."""
    return _compile(ast, ctx)()


def evaluate_source(workbook: Workbook, source: str, sheet: str | None = None) -> CellValue:
    """One-shot parse and evaluate of a formula string."""
    from .formula import parse_formula

    ast = parse_formula(source)
    return evaluate(ast, EvalContext(workbook, sheet or workbook.default_sheet()))


# --- Dependency graph --------------------------------------------------------


class DependencyGraph:
    """Compiled formula cells, their precedent edges, and a topo order."""

    def __init__(self):
        self.order: list[tuple] = []  # formula keys, topological
        self.compiled: dict[tuple, object] = {}  # key -> closure
        self.dependents: dict[tuple, list[tuple]] = {}  # precedent key -> formula keys
        self.topo_index: dict[tuple, int] = {}
        self.version = -1
        self._plan_cache: dict[frozenset, list] = {}

    def __deepcopy__(self, memo):
        # Compiled closures are bound to one workbook's value cache; a
        # copied workbook must rebuild rather than share them.
        return DependencyGraph()

    def plan(self, dirty_keys: frozenset) -> list:
        """Evaluation steps for a dirty set: (key, closure) in topo order."""
        cached = self._plan_cache.get(dirty_keys)
        if cached is not None:
            return cached
        affected = set()
        stack = list(dirty_keys)
        dependents = self.dependents
        while stack:
            key = stack.pop()
            for dep in dependents.get(key, ()):
                if dep not in affected:
                    affected.add(dep)
                    stack.append(dep)
        index = self.topo_index
        steps = [
            (key, self.compiled[key])
            for key in sorted(affected, key=index.__getitem__)
        ]
        if len(self._plan_cache) < 64:
            self._plan_cache[dirty_keys] = steps
        return steps


def _formula_dependencies(wb: Workbook, key: tuple, ast) -> set[tuple]:
    """Precedent cell keys of one formula, ranges expanded to members."""
    from .formula import extract_references

    sheet = key[0]
    deps: set[tuple] = set()
    for ref in extract_references(ast):
        cls = ref.__class__
        if cls is CellRef:
            deps.add((sheet, ref.row, ref.col))
        elif cls is RangeRef:
            for r in range(ref.start.row, ref.end.row + 1):
                for c in range(ref.start.col, ref.end.col + 1):
                    deps.add((sheet, r, c))
        else:  # NameRef
            if not wb.has_name(ref.name):
                raise UnknownNameError(
                    f"formula in {sheet}!{format_a1(key[1], key[2])} "
                    f"references unknown name {ref.name!r}"
                )
            rng = wb.resolve_name(ref.name)
            deps.update(rng.keys())
    return deps


def _find_cycle(deps_of: dict, start: tuple) -> list[tuple]:
    """One cycle reachable from start, as a list of keys."""
    path: list[tuple] = []
    on_path: set[tuple] = set()
    done: set[tuple] = set()

    def visit(node) -> list | None:
        if node in on_path:
            return path[path.index(node) :] + [node]
        if node in done or node not in deps_of:
            return None
        on_path.add(node)
        path.append(node)
        for nxt in deps_of[node]:
            found = visit(nxt)
            if found is not None:
                return found
        path.pop()
        on_path.remove(node)
        done.add(node)
        return None

    return visit(start) or [start, start]


def build_graph(wb: Workbook) -> DependencyGraph:
    """Compile every formula and derive the recalculation order.

    Rebuilt only when formulas or names change, never per record.
    """
    graph = DependencyGraph()
    formula_deps: dict[tuple, set[tuple]] = {}
    for key, ast in wb._formulas.items():
        formula_deps[key] = _formula_dependencies(wb, key, ast)

    # Kahn's algorithm over formula-to-formula edges.
    indegree = {key: 0 for key in formula_deps}
    dependents_f: dict[tuple, list[tuple]] = {key: [] for key in formula_deps}
    for key, deps in formula_deps.items():
        for dep in deps:
            if dep in formula_deps:
                indegree[key] += 1
                dependents_f[dep].append(key)

    ready = sorted(key for key, deg in indegree.items() if deg == 0)
    order: list[tuple] = []
    while ready:
        key = ready.pop()
        order.append(key)
        for dependent in dependents_f[key]:
            indegree[dependent] -= 1
            if indegree[dependent] == 0:
                ready.append(dependent)
    if len(order) != len(formula_deps):
        remaining = {k for k, deg in indegree.items() if deg > 0}
        start = min(remaining)
        cycle_keys = _find_cycle(
            {k: [d for d in formula_deps[k] if d in remaining] for k in remaining},
            start,
        )
        cycle = [f"{k[0]}!{format_a1(k[1], k[2])}" for k in cycle_keys]
        raise CycleError(cycle)

    graph.order = order
    graph.topo_index = {key: i for i, key in enumerate(order)}
    for key, deps in formula_deps.items():
        for dep in deps:
            graph.dependents.setdefault(dep, []).append(key)
    for key in order:
        ctx = EvalContext(wb, key[0])
        graph.compiled[key] = _compile(wb._formulas[key], ctx)
    graph.version = wb.structure_version
    wb.graph = graph
    return graph


def _current_graph(wb: Workbook) -> DependencyGraph:
    graph = wb.graph
    if graph is None or graph.version != wb.structure_version:
        graph = build_graph(wb)
    return graph


def recalculate(wb: Workbook, dirty=None) -> int:
    """Re-evaluate formula cells downstream of the dirty set.

    ``dirty`` is an iterable of CellAddress (or raw keys); None means a
    full recalculation. Every affected cell is evaluated exactly once,
    in topological order. Evaluation problems become error values in
    cells, never exceptions. Returns the number of cells evaluated.
    """
    graph = _current_graph(wb)
    values = wb.values
    if dirty is None:
        steps = [(key, graph.compiled[key]) for key in graph.order]
    else:
        dirty_keys = frozenset(
            a.key() if isinstance(a, CellAddress) else a for a in dirty
        )
        if not dirty_keys:
            return 0
        steps = graph.plan(dirty_keys)
    for key, fn in steps:
        values[key] = fn()
    return len(steps)
