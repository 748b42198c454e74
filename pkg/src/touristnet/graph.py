"""Undirected instance graphs whose vertices carry payload rows and class tags.

The central type supports two mutation styles: permanent vertex absorption
and *scoped* insertion, where a probe vertex plus its edges are added, used,
and removed again leaving the structure exactly as before (LIFO order when
nested).  Component bookkeeping is deterministic: component ids are assigned
0..C-1 in order of each component's smallest vertex.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import distance, distances_to


class GraphError(ValueError):
    """Structural misuse: bad vertex ids, self loops, broken rollback order."""


def _components_from_adjacency(adjacency) -> tuple[list[int], int]:
    n = len(adjacency)
    comp = [-1] * n
    count = 0
    for v in range(n):  # ascending start order gives ids by smallest member
        if comp[v] != -1:
            continue
        stack = [v]
        comp[v] = count
        while stack:
            u = stack.pop()
            for w in adjacency[u]:
                if comp[w] == -1:
                    comp[w] = count
                    stack.append(w)
        count += 1
    return comp, count


@dataclass
class ScopedVertex:
    """Handle for one scoped insertion; release() restores the graph."""

    graph: ClassNetwork
    vertex: int
    edges: tuple[int, ...]
    released: bool = field(default=False, init=False)

    def release(self) -> None:
        self.graph._release_scoped(self)

    def __enter__(self) -> ScopedVertex:
        return self

    def __exit__(self, *exc) -> None:
        if not self.released:
            self.release()


class ClassNetwork:
    """Mutable undirected graph over payload rows partitioned by class.

    Parameters
    ----------
    payloads : ndarray (n, d)
        One row per initial vertex.
    vertex_class : sequence of int
        Class code per vertex, codes into ``class_names``.
    class_names : sequence of str
    kinds : sequence of str
        Column kinds for the payload distance.
    """

    def __init__(self, payloads, vertex_class, class_names, kinds):
        payloads = np.asarray(payloads, dtype=np.float64)
        if payloads.ndim != 2:
            raise GraphError("payloads must be a 2-D array")
        self._payloads = payloads
        self._extra: list[np.ndarray] = []  # rows appended after construction
        self.class_names = tuple(class_names)
        self.kinds = tuple(kinds)
        self.vertex_class = [int(c) for c in vertex_class]
        if len(self.vertex_class) != payloads.shape[0]:
            raise GraphError("one class code per payload row required")
        for c in self.vertex_class:
            if not 0 <= c < len(self.class_names):
                raise GraphError(f"class code {c} out of range")
        self._adj: list[list[int]] = [[] for _ in range(payloads.shape[0])]
        self.component_of: list[int] = list(range(payloads.shape[0]))
        self.component_count: int = payloads.shape[0]
        self._scope_stack: list[ScopedVertex] = []
        self._permanent_count = payloads.shape[0]
        self._dist_cache: dict[tuple[int, int], float] = {}

    # -- structure ---------------------------------------------------------

    @property
    def vertex_count(self) -> int:
        return len(self._adj)

    def payload(self, v: int) -> np.ndarray:
        self._check_vertex(v)
        base = self._payloads.shape[0]
        return self._payloads[v] if v < base else self._extra[v - base]

    def neighbors(self, v: int) -> list[int]:
        """Adjacent vertices of ``v``, ascending."""
        self._check_vertex(v)
        return sorted(self._adj[v])

    def degree(self, v: int) -> int:
        self._check_vertex(v)
        return len(self._adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        self._check_vertex(u)
        self._check_vertex(v)
        return v in self._adj[u]

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < len(self._adj):
            raise GraphError(f"vertex {v} out of range (V={len(self._adj)})")

    def add_edge(self, u: int, v: int) -> bool:
        """Insert an undirected edge; returns False if it already existed."""
        self._check_vertex(u)
        self._check_vertex(v)
        if u == v:
            raise GraphError(f"self loop at vertex {u}")
        if v in self._adj[u]:
            return False
        self._adj[u].append(v)
        self._adj[v].append(u)
        return True

    def payload_distance(self, u: int, v: int) -> float:
        """Distance between two vertex payloads (cached for permanent pairs)."""
        if u == v:
            return 0.0
        key = (u, v) if u < v else (v, u)
        if key[1] < self._permanent_count:
            hit = self._dist_cache.get(key)
            if hit is None:
                hit = distance(self.payload(u), self.payload(v), self.kinds)
                self._dist_cache[key] = hit
            return hit
        return distance(self.payload(u), self.payload(v), self.kinds)

    def distances_to_all(self, x) -> np.ndarray:
        """Distance from every current vertex to an external row ``x``."""
        base = distances_to(self._payloads, x, self.kinds)
        if not self._extra:
            return base
        extra = distances_to(np.array(self._extra), x, self.kinds)
        return np.concatenate([base, extra])

    # -- classes and components --------------------------------------------

    @property
    def class_count(self) -> int:
        return len(self.class_names)

    def class_sizes(self) -> np.ndarray:
        return np.bincount(
            np.array(self.vertex_class, dtype=np.int64), minlength=self.class_count
        )

    def vertices_of_class(self, code: int) -> list[int]:
        return [v for v, c in enumerate(self.vertex_class) if c == code]

    def connected_components(self) -> tuple[list[int], int]:
        """Fresh component id per vertex plus the component count."""
        return _components_from_adjacency(self._adj)

    def refresh_components(self) -> int:
        self.component_of, self.component_count = self.connected_components()
        return self.component_count

    def component_vertices(self, comp_id: int) -> list[int]:
        return [v for v, c in enumerate(self.component_of) if c == comp_id]

    # -- mutation ------------------------------------------------------------

    def absorb(self, payload, class_code: int, edges) -> int:
        """Permanently add a vertex with the given class and edge targets."""
        if self._scope_stack:
            raise GraphError("cannot absorb while scoped insertions are active")
        class_code = int(class_code)
        if not 0 <= class_code < self.class_count:
            raise GraphError(f"class code {class_code} out of range")
        v = self._append_vertex(payload, class_code, edges)
        self._permanent_count = self.vertex_count
        self.refresh_components()
        return v

    def scoped_insert(self, payload, edges, class_code: int = -1) -> ScopedVertex:
        """Temporarily add a vertex; undo with release() in LIFO order.

        The probe joins the component of its first edge target (components
        are not recomputed, so the edge set must stay within one component,
        which holds for the single-class probes used during classification).
        """
        edges = tuple(dict.fromkeys(int(e) for e in edges))
        v = self._append_vertex(payload, class_code, edges)
        handle = ScopedVertex(graph=self, vertex=v, edges=edges)
        self._scope_stack.append(handle)
        return handle

    def _append_vertex(self, payload, class_code: int, edges) -> int:
        payload = np.asarray(payload, dtype=np.float64)
        if payload.shape != (self._payloads.shape[1],):
            raise GraphError(
                f"payload shape {payload.shape} does not match width {self._payloads.shape[1]}"
            )
        v = self.vertex_count
        for u in edges:
            if not 0 <= u < v:
                raise GraphError(f"edge target {u} out of range")
        self._extra.append(payload.copy())
        self._adj.append([])
        self.vertex_class.append(int(class_code))
        comp = self.component_of[edges[0]] if len(edges) else self.component_count
        self.component_of.append(comp)
        if not len(edges):
            self.component_count += 1
        for u in edges:
            self._adj[v].append(u)
            self._adj[u].append(v)  # appended last, so rollback can pop()
        return v

    def _release_scoped(self, handle: ScopedVertex) -> None:
        if handle.released:
            raise GraphError("scoped vertex released twice")
        if not self._scope_stack or self._scope_stack[-1] is not handle:
            raise GraphError("scoped releases must happen in LIFO order")
        self._scope_stack.pop()
        v = handle.vertex
        assert v == self.vertex_count - 1
        for u in handle.edges:
            popped = self._adj[u].pop()
            assert popped == v
        self._adj.pop()
        self._extra.pop()
        self.vertex_class.pop()
        self.component_of.pop()
        if not handle.edges:
            self.component_count -= 1
        handle.released = True

    # -- serialization -------------------------------------------------------

    def dump(self, fh) -> None:
        """Write the structure-only text form: V/E/C records."""
        fh.write(f"V {self.vertex_count}\n")
        for u in range(self.vertex_count):
            for v in self._adj[u]:
                if u < v:
                    fh.write(f"E {u} {v}\n")
        for v in range(self.vertex_count):
            code = self.vertex_class[v]
            name = self.class_names[code] if 0 <= code < self.class_count else "?"
            fh.write(f"C {v} {name}\n")

    def dumps(self) -> str:
        import io

        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()

    @classmethod
    def parse(cls, text: str) -> ClassNetwork:
        """Rebuild a structure-only graph (payloads empty, distances all zero)."""
        n = None
        edges = []
        classes = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "V" and len(parts) == 2:
                n = int(parts[1])
            elif parts[0] == "E" and len(parts) == 3:
                edges.append((int(parts[1]), int(parts[2])))
            elif parts[0] == "C" and len(parts) == 3:
                classes[int(parts[1])] = parts[2]
            else:
                raise GraphError(f"line {lineno}: unrecognized record {line!r}")
        if n is None:
            raise GraphError("missing V record")
        names = tuple(sorted(set(classes.values()))) or ("0",)
        code = {name: i for i, name in enumerate(names)}
        vclass = [code[classes[v]] if v in classes else 0 for v in range(n)]
        g = cls(np.zeros((n, 1)), vclass, names, ("numeric",))
        for u, v in edges:
            g.add_edge(u, v)
        g.refresh_components()
        return g

    def check_consistent(self) -> None:
        """Invariant sweep used by tests: symmetry, no loops, no duplicates."""
        for u in range(self.vertex_count):
            seen = set()
            for v in self._adj[u]:
                if v == u:
                    raise GraphError(f"self loop at {u}")
                if v in seen:
                    raise GraphError(f"duplicate edge {u}-{v}")
                seen.add(v)
                if u not in self._adj[v]:
                    raise GraphError(f"asymmetric edge {u}-{v}")
