"""Ground structures for plane-truss layout optimization.

A ground structure is a dense grid of candidate members spanning a set of
nodes. Nodes are classified into *fixed* nodes (supports and loaded nodes,
whose coordinates stay where the grid put them) and *free* nodes (whose
coordinates are determined by force-density equilibrium). Loads may act
only on fixed nodes. Supports are the subset of fixed nodes whose
displacements are constrained in the stiffness analysis; loaded nodes keep
their location during optimization but are free to displace under load.
"""

from typing import NamedTuple

import numpy as np

NodeId = int


class Member(NamedTuple):
    end_a: NodeId
    end_b: NodeId


# entry layout of one 4x4 bar stiffness block, kron([[1,-1],[-1,1]], T)
# with T = [[cc, cs], [cs, ss]]: type 0 = cc, 1 = cs, 2 = ss
_BLOCK_TYPE = np.array([0, 1, 0, 1, 1, 2, 1, 2, 0, 1, 0, 1, 1, 2, 1, 2])
_BLOCK_SIGN = np.array([+1, +1, -1, -1, +1, +1, -1, -1,
                        -1, -1, +1, +1, -1, -1, +1, +1], dtype=float)


class GroundStructure:
    """Immutable plane-truss ground structure.

    Parameters
    ----------
    x, y : array_like, shape (n,)
        Initial nodal coordinates of all nodes.
    members : sequence of (int, int)
        Member connectivity as unordered node pairs.
    supports : sequence
        Support nodes. Each entry is either a node id (pin, both
        components constrained) or a ``(node, components)`` pair with
        components one of ``"x"``, ``"y"``, ``"xy"``.
    px, py : array_like, shape (n,)
        Nodal loads. Nonzero loads are only allowed on fixed nodes, and a
        node with a nonzero load is fixed by definition.
    W, H : float, optional
        Overall width and height; default to the coordinate extents.

    Instances are immutable after construction and safe to share between
    threads; all derived index and incidence arrays are precomputed here.
    """

    def __init__(self, x, y, members, supports, px, py, W=None, H=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        n = x.size
        if y.size != n:
            raise ValueError("x and y must have the same length")
        mem = np.asarray([(int(a), int(b)) for a, b in members], dtype=int)
        if mem.ndim != 2 or mem.shape[1] != 2:
            raise ValueError("members must be a sequence of node pairs")
        if np.any(mem < 0) or np.any(mem >= n):
            raise ValueError("member endpoint out of range")
        if np.any(mem[:, 0] == mem[:, 1]):
            raise ValueError("member connects a node to itself")
        seen = set()
        for a, b in mem:
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate member {key}")
            seen.add(key)

        support_ids = []
        fixity = {}
        for entry in supports:
            if isinstance(entry, (tuple, list)):
                node, comp = int(entry[0]), str(entry[1]).lower()
            else:
                node, comp = int(entry), "xy"
            if comp not in ("x", "y", "xy"):
                raise ValueError(f"support component must be x, y or xy, got {comp!r}")
            if not 0 <= node < n:
                raise ValueError(f"support node {node} out of range")
            support_ids.append(node)
            fx, fy = fixity.get(node, (False, False))
            fixity[node] = (fx or "x" in comp, fy or "y" in comp)

        px = np.zeros(n) + np.asarray(px, dtype=float)
        py = np.zeros(n) + np.asarray(py, dtype=float)

        loaded = set(np.nonzero((px != 0.0) | (py != 0.0))[0].tolist())
        fixed = sorted(loaded | set(support_ids))
        free = sorted(set(range(n)) - set(fixed))

        self.n = n
        self.m = mem.shape[0]
        self.members = mem
        self.members.setflags(write=False)
        self.free_index = np.array(free, dtype=int)
        self.fixed_index = np.array(fixed, dtype=int)
        self.support_index = np.array(sorted(set(support_ids)), dtype=int)
        self.support_fixity = np.array(
            [fixity[i] for i in self.support_index], dtype=bool
        ).reshape(-1, 2)
        self.x_fix = x[self.fixed_index].copy()
        self.y_fix = y[self.fixed_index].copy()
        self.x0_free = x[self.free_index].copy()
        self.y0_free = y[self.free_index].copy()
        self.px_fix = px[self.fixed_index].copy()
        self.py_fix = py[self.fixed_index].copy()
        self.W = float(W) if W is not None else float(x.max() - x.min())
        self.H = float(H) if H is not None else float(y.max() - y.min())

        self._check_connected()
        self._precompute(px, py)

    # -- derived data ---------------------------------------------------

    def _check_connected(self):
        adj = [[] for _ in range(self.n)]
        for a, b in self.members:
            adj[a].append(b)
            adj[b].append(a)
        seen = np.zeros(self.n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        if not seen.all():
            raise ValueError("member graph is not connected")

    def _precompute(self, px, py):
        ia = self.members[:, 0]
        ib = self.members[:, 1]
        self._ia = ia
        self._ib = ib

        # signed incidence, C[k, a] = -1 and C[k, b] = +1 for member k,
        # split into free and fixed column blocks
        C = np.zeros((self.m, self.n))
        rows = np.arange(self.m)
        C[rows, ia] = -1.0
        C[rows, ib] = +1.0
        self._C_free = np.ascontiguousarray(C[:, self.free_index])
        self._C_fix = np.ascontiguousarray(C[:, self.fixed_index])
        self._fix_xy = np.column_stack([self.x_fix, self.y_fix])

        # stiffness bookkeeping: map full dofs (2i, 2i+1) to the reduced
        # system that drops constrained support components
        constrained = np.zeros(2 * self.n, dtype=bool)
        for node, (fx, fy) in zip(self.support_index, self.support_fixity):
            constrained[2 * node] = fx
            constrained[2 * node + 1] = fy
        dof_map = -np.ones(2 * self.n, dtype=int)
        ndof = int((~constrained).sum())
        dof_map[~constrained] = np.arange(ndof)
        self._dof_map = dof_map
        self._ndof = ndof

        f_full = np.zeros(2 * self.n)
        f_full[0::2] = px
        f_full[1::2] = py
        self._f_red = f_full[~constrained]

        # per-member 4x4 block scatter: 16 (row, col) pairs per member,
        # entries into constrained dofs dropped once here
        dofs = np.stack([2 * ia, 2 * ia + 1, 2 * ib, 2 * ib + 1], axis=1)
        rows16 = dof_map[np.repeat(dofs, 4, axis=1)]
        cols16 = dof_map[np.tile(dofs, (1, 4))]
        keep = (rows16 >= 0) & (cols16 >= 0)
        self._k_lin = (rows16 * ndof + cols16)[keep]
        self._k_keep = keep.reshape(-1)
        self._block_type = _BLOCK_TYPE
        self._block_sign = _BLOCK_SIGN

    # -- spec-facing views ----------------------------------------------

    @property
    def free_nodes(self):
        return frozenset(self.free_index.tolist())

    @property
    def fixed_nodes(self):
        return frozenset(self.fixed_index.tolist())

    @property
    def support_nodes(self):
        return frozenset(self.support_index.tolist())

    def member_list(self):
        return [Member(int(a), int(b)) for a, b in self.members]

    def full_initial_coordinates(self):
        """Initial (x, y) of all nodes, fixed coordinates included."""
        x = np.empty(self.n)
        y = np.empty(self.n)
        x[self.free_index] = self.x0_free
        x[self.fixed_index] = self.x_fix
        y[self.free_index] = self.y0_free
        y[self.fixed_index] = self.y_fix
        return x, y

    def full_loads(self):
        """(px, py) over all nodes; zero on free nodes by construction."""
        px = np.zeros(self.n)
        py = np.zeros(self.n)
        px[self.fixed_index] = self.px_fix
        py[self.fixed_index] = self.py_fix
        return px, py

    def support_entries(self):
        out = []
        for node, (fx, fy) in zip(self.support_index, self.support_fixity):
            comp = ("x" if fx else "") + ("y" if fy else "")
            out.append((int(node), comp))
        return out

    def __repr__(self):
        return (f"GroundStructure(n={self.n}, m={self.m}, "
                f"free={len(self.free_index)}, fixed={len(self.fixed_index)}, "
                f"W={self.W:g}, H={self.H:g})")


def generate_grid(nx, ny, W, H, supports=None, loads=None):
    """Build an nx-by-ny cell grid with crossing diagonals in every cell.

    Nodes are numbered column-major: index = col*(ny+1) + row, columns
    left to right, rows bottom to top. Members are all horizontal and
    vertical edges plus both diagonals of every cell; the diagonals cross
    without an intermediate node, so m = nx(ny+1) + ny(nx+1) + 2 nx ny.

    By default the left-edge nodes are pin supports and a unit load acts
    in -y at the right-edge node nearest mid-height (node 10 for the
    3x2 grid), the standard cantilever configuration for this family.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be at least 1")
    if W <= 0 or H <= 0:
        raise ValueError("W and H must be positive")
    cols = nx + 1
    rows = ny + 1
    xs = np.repeat(np.arange(cols) * (W / nx), rows)
    ys = np.tile(np.arange(rows) * (H / ny), cols)

    def node(col, row):
        return col * rows + row

    members = []
    for col in range(nx):
        for row in range(rows):
            members.append((node(col, row), node(col + 1, row)))
    for col in range(cols):
        for row in range(ny):
            members.append((node(col, row), node(col, row + 1)))
    for col in range(nx):
        for row in range(ny):
            members.append((node(col, row), node(col + 1, row + 1)))
            members.append((node(col + 1, row), node(col, row + 1)))

    if supports is None:
        supports = [node(0, r) for r in range(rows)]
    if loads is None:
        loads = [(node(nx, ny // 2), "y", -1.0)]

    px = np.zeros(cols * rows)
    py = np.zeros(cols * rows)
    for nid, axis, mag in loads:
        axis = str(axis).lower()
        if axis == "x":
            px[int(nid)] += float(mag)
        elif axis == "y":
            py[int(nid)] += float(mag)
        else:
            raise ValueError(f"load axis must be x or y, got {axis!r}")

    return GroundStructure(xs, ys, members, supports, px, py, W=W, H=H)


def scale_structure(g, sx, sy):
    """Anisotropically scale a structure by (sx, sy).

    All nodal coordinates (fixed and initial free) are scaled, as are W
    and H. Connectivity, loads and the free/fixed classification are
    unchanged.
    """
    if sx <= 0 or sy <= 0:
        raise ValueError("scale factors must be positive")
    x, y = g.full_initial_coordinates()
    px, py = g.full_loads()
    return GroundStructure(
        x * sx, y * sy, g.members, g.support_entries(), px, py,
        W=g.W * sx, H=g.H * sy,
    )


# -- problem files ------------------------------------------------------
#
# Line-oriented text format, '#' starts a comment:
#   node <id> <x> <y>
#   member <a> <b>
#   support <node> [x|y|xy]        (default xy: pin)
#   load <node> <x|y> <magnitude>
# Node ids must be 0..n-1, each defined exactly once. Fixed nodes are the
# supports plus the loaded nodes; everything else is free.

def load_problem(path):
    """Read a ground structure from a problem file (schema above)."""
    nodes = {}
    members = []
    supports = []
    loads = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            kind = parts[0].lower()
            try:
                if kind == "node":
                    nid = int(parts[1])
                    if nid in nodes:
                        raise ValueError(f"node {nid} defined twice")
                    nodes[nid] = (float(parts[2]), float(parts[3]))
                elif kind == "member":
                    members.append((int(parts[1]), int(parts[2])))
                elif kind == "support":
                    comp = parts[2] if len(parts) > 2 else "xy"
                    supports.append((int(parts[1]), comp))
                elif kind == "load":
                    loads.append((int(parts[1]), parts[2], float(parts[3])))
                else:
                    raise ValueError(f"unknown record {kind!r}")
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    if not nodes:
        raise ValueError(f"{path}: no nodes defined")
    n = len(nodes)
    if sorted(nodes) != list(range(n)):
        raise ValueError(f"{path}: node ids must be contiguous from 0")
    x = np.array([nodes[i][0] for i in range(n)])
    y = np.array([nodes[i][1] for i in range(n)])
    px = np.zeros(n)
    py = np.zeros(n)
    for nid, axis, mag in loads:
        if str(axis).lower() == "x":
            px[nid] += mag
        elif str(axis).lower() == "y":
            py[nid] += mag
        else:
            raise ValueError(f"{path}: load axis must be x or y")
    return GroundStructure(x, y, members, supports, px, py)


def problem_text(g):
    """Canonical problem-file text for a structure (see schema above)."""
    lines = ["# fdtruss problem file"]
    x, y = g.full_initial_coordinates()
    for i in range(g.n):
        lines.append(f"node {i} {x[i]:.17g} {y[i]:.17g}")
    for a, b in g.members:
        lines.append(f"member {a} {b}")
    for node, comp in g.support_entries():
        lines.append(f"support {node} {comp}")
    px, py = g.full_loads()
    for i in range(g.n):
        if px[i] != 0.0:
            lines.append(f"load {i} x {px[i]:.17g}")
        if py[i] != 0.0:
            lines.append(f"load {i} y {py[i]:.17g}")
    return "\n".join(lines) + "\n"


def save_problem(g, path):
    """Write a structure to a problem file."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(problem_text(g))
