"""s-t maximum flow / minimum cut on sparse directed networks.

The solver grows two search trees, one rooted at the source and one at the
sink, and keeps both trees alive across augmentations: after an augmenting
path saturates, only the nodes whose parent edge died become orphans and try
to reattach, everything else is reused.  Terminal capacities are folded into
a per-node residual (``tr > 0``: that much capacity left on the s->node arc,
``tr < 0``: on the node->t arc), with the trivially routable
``min(s_cap, t_cap)`` pushed up front -- this keeps node degrees small and
leaves the source-side reachability of the declared network intact.

Capacities are 64-bit floats; integer inputs stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import EngineError

_FREE, _SRC, _SINK = 0, 1, 2
_NO_PARENT = np.int64(-1)   # not in any tree
_TERMINAL = np.int64(-2)    # tree root: fed by its terminal residual
_ORPHAN = np.int64(-3)      # waiting for adoption


@dataclass
class FlowNetwork:
    """Directed capacitated network with implicit terminals.

    Graph nodes are ``0 .. node_count-1``; the source ``s`` and sink ``t``
    take the next two indices.  Arcs are parallel arrays (tail, head,
    capacity >= 0); parallel arcs are allowed and kept separate.
    """

    node_count: int
    tails: np.ndarray
    heads: np.ndarray
    caps: np.ndarray
    s: int = -1
    t: int = -1
    maxw: float | None = None           # set by graph builders that use huge arcs
    fixed_rays: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.s < 0:
            self.s = self.node_count
        if self.t < 0:
            self.t = self.node_count + 1
        self.tails = np.asarray(self.tails, dtype=np.int64)
        self.heads = np.asarray(self.heads, dtype=np.int64)
        self.caps = np.asarray(self.caps, dtype=np.float64)
        if not (len(self.tails) == len(self.heads) == len(self.caps)):
            raise ValueError("tails/heads/caps must have equal length")

    @classmethod
    def from_arcs(cls, node_count, arcs):
        """Build from an iterable of (tail, head, capacity) triples."""
        arcs = list(arcs)
        tails = np.array([a[0] for a in arcs], dtype=np.int64)
        heads = np.array([a[1] for a in arcs], dtype=np.int64)
        caps = np.array([a[2] for a in arcs], dtype=np.float64)
        return cls(node_count, tails, heads, caps)

    @property
    def arc_count(self):
        return len(self.tails)

    @property
    def arcs(self):
        """Arcs as (tail, head, capacity) tuples, in input order."""
        return [(int(u), int(v), float(c)) for u, v, c in zip(self.tails, self.heads, self.caps)]

    def add_arcs(self, tails, heads, caps):
        self.tails = np.concatenate([self.tails, np.asarray(tails, dtype=np.int64)])
        self.heads = np.concatenate([self.heads, np.asarray(heads, dtype=np.int64)])
        self.caps = np.concatenate([self.caps, np.asarray(caps, dtype=np.float64)])

    def validate(self):
        n_total = self.node_count + 2
        if self.arc_count:
            if self.tails.min() < 0 or self.tails.max() >= n_total:
                raise ValueError("arc tail out of range")
            if self.heads.min() < 0 or self.heads.max() >= n_total:
                raise ValueError("arc head out of range")
        if np.any(~np.isfinite(self.caps)) or np.any(self.caps < 0):
            raise ValueError("capacities must be finite and >= 0")
        if np.any(self.heads == self.s):
            raise ValueError("no arc may enter the source")
        if np.any(self.tails == self.t):
            raise ValueError("no arc may leave the sink")


@dataclass
class CutResult:
    max_flow_value: float
    source_side: np.ndarray  # bool, length node_count + 2 (includes s and t)
    cut_capacity: float


@njit(cache=True)
def _bk_core(first, adj, e_to, e_cap, tr, n):
    """Grow/augment/adopt loop; mutates e_cap and tr, returns pushed flow."""
    parent = np.full(n, _NO_PARENT, dtype=np.int64)
    tree = np.zeros(n, dtype=np.uint8)
    dist = np.zeros(n, dtype=np.int64)
    stamp = np.zeros(n, dtype=np.int64)

    act_q = np.empty(n + 1, dtype=np.int64)   # FIFO ring; in_act bounds entries by n
    act_head = 0
    act_len = 0
    in_act = np.zeros(n, dtype=np.uint8)
    orp_q = np.empty(n + 1, dtype=np.int64)
    orp_head = 0
    orp_len = 0

    for v in range(n):
        if tr[v] > 0.0:
            tree[v] = _SRC
            parent[v] = _TERMINAL
            dist[v] = 1
        elif tr[v] < 0.0:
            tree[v] = _SINK
            parent[v] = _TERMINAL
            dist[v] = 1
        if tree[v] != _FREE:
            act_q[(act_head + act_len) % (n + 1)] = v
            act_len += 1
            in_act[v] = 1

    flow = 0.0
    time = np.int64(1)

    while True:
        # ---- grow: scan active nodes until two trees touch ----------------
        bridge = np.int64(-1)
        while act_len > 0:
            u = act_q[act_head]
            if tree[u] == _FREE or parent[u] == _NO_PARENT:
                act_head = (act_head + 1) % (n + 1)
                act_len -= 1
                in_act[u] = 0
                continue
            tu = tree[u]
            for ii in range(first[u], first[u + 1]):
                e = adj[ii]
                if tu == _SRC:
                    if e_cap[e] <= 0.0:
                        continue
                else:
                    if e_cap[e ^ 1] <= 0.0:
                        continue
                v = e_to[e]
                tv = tree[v]
                if tv == _FREE:
                    tree[v] = tu
                    parent[v] = e  # oriented parent -> child
                    dist[v] = dist[u] + 1
                    stamp[v] = stamp[u]
                    if in_act[v] == 0:
                        act_q[(act_head + act_len) % (n + 1)] = v
                        act_len += 1
                        in_act[v] = 1
                elif tv != tu:
                    bridge = e if tu == _SRC else (e ^ 1)
                    break
                elif stamp[v] <= stamp[u] and dist[v] > dist[u] + 1:
                    # cheap re-parent toward the shorter path
                    parent[v] = e
                    dist[v] = dist[u] + 1
                    stamp[v] = stamp[u]
            if bridge >= 0:
                break  # u stays active; rescan after adoption
            act_head = (act_head + 1) % (n + 1)
            act_len -= 1
            in_act[u] = 0
        if bridge < 0:
            return flow  # no augmenting path left

        time += 1

        # ---- augment along s-tree path + bridge + t-tree path -------------
        bottleneck = e_cap[bridge]
        x = e_to[bridge ^ 1]
        while parent[x] != _TERMINAL:
            pe = parent[x]
            if e_cap[pe] < bottleneck:
                bottleneck = e_cap[pe]
            x = e_to[pe ^ 1]
        if tr[x] < bottleneck:
            bottleneck = tr[x]
        y = e_to[bridge]
        while parent[y] != _TERMINAL:
            pe = parent[y]
            if e_cap[pe ^ 1] < bottleneck:
                bottleneck = e_cap[pe ^ 1]
            y = e_to[pe ^ 1]
        if -tr[y] < bottleneck:
            bottleneck = -tr[y]

        e_cap[bridge] -= bottleneck
        e_cap[bridge ^ 1] += bottleneck
        x = e_to[bridge ^ 1]
        while parent[x] != _TERMINAL:
            pe = parent[x]
            e_cap[pe] -= bottleneck
            e_cap[pe ^ 1] += bottleneck
            nxt = e_to[pe ^ 1]
            if e_cap[pe] <= 0.0:
                child = e_to[pe]
                parent[child] = _ORPHAN
                stamp[child] = 0
                orp_q[(orp_head + orp_len) % (n + 1)] = child
                orp_len += 1
            x = nxt
        tr[x] -= bottleneck
        if tr[x] <= 0.0:
            parent[x] = _ORPHAN
            stamp[x] = 0
            orp_q[(orp_head + orp_len) % (n + 1)] = x
            orp_len += 1
        y = e_to[bridge]
        while parent[y] != _TERMINAL:
            pe = parent[y]
            e_cap[pe ^ 1] -= bottleneck
            e_cap[pe] += bottleneck
            nxt = e_to[pe ^ 1]
            if e_cap[pe ^ 1] <= 0.0:
                child = e_to[pe]
                parent[child] = _ORPHAN
                stamp[child] = 0
                orp_q[(orp_head + orp_len) % (n + 1)] = child
                orp_len += 1
            y = nxt
        tr[y] += bottleneck
        if tr[y] >= 0.0:
            parent[y] = _ORPHAN
            stamp[y] = 0
            orp_q[(orp_head + orp_len) % (n + 1)] = y
            orp_len += 1
        flow += bottleneck

        # ---- adopt: reattach or free every orphan --------------------------
        while orp_len > 0:
            v = orp_q[orp_head]
            orp_head = (orp_head + 1) % (n + 1)
            orp_len -= 1
            if parent[v] != _ORPHAN:
                continue  # re-queued and already handled
            tv = tree[v]
            best_e = np.int64(-1)
            best_d = np.int64(0)
            for ii in range(first[v], first[v + 1]):
                e = adj[ii]  # v -> u
                u = e_to[e]
                if tree[u] != tv:
                    continue
                # residual must run toward v for the source tree (u -> v),
                # away from v for the sink tree (v -> u)
                if tv == _SRC:
                    if e_cap[e ^ 1] <= 0.0:
                        continue
                else:
                    if e_cap[e] <= 0.0:
                        continue
                # walk u's chain to a terminal-rooted node; stamps cache
                # "verified this round" and are wiped on orphan/free
                d = np.int64(0)
                w = u
                ok = False
                while True:
                    if stamp[w] == time:
                        d += dist[w]
                        ok = True
                        break
                    pw = parent[w]
                    if pw == _TERMINAL:
                        d += 1
                        ok = True
                        break
                    if pw == _ORPHAN or pw == _NO_PARENT:
                        ok = False
                        break
                    d += 1
                    w = e_to[pw ^ 1]
                if not ok:
                    continue
                # restamp the verified chain with its distance to the root
                dd = d
                w = u
                while True:
                    if stamp[w] == time:
                        break
                    dist[w] = dd
                    stamp[w] = time
                    dd -= 1
                    pw = parent[w]
                    if pw == _TERMINAL:
                        break
                    w = e_to[pw ^ 1]
                if best_e < 0 or d < best_d:
                    best_e = e
                    best_d = d
            if best_e >= 0:
                parent[v] = best_e ^ 1  # orient parent -> child
                dist[v] = best_d + 1
                stamp[v] = time
            else:
                # no parent: v leaves the tree; neighbors may need rescanning
                for ii in range(first[v], first[v + 1]):
                    e = adj[ii]  # oriented v -> u
                    u = e_to[e]
                    if tree[u] != tv:
                        continue
                    if parent[u] == e:
                        # u is a child of v: orphan it
                        parent[u] = _ORPHAN
                        stamp[u] = 0
                        orp_q[(orp_head + orp_len) % (n + 1)] = u
                        orp_len += 1
                    # u could adopt v's former subtree later: make it active
                    if tv == _SRC:
                        has_res = e_cap[e ^ 1] > 0.0
                    else:
                        has_res = e_cap[e] > 0.0
                    if has_res and in_act[u] == 0:
                        act_q[(act_head + act_len) % (n + 1)] = u
                        act_len += 1
                        in_act[u] = 1
                tree[v] = _FREE
                stamp[v] = 0
                parent[v] = _NO_PARENT


@njit(cache=True)
def _reach_from_source(first, adj, e_to, e_cap, tr, n):
    """Nodes reachable from s in the final residual graph (BFS, input order)."""
    seen = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    qlen = 0
    for v in range(n):
        if tr[v] > 0.0:
            seen[v] = True
            queue[qlen] = v
            qlen += 1
    qpos = 0
    while qpos < qlen:
        u = queue[qpos]
        qpos += 1
        for ii in range(first[u], first[u + 1]):
            e = adj[ii]
            if e_cap[e] > 0.0:
                v = e_to[e]
                if not seen[v]:
                    seen[v] = True
                    queue[qlen] = v
                    qlen += 1
    return seen


def _warmup():
    """Compile the jitted kernels on a 2-node network (first call only)."""
    net = FlowNetwork.from_arcs(2, [(2, 0, 1.0), (0, 1, 1.0), (1, 3, 1.0)])
    max_flow(net)


def max_flow(net, with_flows=False):
    """Run the solver; returns :class:`CutResult`.

    ``source_side`` is the set of nodes reachable from ``s`` in the final
    residual graph -- the unique minimal source side over all minimum cuts.
    The duality ``max_flow_value == cut_capacity`` is checked to 1e-6
    relative tolerance before returning.  With ``with_flows=True`` the result
    gains an ``arc_flows`` array giving one valid flow assignment per
    declared arc (parallel terminal arcs are filled greedily in input order).
    """
    net.validate()
    n = net.node_count
    s, t = net.s, net.t

    tails, heads, caps = net.tails, net.heads, net.caps
    from_s = tails == s
    into_t = heads == t
    direct = from_s & into_t
    internal = ~from_s & ~into_t

    tr = np.zeros(n, dtype=np.float64)
    s_cap = np.zeros(n, dtype=np.float64)
    t_cap = np.zeros(n, dtype=np.float64)
    sel = from_s & ~direct
    np.add.at(s_cap, heads[sel], caps[sel])
    sel = into_t & ~direct
    np.add.at(t_cap, tails[sel], caps[sel])
    flow0 = float(caps[direct].sum()) + float(np.minimum(s_cap, t_cap).sum())
    tr[:] = s_cap - t_cap

    iu = tails[internal]
    iv = heads[internal]
    ic = caps[internal]
    m = len(iu)
    e_to = np.empty(2 * m, dtype=np.int64)
    e_cap = np.empty(2 * m, dtype=np.float64)
    e_to[0::2] = iv
    e_to[1::2] = iu
    e_cap[0::2] = ic
    e_cap[1::2] = 0.0
    e_tail = np.empty(2 * m, dtype=np.int64)
    e_tail[0::2] = iu
    e_tail[1::2] = iv
    order = np.argsort(e_tail, kind="stable")
    first = np.zeros(n + 1, dtype=np.int64)
    np.add.at(first, e_tail + 1, 1)
    first = np.cumsum(first)

    pushed = _bk_core(first, order, e_to, e_cap, tr, n)
    total = flow0 + float(pushed)

    reach = _reach_from_source(first, order, e_to, e_cap, tr, n)
    side = np.zeros(n + 2, dtype=bool)
    side[:n] = reach
    side[s] = True
    side[t] = False

    crossing = side[tails] & ~side[heads]
    cut = float(caps[crossing].sum())
    if abs(total - cut) > 1e-6 * max(1.0, abs(total)):
        raise EngineError(
            "flow/cut duality violated: flow=%.12g cut=%.12g" % (total, cut),
            kind="solver_error",
        )
    result = CutResult(max_flow_value=total, source_side=side, cut_capacity=cut)
    if with_flows:
        flows = np.zeros(net.arc_count, dtype=np.float64)
        flows[direct] = caps[direct]
        ii = np.flatnonzero(internal)
        flows[ii] = ic - e_cap[0::2]
        used_s = s_cap - np.maximum(tr, 0.0)
        used_t = t_cap - np.maximum(-tr, 0.0)
        for i in np.flatnonzero(from_s & ~direct):
            take = min(caps[i], used_s[heads[i]])
            flows[i] = take
            used_s[heads[i]] -= take
        for i in np.flatnonzero(into_t & ~direct):
            take = min(caps[i], used_t[tails[i]])
            flows[i] = take
            used_t[tails[i]] -= take
        result.arc_flows = flows
    return result


def closed_set_cost(net, side):
    """Capacity of the cut induced by a partition (test oracle helper).

    ``side`` is a boolean array over ``node_count + 2`` entries (or a set of
    node indices) marking the source side; it must contain ``s`` and exclude
    ``t``.  Returns the summed capacity of arcs leaving the side.
    """
    n_total = net.node_count + 2
    if isinstance(side, (set, frozenset, list, tuple)):
        mask = np.zeros(n_total, dtype=bool)
        mask[list(side)] = True
        side = mask
    side = np.asarray(side, dtype=bool)
    if side.shape != (n_total,):
        raise ValueError("side must cover all %d nodes incl. s and t" % n_total)
    if not side[net.s] or side[net.t]:
        raise ValueError("source side must contain s and exclude t")
    crossing = side[net.tails] & ~side[net.heads]
    return float(net.caps[crossing].sum())


def to_dimacs(net):
    """Render the network in DIMACS max-flow format (1-based node ids)."""
    lines = ["p max %d %d" % (net.node_count + 2, net.arc_count)]
    lines.append("n %d s" % (net.s + 1))
    lines.append("n %d t" % (net.t + 1))
    for u, v, c in zip(net.tails, net.heads, net.caps):
        lines.append("a %d %d %.17g" % (u + 1, v + 1, c))
    return "\n".join(lines) + "\n"
