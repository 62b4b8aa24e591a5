"""Pure-Python kernels: big-int bitsets for graph closure, numpy for scoring.

The compiled twin in _kernels.pyx exposes the same two functions; accel.py
picks whichever is importable.
"""

from __future__ import annotations

import numpy as np


def reach_closure(n: int, adj: list[int]) -> list[int]:
    """closure[i] = bitmask of nodes reachable from i via >= 1 edge.

    Runs Tarjan's SCC first and merges descendant masks in the reverse
    topological order the algorithm emits, so each edge is touched once.
    Nodes inside a nontrivial component reach every member, themselves
    included.
    """
    comp = [-1] * n
    comp_members: list[int] = []  # bitmask per component
    comp_size: list[int] = []
    index = [-1] * n
    low = [0] * n
    on_stack = bytearray(n)
    tstack: list[int] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, None)]
        while work:
            node, succ_iter = work[-1]
            if succ_iter is None:
                index[node] = low[node] = counter
                counter += 1
                tstack.append(node)
                on_stack[node] = 1
                succ_iter = _bits(adj[node])
                work[-1] = (node, succ_iter)
            advanced = False
            for nxt in succ_iter:
                if index[nxt] == -1:
                    work.append((nxt, None))
                    advanced = True
                    break
                if on_stack[nxt]:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                cid = len(comp_members)
                mask = 0
                size = 0
                while True:
                    member = tstack.pop()
                    on_stack[member] = 0
                    comp[member] = cid
                    mask |= 1 << member
                    size += 1
                    if member == node:
                        break
                comp_members.append(mask)
                comp_size.append(size)

    # components come out in reverse topological order: successors first
    comp_reach = [0] * len(comp_members)
    comp_nodes: list[list[int]] = [[] for _ in comp_members]
    for v in range(n):
        comp_nodes[comp[v]].append(v)
    for cid in range(len(comp_members)):
        reach = comp_members[cid] if comp_size[cid] > 1 else 0
        seen_comps = set()
        for u in comp_nodes[cid]:
            for v in _bits(adj[u]):
                d = comp[v]
                if d != cid and d not in seen_comps:
                    seen_comps.add(d)
                    reach |= comp_members[d] | comp_reach[d]
        comp_reach[cid] = reach

    return [comp_reach[comp[v]] for v in range(n)]


def _bits(mask: int):
    while mask:
        lowbit = mask & -mask
        yield lowbit.bit_length() - 1
        mask ^= lowbit


def score_items(codes: np.ndarray, offsets: np.ndarray, tables: np.ndarray) -> np.ndarray:
    """scores[i] = sum over factors f of tables[offsets[f] + codes[i, f]]."""
    return tables[codes + offsets[np.newaxis, :]].sum(axis=1)
