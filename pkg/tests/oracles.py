"""Independent reference implementations used as test oracles.

These deliberately avoid the package's own helpers: plain Python lists and
dicts, textbook algorithms, no shared code paths with the code under test.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque


def cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    return dot / (na * nb)


def euclidean_similarity(a, b):
    return 1.0 / (1.0 + math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b))))


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


SIMILARITY = {"cosine": cosine, "euclidean": euclidean_similarity, "dot": dot}


def brute_topk(vectors, query, k, metric, threshold=None):
    """Score every vector, keep those >= threshold, sort by (-score, id)."""
    fn = SIMILARITY[metric]
    scored = [(fn(v, query), cid) for cid, v in vectors.items()]
    if threshold is not None:
        scored = [(s, c) for s, c in scored if s >= threshold]
    scored.sort(key=lambda sc: (-sc[0], sc[1]))
    return scored[:k]


def adjacency(edges, direction="out"):
    """edges: iterable of (src, dst, ...) -> {node: set(neighbours)}."""
    adj = {}
    for e in edges:
        s, d = e[0], e[1]
        adj.setdefault(s, set())
        adj.setdefault(d, set())
        if direction in ("out", "both"):
            adj[s].add(d)
        if direction in ("in", "both"):
            adj[d].add(s)
    return adj


def bfs_depths(adj, start, max_depth):
    """Unweighted hop distance from start, limited to max_depth."""
    dist = {start: 0}
    q = deque([start])
    while q:
        u = q.popleft()
        if dist[u] == max_depth:
            continue
        for v in adj.get(u, ()):
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def dfs_recursive(adj, start, max_depth):
    """Preorder, neighbours in ascending id order, each node visited once."""
    order, seen = [], set()

    def visit(u, depth):
        seen.add(u)
        order.append(u)
        if depth == max_depth:
            return
        for v in sorted(adj.get(u, ())):
            if v not in seen:
                visit(v, depth + 1)

    visit(start, 0)
    return order


def dijkstra_cost(weighted_edges, src, dst, eps=1e-6):
    """Textbook Dijkstra on cost = 1 - w + eps; returns None when unreachable."""
    adj = {}
    for s, d, w in weighted_edges:
        adj.setdefault(s, []).append((d, 1.0 - w + eps))
    dist = {src: 0.0}
    heap = [(0.0, src)]
    done = set()
    while heap:
        du, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == dst:
            return du
        for v, c in adj.get(u, ()):
            nd = du + c
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return None


def pagerank_dense(nodes, weighted_edges, damping=0.85, iters=1000, tol=1e-13):
    """Dense Google-matrix power iteration in pure Python.

    Column-stochastic matrix M[j][i] = weight share of i -> j; dangling columns
    are uniform. Iterates r <- d*M r + (1-d)/n until the L1 change < tol.
    """
    n = len(nodes)
    idx = {v: i for i, v in enumerate(nodes)}
    out_w = [0.0] * n
    M = [[0.0] * n for _ in range(n)]
    for s, d, w in weighted_edges:
        out_w[idx[s]] += w
    for s, d, w in weighted_edges:
        M[idx[d]][idx[s]] += w / out_w[idx[s]]
    for i in range(n):
        if out_w[i] == 0.0:
            for j in range(n):
                M[j][i] = 1.0 / n
    r = [1.0 / n] * n
    for _ in range(iters):
        nr = [damping * sum(M[j][i] * r[i] for i in range(n)) + (1.0 - damping) / n for j in range(n)]
        delta = sum(abs(a - b) for a, b in zip(nr, r))
        r = nr
        if delta < tol:
            break
    return {v: r[idx[v]] for v in nodes}


def impact_by_enumeration(nodes, edges, changed, max_depth, decay, forward_types, reverse_types):
    """Best impact score per node by enumerating every simple path.

    edges: (src, dst, type, weight). A step follows forward types src->dst and
    reverse types dst->src. Score of a path = prod(weights) * decay**hops.
    """
    steps = {n: [] for n in nodes}
    for s, d, t, w in edges:
        if t in forward_types:
            steps[s].append((d, w))
        if t in reverse_types:
            steps[d].append((s, w))
    best = {}

    def walk(u, score, visited, hops):
        if hops == max_depth:
            return
        for v, w in steps[u]:
            if v in visited:
                continue
            sc = score * w * decay
            if v != changed and sc > best.get(v, -1.0):
                best[v] = sc
            walk(v, sc, visited | {v}, hops + 1)

    walk(changed, 1.0, {changed}, 0)
    return best


def jaccard(a_tokens, b_tokens):
    a, b = set(a_tokens), set(b_tokens)
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def all_pairs(items):
    return list(itertools.combinations(items, 2))


def distances_by_matrix_power(nodes, edges, start, max_depth):
    """Hop distance as the smallest p with (A^p)[start][v] > 0, p <= max_depth."""
    idx = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    A = [[0] * n for _ in range(n)]
    for e in edges:
        A[idx[e[0]]][idx[e[1]]] = 1
    row = [0] * n
    row[idx[start]] = 1
    dist = {start: 0}
    for p in range(1, max_depth + 1):
        row = [1 if any(row[k] and A[k][j] for k in range(n)) else 0 for j in range(n)]
        for j in range(n):
            if row[j] and nodes[j] not in dist:
                dist[nodes[j]] = p
    return dist
