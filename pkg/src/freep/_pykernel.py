"""Pure-Python tree-scan kernel (fallback for the compiled extension).

Scans a contiguous lexicographic range of Pruefer ranks, decoding each tree,
rooting it at `root` and accumulating the tree value

    sum over non-root x of |c(x)|^p * dist_p[x][parent(x)]

with early abandon against the best value seen so far. Arithmetic order here
is the reference; the compiled kernel reproduces it bit for bit.
"""

from math import pow as _pow

BACKEND = "pure"


def scan_range(dist_p, coeff, root, start, stop, min_children, p, best_init):
    """Minimise the tree value over ranks [start, stop).

    dist_p holds p-th powers of distances. `min_children`, when given, skips
    trees where some vertex has fewer children than required. Trees with
    value >= best_init are never recorded. Returns (best, best_rank, scanned)
    with best_rank = -1 when nothing beat best_init.
    """
    m = len(coeff)
    dp = [[float(x) for x in row] for row in dist_p]
    a = [float(x) for x in coeff]
    mc = None if min_children is None else [int(x) for x in min_children]
    L = m - 2
    best = float(best_init)
    best_rank = -1
    scanned = 0

    # odometer over base-m digits, most significant first
    seq = [0] * L
    r = start
    for i in range(L - 1, -1, -1):
        r, seq[i] = divmod(r, m)

    deg = [0] * m
    adj = [[0] * m for _ in range(m)]
    acnt = [0] * m
    parent = [0] * m
    childcnt = [0] * m
    bfs = [0] * m
    c = [0.0] * m
    eu = [0] * (m - 1)
    ev = [0] * (m - 1)

    for rank in range(start, stop):
        # decode
        for v in range(m):
            deg[v] = 1
        for v in seq:
            deg[v] += 1
        ptr = 0
        while deg[ptr] != 1:
            ptr += 1
        leaf = ptr
        ne = 0
        for v in seq:
            eu[ne] = leaf
            ev[ne] = v
            ne += 1
            deg[v] -= 1
            if deg[v] == 1 and v < ptr:
                leaf = v
            else:
                ptr += 1
                while deg[ptr] != 1:
                    ptr += 1
                leaf = ptr
        eu[ne] = leaf
        ev[ne] = m - 1

        # orient toward the root (BFS)
        for v in range(m):
            acnt[v] = 0
            childcnt[v] = 0
        for e in range(m - 1):
            u, v = eu[e], ev[e]
            adj[u][acnt[u]] = v
            acnt[u] += 1
            adj[v][acnt[v]] = u
            acnt[v] += 1
        parent[root] = -1
        bfs[0] = root
        nb = 1
        head = 0
        while head < nb:
            x = bfs[head]
            head += 1
            px = parent[x]
            row = adj[x]
            for k in range(acnt[x]):
                y = row[k]
                if y != px:
                    parent[y] = x
                    childcnt[x] += 1
                    bfs[nb] = y
                    nb += 1

        ok = True
        if mc is not None:
            for v in range(m):
                if childcnt[v] < mc[v]:
                    ok = False
                    break
        if ok:
            scanned += 1
            for v in range(m):
                c[v] = a[v]
            s = 0.0
            completed = True
            for i in range(m - 1, 0, -1):
                x = bfs[i]
                par = parent[x]
                cx = c[x]
                if cx != 0.0:
                    s += _pow(abs(cx), p) * dp[x][par]
                    if s >= best:
                        completed = False
                        break
                c[par] += cx
            if completed and s < best:
                best = s
                best_rank = rank

        i = L - 1
        while i >= 0:
            seq[i] += 1
            if seq[i] == m:
                seq[i] = 0
                i -= 1
            else:
                break

    return best, best_rank, scanned
