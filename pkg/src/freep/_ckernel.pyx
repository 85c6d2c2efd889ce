# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled tree-scan kernel.

Mirrors freep._pykernel.scan_range operation for operation (same decode,
same BFS neighbour order, same accumulation order) so both backends return
bit-identical results. Releases the GIL for the whole scan, which lets
thread pools shard the rank range across cores.
"""

from libc.math cimport fabs, pow

BACKEND = "compiled"

DEF MAXV = 16


cdef struct ScanOut:
    double best
    long long best_rank
    long long scanned


cdef ScanOut _scan(const double* dp, const double* a, int m, int root,
                   long long start, long long stop, const signed char* mc,
                   double p, double best_init) noexcept nogil:
    cdef:
        int L = m - 2
        int seq[MAXV]
        int deg[MAXV]
        int eu[MAXV]
        int ev[MAXV]
        int adj[MAXV * MAXV]
        int acnt[MAXV]
        int parent[MAXV]
        int childcnt[MAXV]
        int bfs[MAXV]
        double c[MAXV]
        long long rank, r
        int i, k, v, u, x, y, px, par, ptr, leaf, ne, nb, head
        double s, cx
        bint ok, completed
        ScanOut out

    out.best = best_init
    out.best_rank = -1
    out.scanned = 0

    r = start
    for i in range(L - 1, -1, -1):
        seq[i] = <int>(r % m)
        r //= m

    for rank in range(start, stop):
        # decode the Pruefer sequence into an undirected edge list
        for v in range(m):
            deg[v] = 1
        for i in range(L):
            deg[seq[i]] += 1
        ptr = 0
        while deg[ptr] != 1:
            ptr += 1
        leaf = ptr
        ne = 0
        for i in range(L):
            v = seq[i]
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

        # orient toward the root (BFS, adjacency in edge order)
        for v in range(m):
            acnt[v] = 0
            childcnt[v] = 0
        for i in range(m - 1):
            u = eu[i]
            v = ev[i]
            adj[u * MAXV + acnt[u]] = v
            acnt[u] += 1
            adj[v * MAXV + acnt[v]] = u
            acnt[v] += 1
        parent[root] = -1
        bfs[0] = root
        nb = 1
        head = 0
        while head < nb:
            x = bfs[head]
            head += 1
            px = parent[x]
            for k in range(acnt[x]):
                y = adj[x * MAXV + k]
                if y != px:
                    parent[y] = x
                    childcnt[x] += 1
                    bfs[nb] = y
                    nb += 1

        ok = True
        if mc != NULL:
            for v in range(m):
                if childcnt[v] < mc[v]:
                    ok = False
                    break
        if ok:
            out.scanned += 1
            for v in range(m):
                c[v] = a[v]
            s = 0.0
            completed = True
            for i in range(m - 1, 0, -1):
                x = bfs[i]
                par = parent[x]
                cx = c[x]
                if cx != 0.0:
                    s += pow(fabs(cx), p) * dp[x * m + par]
                    if s >= out.best:
                        completed = False
                        break
                c[par] += cx
            if completed and s < out.best:
                out.best = s
                out.best_rank = rank

        i = L - 1
        while i >= 0:
            seq[i] += 1
            if seq[i] == m:
                seq[i] = 0
                i -= 1
            else:
                break

    return out


def scan_range(double[:, ::1] dist_p, double[::1] coeff, int root,
               long long start, long long stop, min_children,
               double p, double best_init):
    """See freep._pykernel.scan_range; this is the compiled twin."""
    cdef int m = coeff.shape[0]
    if m < 2 or m > MAXV:
        raise ValueError(f"kernel supports 2..{MAXV} vertices, got {m}")
    if dist_p.shape[0] != m or dist_p.shape[1] != m:
        raise ValueError("distance matrix and coefficients disagree on size")
    cdef signed char[::1] mc_view
    cdef const signed char* mc = NULL
    if min_children is not None:
        mc_view = min_children
        if mc_view.shape[0] != m:
            raise ValueError("min_children has wrong length")
        mc = &mc_view[0]
    cdef ScanOut out
    with nogil:
        out = _scan(&dist_p[0, 0], &coeff[0], m, root, start, stop, mc, p, best_init)
    return out.best, out.best_rank, out.scanned
