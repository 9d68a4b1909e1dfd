"""Array kernels: polytree belief propagation and attack-tree construction.

Everything here operates on flat numpy arrays so the numba twins compile to
tight loops.  The public entry points are resolved through ``get_kernel``;
both backends share one code object per kernel, so behaviour is identical by
construction and the backends test only has to confirm numerics.

Graph encoding (shared by all kernels):

* ``pind``/``pidx``   parent CSR; slot order defines CPT combo bit order
  (bit i of a combo is the state of the node's i-th parent, 1 = positive).
* ``ckind``/``coff``/``cdat``  per-node CPT: kind code plus parameters.
* ``chptr``/``chedge``  child CSR of global edge ids (positions in ``pidx``).
* ``order``/``skelp``/``skele``/``skeld``  a rooted spanning orientation of the
  undirected skeleton: ``order`` lists nodes root-first, ``skelp[x]`` is the
  skeleton parent, ``skele[x]`` the connecting edge id and ``skeld[x]`` is 1
  when that edge makes the skeleton parent a CPT parent of ``x``.
"""

from __future__ import annotations

import numpy as np

from ._backend import NUMBA_AVAILABLE, jit_twin, resolve_backend

if NUMBA_AVAILABLE:
    import numba

# CPT kind codes.
K_PRIOR = 0
K_TABLE = 1
K_OR_LEAK = 2
K_AND = 3
K_SENSOR = 4

# Node kind codes for attack trees.
N_TOPO = 0
N_STEP = 1
N_COND = 2
N_SENSOR = 3
N_SOURCE = 4

# Above this fan-in the OR/AND families switch from explicit 2^m row sums to
# their closed forms; at or below it they stay bit-compatible with tables.
CLOSED_FORM_MIN_PARENTS = 10


def _row_p(kind, cdat, off, m, combo):
    """P(node positive | parent combo) for one CPT row."""
    if kind == K_OR_LEAK:
        if combo == 0:
            return cdat[off]
        return 1.0
    if kind == K_AND:
        if combo == (1 << m) - 1:
            return cdat[off]
        return 0.0
    if kind == K_SENSOR:
        if combo == 1:
            return 1.0 - cdat[off + 1]
        return cdat[off]
    # K_TABLE / K_PRIOR: explicit rows (a prior is a zero-parent table).
    return cdat[off + combo]


def _pi_value(x, pind, pidx, ckind, coff, cdat, pi_msg):
    """Prior-side support (pi) of node x from its incoming pi messages."""
    m = pind[x + 1] - pind[x]
    kind = ckind[x]
    off = coff[x]
    if m == 0:
        p = cdat[off]
        return 1.0 - p, p
    if m > CLOSED_FORM_MIN_PARENTS and kind == K_OR_LEAK:
        prod0 = 1.0
        prod_sum = 1.0
        for i in range(m):
            e = pind[x] + i
            prod0 *= pi_msg[e, 0]
            prod_sum *= pi_msg[e, 0] + pi_msg[e, 1]
        p0 = (1.0 - cdat[off]) * prod0
        return p0, prod_sum - p0
    if m > CLOSED_FORM_MIN_PARENTS and kind == K_AND:
        prod1 = 1.0
        prod_sum = 1.0
        for i in range(m):
            e = pind[x] + i
            prod1 *= pi_msg[e, 1]
            prod_sum *= pi_msg[e, 0] + pi_msg[e, 1]
        p1 = cdat[off] * prod1
        return prod_sum - p1, p1
    acc0 = 0.0
    acc1 = 0.0
    for combo in range(1 << m):
        w = 1.0
        for i in range(m):
            e = pind[x] + i
            w *= pi_msg[e, (combo >> i) & 1]
        t = _row_p(kind, cdat, off, m, combo)
        acc1 += w * t
        acc0 += w * (1.0 - t)
    return acc0, acc1


def _lambda_to_parent(x, j, lam0, lam1, pind, pidx, ckind, coff, cdat, pi_msg):
    """Evidence-side (lambda) message from x to its j-th parent."""
    m = pind[x + 1] - pind[x]
    kind = ckind[x]
    off = coff[x]
    if m > CLOSED_FORM_MIN_PARENTS and (kind == K_OR_LEAK or kind == K_AND):
        prod_det = 1.0  # all-other-parents in the gate's determining state
        prod_sum = 1.0
        for i in range(m):
            if i == j:
                continue
            e = pind[x] + i
            if kind == K_OR_LEAK:
                prod_det *= pi_msg[e, 0]
            else:
                prod_det *= pi_msg[e, 1]
            prod_sum *= pi_msg[e, 0] + pi_msg[e, 1]
        if kind == K_OR_LEAK:
            leak = cdat[off]
            m1 = lam1 * prod_sum
            m0 = prod_det * ((1.0 - leak) * lam0 + leak * lam1) + (prod_sum - prod_det) * lam1
        else:
            f = cdat[off]
            m1 = prod_det * (f * lam1 + (1.0 - f) * lam0) + (prod_sum - prod_det) * lam0
            m0 = prod_sum * lam0
        return m0, m1
    acc0 = 0.0
    acc1 = 0.0
    for combo in range(1 << m):
        w = 1.0
        for i in range(m):
            if i == j:
                continue
            e = pind[x] + i
            w *= pi_msg[e, (combo >> i) & 1]
        t = _row_p(kind, cdat, off, m, combo)
        v = w * (lam1 * t + lam0 * (1.0 - t))
        if (combo >> j) & 1:
            acc1 += v
        else:
            acc0 += v
    return acc0, acc1


def _lambda_local(x, chptr, chedge, lam_msg, L, exclude_edge):
    l0 = L[x, 0]
    l1 = L[x, 1]
    for c in range(chptr[x], chptr[x + 1]):
        e = chedge[c]
        if e == exclude_edge:
            continue
        l0 *= lam_msg[e, 0]
        l1 *= lam_msg[e, 1]
    return l0, l1


# The sweep drivers below call these helpers through module globals, so the
# jitted drivers see the jitted helpers and compile them in.
if NUMBA_AVAILABLE:
    _row_p = numba.njit(cache=True, nogil=True, inline="always")(_row_p)
    _pi_value = numba.njit(cache=True, nogil=True)(_pi_value)
    _lambda_to_parent = numba.njit(cache=True, nogil=True)(_lambda_to_parent)
    _lambda_local = numba.njit(cache=True, nogil=True)(_lambda_local)


def bp_sweep(
    pind,
    pidx,
    ckind,
    coff,
    cdat,
    chptr,
    chedge,
    order,
    skelp,
    skele,
    skeld,
    L,
    max_children,
):
    """Two-pass Pearl propagation over a polytree.

    Returns (belief[n, 2], status); status 0 means every node normalised,
    1 means the evidence has zero probability somewhere.
    """
    n = pind.shape[0] - 1
    n_edges = pidx.shape[0]
    pi_msg = np.ones((n_edges, 2), dtype=np.float64)
    lam_msg = np.ones((n_edges, 2), dtype=np.float64)
    belief = np.zeros((n, 2), dtype=np.float64)
    suffix = np.empty((max_children + 1, 2), dtype=np.float64)
    status = 0

    # Leaves-to-root: each non-root node sends one message along its skeleton
    # edge; all its other neighbours are skeleton children, already processed.
    for t in range(n - 1, -1, -1):
        x = order[t]
        if skelp[x] < 0:
            continue
        e_up = skele[x]
        if skeld[x] == 1:
            l0, l1 = _lambda_local(x, chptr, chedge, lam_msg, L, -1)
            j = e_up - pind[x]
            m0, m1 = _lambda_to_parent(x, j, l0, l1, pind, pidx, ckind, coff, cdat, pi_msg)
        else:
            p0, p1 = _pi_value(x, pind, pidx, ckind, coff, cdat, pi_msg)
            l0, l1 = _lambda_local(x, chptr, chedge, lam_msg, L, e_up)
            m0 = p0 * l0
            m1 = p1 * l1
        s = m0 + m1
        if s > 0.0:
            if skeld[x] == 1:
                lam_msg[e_up, 0] = m0 / s
                lam_msg[e_up, 1] = m1 / s
            else:
                pi_msg[e_up, 0] = m0 / s
                pi_msg[e_up, 1] = m1 / s
        else:
            status = 1
            if skeld[x] == 1:
                lam_msg[e_up, 0] = 0.0
                lam_msg[e_up, 1] = 0.0
            else:
                pi_msg[e_up, 0] = 0.0
                pi_msg[e_up, 1] = 0.0

    # Root-to-leaves: finalize beliefs and send the remaining messages.
    for t in range(n):
        x = order[t]
        l0, l1 = _lambda_local(x, chptr, chedge, lam_msg, L, -1)
        p0, p1 = _pi_value(x, pind, pidx, ckind, coff, cdat, pi_msg)
        b0 = p0 * l0
        b1 = p1 * l1
        s = b0 + b1
        if s > 0.0:
            belief[x, 0] = b0 / s
            belief[x, 1] = b1 / s
        else:
            status = 1

        m = pind[x + 1] - pind[x]
        for j in range(m):
            e = pind[x] + j
            if skeld[x] == 1 and e == skele[x]:
                continue  # that parent is the skeleton parent, served upward
            m0, m1 = _lambda_to_parent(x, j, l0, l1, pind, pidx, ckind, coff, cdat, pi_msg)
            s = m0 + m1
            if s > 0.0:
                lam_msg[e, 0] = m0 / s
                lam_msg[e, 1] = m1 / s
            else:
                status = 1
                lam_msg[e, 0] = 0.0
                lam_msg[e, 1] = 0.0

        c0 = chptr[x]
        nc = chptr[x + 1] - c0
        if nc > 0:
            suffix[nc, 0] = 1.0
            suffix[nc, 1] = 1.0
            for i in range(nc - 1, -1, -1):
                e = chedge[c0 + i]
                suffix[i, 0] = suffix[i + 1, 0] * lam_msg[e, 0]
                suffix[i, 1] = suffix[i + 1, 1] * lam_msg[e, 1]
            pre0 = 1.0
            pre1 = 1.0
            for i in range(nc):
                e = chedge[c0 + i]
                if not (skeld[x] == 0 and e == skele[x]):
                    m0 = p0 * L[x, 0] * pre0 * suffix[i + 1, 0]
                    m1 = p1 * L[x, 1] * pre1 * suffix[i + 1, 1]
                    s = m0 + m1
                    if s > 0.0:
                        pi_msg[e, 0] = m0 / s
                        pi_msg[e, 1] = m1 / s
                    else:
                        status = 1
                        pi_msg[e, 0] = 0.0
                        pi_msg[e, 1] = 0.0
                pre0 *= lam_msg[e, 0]
                pre1 *= lam_msg[e, 1]

    return belief, status


def forest_check(n, pidx_src, pidx_dst):
    """True when the undirected multigraph (src[i], dst[i]) is a forest."""
    parent = np.arange(n, dtype=np.int64)
    for i in range(pidx_src.shape[0]):
        a = pidx_src[i]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = pidx_dst[i]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            return False
        parent[a] = b
    return True


def bat_count(adj_indptr, adj_target, adj_has_sen, source, nb_steps):
    """First pass of the tree build: node/edge/CPT-data sizes.

    Walks every non-backtracking path of at most ``nb_steps`` edges from the
    source, counting one step node, one condition node, an optional sensor
    node per parallel step, and one shared topological node per expansion.
    """
    n_tag = adj_indptr.shape[0] - 1
    onpath = np.zeros(n_tag, dtype=np.uint8)
    path = np.empty(nb_steps + 1, dtype=np.int64)
    pos = np.empty(nb_steps + 1, dtype=np.int64)

    n_nodes = 1
    n_edges = 0
    n_cdat = 1

    level = 0
    path[0] = source
    onpath[source] = 1
    pos[0] = adj_indptr[source]

    while True:
        u = path[level]
        i = pos[level]
        end = adj_indptr[u + 1]
        descended = False
        while i < end:
            t = adj_target[i]
            i1 = i + 1
            while i1 < end and adj_target[i1] == t:
                i1 += 1
            if onpath[t] == 0:
                g = i1 - i
                nsen = 0
                for q in range(i, i1):
                    nsen += adj_has_sen[q]
                n_nodes += 2 * g + nsen + 1
                n_edges += 3 * g + nsen
                n_cdat += 2 * g + 2 * nsen + 1
                if level + 1 < nb_steps:
                    pos[level] = i1
                    level += 1
                    path[level] = t
                    onpath[t] = 1
                    pos[level] = adj_indptr[t]
                    descended = True
                    break
            i = i1
        if descended:
            continue
        pos[level] = end
        if level == 0:
            break
        onpath[path[level]] = 0
        level -= 1
    return n_nodes, n_edges, n_cdat


def bat_fill(
    adj_indptr,
    adj_target,
    adj_cond,
    adj_has_sen,
    adj_fp,
    adj_fn,
    source,
    prior,
    nb_steps,
    pua,
    pnas,
    kind,
    pind,
    pidx,
    ckind,
    coff,
    cdat,
    terminal,
    stepref,
    skelp,
    skele,
    skeld,
    depth,
):
    """Second pass: emit the tree into preallocated arrays.

    Emission is depth-first with targets visited in ascending node order, so
    two builds from the same inputs are structurally identical.  Returns
    (n_nodes, polytree_flag); the flag drops to 0 when some expansion carries
    parallel step types (the shared target node then has fan-in > 1).
    """
    n_tag = adj_indptr.shape[0] - 1
    onpath = np.zeros(n_tag, dtype=np.uint8)
    path = np.empty(nb_steps + 1, dtype=np.int64)
    pos = np.empty(nb_steps + 1, dtype=np.int64)
    btn_at = np.empty(nb_steps + 1, dtype=np.int64)

    node = 0
    edge = 0
    dat = 0
    polytree = 1

    # Attack source: a parentless topological node carrying the prior.
    kind[node] = N_SOURCE
    pind[0] = 0
    pind[1] = 0
    ckind[node] = K_PRIOR
    coff[node] = dat
    cdat[dat] = prior
    dat += 1
    terminal[node] = source
    stepref[node] = -1
    skelp[node] = -1
    skele[node] = -1
    skeld[node] = 0
    depth[node] = 0
    btn_at[0] = node
    node += 1

    level = 0
    path[0] = source
    onpath[source] = 1
    pos[0] = adj_indptr[source]

    while True:
        u = path[level]
        i = pos[level]
        end = adj_indptr[u + 1]
        descended = False
        while i < end:
            t = adj_target[i]
            i1 = i + 1
            while i1 < end and adj_target[i1] == t:
                i1 += 1
            if onpath[t] == 0:
                g = i1 - i
                if g > 1:
                    polytree = 0
                src_btn = btn_at[level]
                first_basn = node
                for q in range(i, i1):
                    basn = node
                    bcn = node + 1
                    # step node: AND of (source topological node, condition)
                    kind[basn] = N_STEP
                    pind[basn + 1] = pind[basn] + 2
                    pidx[edge] = src_btn
                    pidx[edge + 1] = bcn
                    edge += 2
                    ckind[basn] = K_AND
                    coff[basn] = dat
                    cdat[dat] = pnas
                    dat += 1
                    terminal[basn] = -1
                    stepref[basn] = q
                    skelp[basn] = src_btn
                    skele[basn] = pind[basn]
                    skeld[basn] = 1
                    depth[basn] = level + 1
                    node += 1
                    # condition node: parentless prior
                    kind[bcn] = N_COND
                    pind[bcn + 1] = pind[bcn]
                    ckind[bcn] = K_PRIOR
                    coff[bcn] = dat
                    cdat[dat] = adj_cond[q]
                    dat += 1
                    terminal[bcn] = -1
                    stepref[bcn] = q
                    skelp[bcn] = basn
                    skele[bcn] = pind[basn] + 1
                    skeld[bcn] = 0
                    depth[bcn] = level + 1
                    node += 1
                    if adj_has_sen[q] == 1:
                        bsen = node
                        kind[bsen] = N_SENSOR
                        pind[bsen + 1] = pind[bsen] + 1
                        pidx[edge] = basn
                        edge += 1
                        ckind[bsen] = K_SENSOR
                        coff[bsen] = dat
                        cdat[dat] = adj_fp[q]
                        cdat[dat + 1] = adj_fn[q]
                        dat += 2
                        terminal[bsen] = -1
                        stepref[bsen] = q
                        skelp[bsen] = basn
                        skele[bsen] = pind[bsen]
                        skeld[bsen] = 1
                        depth[bsen] = level + 1
                        node += 1
                # target topological node: noisy-OR over the parallel steps
                btn = node
                kind[btn] = N_TOPO
                pind[btn + 1] = pind[btn] + g
                step_no = 0
                for q in range(i, i1):
                    basn_id = first_basn + step_no * 2
                    for q2 in range(i, i + step_no):
                        basn_id += adj_has_sen[q2]
                    pidx[edge] = basn_id
                    edge += 1
                    step_no += 1
                ckind[btn] = K_OR_LEAK
                coff[btn] = dat
                cdat[dat] = pua
                dat += 1
                terminal[btn] = t
                stepref[btn] = -1
                skelp[btn] = first_basn
                skele[btn] = pind[btn]
                skeld[btn] = 1
                depth[btn] = level + 1
                node += 1
                if level + 1 < nb_steps:
                    pos[level] = i1
                    level += 1
                    path[level] = t
                    onpath[t] = 1
                    pos[level] = adj_indptr[t]
                    btn_at[level] = btn
                    descended = True
                    break
            i = i1
        if descended:
            continue
        pos[level] = end
        if level == 0:
            break
        onpath[path[level]] = 0
        level -= 1

    return node, polytree


_IMPL = {
    "bp_sweep": jit_twin(bp_sweep),
    "forest_check": jit_twin(forest_check),
    "bat_count": jit_twin(bat_count),
    "bat_fill": jit_twin(bat_fill),
}


def get_kernel(name: str, backend: str | None = None):
    py_impl, jit_impl = _IMPL[name]
    if resolve_backend(backend) == "numba":
        return jit_impl
    return py_impl
