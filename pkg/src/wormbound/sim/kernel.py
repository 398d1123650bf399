"""Cycle loop of the flit-level simulator over flat integer arrays.

The same function runs compiled (numba) or as plain Python; set
``WORMBOUND_NO_JIT=1`` (or numba's own ``NUMBA_DISABLE_JIT=1``) to force the
interpreted path.

Sources feeding an output node are either input buffers (one per incoming
link and VC) or per-flow injection queues at the source core.  Source ids
``0 .. nbuf-1`` are buffers, ``nbuf + f`` is the injection queue of flow f.
"""
from __future__ import annotations

import os

import numpy as np

STATUS_DONE = 0
STATUS_DEADLOCK = 1
STATUS_TIMEOUT = 2

EV_HEAD = 0
EV_BODY = 1
EV_TAIL = 2


def _cycle_loop(
    node_rate, node_lat, node_order,
    src_ptr, src_idx,
    vc_order, buf_of, buf_cap,
    f_len, f_vc, path_ptr, path_nodes,
    flow_pkt_ptr, pkt_flow, pkt_release, pkt_done,
    t_max, window, trace_on, tr_cycle, tr_node, tr_vc, tr_flow, tr_event,
):
    n_nodes = node_rate.shape[0]
    nvc = vc_order.shape[0]
    nbuf = buf_cap.shape[0]
    nflow = f_len.shape[0]
    nsrc = nbuf + nflow
    cap_max = 1
    for b in range(nbuf):
        if buf_cap[b] > cap_max:
            cap_max = buf_cap[b]

    q_pkt = np.zeros((max(nbuf, 1), cap_max), np.int64)
    q_j = np.zeros((max(nbuf, 1), cap_max), np.int64)
    q_hop = np.zeros((max(nbuf, 1), cap_max), np.int64)
    q_ready = np.zeros((max(nbuf, 1), cap_max), np.int64)
    q_head = np.zeros(max(nbuf, 1), np.int64)
    q_cnt = np.zeros(max(nbuf, 1), np.int64)

    pushed = np.zeros(nflow, np.int64)
    popped = np.zeros(nflow, np.int64)
    released = np.zeros(nflow, np.int64)  # packets released so far, per flow

    owner = np.full((n_nodes, nvc), -1, np.int64)  # source id holding node/vc
    rr = np.zeros((n_nodes, nvc), np.int64)
    tokens = np.ones(n_nodes, np.float64)
    used = np.zeros(nsrc, np.int64)  # cycle stamp of last pop, one flit per source per cycle
    for s in range(nsrc):
        used[s] = -1

    n_pkt = pkt_release.shape[0]
    remaining = n_pkt
    in_network = 0  # flits pushed into injection queues but not yet delivered
    last_move = 0
    n_tr = 0
    status = STATUS_TIMEOUT
    t = 0
    while t < t_max:
        if remaining == 0:
            status = STATUS_DONE
            break
        for oi in range(n_nodes):
            n = node_order[oi]
            tk = tokens[n] + node_rate[n]
            if tk > 1.0:
                tk = 1.0
            tokens[n] = tk
            if tk < 1.0 - 1e-12:
                continue
            for vi in range(nvc):
                v = vc_order[vi]
                chosen = -1
                tb = buf_of[n, v]
                if tb >= 0 and q_cnt[tb] >= buf_cap[tb]:
                    continue  # no credit downstream on this VC
                if owner[n, v] >= 0:
                    s = owner[n, v]
                    if used[s] != t:
                        if s < nbuf:
                            if q_cnt[s] > 0 and q_ready[s, q_head[s]] <= t:
                                chosen = s
                        else:
                            if popped[s - nbuf] < pushed[s - nbuf]:
                                chosen = s
                else:
                    base = src_ptr[n]
                    k = src_ptr[n + 1] - base
                    for step in range(1, k + 1):
                        s = src_idx[base + (rr[n, v] + step) % k]
                        if used[s] == t:
                            continue
                        if s < nbuf:
                            if q_cnt[s] == 0:
                                continue
                            h = q_head[s]
                            if q_ready[s, h] > t or q_j[s, h] != 0:
                                continue
                            f = pkt_flow[q_pkt[s, h]]
                            if f_vc[f] != v or path_nodes[path_ptr[f] + q_hop[s, h]] != n:
                                continue
                        else:
                            f = s - nbuf
                            if f_vc[f] != v or popped[f] >= pushed[f]:
                                continue
                            if path_nodes[path_ptr[f]] != n:
                                continue
                            if popped[f] % f_len[f] != 0:
                                continue
                        chosen = s
                        rr[n, v] = (rr[n, v] + step) % k
                        owner[n, v] = s
                        break
                if chosen < 0:
                    continue
                # pop the flit from its source
                s = chosen
                if s < nbuf:
                    h = q_head[s]
                    p = q_pkt[s, h]
                    j = q_j[s, h]
                    hop = q_hop[s, h]
                    q_head[s] = (h + 1) % cap_max
                    q_cnt[s] -= 1
                    f = pkt_flow[p]
                else:
                    f = s - nbuf
                    q = popped[f]
                    popped[f] = q + 1
                    p = flow_pkt_ptr[f] + q // f_len[f]
                    j = q % f_len[f]
                    hop = 0
                used[s] = t
                tokens[n] -= 1.0
                last_move = t
                L = f_len[f]
                if j == L - 1:
                    owner[n, v] = -1
                if tb >= 0:
                    slot = (q_head[tb] + q_cnt[tb]) % cap_max
                    q_pkt[tb, slot] = p
                    q_j[tb, slot] = j
                    q_hop[tb, slot] = hop + 1
                    q_ready[tb, slot] = t + node_lat[n]
                    q_cnt[tb] += 1
                else:
                    in_network -= 1
                    if j == L - 1:
                        pkt_done[p] = t + node_lat[n]
                        remaining -= 1
                if trace_on and n_tr < tr_cycle.shape[0]:
                    tr_cycle[n_tr] = t
                    tr_node[n_tr] = n
                    tr_vc[n_tr] = v
                    tr_flow[n_tr] = f
                    ev = EV_BODY
                    if j == 0:
                        ev = EV_HEAD
                    if j == L - 1:
                        ev = EV_TAIL
                    tr_event[n_tr] = ev
                    n_tr += 1
                break
        # network interfaces: release packets, then push one flit per flow
        for f in range(nflow):
            base = flow_pkt_ptr[f]
            npk = flow_pkt_ptr[f + 1] - base
            while released[f] < npk and pkt_release[base + released[f]] <= t:
                released[f] += 1
            if pushed[f] < released[f] * f_len[f]:
                pushed[f] += 1
                in_network += 1
                last_move = t
        if in_network > 0 and t - last_move > window:
            status = STATUS_DEADLOCK
            break
        t += 1
    if remaining == 0:
        status = STATUS_DONE
    return status, t, n_tr


def _want_jit() -> bool:
    flag = os.environ.get("WORMBOUND_NO_JIT", "").strip().lower()
    return flag in ("", "0", "false", "no")


cycle_loop_py = _cycle_loop

if _want_jit():
    from numba import njit

    cycle_loop = njit(cache=True, nogil=True)(_cycle_loop)
    JIT = True
else:
    cycle_loop = _cycle_loop
    JIT = False
