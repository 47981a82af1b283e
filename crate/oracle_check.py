# Independent oracle: exact shift table for the 4-mode reference model,
# hand-built Kronecker Hamiltonian, scipy eigh. Cross-checks the Rust path.
import numpy as np
import itertools

w = [4.95, 5.28, 5.4, 5.48]
al = [-0.3, -0.2, -0.2, -0.19]
gs = {(0, 1): 0.02165, (0, 2): 0.032, (0, 3): 0.0385,
      (1, 2): 0.001, (1, 3): 0.001, (2, 3): 0.001}

def build(levels, rwa=False, plus_convention=False):
    n = len(w)
    dims = [levels] * n
    D = levels ** n
    a_loc = np.diag(np.sqrt(np.arange(1, levels)), 1)
    def embed(op, k):
        m = np.eye(1)
        for i in range(n):
            m = np.kron(m, op if i == k else np.eye(levels))
        return m
    A = [embed(a_loc, k) for k in range(n)]
    H = np.zeros((D, D))
    for k in range(n):
        nk = A[k].T @ A[k]
        H += w[k] * nk + 0.5 * al[k] * (nk @ nk - nk)
    for (i, j), g in gs.items():
        if plus_convention:
            x = A[i] + A[i].T; y = A[j] + A[j].T
            H += g * (x @ y)
        elif rwa:
            H += -g * (A[i] @ A[j].T + A[i].T @ A[j])
        else:
            x = A[i] - A[i].T; y = A[j] - A[j].T
            H += g * (x @ y)
    return H

def labeled_energies(H, levels):
    n = 4
    vals, vecs = np.linalg.eigh(H)
    E = {}
    for bits in itertools.product([0, 1], repeat=n):
        idx = 0
        for b in bits:
            idx = idx * levels + b
        col = np.argmax(vecs[idx, :] ** 2)
        E[bits] = vals[col]
    return E

def chis(E):
    def lab(s):
        return tuple(1 if k in s else 0 for k in range(4))
    bare = {}
    full = {}
    for size in (2, 3, 4):
        for s in itertools.combinations(range(4), size):
            b = E[lab(s)] - sum(E[lab((i,))] for i in s) + (len(s) - 1) * E[lab(())]
            bare[s] = b * 1e3
            f = bare[s]
            for sub_size in range(2, size):
                for t in itertools.combinations(s, sub_size):
                    f -= full[t]
            full[s] = f
    return full

for tag, kwargs in [("standard", {}), ("rwa", {"rwa": True}), ("plus", {"plus_convention": True})]:
    H = build(3, **kwargs)
    E = labeled_energies(H, 3)
    f = chis(E)
    print(f"--- {tag} (levels=3) ---")
    for s in [(0,1),(0,2),(0,3),(1,2),(1,3),(2,3),(0,1,2),(0,1,3),(0,2,3),(1,2,3),(0,1,2,3)]:
        print(f"chi{''.join(str(i+1) for i in s)} = {f[s]:+.4f}")
    print(f"omega_bar_a = {E[(1,0,0,0)] - E[(0,0,0,0)]:.6f}")

# RS perturbation theory orders 2..4 for the pair shifts (numeric, dense)
H = build(3)
D = H.shape[0]
E0 = np.diag(H).copy()
V = H - np.diag(E0)

def pt_energy(s_idx, order):
    w_ = np.zeros(D)
    for m in range(D):
        if m != s_idx and V[s_idx, m] != 0.0:
            w_[m] = V[s_idx, m] / (E0[s_idx] - E0[m])
    e = E0[s_idx]
    e2 = V[s_idx] @ w_
    e += e2
    if order >= 3:
        t = V @ w_
        e += w_ @ t
    if order >= 4:
        e4a = 0.0
        for n in range(D):
            if n != s_idx and t[n] != 0.0:
                e4a += t[n] ** 2 / (E0[s_idx] - E0[n])
        e += e4a - e2 * (w_ @ w_)
    return e

def idx(bits, levels=3):
    k = 0
    for b in bits:
        k = k * levels + b
    return k

for order in (2, 3, 4):
    for pair, name in [((0, 1), "chi12"), ((0, 2), "chi13"), ((0, 3), "chi14")]:
        l11 = [0] * 4; l11[pair[0]] = 1; l11[pair[1]] = 1
        l10 = [0] * 4; l10[pair[0]] = 1
        l01 = [0] * 4; l01[pair[1]] = 1
        chi = (pt_energy(idx(l11), order) - pt_energy(idx(l10), order)
               - pt_energy(idx(l01), order) + pt_energy(idx([0]*4), order)) * 1e3
        print(f"pt{order} {name} = {chi:+.4f}")
