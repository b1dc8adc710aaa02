"""Brute-force enumeration oracle over full slot sets and full relabeling groups."""

import itertools

import numpy as np

from confinv.tensor_algebra import SYMMETRIES, FactorKind

G, GN, R, RP, HO, HG = (FactorKind.G_INV, FactorKind.GBAR_INV, FactorKind.R,
                        FactorKind.RPERP, FactorKind.HO, FactorKind.HG)


def full_symmetries(kind):
    if kind.inverse:
        return ((0, 1), (1, 0))
    return SYMMETRIES[kind]


def oracle_signature(factors, pairing):
    """Minimal sorted pair list over all factor permutations (within kind) and slot symmetries."""
    offsets = np.cumsum([0] + [k.nslots for k in factors])
    best = None
    n = len(factors)
    for perm in itertools.permutations(range(n)):
        if any(factors[perm[i]] is not factors[i] for i in range(n)):
            continue
        # perm[i] = old factor placed at position i
        for syms in itertools.product(*(full_symmetries(factors[perm[i]]) for i in range(n))):
            new_slot = {}
            for pos, old in enumerate(perm):
                for s in range(factors[old].nslots):
                    new_slot[offsets[old] + s] = offsets[pos] + syms[pos][s]
            key = tuple(sorted(tuple(sorted((new_slot[a], new_slot[b]))) for a, b in pairing))
            if best is None or key < best:
                best = key
    return tuple(k.text for k in factors), best


def oracle_classes(target_weight, codim):
    budget = -target_weight
    out = set()
    for n_r in range(budget // 2 + 1):
        for n_rp in range((budget // 2 + 1) if codim == 2 else 1):
            for n_ho in range(budget + 1):
                n_hg = budget - 2 * n_r - 2 * n_rp - n_ho
                if n_hg < 0:
                    continue
                lower = [R] * n_r + [RP] * n_rp + [HO] * n_ho + [HG] * n_hg
                nt = sum(k.sorts.count("T") for k in lower)
                nn = sum(k.sorts.count("N") for k in lower)
                if nt % 2 or nn % 2:
                    continue
                factors = [G] * (nt // 2) + [GN] * (nn // 2) + lower
                offsets = np.cumsum([0] + [k.nslots for k in factors])
                inv_t = [s for i, k in enumerate(factors) if k is G for s in range(offsets[i], offsets[i + 1])]
                inv_n = [s for i, k in enumerate(factors) if k is GN for s in range(offsets[i], offsets[i + 1])]
                low_t = [offsets[i] + j for i, k in enumerate(factors) if not k.inverse
                         for j in range(k.nslots) if k.sorts[j] == "T"]
                low_n = [offsets[i] + j for i, k in enumerate(factors) if not k.inverse
                         for j in range(k.nslots) if k.sorts[j] == "N"]
                for pt in itertools.permutations(low_t):
                    for pn in itertools.permutations(low_n):
                        pairing = list(zip(inv_t, pt)) + list(zip(inv_n, pn))
                        out.add(oracle_signature(factors, pairing))
    return out


def signature_of(term):
    return oracle_signature(term.factors, term.pairing)
