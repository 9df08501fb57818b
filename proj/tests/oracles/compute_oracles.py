#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Independent reference values for the unit tests.

Nothing here shares code with the C++ library: probabilities come from
brute-force enumeration of service orders, integrals from mpmath, and the
theta optimizations from dense grids refined by golden section. Values
printed here are frozen into tests/unit/*.cpp.
"""
import itertools

import mpmath as mp

mp.mp.dps = 30


def order_prob(order, mu):
    rem = mp.mpf(1)
    p = mp.mpf(1)
    for j in order:
        p *= mu[j] / rem
        rem -= mu[j]
    return p


def wallenius_bruteforce(drawn, mu):
    """P(the first |drawn| picks are exactly `drawn`), by enumerating orders."""
    mu = [mp.mpf(m) for m in mu]
    total = mp.mpf(0)
    for perm in itertools.permutations(drawn):
        rem = mp.mpf(1)
        p = mp.mpf(1)
        for j in perm:
            p *= mu[j] / rem
            rem -= mu[j]
        total += p
    return total


def wallenius_integral(drawn, mu):
    mu = [mp.mpf(m) for m in mu]
    d = sum(mu[j] for j in range(len(mu)) if j not in drawn)
    f = lambda t: mp.fprod([1 - t ** (mu[j] / d) for j in drawn])
    return mp.quad(f, [0, 1])


def served_after(source, ell, mu):
    """P(source is served in position ell, i.e. after exactly ell others)."""
    mu = [mp.mpf(m) for m in mu]
    n = len(mu)
    total = mp.mpf(0)
    for perm in itertools.permutations(range(n)):
        if perm[ell] == source:
            total += order_prob(perm, mu)
    return total


def maximize(fn, lo, hi, points=4000):
    best = None
    for k in range(points + 1):
        t = lo + (hi - lo) * k / points
        v = fn(t)
        if best is None or v > best[1]:
            best = (t, v)
    step = (hi - lo) / points
    a = max(lo, best[0] - step)
    b = min(hi, best[0] + step)
    # golden section at 30 digits
    g = (mp.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    for _ in range(200):
        if fn(c) >= fn(d):
            b, d = d, c
            c = b - g * (b - a)
        else:
            a, c = c, d
            d = a + g * (b - a)
    t = (a + b) / 2
    return (t, fn(t)) if fn(t) > best[1] else best


def fog_laplace(drawn_mu, d):
    """Laplace approximation with the transformed integrand's peak placed at 1/2."""
    half = mp.mpf(1) / 2

    def log_phi(s, r):
        return mp.log(r * d) + (r * d - 1) * mp.log(s) + sum(mp.log(1 - s ** (r * m)) for m in drawn_mu)

    r = mp.findroot(lambda r: mp.diff(lambda s: log_phi(s, r), half), 1)
    psi = mp.diff(lambda s: log_phi(s, r), half, 2)
    return mp.exp(log_phi(half, r)) * mp.sqrt(-2 * mp.pi / psi)


def main():
    mu4 = [0.1, 0.2, 0.3, 0.4]
    print("# Wallenius, mu = (0.1, 0.2, 0.3, 0.4)")
    for drawn in [(0,), (0, 1), (2,), (0, 1, 2), (1, 3), (0, 2, 3)]:
        bf = wallenius_bruteforce(drawn, mu4)
        it = wallenius_integral(drawn, mu4)
        print(f"drawn {drawn}: brute {mp.nstr(bf, 17)} integral {mp.nstr(it, 17)}")

    mu3 = [0.2, 0.3, 0.5]
    print("# P(source served after exactly ell others), mu = (0.2, 0.3, 0.5)")
    for i in range(3):
        row = [served_after(i, ell, mu3) for ell in range(3)]
        print(f"source {i}: " + " ".join(mp.nstr(v, 17) for v in row))

    # long-regime union bound, n=3, mu3, Exponential(1), b=5, x=12, source 0
    lam = lambda t: -mp.log(1 - t)
    p = [served_after(0, ell, mu3) for ell in range(3)]

    def union_exponent(t):
        m = max((ell + 2) * lam(t) + mp.log(p[ell]) for ell in range(3))
        return t * 7 - mp.log(3) - m

    t, v = maximize(union_exponent, mp.mpf("1e-6"), mp.mpf(1) - mp.mpf("1e-6"))
    print(f"# long bound union n=3: bound {mp.nstr(mp.exp(-v), 17)} theta {mp.nstr(t, 12)}")

    def printed_exponent(t):
        m = max((ell + 2) * lam(t) + mp.log(p[ell]) for ell in range(3))
        return t * 7 - 3 * m

    t, v = maximize(printed_exponent, mp.mpf("1e-6"), mp.mpf(1) - mp.mpf("1e-6"))
    print(f"# long bound printed n=3: bound {mp.nstr(mp.exp(-v), 17)} theta {mp.nstr(t, 12)}")

    # equal weights n=6, Exponential(mean 1.5), b=30: union bound at x=45
    n = 6
    lam6 = lambda t: -mp.log(1 - t * mp.mpf("1.5"))

    def eq_exponent(x):
        def f(t):
            # P(served after exactly ell others) = 1/n for equal weights
            m = max((ell + 2) * lam6(t) - mp.log(n) for ell in range(n))
            return t * (x - 30) - mp.log(n) - m
        return f

    for x in (36, 45, 55):
        t, v = maximize(eq_exponent(x), mp.mpf("1e-6"), (1 - mp.mpf("1e-6")) / mp.mpf("1.5"))
        print(f"# union n=6 equal x={x}: bound {mp.nstr(min(1, mp.exp(-v)), 17)}")

    # short-regime bound closed form for Exponential(1), gap 10
    for m in ("0.48", "0.49", "0.5", "0.6"):
        m = mp.mpf(m)

        def neg_log_bound(t, m=m):
            L = lam(t)
            return t * 10 - L - mp.log(m) + mp.log(1 - mp.exp(L) * (1 - m))

        t, v = maximize(neg_log_bound, mp.mpf("1e-9"), m * (1 - mp.mpf("1e-12")))
        print(f"# short bound mu={m}: {mp.nstr(mp.exp(-v), 17)} closed {mp.nstr(10*m*mp.e**(1-10*m), 17)} theta {mp.nstr(t, 12)}")

    # deterministic short bound, v=1, mu=0.5, gap 10
    L = lambda t: t
    m = mp.mpf("0.5")
    sup = -mp.log(1 - m)
    t, v = maximize(lambda t: t * 10 - L(t) - mp.log(m) + mp.log(1 - mp.exp(L(t)) * (1 - m)),
                    mp.mpf("1e-9"), sup * (1 - mp.mpf("1e-12")))
    print(f"# short bound deterministic v=1 mu=0.5 gap 10: {mp.nstr(mp.exp(-v), 17)} theta {mp.nstr(t, 12)}")

    # short-regime weight interval at Exponential(1), theta=0.4, gap 10, eps 0.1
    th = mp.mpf("0.4")
    eL = 1 / (1 - th)
    hi = mp.mpf("0.1") * (1 - eL) / (eL * (mp.exp(-th * 10) - mp.mpf("0.1")))
    print(f"# weight interval: lo {mp.nstr(1 - 1/eL, 17)} hi {mp.nstr(hi, 17)}")

    # Fog inputs: n=18, groups 9+9 with (0.2, 0.8), source 0 (light) and 9 (heavy), ell=17
    w = [mp.mpf("0.2") / 9] * 9 + [mp.mpf("0.8") / 9] * 9
    for src in (0, 9):
        drawn = [j for j in range(18) if j != src]
        d = w[src]
        f = lambda t: mp.fprod([1 - t ** (w[j] / d) for j in drawn])
        print(f"# n=18 ell=17 source {src}: quadrature {mp.nstr(mp.quad(f, [0, mp.mpf('1e-30'), mp.mpf('1e-10'), mp.mpf('1e-3'), 1]), 17)}")

    print("# Laplace approximation / exact integral")
    cases = [("n=3 (0.5,0.3,0.2) y=(1,1,0)", [mp.mpf("0.5"), mp.mpf("0.3")], mp.mpf("0.2")),
             ("n=18 equal ell=17", [mp.mpf(1) / 18] * 17, mp.mpf(1) / 18)]
    for src in (0, 9):
        cases.append((f"n=18 grouped ell=17 source {src}", [w[j] for j in range(18) if j != src], w[src]))
    for name, drawn_mu, d in cases:
        exact = mp.quad(lambda t: mp.fprod([1 - t ** (m / d) for m in drawn_mu]), [0, 1])
        print(f"{name}: ratio {mp.nstr(fog_laplace(drawn_mu, d) / exact, 17)}")
    lemma4_report()



def position_distribution(sizes, group_weights, src_group):
    """P(the tagged source is served after exactly ell others), by a Markov
    chain over how many members of each group have been served."""
    per = [mp.mpf(w) / s for w, s in zip(group_weights, sizes)]
    others = list(sizes)
    others[src_group] -= 1
    n = sum(sizes)
    out = [mp.mpf(0)] * n
    # states keyed by drawn counts per group, tagged source still waiting
    states = {tuple(0 for _ in sizes): mp.mpf(1)}
    for ell in range(n):
        nxt = {}
        for counts, p in states.items():
            rem = per[src_group] + sum(per[g] * (others[g] - counts[g]) for g in range(len(sizes)))
            out[ell] += p * per[src_group] / rem
            for g in range(len(sizes)):
                left = others[g] - counts[g]
                if left == 0:
                    continue
                c = list(counts)
                c[g] += 1
                c = tuple(c)
                nxt[c] = nxt.get(c, mp.mpf(0)) + p * left * per[g] / rem
        states = nxt
    return out


def lemma4_report():
    sizes = [24, 24]
    for g in (0, 1):
        pos = position_distribution(sizes, ["0.2", "0.8"], g)
        for theta in ("0.05", "0.1"):
            lam = -mp.log(1 - mp.mpf(theta) * mp.mpf("1.5"))
            f = [(ell + 2) * lam + mp.log(pos[ell]) for ell in range(48)]
            arg = max(range(48), key=lambda k: f[k])
            print(f"# n=48 group {g + 1} theta {theta}: argmax ell {arg} "
                  f"f(47)-max {mp.nstr(f[47] - f[arg], 8)}")


if __name__ == "__main__":
    main()
