"""Independent oracle for the two-state sinusoid model and the staircase.

Prints the values frozen into the C++ tests. Uses closed forms specific to
two states instead of the library's matrix code:

  p_k = mu_k(state 2) = sum_{j>=1} a(k-j+1) prod_{i=1}^{j-1} lam(k-i)
  lam(n) = 1 - a(n+1) - b(n+1)        (step keyed by n uses a(n+1), b(n+1))
  Cov(1{X_i=2}, 1{X_j=2}) = p_i (1 - p_i) prod_{l=i}^{j-1} lam(l)
"""
import math

import mpmath as mp
import numpy as np

mp.mp.dps = 40


def a(t):
    return mp.mpf(1) / 3 + mp.sin(t) / 6


def b(t):
    return mp.mpf(1) / 4 + mp.cos(t) / 8


def lam(n):
    return 1 - a(n + 1) - b(n + 1)


def p_exact(k, depth=200):
    total, prod = mp.mpf(0), mp.mpf(1)
    for j in range(1, depth + 1):
        total += a(k - j + 1) * prod
        prod *= lam(k - j)
    return total


def forward_p(first, count):
    """p_k for k = first .. first+count-1 by the forward recursion in floats."""
    p = float(p_exact(first))
    out = np.empty(count)
    for i in range(count):
        out[i] = p
        n = first + i
        an, bn = math.sin(n + 1) / 6 + 1 / 3, math.cos(n + 1) / 8 + 0.25
        p = an * (1 - p) + p * (1 - bn)
    return out


def lam_f(n):
    return 1 - (1 / 3 + math.sin(n + 1) / 6) - (0.25 + math.cos(n + 1) / 8)


def var_sum(first, n):
    """Var(sum_{k<n} X_{first+k}) from the equilibrium start at `first`."""
    p = forward_p(first, n)
    v = p * (1 - p)
    lams = np.array([lam_f(first + i) for i in range(n)])
    tail = 0.0  # T_i = sum_{j>i} prod_{l=i}^{j-1} lam_l
    total = 0.0
    for i in range(n - 1, -1, -1):
        tail = lams[i] * (1 + tail) if i < n - 1 else 0.0
        total += v[i] * (1 + 2 * tail)
    return total


def staircase(key):
    c = 0.05 * math.sin(key)
    return np.array([
        [0.8, 0.17, 0.03, 0.0],
        [0.6, 0.32, 0.08, 0.0],
        [0.3, 0.35 - c, 0.25 + c, 0.1],
        [0.2 + c, 0.2, 0.3 - c, 0.3],
    ])


def taboo(step, in_set, s, x, n_max, states=4):
    v = np.zeros(states)
    v[x] = 1.0
    out = [1.0]
    for k in range(1, n_max + 1):
        v = v @ step(s + k - 1)
        v[list(in_set)] = 0.0
        out.append(v.sum())
    return out


if __name__ == "__main__":
    for k in (-5, 0, 1, 100, 10000):
        print(f"mu_{k}(2) = {mp.nstr(p_exact(k), 17)}")
    p = forward_p(0, 10000)
    print(f"cesaro n=1e4 of g(x)=x: {np.mean(1 + p):.17g}")
    for n in (10, 2000):
        print(f"Var(S_{n})/{n} = {var_sum(0, n) / n:.17g}")
    sup = max(var_sum(0, n) / n for n in range(1, 2001, 1))
    print(f"sup_(n<=2000) Var(S_n)/n = {sup:.17g}")
    p0 = float(p_exact(0))
    v0 = p0 * (1 - p0)
    print(f"Cov(X_0, X_3) = {v0 * lam_f(0) * lam_f(1) * lam_f(2):.17g}")
    n = 10**6
    var = var_sum(0, n)
    print(f"Var(S_1e6)/1e6 = {var / n:.17g}")
    print(f"gap sd at 1e6 = {math.sqrt(var) / n:.6g}; 3 sd = {3 * math.sqrt(var) / n:.6g}")
    for x in (2, 3):
        t = taboo(staircase, {0, 1}, 0, x, 20)
        print(f"staircase taboo s=0 x={x + 1}:", " ".join(f"{v:.17g}" for v in t[:6]), "... n=20:", f"{t[20]:.17g}")
