"""Small-time behaviour against the leading-order predictors.

The origin expansion (A_n + B_n t) is accurate to O(t^2); the cut-locus
rate fit converges to 2 pi eta + eta^2.  The axis and general predictors are
leading order only, and the ratios approach 1 like 1 - c t with c close to
(2n+1)^2, the decay rate of the q_{t,4n+3} prefactor e^{-(2n+1)^2 t}.

    python demos/small_time.py
"""
from qadsheat import asymptotics as A

TS = (1.6e-2, 1e-2, 8e-3, 4e-3)

if __name__ == "__main__":
    for n in (1, 2):
        print(f"n = {n}")
        for t in TS:
            o = A.origin_expansion(n, t)
            a = A.axis_asymptotic(n, t, 1.0)
            g = A.general_asymptotic(n, t, 1.0, 1.0)
            print(f"  t={t:7.1e}  origin {o.ratio:.6f}   axis {a.ratio:.6f} (1-ratio)/t = {(1 - a.ratio) / t:6.2f}"
                  f"   general {g.ratio:.6f} (1-ratio)/t = {(1 - g.ratio) / t:6.2f}")
        for eta in (0.7, 1.5):
            fit = A.cutlocus_rate(n, eta)
            print(f"  cut locus eta={eta}: fitted {fit.limit:.9f}, expected {fit.expected:.9f}")
        print(f"  (2n+1)^2 = {(2 * n + 1) ** 2}")
