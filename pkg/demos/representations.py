"""Two ways to evaluate the AdS kernel, and where each one struggles.

The spectral form sums f_m(t, r) U_m(cos eta) with all f_m > 0.  At small t
and eta far from 0 the alternating Chebyshev values cancel many digits, and
the coefficients are recomputed with gmpy2 at the precision the measured
cancellation asks for.  The theta form integrates each k-term on the line
through its saddle and never needs more than doubles.

    python demos/representations.py
"""
import time

from qadsheat import EvalContext, KernelPoint
from qadsheat.ads import ads_kernel_spectral, ads_kernel_theta


def row(t, r, eta):
    ctx, p = EvalContext(1, t), KernelPoint(r, eta)
    t0 = time.perf_counter()
    a = ads_kernel_theta(ctx, p)
    t1 = time.perf_counter()
    b = ads_kernel_spectral(ctx, p)
    t2 = time.perf_counter()
    print(f"{t:6.3g} {r:5.2f} {eta:5.2f}  log p = {a.log:12.6f}  |spec/theta - 1| = {abs(b.value.ratio(a.value) - 1):8.1e}"
          f"  digits {b.digits:3d}  theta {1e3 * (t1 - t0):7.1f} ms  spectral {1e3 * (t2 - t1):8.1f} ms")


if __name__ == "__main__":
    print("     t     r   eta")
    for t in (1.0, 0.5, 0.1):
        for r, eta in ((0.0, 0.0), (1.0, 1.0), (2.0, 3.0)):
            row(t, r, eta)
    # doubles give out here: the spectral sum escalates to high precision
    row(0.05, 1.0, 2.5)
    # far below underflow the value still has a finite log
    ctx = EvalContext(1, 1e-3)
    v = ads_kernel_theta(ctx, KernelPoint(1.0, 1.0))
    print(f"\nt = 1e-3: float(p) = {float(v.value)}, log p = {v.log:.10f}, rel. error estimate {v.error_estimate:.1e}")
