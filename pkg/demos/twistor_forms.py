"""Twistor kernel: the S^1 quotient of the AdS kernel versus the literal integral.

Both have the same m = 0 mode, so they carry the same mass, but only the
quotient keeps the even SU(2) modes with the right time dependence.  The
heat-equation residual tells them apart immediately.

    python demos/twistor_forms.py
"""
from qadsheat import EvalContext, TwistorPoint, twistor_kernel
from qadsheat.twistor import twistor_pde_residual

if __name__ == "__main__":
    ctx = EvalContext(1, 0.5)
    for r, phi in ((0.4, 1.4), (1.0, 0.5), (2.0, 0.15)):
        a = float(twistor_kernel(ctx, TwistorPoint(r, phi)).value)
        b = float(twistor_kernel(ctx, TwistorPoint(r, phi), "literal").value)
        print(f"r={r:4.2f} phi={phi:4.2f}  fibration {a:.12e}  literal {b:.12e}  rel. diff {abs(b / a - 1):.3e}")
    pts = [(0.4, 1.4), (1.2, 0.7), (2.0, 0.15)]
    for form in ("fibration", "literal"):
        st = twistor_pde_residual(ctx, pts, form)
        print(f"{form:9s}: max heat-equation residual {st.max:.2e} at {st.worst_point}")
