import math

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, a, b, tol):
    """Minimize a unimodal ``f`` on [a, b]; returns (x_best, f_best).

    Stops once the bracket is narrower than ``tol``.  The best point seen is
    returned, never an unevaluated bracket midpoint.
    """
    a, b = min(a, b), max(a, b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    best = (c, fc) if fc <= fd else (d, fd)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
            if fc < best[1]:
                best = (c, fc)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
            if fd < best[1]:
                best = (d, fd)
    return best
