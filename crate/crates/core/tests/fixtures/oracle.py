"""Independent reference values for the core tests (mpmath, 40 digits).

Run from this directory: python3 oracle.py > golden.txt
"""
from mpmath import mp, mpf, quad, quadosc, besselj, besseljzero, gamma, pi, cos, inf

mp.dps = 40


def fourier_integral(n, s):
    """I(N,s) = ∫_{R^N} (1 − cos ζ₁)/|ζ|^{N+2s} by slow oscillatory quadrature."""
    s = mpf(s)
    # the tail ∫_1^∞ t^{−1−2s} = 1/(2s) is split off so only the oscillatory part is summed
    if n == 1:
        f = lambda t: (1 - cos(t)) / t ** (1 + 2 * s)
        g = lambda t: cos(t) / t ** (1 + 2 * s)
        return 2 * (quad(f, [0, mpf("1e-8"), mpf("1e-4"), mpf("0.01"), 1]) + 1 / (2 * s) - quadosc(g, [1, inf], omega=1))
    f = lambda r: (1 - besselj(0, r)) / r ** (1 + 2 * s)
    g = lambda r: besselj(0, r) / r ** (1 + 2 * s)
    tail = quadosc(g, [1, inf], zeros=lambda k: besseljzero(0, k))
    return 2 * pi * (quad(f, [0, mpf("1e-8"), mpf("1e-4"), mpf("0.01"), 1]) + 1 / (2 * s) - tail)


def fourier_closed_form(n, s):
    s = mpf(s)
    return pi ** (mpf(n) / 2) * gamma(1 - s) / (s * 4 ** s * gamma((n + 2 * s) / 2))


def sharp_constant(n, s, integral):
    s = mpf(s)
    n = mpf(n)
    return (2 * s * (1 - s) * integral * 2 ** (2 * s) * pi ** s * gamma((n + 2 * s) / 2) / gamma((n - 2 * s) / 2)
            * (gamma(n / 2) / gamma(n)) ** (2 * s / n))


def normalized_lambda(n, s, c):
    """λ with ‖λ[(1+r²/c²)^{−(N−2s)/2} − (1+1/c²)^{−(N−2s)/2}]‖_{L^{2*}(B)} = 1."""
    s, c = mpf(s), mpf(c)
    d = n - 2 * s
    q = 2 * n / d
    off = (1 + 1 / c ** 2) ** (-d / 2)
    f = lambda r: r ** (n - 1) * ((1 + r ** 2 / c ** 2) ** (-d / 2) - off) ** q
    area = 2 if n == 1 else 2 * pi
    return 1 / (area * quad(f, sorted({mpf(0), c / 4, c, min(4 * c, mpf(1)), mpf(1)}))) ** (1 / q)


if __name__ == "__main__":
    print("# kind n s param value")
    for n, s in [(1, "0.1"), (1, "0.25"), (1, "0.3"), (1, "0.4"), (2, "0.25"), (2, "0.5"), (2, "0.75")]:
        i = fourier_integral(n, s)
        closed = fourier_closed_form(n, s)
        assert abs(i / closed - 1) < mpf("1e-10"), (n, s, i, closed)
        print(f"fourier {n} {s} 0 {mp.nstr(i, 25)}")
        print(f"constant {n} {s} 0 {mp.nstr(sharp_constant(n, s, i), 25)}")
    for n, s in [(1, "0.25"), (2, "0.5")]:
        for k in range(3, 8):
            c = mpf(2) ** -k
            print(f"lambda {n} {s} {mp.nstr(c, 20)} {mp.nstr(normalized_lambda(n, s, c), 25)}")
