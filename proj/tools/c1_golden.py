"""Recompute the blow-up constant C1 at 30 significant digits.

C1 = sqrt(3) / (9 sqrt(2 pi) e) * inf_{xi >= 0} r(xi),
r(xi) = exp(-xi) I0(xi) / (exp(-xi/2) I0(xi/2)).

The frozen value in tests/test_potential.cpp comes from this script.
"""
import mpmath as mp

mp.mp.dps = 40


def ratio(xi):
    return mp.exp(-xi) * mp.besseli(0, xi) / (mp.exp(-xi / 2) * mp.besseli(0, xi / 2))


def main():
    # coarse scan on a log grid, then golden-section on the bracket
    xs = [mp.mpf(10) ** (mp.mpf(k) / 200 - 3) for k in range(0, 1201)]
    vals = [ratio(x) for x in xs]
    i = min(range(len(xs)), key=lambda j: vals[j])
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    g = (mp.sqrt(5) - 1) / 2
    a, b = hi - g * (hi - lo), lo + g * (hi - lo)
    fa, fb = ratio(a), ratio(b)
    for _ in range(200):
        if fa < fb:
            hi, b, fb = b, a, fa
            a = hi - g * (hi - lo)
            fa = ratio(a)
        else:
            lo, a, fa = a, b, fb
            b = lo + g * (hi - lo)
            fb = ratio(b)
    xi = (lo + hi) / 2
    inf_r = ratio(xi)
    pref = mp.sqrt(3) / (9 * mp.sqrt(2 * mp.pi) * mp.e)
    print("argmin xi   =", mp.nstr(xi, 20))
    print("inf ratio   =", mp.nstr(inf_r, 30))
    print("prefactor   =", mp.nstr(pref, 30))
    print("C1          =", mp.nstr(pref * inf_r, 30))
    print("ratio(1000) =", mp.nstr(ratio(1000), 20), " 1/sqrt2 =", mp.nstr(1 / mp.sqrt(2), 20))


if __name__ == "__main__":
    main()
