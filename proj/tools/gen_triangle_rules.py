#!/usr/bin/env python3
"""Polish symmetric (Dunavant-type) triangle rules to full double precision.

Each rule is given by its orbit structure and approximate parameters; Newton
iterations on the exact monomial moment equations refine them in 40-digit
arithmetic. Prints the C++ table consumed by include/mfie/quadrature_tables.hpp.
"""
import mpmath as mp

mp.mp.dps = 40

# degree -> list of orbits: ("c", w) | ("3", a, w) | ("6", a, b, w)
# weights normalised to sum 1; a, b are barycentric coordinates.
SEED = {
    1: [("c", 1.0)],
    2: [("3", 1 / 6, 1 / 3)],
    4: [("3", 0.445948490915965, 0.223381589678011),
        ("3", 0.091576213509771, 0.109951743655322)],
    5: [("c", 0.225),
        ("3", 0.470142064105115, 0.132394152788506),
        ("3", 0.101286507323456, 0.125939180544827)],
    6: [("3", 0.249286745170910, 0.116786275726379),
        ("3", 0.063089014491502, 0.050844906370207),
        ("6", 0.310352451033784, 0.636502499121399, 0.082851075618374)],
    8: [("c", 0.144315607677787),
        ("3", 0.459292588292723, 0.095091634267285),
        ("3", 0.170569307751760, 0.103217370534718),
        ("3", 0.050547228317031, 0.032458497623198),
        ("6", 0.263112829634638, 0.728492392955404, 0.027230314174435)],
    9: [("c", 0.097135796282799),
        ("3", 0.489682519198738, 0.031334700227139),
        ("3", 0.437089591492937, 0.077827541004774),
        ("3", 0.188203535619033, 0.079647738927210),
        ("3", 0.044729513394453, 0.025577675658698),
        ("6", 0.221962989160766, 0.741198598784498, 0.043283539377289)],
    10: [("c", 0.090817990382754),
         ("3", 0.485577633383657, 0.036725957756467),
         ("3", 0.109481575485037, 0.045321059435528),
         ("6", 0.141707219414880, 0.307939838764121, 0.072757916845420),
         ("6", 0.025003534762686, 0.246672560639903, 0.028327242531057),
         ("6", 0.009540815400299, 0.066803251012200, 0.009421666963733)],
}


def expand(orbits):
    pts = []
    for o in orbits:
        if o[0] == "c":
            pts.append(((mp.mpf(1) / 3,) * 3, o[1]))
        elif o[0] == "3":
            a, w = o[1], o[2]
            c = 1 - 2 * a
            for p in [(a, a, c), (a, c, a), (c, a, a)]:
                pts.append((p, w))
        else:
            a, b, w = o[1], o[2], o[3]
            c = 1 - a - b
            for p in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]:
                pts.append((p, w))
    return pts


def flatten(orbits):
    x = []
    for o in orbits:
        x.extend(mp.mpf(v) for v in o[1:])
    return x


def rebuild(orbits, x):
    out, i = [], 0
    for o in orbits:
        n = len(o) - 1
        out.append((o[0], *x[i:i + n]))
        i += n
    return out


def residual(orbits, x, degree):
    pts = expand(rebuild(orbits, x))
    res = []
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            exact = 2 * mp.factorial(i) * mp.factorial(j) / mp.factorial(i + j + 2)
            s = sum(w * p[1] ** i * p[2] ** j for p, w in pts)
            res.append(s - exact)
    return res


def polish(degree, orbits):
    x = mp.matrix(flatten(orbits))
    for _ in range(60):
        f = mp.matrix(residual(orbits, list(x), degree))
        if mp.norm(f) < mp.mpf(10) ** -35:
            break
        J = mp.matrix(len(f), len(x))
        h = mp.mpf(10) ** -20
        for k in range(len(x)):
            xp = x.copy()
            xp[k] += h
            fp = mp.matrix(residual(orbits, list(xp), degree))
            for r in range(len(f)):
                J[r, k] = (fp[r] - f[r]) / h
        dx = mp.lu_solve(J.T * J, J.T * f)
        x -= dx
    worst = max(abs(v) for v in residual(orbits, list(x), degree))
    return rebuild(orbits, list(x)), worst


def main():
    for degree, orbits in SEED.items():
        polished, worst = polish(degree, orbits)
        assert worst < 1e-30, (degree, worst)
        print(f"// degree {degree}, {len(expand(polished))} points, moment residual {mp.nstr(worst, 3)}")
        for o in polished:
            vals = ", ".join(mp.nstr(v, 20) for v in o[1:])
            print(f"  {{'{o[0]}', {{{vals}}}}},")


if __name__ == "__main__":
    main()
