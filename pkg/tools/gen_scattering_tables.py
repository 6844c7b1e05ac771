"""Generate the bundled atomic scattering-factor tables (si.nff, as.nff, o.nff).

The shipped tables are synthetic: no published f1/f2 compilation is vendored
into this repository.  Instead, each element's photoabsorption spectrum f2(E)
is modelled as a sum of per-shell continua with tabulated edge energies,
piecewise power-law decays, lifetime-broadened onsets, and oscillator
strengths constrained by the Thomas-Reiche-Kuhn sum rule.  The dispersive
part f1(E) is then obtained from f2 by a numerically exact Kramers-Kronig
transform (principal value integral done in closed form on a piecewise-linear
interpolant), plus the relativistic correction Z* = Z - (Z/82.5)^2.37.

Absolute scales are pinned to well-known anchors:

  * Si K: mass attenuation ~65 cm^2/g at Cu K-alpha (8048 eV) => f2 ~ 0.33,
    and an edge jump to f2 ~ 4.5 at 1839 eV (attenuation length ~10 um just
    below the edge, ~1 um just above).
  * Si L: f2 ~ 0.7-0.9 in the 1.2-1.5 keV band (attenuation ~4-7 um).
  * As L3/L2: statistical 2:1 branching, continuum fraction ~0.8 of the
    2p sum rule captured below ~8x the edge (matching the K-shell fit),
    giving an edge jump to f2 ~ 6 at 1324 eV and mass attenuation
    ~3500-4000 cm^2/g just above both L edges.
  * O K: f2 ~ 2.3 above 543 eV decaying to ~0.035 at 8048 eV
    (mass attenuation ~11.5 cm^2/g at Cu K-alpha).

Within 1.2-1.9 keV (the band the toolkit targets) the model is anchored to
a few percent-level-trusted attenuation values; far outside that band it is
only qualitatively correct and the global sum rule is captured at the ~60%
level (the remainder sits in discrete states and far tails that the truncated
power laws drop).  Because Kramers-Kronig weighting is local, that shortfall
moves in-band f1 by well under one electron.

Run:  python3 tools/gen_scattering_tables.py [--outdir src/deltaxrr/data/tables]

The emitted .nff files use the conventional format: one header line, then
whitespace-separated "E(eV)  f1  f2" rows, ascending in energy.  Rows below
45 eV in as.nff carry the customary -9999 sentinel in the f1 column (the
model dispersion is unreliable that close to the shallow M45 edge).
"""

import argparse
import os

import numpy as np

HC_EV_NM = 1239.841984
R0_NM = 2.8179403262e-6


class Shell:
    """One subshell's photoabsorption continuum.

    f2(E) = A * rise(x) * decay(x) * onset(E), with x = E/Ee.

    decay is a continuous piecewise power law: exponent r_i applies up to
    x_i (the last segment extends to infinity).  rise(x) = (x/x_pk)^q for
    x < x_pk models a delayed maximum (centrifugal-barrier shells).
    onset is an arctan step of lifetime width gamma centred on the edge.
    """

    def __init__(self, name, ee, amp, segments, gamma, n_elec, x_pk=1.0, q=0.0):
        self.name = name
        self.ee = float(ee)
        self.amp = float(amp)
        self.segments = list(segments)  # [(r, x_upper), ...], last x_upper = inf
        self.gamma = float(gamma)
        self.n_elec = float(n_elec)
        self.x_pk = float(x_pk)
        self.q = float(q)

    def _decay(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones_like(x)
        x_lo = self.x_pk
        scale = 1.0
        remaining = np.maximum(x, x_lo)
        for r, x_hi in self.segments:
            seg_top = np.minimum(remaining, x_hi)
            frac = np.where(seg_top > x_lo, (seg_top / x_lo) ** (-r), 1.0)
            out = out * frac
            scale *= 1.0
            x_lo = x_hi
            if np.isinf(x_hi):
                break
        return out

    def f2(self, e):
        e = np.asarray(e, dtype=float)
        x = e / self.ee
        rise = np.where(x < self.x_pk,
                        (np.maximum(x, 1e-6) / self.x_pk) ** self.q,
                        1.0)
        onset = 0.5 + np.arctan((e - self.ee) / (0.5 * self.gamma)) / np.pi
        return self.amp * rise * self._decay(x) * onset

    def trk_capture(self):
        """Oscillator strength (2/pi) int f2 dE/E held by the model."""
        e = np.geomspace(max(self.ee * 0.2, 1.0), self.ee * 3e3, 20000)
        return (2.0 / np.pi) * np.trapz(self.f2(e) / e, e)


class ElementModel:
    def __init__(self, symbol, z, shells):
        self.symbol = symbol
        self.z = float(z)
        self.shells = shells

    @property
    def z_star(self):
        return self.z - (self.z / 82.5) ** 2.37

    def f2(self, e):
        e = np.asarray(e, dtype=float)
        total = np.zeros_like(e)
        for sh in self.shells:
            total = total + sh.f2(e)
        return total


# ---------------------------------------------------------------------------
# Shell parameter sets.  Edge energies are standard tabulated values;
# amplitudes A sit at the anchors described in the module docstring, with
# sum-rule captures printed by the report for audit.
# ---------------------------------------------------------------------------

INF = float("inf")

SILICON = ElementModel("Si", 14, [
    Shell("K", 1839.0, 4.45, [(2.00, 2.0), (1.60, INF)], 0.6, 2),
    Shell("L23", 99.6, 4.00, [(0.75, 9.0), (1.40, INF)], 0.5, 6,
          x_pk=1.45, q=1.2),
    Shell("L1", 149.7, 0.38, [(0.55, 8.0), (1.60, INF)], 1.2, 2),
    Shell("V", 8.2, 5.00, [(1.50, 4.0), (2.40, INF)], 2.0, 4,
          x_pk=2.0, q=1.5),
])

OXYGEN = ElementModel("O", 8, [
    Shell("K", 543.1, 2.30, [(1.58, 15.0), (2.60, INF)], 0.2, 2),
    Shell("V", 13.6, 4.50, [(1.60, 4.0), (0.90, 45.0), (2.60, INF)], 2.5, 6,
          x_pk=1.8, q=1.5),
])

ARSENIC = ElementModel("As", 33, [
    Shell("K", 11866.7, 4.30, [(2.00, 2.0), (1.55, INF)], 4.0, 2),
    Shell("L1", 1526.5, 0.70, [(0.90, 6.0), (1.80, INF)], 3.0, 2),
    Shell("L2", 1359.1, 3.22, [(1.15, 8.0), (2.20, INF)], 2.20, 2),
    Shell("L3", 1323.6, 6.45, [(1.15, 8.0), (2.20, INF)], 2.00, 4),
    Shell("M1", 204.7, 0.50, [(1.00, 6.0), (2.00, INF)], 4.0, 2),
    Shell("M23", 143.5, 1.60, [(0.95, 6.0), (2.00, INF)], 3.0, 6),
    Shell("M45", 41.7, 6.50, [(0.95, 15.9), (2.30, INF)], 2.0, 10,
          x_pk=2.2, q=1.3),
    Shell("N", 16.0, 2.50, [(1.30, 5.0), (2.30, INF)], 3.0, 5,
          x_pk=2.0, q=1.3),
])

ELEMENTS = {"si": SILICON, "o": OXYGEN, "as": ARSENIC}


def master_grid(model):
    """Dense energy grid for the Kramers-Kronig quadrature."""
    pieces = [np.geomspace(1.0, 3.0e6, 3200)]
    for sh in model.shells:
        g = 0.5 * sh.gamma
        pieces.append(np.linspace(sh.ee - 40.0, sh.ee + 40.0, 161))
        pieces.append(np.linspace(sh.ee - 8.0, sh.ee + 8.0, 321))
        pieces.append(np.linspace(sh.ee - 3.0 * g, sh.ee + 3.0 * g, 61))
    e = np.unique(np.concatenate(pieces))
    return e[e >= 1.0]


def kk_f1(model, e_out):
    """f1 on e_out via exact principal-value transform of piecewise-linear f2.

    f1(E) = Z* - (2/pi) P int_0^inf E' f2(E') / (E'^2 - E^2) dE'
          = Z* - (1/pi) P int [f2(E')/(E'-E) + f2(E')/(E'+E)] dE'

    For f2 linear on [a, b] (value fa, slope s) the principal value of
    int f2/(E'-E) dE' is s*(b-a) + (fa + s*(E-a)) * ln|(b-E)/(a-E)|, which
    is PV-correct when E lies inside [a, b].  The 1/(E'+E) piece has no pole.
    """
    grid = master_grid(model)
    f2g = model.f2(grid)
    a = grid[:-1]
    b = grid[1:]
    fa = f2g[:-1]
    fb = f2g[1:]
    s = (fb - fa) / (b - a)
    width = b - a

    e_out = np.asarray(e_out, dtype=float)
    out = np.empty_like(e_out)
    for i, e in enumerate(e_out):
        # pole term 1/(E' - E)
        num = b - e
        den = a - e
        with np.errstate(divide="ignore", invalid="ignore"):
            log_m = np.log(np.abs(num / den))
        # a segment endpoint can coincide with e; those log terms cancel in
        # the principal value, so zero them out
        log_m = np.where(np.isfinite(log_m), log_m, 0.0)
        pole = np.sum(s * width + (fa + s * (e - a)) * log_m)
        # smooth term 1/(E' + E)
        log_p = np.log((b + e) / (a + e))
        smooth = np.sum(s * width + (fa + s * (-e - a)) * log_p)
        out[i] = model.z_star - (pole + smooth) / np.pi
    return out


def output_grid(model):
    """Emitted table grid: 1.5% geometric spacing plus dense edge windows."""
    pieces = [np.geomspace(30.0, 30000.0, 467)]
    for sh in model.shells:
        if sh.ee < 35.0 or sh.ee > 25000.0:
            continue
        pieces.append(np.arange(sh.ee - 30.0, sh.ee + 60.0 + 1e-9, 1.0))
        pieces.append(np.arange(sh.ee - 6.0, sh.ee + 6.0 + 1e-9, 0.25))
    e = np.unique(np.round(np.concatenate(pieces), 4))
    return e[(e >= 30.0) & (e <= 30000.0)]


def interp_cf(e_tab, f1_tab, f2_tab, e):
    f1 = np.interp(e, e_tab, f1_tab)
    f2 = np.interp(e, e_tab, f2_tab)
    return f1 + 1j * f2


def build_tables():
    tables = {}
    for key, model in ELEMENTS.items():
        e = output_grid(model)
        f2 = model.f2(e)
        f1 = kk_f1(model, e)
        tables[key] = (e, f1, f2)
    return tables


def write_tables(tables, outdir):
    os.makedirs(outdir, exist_ok=True)
    for key, (e, f1, f2) in tables.items():
        path = os.path.join(outdir, key + ".nff")
        with open(path, "w") as fh:
            fh.write("E(eV)\tf1\tf2\n")
            for ei, f1i, f2i in zip(e, f1, f2):
                if key == "as" and ei < 45.0:
                    fh.write("%.4f\t%.2f\t%.6e\n" % (ei, -9999.00, f2i))
                else:
                    fh.write("%.4f\t%.6e\t%.6e\n" % (ei, f1i, f2i))
        print("wrote %s (%d rows)" % (path, len(e)))


def report(tables):
    e_si, f1_si, f2_si = tables["si"]
    e_as, f1_as, f2_as = tables["as"]
    e_o, f1_o, f2_o = tables["o"]

    def f(tab, e):
        return interp_cf(*tab, e)

    print("\n--- band values ---")
    for e in (1300.0, 1317.0, 1324.0, 1335.0, 1340.0, 1400.0):
        fs = f(tables["si"], e)
        fa = f(tables["as"], e)
        fo = f(tables["o"], e)
        print("E=%7.1f  Si %8.4f%+8.4fi   As %8.4f%+8.4fi   O %7.4f%+7.4fi"
              % (e, fs.real, fs.imag, fa.real, fa.imag, fo.real, fo.imag))

    print("\n--- anchors ---")
    print("f2_Si(8048)  = %.4f   (target 0.33 +- 0.04)"
          % f(tables["si"], 8048.0).imag)
    print("f2_Si(1838-) = %.4f   (target ~0.45 +- 0.15)"
          % f(tables["si"], 1830.0).imag)
    print("f2_Si(1845+) = %.4f   (target ~4.4 +- 0.7)"
          % f(tables["si"], 1845.0).imag)
    print("f2_O(8048)   = %.4f   (target ~0.035)"
          % f(tables["o"], 8048.0).imag)
    print("f2_O(550+)   = %.4f   (target ~2.3)"
          % f(tables["o"], 552.0).imag)
    print("f2_As(1400)  = %.4f   (target ~8-10)"
          % f(tables["as"], 1400.0).imag)
    print("f1_Si(1300)  = %.4f   (target ~12.2 +- 0.4)"
          % f(tables["si"], 1300.0).real)
    print("f1_Si(30000) = %.4f   (-> Z* = %.3f)"
          % (f(tables["si"], 29000.0).real, SILICON.z_star))
    print("f1_As(30000) = %.4f   (-> Z* = %.3f)"
          % (f(tables["as"], 29000.0).real, ARSENIC.z_star))

    print("\n--- sum-rule captures ---")
    for key, model in ELEMENTS.items():
        per = {sh.name: sh.trk_capture() for sh in model.shells}
        tot = sum(per.values())
        det = ", ".join("%s %.2f/%d" % (n, v, s.n_elec)
                        for (n, v), s in zip(per.items(), model.shells))
        print("%-2s  total %.2f of Z=%d   (%s)" % (model.symbol, tot,
                                                   int(model.z), det))

    print("\n--- headline observables ---")
    df_lo = f(tables["as"], 1300.0) - f(tables["si"], 1300.0)
    df_hi = f(tables["as"], 1335.0) - f(tables["si"], 1335.0)
    dphi = np.angle(df_hi) - np.angle(df_lo)
    print("delta_f(1300) = %.4f%+.4fi  |.|=%.4f  arg=%.4f pi"
          % (df_lo.real, df_lo.imag, abs(df_lo), np.angle(df_lo) / np.pi))
    print("delta_f(1335) = %.4f%+.4fi  |.|=%.4f  arg=%.4f pi"
          % (df_hi.real, df_hi.imag, abs(df_hi), np.angle(df_hi) / np.pi))
    print("phase shift arg df(1335) - arg df(1300) = %.4f pi   (band 0.23-0.43 pi)"
          % (dphi / np.pi))
    print("|df| change 1300->1335: %.1f%%  (want > 10%%)"
          % (100.0 * (abs(df_hi) - abs(df_lo)) / abs(df_lo)))
    fsi_lo = f(tables["si"], 1300.0)
    fsi_hi = f(tables["si"], 1335.0)
    print("|f_Si| change 1300->1335: %.2f%%  (want < 1%%)"
          % (100.0 * abs(abs(fsi_hi) - abs(fsi_lo)) / abs(fsi_lo)))
    ddf = df_hi - df_lo
    print("df(1335)-df(1300) = %.4f%+.4fi  |.|=%.4f"
          % (ddf.real, ddf.imag, abs(ddf)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default=os.path.join(
        os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
        "src", "deltaxrr", "data", "tables"))
    ap.add_argument("--report-only", action="store_true",
                    help="print diagnostics without writing files")
    args = ap.parse_args()

    tables = build_tables()
    report(tables)
    if not args.report_only:
        write_tables(tables, args.outdir)


if __name__ == "__main__":
    main()
