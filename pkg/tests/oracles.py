"""Independent reference evaluations used by the tests.

These are written straight from the closed-form model definitions with plain
``math`` and explicit loops, sharing no code with the package.
"""

import cmath
import math

C = 3.0e8


def _log(x):
    return math.log10(x)


def pathloss(scenario, condition, d2d, h_bs, h_ut, fc_ghz, h=5.0, w=20.0):
    d3d = math.sqrt(d2d**2 + (h_bs - h_ut) ** 2)
    fc_hz = fc_ghz * 1e9
    if scenario == "RMa":
        def pl1(d):
            return (20 * _log(40 * math.pi * d * fc_ghz / 3) + min(0.03 * h**1.72, 10) * _log(d)
                    - min(0.044 * h**1.72, 14.77) + 0.002 * _log(h) * d)
        d_bp = 2 * math.pi * h_bs * h_ut * fc_hz / C
        los = pl1(d3d) if d2d <= d_bp else pl1(d_bp) + 40 * _log(d3d / d_bp)
        if condition == "LOS":
            return los
        nlos = (161.04 - 7.1 * _log(w) + 7.5 * _log(h) - (24.37 - 3.7 * (h / h_bs) ** 2) * _log(h_bs)
                + (43.42 - 3.1 * _log(h_bs)) * (_log(d3d) - 3) + 20 * _log(fc_ghz)
                - (3.2 * _log(11.75 * h_ut) ** 2 - 4.97))
        return max(los, nlos)
    if scenario in ("UMa", "UMiStreetCanyon"):
        d_bp = 4 * (h_bs - 1) * (h_ut - 1) * fc_hz / C
        if scenario == "UMa":
            if d2d <= d_bp:
                los = 28.0 + 22 * _log(d3d) + 20 * _log(fc_ghz)
            else:
                los = 28.0 + 40 * _log(d3d) + 20 * _log(fc_ghz) - 9 * _log(d_bp**2 + (h_bs - h_ut) ** 2)
            nlos = 13.54 + 39.08 * _log(d3d) + 20 * _log(fc_ghz) - 0.6 * (h_ut - 1.5)
        else:
            if d2d <= d_bp:
                los = 32.4 + 21 * _log(d3d) + 20 * _log(fc_ghz)
            else:
                los = 32.4 + 40 * _log(d3d) + 20 * _log(fc_ghz) - 9.5 * _log(d_bp**2 + (h_bs - h_ut) ** 2)
            nlos = 35.3 * _log(d3d) + 22.4 + 21.3 * _log(fc_ghz) - 0.3 * (h_ut - 1.5)
        return los if condition == "LOS" else max(los, nlos)
    los = 32.4 + 17.3 * _log(d3d) + 20 * _log(fc_ghz)
    nlos = 38.3 * _log(d3d) + 17.30 + 24.9 * _log(fc_ghz)
    return los if condition == "LOS" else max(los, nlos)


def los_probability(scenario, d2d, h_ut=1.5):
    if scenario == "RMa":
        return 1.0 if d2d <= 10 else math.exp(-(d2d - 10) / 1000)
    if scenario == "UMiStreetCanyon":
        return 1.0 if d2d <= 18 else 18 / d2d + math.exp(-d2d / 36) * (1 - 18 / d2d)
    if scenario == "UMa":
        if d2d <= 18:
            return 1.0
        c = 0.0 if h_ut <= 13 else ((h_ut - 13) / 10) ** 1.5
        return (18 / d2d + math.exp(-d2d / 63) * (1 - 18 / d2d)) * (
            1 + c * 5 / 4 * (d2d / 100) ** 3 * math.exp(-d2d / 150)
        )
    if scenario == "InHOfficeMixed":
        if d2d <= 1.2:
            return 1.0
        if d2d < 6.5:
            return math.exp(-(d2d - 1.2) / 4.7)
        return math.exp(-(d2d - 6.5) / 32.6) * 0.32
    if d2d <= 5:
        return 1.0
    if d2d <= 49:
        return math.exp(-(d2d - 5) / 70.8)
    return math.exp(-(d2d - 49) / 211.7) * 0.54


def unit(theta, phi):
    return (math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta))


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def channel_coefficient(u, s, n, rays, powers, rx_loc, tx_loc, wavelength, field_rx, field_tx):
    """H[u, s, n] by direct summation over rays with explicit 2x2 matrices.

    ``rays[n][m]`` is a dict with zoa, aoa, zod, aod, kappa, phases (4-tuple).
    ``field_*`` map (theta, phi) to (F_theta, F_phi).
    """
    m_count = len(rays[n])
    total = 0j
    for ray in rays[n]:
        frx = field_rx(ray["zoa"], ray["aoa"])
        ftx = field_tx(ray["zod"], ray["aod"])
        p = ray["phases"]
        x = 1 / math.sqrt(ray["kappa"])
        mat = [[cmath.exp(1j * p[0]), x * cmath.exp(1j * p[1])], [x * cmath.exp(1j * p[2]), cmath.exp(1j * p[3])]]
        v = [mat[0][0] * ftx[0] + mat[0][1] * ftx[1], mat[1][0] * ftx[0] + mat[1][1] * ftx[1]]
        pol = frx[0] * v[0] + frx[1] * v[1]
        k_rx = unit(ray["zoa"], ray["aoa"])
        k_tx = unit(ray["zod"], ray["aod"])
        total += (pol * cmath.exp(2j * math.pi * dot(k_rx, rx_loc[u]) / wavelength)
                  * cmath.exp(2j * math.pi * dot(k_tx, tx_loc[s]) / wavelength))
    return math.sqrt(powers[n] / m_count) * total


def long_term(h, w_tx, w_rx):
    """L_n by explicit triple loop; ``h`` indexed h[u][s][n]."""
    n_count = len(h[0][0])
    out = []
    for n in range(n_count):
        acc = 0j
        for s in range(len(w_tx)):
            for u in range(len(w_rx)):
                acc += w_rx[u] * h[u][s][n] * w_tx[s]
        out.append(acc)
    return out


def rotation(bearing, tilt):
    ca, sa, cb, sb = math.cos(bearing), math.sin(bearing), math.cos(tilt), math.sin(tilt)
    return [[ca * cb, -sa, ca * sb], [sa * cb, ca, sa * sb], [-sb, 0.0, cb]]


def matvec(m, v):
    return [sum(m[i][j] * v[j] for j in range(3)) for i in range(3)]


def transpose(m):
    return [[m[j][i] for j in range(3)] for i in range(3)]


def pattern_db(theta, phi, ge):
    t, p = math.degrees(theta), math.degrees(phi)
    return ge - min(min(12 * ((t - 90) / 65) ** 2, 30) + min(12 * (p / 65) ** 2, 30), 30)


def field(theta, phi, bearing=0.0, tilt=0.0, ge=0.0):
    """(F_theta, F_phi) in global coordinates for a vertically polarised 3GPP element."""
    r = rotation(bearing, tilt)
    local = matvec(transpose(r), unit(theta, phi))
    tl = math.atan2(math.hypot(local[0], local[1]), local[2])
    pl = math.atan2(local[1], local[0])
    amp = math.sqrt(10 ** (pattern_db(tl, pl, ge) / 10))
    th_local = [math.cos(tl) * math.cos(pl), math.cos(tl) * math.sin(pl), -math.sin(tl)]
    th_global = matvec(r, th_local)
    th_hat = [math.cos(theta) * math.cos(phi), math.cos(theta) * math.sin(phi), -math.sin(theta)]
    ph_hat = [-math.sin(phi), math.cos(phi), 0.0]
    return amp * dot(th_global, th_hat), amp * dot(th_global, ph_hat)


def locations(rows, cols, spacing_v, spacing_h, wavelength, bearing=0.0, tilt=0.0):
    r = rotation(bearing, tilt)
    out = []
    for idx in range(rows * cols):
        row, col = divmod(idx, cols)
        out.append(matvec(r, [0.0, col * spacing_h * wavelength, row * spacing_v * wavelength]))
    return out
