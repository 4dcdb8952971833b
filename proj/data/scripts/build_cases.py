#!/usr/bin/env python3
"""Regenerates data/case3.json and data/case39.json.

The 39-bus steady-state data is the New England test system as distributed
with MATPOWER (case39.m). Machine inertia H (s, 100 MVA base) and transient
reactance x'd are the classical-model values tabulated for this system by
Pai. Inertia is stored as M = 2H / (2*pi*f0) in pu*s^2/rad.

Damping is not part of either source. Both cases use a uniform ratio D/M, so
every oscillatory mode of the undamped-control system decays at D/(2M); the
ratio is set so that this rate is 1.899e-3 1/s (see data/README.md).
"""
import json
import math
import os
import pathlib

HERE = pathlib.Path(__file__).resolve().parent
OUT = HERE.parent

DAMPING_RATIO = float(os.environ.get("V2GSIM_DAMPING_RATIO", 2.0 * 1.899e-3))  # D/M, 1/s


def inertia(h_seconds, f0):
    return 2.0 * h_seconds / (2.0 * math.pi * f0)


def case39():
    f0 = 60.0
    damping_ratio = DAMPING_RATIO
    # bus, Pd (MW), Qd (MVAr)
    loads = {
        1: (97.6, 44.2), 3: (322.0, 2.4), 4: (500.0, 184.0), 7: (233.8, 84.0),
        8: (522.0, 176.6), 9: (6.5, -66.6), 12: (8.53, 88.0), 15: (320.0, 153.0),
        16: (329.0, 32.3), 18: (158.0, 30.0), 20: (680.0, 103.0), 21: (274.0, 115.0),
        23: (247.5, 84.6), 24: (308.6, -92.2), 25: (224.0, 47.2), 26: (139.0, 17.0),
        27: (281.0, 75.5), 28: (206.0, 27.6), 29: (283.5, 26.9), 31: (9.2, 4.6),
        39: (1104.0, 250.0),
    }
    # bus, Pg (MW), Vg (pu), H (s), x'd (pu)
    gens = [
        (30, 250.0, 1.0499, 42.0, 0.0310),
        (31, 677.871, 0.9820, 30.3, 0.0697),
        (32, 650.0, 0.9841, 35.8, 0.0531),
        (33, 632.0, 0.9972, 28.6, 0.0436),
        (34, 508.0, 1.0123, 26.0, 0.1320),
        (35, 650.0, 1.0494, 34.8, 0.0500),
        (36, 560.0, 1.0636, 26.4, 0.0490),
        (37, 540.0, 1.0275, 24.3, 0.0570),
        (38, 830.0, 1.0265, 34.5, 0.0570),
        (39, 1000.0, 1.0300, 500.0, 0.0060),
    ]
    # from, to, r, x, b, tap
    branches = [
        (1, 2, 0.0035, 0.0411, 0.6987, 1.0), (1, 39, 0.0010, 0.0250, 0.7500, 1.0),
        (2, 3, 0.0013, 0.0151, 0.2572, 1.0), (2, 25, 0.0070, 0.0086, 0.1460, 1.0),
        (2, 30, 0.0000, 0.0181, 0.0000, 1.025), (3, 4, 0.0013, 0.0213, 0.2214, 1.0),
        (3, 18, 0.0011, 0.0133, 0.2138, 1.0), (4, 5, 0.0008, 0.0128, 0.1342, 1.0),
        (4, 14, 0.0008, 0.0129, 0.1382, 1.0), (5, 6, 0.0002, 0.0026, 0.0434, 1.0),
        (5, 8, 0.0008, 0.0112, 0.1476, 1.0), (6, 7, 0.0006, 0.0092, 0.1130, 1.0),
        (6, 11, 0.0007, 0.0082, 0.1389, 1.0), (6, 31, 0.0000, 0.0250, 0.0000, 1.07),
        (7, 8, 0.0004, 0.0046, 0.0780, 1.0), (8, 9, 0.0023, 0.0363, 0.3804, 1.0),
        (9, 39, 0.0010, 0.0250, 1.2000, 1.0), (10, 11, 0.0004, 0.0043, 0.0729, 1.0),
        (10, 13, 0.0004, 0.0043, 0.0729, 1.0), (10, 32, 0.0000, 0.0200, 0.0000, 1.07),
        (12, 11, 0.0016, 0.0435, 0.0000, 1.006), (12, 13, 0.0016, 0.0435, 0.0000, 1.006),
        (13, 14, 0.0009, 0.0101, 0.1723, 1.0), (14, 15, 0.0018, 0.0217, 0.3660, 1.0),
        (15, 16, 0.0009, 0.0094, 0.1710, 1.0), (16, 17, 0.0007, 0.0089, 0.1342, 1.0),
        (16, 19, 0.0016, 0.0195, 0.3040, 1.0), (16, 21, 0.0008, 0.0135, 0.2548, 1.0),
        (16, 24, 0.0003, 0.0059, 0.0680, 1.0), (17, 18, 0.0007, 0.0082, 0.1319, 1.0),
        (17, 27, 0.0013, 0.0173, 0.3216, 1.0), (19, 20, 0.0007, 0.0138, 0.0000, 1.06),
        (19, 33, 0.0007, 0.0142, 0.0000, 1.07), (20, 34, 0.0009, 0.0180, 0.0000, 1.009),
        (21, 22, 0.0008, 0.0140, 0.2565, 1.0), (22, 23, 0.0006, 0.0096, 0.1846, 1.0),
        (22, 35, 0.0000, 0.0143, 0.0000, 1.025), (23, 24, 0.0022, 0.0350, 0.3610, 1.0),
        (23, 36, 0.0005, 0.0272, 0.0000, 1.0), (25, 26, 0.0032, 0.0323, 0.5310, 1.0),
        (25, 37, 0.0006, 0.0232, 0.0000, 1.025), (26, 27, 0.0014, 0.0147, 0.2396, 1.0),
        (26, 28, 0.0043, 0.0474, 0.7802, 1.0), (26, 29, 0.0057, 0.0625, 1.0290, 1.0),
        (28, 29, 0.0014, 0.0151, 0.2490, 1.0), (29, 38, 0.0008, 0.0156, 0.0000, 1.025),
    ]
    gen_buses = {g[0] for g in gens}
    buses = []
    for i in range(1, 40):
        p, q = loads.get(i, (0.0, 0.0))
        if i in gen_buses:
            kind = "both" if i in loads else "generator"
        else:
            kind = "load"
        buses.append({"id": i, "kind": kind, "base_kv": 345.0,
                      "load_mw": p, "load_mvar": q})
    generators = []
    for bus, pg, vg, h, xd in gens:
        m = inertia(h, f0)
        generators.append({"bus": bus, "m": round(m, 10), "d": round(damping_ratio * m, 10),
                           "xd_prime_pu": xd, "p_mw": pg, "v_pu": vg})
    return {
        "name": "case39",
        "system": {"mva_base": 100.0, "frequency_hz": f0},
        "slack_bus": 31,
        "buses": buses,
        "branches": [{"from": f, "to": t, "r_pu": r, "x_pu": x, "b_pu": b, "tap": tap}
                     for f, t, r, x, b, tap in branches],
        "generators": generators,
    }


def case3():
    f0 = 60.0
    damping_ratio = DAMPING_RATIO
    buses = [
        {"id": 1, "kind": "both", "base_kv": 230.0, "load_mw": 400.0, "load_mvar": 100.0},
        {"id": 2, "kind": "both", "base_kv": 230.0, "load_mw": 600.0, "load_mvar": 150.0},
        {"id": 3, "kind": "both", "base_kv": 230.0, "load_mw": 500.0, "load_mvar": 120.0},
    ]
    branches = [
        {"from": 1, "to": 2, "r_pu": 0.010, "x_pu": 0.100, "b_pu": 0.100, "tap": 1.0},
        {"from": 1, "to": 3, "r_pu": 0.010, "x_pu": 0.120, "b_pu": 0.120, "tap": 1.0},
        {"from": 2, "to": 3, "r_pu": 0.008, "x_pu": 0.080, "b_pu": 0.080, "tap": 1.0},
    ]
    gens = [(1, 0.0, 1.04, 30.0, 0.04), (2, 600.0, 1.025, 25.0, 0.05), (3, 450.0, 1.02, 20.0, 0.06)]
    generators = []
    for bus, pg, vg, h, xd in gens:
        m = inertia(h, f0)
        generators.append({"bus": bus, "m": round(m, 10), "d": round(damping_ratio * m, 10),
                           "xd_prime_pu": xd, "p_mw": pg, "v_pu": vg})
    return {
        "name": "case3",
        "system": {"mva_base": 100.0, "frequency_hz": f0},
        "slack_bus": 1,
        "buses": buses,
        "branches": branches,
        "generators": generators,
    }


if __name__ == "__main__":
    for name, data in (("case3", case3()), ("case39", case39())):
        (OUT / f"{name}.json").write_text(json.dumps(data, indent=2) + "\n")
        total = sum(b["load_mw"] for b in data["buses"])
        print(f"{name}: {len(data['buses'])} buses, {len(data['branches'])} branches, "
              f"{len(data['generators'])} generators, load {total:.2f} MW")
