#!/usr/bin/env python3
"""Regenerates data/rts24*.json|csv and data/rts73*.json|csv from the IEEE RTS-24 tables.

Requires the `pypower` package (pip install pypower). Bus coordinates are a
synthetic geolocation in the south-western US built from the RTS one-line
layout; they are only used for line routing through risk rasters.
"""
import csv
import json
import pathlib
import sys

from pypower.case24_ieee_rts import case24_ieee_rts

LAYOUT = {
    1: (2.7759619498, -1.278020978), 2: (2.5012550969, -0.1447433104),
    3: (1.9820386365, -2.1490309973), 4: (1.61982258, -0.5433284509),
    5: (1.7811971347, -1.049758788), 6: (1.2749925358, 0.1433862776),
    7: (-0.4646735958, 0.7036672915), 8: (0.1067929329, -0.2603906494),
    9: (0.8431378211, -1.4711207032), 10: (0.5451378694, -0.950440448),
    11: (0.2422043369, -2.1509281876), 12: (-0.3208140931, -1.4622890209),
    13: (-1.024931433, -1.8261631093), 14: (0.3976427401, -3.3182460239),
    15: (1.7688738401, -4.2913797972), 16: (0.5566216815, -4.4124685519),
    17: (0.7638583209, -5.5214799082), 18: (1.9059720195, -6.0847698451),
    19: (-0.6641567436, -4.5522779125), 20: (-1.3730473208, -3.6135438978),
    21: (2.2407781942, -5.3107995687), 22: (1.3199387893, -6.2287630082),
    23: (-1.1969510913, -2.4748388435), 24: (2.3286467152, -3.2685722192),
}

AREA_OFFSET = {0: (-118.0, 35.5), 1: (-119.0, 35.2), 2: (-117.6, 35.2), 3: (-118.3, 37.1)}


def area_case(area, ppc):
    dlon, dlat = AREA_OFFSET[area]
    scale = 0.22
    base = 100 * area

    def bid(k):
        return base + k

    buses = [
        {"id": bid(int(b[0])), "name": f"bus{bid(int(b[0]))}",
         "lon": round(dlon + scale * LAYOUT[int(b[0])][0], 6),
         "lat": round(dlat + scale * LAYOUT[int(b[0])][1], 6)}
        for b in ppc["bus"]
    ]
    gens = [
        {"id": base + i + 1, "bus": bid(int(g[0])),
         "g_min": round(g[9] / 100.0, 6), "g_max": round(g[8] / 100.0, 6)}
        for i, g in enumerate(ppc["gen"])
    ]
    lines = [
        {"id": base + i + 1, "from": bid(int(br[0])), "to": bid(int(br[1])),
         "x": float(br[3]), "f_max": round(br[5] / 100.0, 6),
         "delta_min": -0.6, "delta_max": 0.6}
        for i, br in enumerate(ppc["branch"])
    ]
    loads = {bid(int(b[0])): round(b[2] / 100.0, 6) for b in ppc["bus"]}
    return buses, gens, lines, loads


def write(out, name, buses, gens, lines, loads):
    case = {"base_mva": 100.0, "buses": buses, "generators": gens, "lines": lines}
    (out / f"{name}.json").write_text(json.dumps(case, indent=1) + "\n")
    with open(out / f"{name}_nominal.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bus_id", "value_pu"])
        for b in buses:
            w.writerow([b["id"], loads.get(b["id"], 0.0)])


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    out.mkdir(parents=True, exist_ok=True)
    ppc = case24_ieee_rts()

    b, g, l, d = area_case(0, ppc)
    write(out, "rts24", b, g, l, d)

    buses, gens, lines, loads = [], [], [], {}
    for area in (1, 2, 3):
        b, g, l, d = area_case(area, ppc)
        buses += b
        gens += g
        lines += l
        loads.update(d)
    buses.append({"id": 325, "name": "bus325", "lon": -118.55, "lat": 36.55})
    ties = [(107, 203, 0.161), (113, 215, 0.075), (123, 217, 0.074),
            (121, 325, 0.097), (325, 323, 0.009), (223, 318, 0.104)]
    for k, (f, t, x) in enumerate(ties):
        lines.append({"id": 400 + k + 1, "from": f, "to": t, "x": x, "f_max": 5.0,
                      "delta_min": -0.6, "delta_max": 0.6})
    write(out, "rts73", buses, gens, lines, loads)


if __name__ == "__main__":
    main()
