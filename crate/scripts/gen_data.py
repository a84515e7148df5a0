#!/usr/bin/env python3
"""Regenerates the synthetic sample inputs under data/.

Everything here is synthetic: vendor names, prices, coordinates and the
64-node tree are made up. Output is deterministic.
"""
import csv
import json
import math
import random
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "data"
LAT0, LON0 = 44.50, -90.20


def offset(lat, lon, dist_m, bearing_deg):
    r = 6_371_000.0
    b = math.radians(bearing_deg)
    dlat = dist_m * math.cos(b) / r
    dlon = dist_m * math.sin(b) / (r * math.cos(math.radians(lat)))
    return round(lat + math.degrees(dlat), 6), round(lon + math.degrees(dlon), 6)


def prices(rng):
    alpha, gamma = 0.002, 250.0
    vendors = ["SynthNet", "Acme Radio (synthetic)", "Example Wireless"]
    caps = [100, 150, 200, 250, 300, 400, 450, 500, 600, 700, 750, 800, 900, 1000,
            1200, 1300, 1500, 1700, 1800, 2000, 2200, 2500, 2700, 3000, 3200, 3500,
            4000, 4200, 4500, 5000]
    with open(DATA / "prices.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["vendor", "model", "capacity_mbps", "price_usd_pair"])
        for i, c in enumerate(caps):
            noise = 1.0 + rng.uniform(-0.02, 0.02)
            price = (alpha * c * c + gamma) * noise
            v = vendors[i % len(vendors)]
            w.writerow([v, f"{v.split()[0][:4].upper()}-{c}", c, f"{price:.2f}"])


def tree64(rng):
    nodes = [{"id": "gw", "role": "gateway", "lat": LAT0, "lon": LON0}]
    links = []
    coords = {"gw": (LAT0, LON0)}

    def link(a, b, cap):
        links.append({"a": a, "b": b, "capacity_mbps": cap, "delay_ms": 0.1})

    for i in range(3):
        t = f"t{i}"
        coords[t] = offset(LAT0, LON0, 6000 + rng.uniform(-500, 500), i * 120 + rng.uniform(-10, 10))
        nodes.append({"id": t, "role": "backhaul", "lat": coords[t][0], "lon": coords[t][1]})
        link("gw", t, 1400.0)
        for j in range(4):
            h = f"h{i}{j}"
            coords[h] = offset(*coords[t], 2500 + rng.uniform(-300, 300), i * 120 - 60 + j * 40 + rng.uniform(-5, 5))
            nodes.append({"id": h, "role": "backhaul", "lat": coords[h][0], "lon": coords[h][1]})
            link(t, h, 400.0)
            for e in range(4):
                c = f"c{i}{j}{e}"
                coords[c] = offset(*coords[h], 900 + rng.uniform(-100, 100), i * 120 - 60 + j * 40 - 30 + e * 20)
                nodes.append({"id": c, "role": "edge", "lat": coords[c][0], "lon": coords[c][1]})
                link(h, c, 100.0)
    with open(DATA / "tree64.json", "w") as f:
        json.dump({"nodes": nodes, "links": links}, f, indent=1)
        f.write("\n")

    # candidate shortcuts: gateway to second tier, between neighbouring
    # tiers, and between neighbouring hubs
    cands = []
    for i in range(3):
        for j in range(4):
            cands.append(("gw", f"h{i}{j}"))
    for i in range(3):
        cands.append((f"t{i}", f"t{(i + 1) % 3}"))
        for j in range(3):
            cands.append((f"h{i}{j}", f"h{i}{j + 1}"))
        cands.append((f"t{i}", f"h{(i + 1) % 3}0"))
    rng.shuffle(cands)
    with open(DATA / "tree64-candidates.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["a", "b"])
        w.writerows(cands)


def coords50(rng):
    rows = []
    # 30 sites plus 20 extra towers within 400 m of one of them
    sites = [offset(LAT0, LON0, rng.uniform(1500, 15000), rng.uniform(0, 360)) for _ in range(30)]
    for s in sites:
        rows.append(s)
    while len(rows) < 50:
        base = sites[rng.randrange(len(sites))]
        rows.append(offset(*base, rng.uniform(50, 400), rng.uniform(0, 360)))
    with open(DATA / "coords50.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "lat", "lon"])
        for i, (lat, lon) in enumerate(rows):
            w.writerow([f"p{i:02d}", lat, lon])


def fan(name, delays, loss):
    nodes = [{"id": "s", "role": "gateway"}, {"id": "d", "role": "edge"}]
    links = []
    for i, d in enumerate(delays):
        m = f"m{i}"
        nodes.append({"id": m, "role": "backhaul"})
        links.append({"a": "s", "b": m, "capacity_mbps": 10.0, "loss": loss})
        links.append({"a": m, "b": "d", "capacity_mbps": 10.0, "delay_ms": d})
    with open(DATA / name, "w") as f:
        json.dump({"nodes": nodes, "links": links}, f, indent=1)
        f.write("\n")


def session(mode, paths, **extra):
    s = {"ingress": "s", "egress": "d", "mode": mode,
         "paths": [["s", f"m{p}", "d"] for p in paths]}
    s.update(extra)
    return s


def experiments():
    probe = {"payload_size": 96, "gap_us": 1000, "count": 500}
    exps = {
        "udp-experiment.json": {
            "topology": "udp-topology.json", "seed": 1,
            "runs": [{"name": "single-path", "kind": "probe", "iterations": 10, "probe": probe,
                      "session": session(0, [0])}],
        },
        "mirror-experiment.json": {
            "topology": "udp-topology.json", "seed": 1,
            "runs": [{"name": "mirror-k5", "kind": "probe", "iterations": 10, "probe": probe,
                      "session": session(1, range(5))}],
        },
        "delay-experiment.json": {
            "topology": "udp-topology.json", "seed": 1,
            "runs": [
                {"name": "single-500ms", "kind": "probe", "iterations": 10, "probe": probe,
                 "session": session(0, [0])},
                {"name": "mirror-k5", "kind": "probe", "iterations": 10, "probe": probe,
                 "session": session(1, range(5))},
            ],
        },
        "goodput-experiment.json": {
            "topology": "fan5-topology.json", "seed": 1,
            "runs": [
                {"name": "mirror-k5", "kind": "sweep", "loss_points": [0, 0.05, 0.10, 0.15, 0.20],
                 "transfer_bytes": 5_000_000, "payload_size": 1400, "session": session(1, range(5))},
                {"name": "stripe-k1", "kind": "sweep", "loss_points": [0, 0.05, 0.10, 0.15, 0.20],
                 "transfer_bytes": 5_000_000, "payload_size": 1400, "session": session(0, [0])},
                {"name": "arq-k1", "kind": "baseline", "loss_points": [0, 0.05, 0.10, 0.15, 0.20],
                 "transfer_bytes": 5_000_000, "arq": {"payload_size": 1400, "window": 64},
                 "session": session(0, [0])},
            ],
        },
        "parity-experiment.json": {
            "topology": "fan5-topology.json", "seed": 1,
            "runs": [{"name": "rotating-k5-x8", "kind": "probe", "iterations": 3, "loss": 0.05,
                      "probe": {"payload_size": 512, "gap_us": 1000, "count": 2000},
                      "session": session(5, range(5), X=8)}],
        },
    }
    for name, body in exps.items():
        with open(DATA / name, "w") as f:
            json.dump(body, f, indent=1)
            f.write("\n")


def corpus(rng, count=60):
    out = DATA / "corpus"
    out.mkdir(exist_ok=True)
    for g in range(count):
        n = rng.randint(4, 10)
        ids = [f"v{i}" for i in range(n)]
        edges = set(rng.sample(ids[1:], rng.randint(1, min(3, n - 1))))
        nodes = [{"id": ids[0], "role": "gateway"}]
        nodes += [{"id": v, "role": "edge" if v in edges else "backhaul"} for v in ids[1:]]
        links = []
        for i in range(1, n):
            links.append((ids[rng.randrange(i)], ids[i]))
        for _ in range(rng.randint(0, n)):
            a, b = rng.sample(ids, 2)
            links.append((a, b))
        body = {"nodes": nodes,
                "links": [{"a": a, "b": b, "capacity_mbps": float(rng.randint(1, 20) * 10)} for a, b in links]}
        with open(out / f"g{g:02d}.json", "w") as f:
            json.dump(body, f)
            f.write("\n")


def main():
    DATA.mkdir(exist_ok=True)
    prices(random.Random(2024))
    tree64(random.Random(64))
    coords50(random.Random(50))
    fan("udp-topology.json", [500.0, 18.0, 18.0, 18.0, 18.0], 0.05)
    fan("fan5-topology.json", [18.0] * 5, 0.0)
    experiments()
    corpus(random.Random(10))


if __name__ == "__main__":
    main()
