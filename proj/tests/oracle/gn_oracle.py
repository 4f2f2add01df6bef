#!/usr/bin/env python3
"""Independent high-precision evaluation of the QoT goldens.

Works from the topology/scenario JSON files and the closed forms only; shares
no code with the C++ library. Writes tests/data/goldens.json, or with --check
compares a fresh evaluation against the frozen file.

    python3 tests/oracle/gn_oracle.py            # regenerate
    python3 tests/oracle/gn_oracle.py --check    # verify frozen values
"""

import argparse
import itertools
import json
import os
import sys

import mpmath as mp

mp.mp.dps = 40

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.normpath(os.path.join(HERE, "..", ".."))
DATA = os.path.join(ROOT, "data")
GOLDENS = os.path.join(ROOT, "tests", "data", "goldens.json")

H = mp.mpf("6.62607015e-34")
C = mp.mpf(299792458)
RATES = {100: (32, 10), 400: (64, 17), 800: (96, 20)}  # GBd, required GSNR dB


def lin(db):
    return mp.power(10, mp.mpf(db) / 10)


def db(x):
    return 10 * mp.log10(x)


def ase_mw(gain_db, nf_db, f_thz, bref_ghz):
    return H * mp.mpf(f_thz) * mp.mpf(10) ** 12 * lin(nf_db) * (lin(gain_db) - 1) \
        * mp.mpf(bref_ghz) * mp.mpf(10) ** 9 * 1000


def nli_mw(span, comb, target):
    """Incoherent GN: SCI plus one XCI term per interferer, all in SI units."""
    alpha = mp.mpf(span["att"]) * mp.log(10) / 10 / 1000
    length = mp.mpf(span["len"]) * 1000
    l_eff = (1 - mp.exp(-alpha * length)) / alpha
    l_a = 1 / alpha
    gamma = mp.mpf(span["gamma"]) / 1000
    f_cut, rs_cut, p_cut = comb[target]
    f_cut = mp.mpf(f_cut) * mp.mpf(10) ** 12
    lam = C / f_cut
    beta2 = mp.mpf(span["disp"]) * mp.mpf(10) ** -6 * lam ** 2 / (2 * mp.pi * C)
    b_cut = mp.mpf(rs_cut) * mp.mpf(10) ** 9
    g_cut = p_cut / 1000 / b_cut
    acc = 0
    for j, (f, rs, p) in enumerate(comb):
        b = mp.mpf(rs) * mp.mpf(10) ** 9
        g = p / 1000 / b
        k = mp.pi ** 2 * l_a * beta2
        if j == target:
            psi = mp.asinh(k * b_cut ** 2 / 2)
        else:
            df = mp.mpf(f) * mp.mpf(10) ** 12 - f_cut
            psi = mp.asinh(k * b_cut * (df + b / 2)) - mp.asinh(k * b_cut * (df - b / 2))
        acc += g ** 2 * psi
    g_nli = mp.mpf(8) / 27 * (gamma * l_eff) ** 2 / (mp.pi * beta2 * l_a) * g_cut * acc
    return g_nli * b_cut * 1000


def load_topology(path):
    with open(path) as fh:
        t = json.load(fh)
    fib = t["defaults"]["fiber"]
    amp = t["defaults"]["amplifier"]
    omses = []
    for o in t["omses"]:
        spans = []
        for s in o["spans"]:
            sp = {
                "len": s["length_km"],
                "att": s.get("attenuation_db_per_km", fib["attenuation_db_per_km"]),
                "disp": s.get("dispersion_ps_nm_km", fib["dispersion_ps_nm_km"]),
                "gamma": s.get("gamma_per_w_km", fib["gamma_per_w_km"]),
                "cin": s.get("connector_loss_in_db", fib["connector_loss_in_db"]),
                "cout": s.get("connector_loss_out_db", fib["connector_loss_out_db"]),
                "nf": s.get("amplifier", {}).get("noise_figure_db", amp["noise_figure_db"]),
            }
            # nominal amplifier makes the span transparent
            sp["gain"] = mp.mpf(sp["cin"]) + mp.mpf(sp["att"]) * mp.mpf(sp["len"]) + mp.mpf(sp["cout"])
            if "gain_db" in s.get("amplifier", {}):
                sp["gain"] = mp.mpf(s["amplifier"]["gain_db"])
            spans.append(sp)
        omses.append({"ends": tuple(o["endpoints"]), "spans": spans})
    return omses


def hops(omses, path):
    out = []
    for x, y in zip(path, path[1:]):
        for i, o in enumerate(omses):
            if o["ends"] == (x, y):
                out.append((i, False))
                break
            if o["ends"] == (y, x):
                out.append((i, True))
                break
        else:
            raise ValueError("no OMS %d-%d" % (x, y))
    return out


def visits(omses, path):
    out = []
    for i, rev in hops(omses, path):
        spans = omses[i]["spans"]
        order = range(len(spans) - 1, -1, -1) if rev else range(len(spans))
        for k in order:
            sp = dict(spans[k])
            if rev:
                sp["cin"], sp["cout"] = sp["cout"], sp["cin"]
            out.append(((i, k, rev), sp))
    return out


def network_gsnr(omses, services):
    """services: list of (id, path, f_thz, rate, launch_dbm). Zero tilt."""
    vs = [visits(omses, s[1]) for s in services]
    combs, pos = {}, []
    for s, v in zip(services, vs):
        p = lin(s[4])
        mine = []
        for key, sp in v:
            p_in = p * lin(-sp["cin"])
            comb = combs.setdefault(key, [])
            mine.append(len(comb))
            comb.append((s[2], RATES[s[3]][0], p_in))
            p = p_in * lin(-(mp.mpf(sp["att"]) * sp["len"] + sp["cout"])) * lin(sp["gain"])
        pos.append(mine)
    out = {}
    for s, v, mine in zip(services, vs, pos):
        sig, ase, nli = lin(s[4]), mp.mpf(0), mp.mpf(0)
        for (key, sp), k in zip(v, mine):
            ci = lin(-sp["cin"])
            sig, ase, nli = sig * ci, ase * ci, nli * ci
            nli += nli_mw(sp, combs[key], k)
            f = lin(-(mp.mpf(sp["att"]) * sp["len"] + sp["cout"])) * lin(sp["gain"])
            sig, ase, nli = sig * f, ase * f, nli * f
            ase += ase_mw(sp["gain"], sp["nf"], s[2], "12.5")
        ase_ch = ase * RATES[s[3]][0] / mp.mpf("12.5")
        out[s[0]] = min(mp.mpf(60), db(sig / (ase_ch + nli)))
    return out


def all_simple_paths(omses, src, dst):
    adj = {}
    length = {}
    for o in omses:
        a, b = o["ends"]
        km = sum(mp.mpf(s["len"]) for s in o["spans"])
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
        length[(a, b)] = length[(b, a)] = km
    found = []

    def walk(node, seen, acc):
        if node == dst:
            found.append((list(seen), acc))
            return
        for nxt in sorted(adj[node]):
            if nxt not in seen:
                walk(nxt, seen + [nxt], acc + length[(node, nxt)])

    walk(src, [src], mp.mpf(0))
    found.sort(key=lambda p: (p[1], len(p[0]), p[0]))
    return found


def first_fit(slice_count, width, occupied):
    for start in range(slice_count - width + 1):
        if all(s not in occupied for s in range(start, start + width)):
            return start
    return None


def evaluate():
    omses = load_topology(os.path.join(DATA, "default_topology.json"))
    g = {}
    g["ase_g20_nf5_193p1_12p5_mw"] = float(ase_mw(20, 5, "193.1", "12.5"))

    span80 = {"len": 80, "att": "0.2", "disp": "16.7", "gamma": "1.3"}
    g["nli_80km_single_64gbd_0dbm_193p1_mw"] = float(nli_mw(span80, [("193.1", 64, mp.mpf(1))], 0))

    single = [("probe", [5, 6, 1], "193.05", 400, 0)]
    g["gsnr_561_single_400g_193p05_db"] = float(network_gsnr(omses, single)["probe"])

    with open(os.path.join(DATA, "scenarios", "case3.json")) as fh:
        case3 = json.load(fh)
    roster = [(s["id"], s["path"], str(s["center_thz"]), s["rate_gbps"], s["launch_power_dbm"])
              for s in case3["services"]]

    # first fit along 5-6-1 over the two OMSes it crosses
    width = 8
    occupied = set()
    base, step = mp.mpf("191.0"), mp.mpf("0.0125")
    path_hops = set(i for i, _ in hops(omses, [5, 6, 1]))
    for s in case3["services"]:
        if set(i for i, _ in hops(omses, s["path"])) & path_hops:
            start = int(mp.nint((mp.mpf(str(s["center_thz"])) - base) / step - width / 2))
            occupied.update(range(start, start + width))
    start = first_fit(480, width, occupied)
    center = base + (start + mp.mpf(width) / 2) * step
    g["case3_first_fit_start_slice"] = start
    g["case3_first_fit_center_thz"] = float(center)

    roster_after = roster + [("new800", [5, 6, 1], mp.nstr(center, 6), 800, 0)]
    after = network_gsnr(omses, roster_after)
    before = network_gsnr(omses, roster)
    g["case3_800g_gsnr_db"] = float(after["new800"])
    g["case3_800g_margin_db"] = float(after["new800"] - RATES[800][1])
    g["case3_worst_nominal_degradation_db"] = float(max(before[k] - after[k] for k in before))

    for case in ("case1", "case2", "case3"):
        with open(os.path.join(DATA, "scenarios", case + ".json")) as fh:
            sc = json.load(fh)
        r = [(x["id"], x["path"], str(x["center_thz"]), x["rate_gbps"], x["launch_power_dbm"])
             for x in sc["services"]]
        g[case + "_nominal_gsnr_db"] = {k: float(v) for k, v in network_gsnr(omses, r).items()}

    paths = all_simple_paths(omses, 5, 1)
    g["ksp_5_1"] = [{"nodes": p, "length_km": float(l)} for p, l in paths]
    return g


def close(a, b):
    if isinstance(a, list):
        return len(a) == len(b) and all(close(x, y) for x, y in zip(a, b))
    if isinstance(a, dict):
        return a.keys() == b.keys() and all(close(a[k], b[k]) for k in a)
    if isinstance(a, float):
        return abs(a - b) <= 1e-12 * max(1.0, abs(a))
    return a == b


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--check", action="store_true")
    ap.add_argument("--out", default=GOLDENS)
    args = ap.parse_args()
    g = evaluate()
    if args.check:
        with open(args.out) as fh:
            frozen = json.load(fh)
        bad = [k for k in g if k not in frozen or not close(g[k], frozen[k])]
        for k in bad:
            print("mismatch %s: fresh %r frozen %r" % (k, g[k], frozen.get(k)))
        print("oracle goldens %s" % ("ok" if not bad else "STALE"))
        return 1 if bad else 0
    with open(args.out, "w") as fh:
        json.dump(g, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(g, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
