#!/usr/bin/env python3
"""Regenerates the bundled desk fixture.

Two hourly state-vector files with 50 aircraft, US and CA registries, the
study polygon, land polygons, airspace volumes and one SRTM3 tile. Also
writes the expected organize counts, computed directly from the generated
rows, to reference/organize_oracle.tsv.

Output is deterministic: rerunning produces identical bytes.
"""

import calendar
import gzip
import json
import math
import os
import random
import struct

HERE = os.path.dirname(os.path.abspath(__file__))
RNG = random.Random(20200316)

# Study box; the polygon is this rectangle.
LAT0, LAT1, LON0, LON1 = 42.10, 42.90, -71.90, -71.10
# Land is everything west of this meridian inside the tile.
COAST_LON = -71.30
HOURS = [5, 6]
DAY = (2020, 3, 16)
KT = 0.514444
FT = 0.3048

HEADER = ("time,icao24,lat,lon,velocity,heading,vertrate,callsign,onground,alert,spi,"
          "squawk,baroaltitude,geoaltitude,lastposupdate,lastcontact")

CLASS_PROFILE = {
    # registry code, seats choices, speed kt, base altitude ft MSL, amplitude ft
    "FixedWingSingleEngine": ("4", [2, 4, 6], 110, 2500, 700),
    "FixedWingMultiEngine": ("5", [8, 19, 150], 230, 4200, 600),
    "Rotorcraft": ("6", [12, 14, 16], 95, 1500, 300),
    "Glider": ("1", [1, 2], 55, 3000, 800),
    "Balloon": ("2", [4], 8, 1500, 300),
    "Gyroplane": ("9", [2], 70, 1200, 200),
}
ORDER = (["FixedWingSingleEngine"] * 14 + ["FixedWingMultiEngine"] * 10 + ["Rotorcraft"] * 8
         + ["Glider"] * 3 + ["Balloon"] * 2 + ["Gyroplane"] * 2)


def hour_epoch(h):
    return calendar.timegm((DAY[0], DAY[1], DAY[2], h, 0, 0))


def write(path, data):
    path = os.path.join(HERE, path)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode, newline="" if mode == "w" else None) as f:
        f.write(data)


def make_aircraft():
    """40 registered aircraft in ORDER (A00C12 first) and 10 unregistered."""
    fleet = []
    used = set()
    fleet.append(dict(icao="a00c12", cls="Rotorcraft", seats=5))
    used.add(0xA00C12)
    for cls in ORDER[1:] + ["Rotorcraft"]:
        if len(fleet) == 40:
            break
        while True:
            a = RNG.randrange(0xA10000, 0xADFFFF)
            if a not in used:
                break
        used.add(a)
        fleet.append(dict(icao="%06x" % a, cls=cls, seats=RNG.choice(CLASS_PROFILE[cls][1])))
    for _ in range(10):
        while True:
            a = RNG.randrange(0xC00000, 0xC0FFFF)
            if a not in used:
                break
        used.add(a)
        cls = RNG.choice(["FixedWingSingleEngine", "FixedWingMultiEngine", "Rotorcraft"])
        fleet.append(dict(icao="%06x" % a, cls=cls, seats=None))
    return fleet


def registry(fleet):
    us = ["N-NUMBER,MODE S CODE HEX,TYPE AIRCRAFT,NO-SEATS,EXPIRATION DATE"]
    # The only 1-10 seat rotorcraft; they bound the range A00C12_A00D20.
    rows = [(f["icao"], CLASS_PROFILE[f["cls"]][0], f["seats"]) for f in fleet if f["seats"] is not None]
    rows += [("a00c80", "6", 4), ("a00d1f", "6", 6)]
    # Registered but never observed.
    for _ in range(150):
        a = RNG.randrange(0xA00000, 0xAFFFFF)
        code = RNG.choice(["1", "2", "4", "4", "4", "5", "5", "6", "9", "O"])
        # Keep the 1-10 seat rotorcraft bin to the exemplar range.
        seats = RNG.randrange(11, 40) if code == "6" else RNG.randrange(1, 250)
        rows.append(("%06x" % a, code, seats))
    seen = set()
    n = 0
    for hexa, code, seats in rows:
        if hexa in seen:
            continue
        seen.add(hexa)
        n += 1
        us.append("N%05d,%s,%s,%d,20230131" % (n, hexa.upper(), code, seats))
    us.append("N99998,ZZZZZZ,4,2,20230131")  # malformed address, skipped
    us.append("N99999,,5,4,20230131")  # empty address, skipped
    ca = ["Registration,Mode S Hex,Aircraft Category,Number of Seats,Expiry Date",
          # Same address as a US row; the later US expiry wins.
          "C-GAAA,%s,Helicopter,4,2021/06/30" % fleet[1]["icao"].upper(),
          "C-GAAB,C80001,Aeroplane single engine,4,2022/01/01"]
    return "\n".join(us) + "\n", "\n".join(ca) + "\n"


def track(f, hour, rng):
    """Samples every 10 s on an orbit. Returns dict rows (SI units)."""
    _, _, speed, base, amp = CLASS_PROFILE[f["cls"]]
    t0 = hour_epoch(hour)
    start = t0 + rng.randrange(0, 900, 10) + rng.choice([0, 3, 7])
    dur = rng.randrange(900, 2700, 10)
    end = min(start + dur, t0 + 3590)
    r_nm = rng.uniform(4.0, 12.0)
    clat = rng.uniform(42.35, 42.65)
    clon = rng.uniform(-71.65, -71.35)
    if f.get("edge"):
        clat, clon, r_nm = 42.80, -71.60, 10.0
    phase = rng.uniform(0, 2 * math.pi)
    omega = speed / 3600.0 / r_nm  # rad/s
    period = rng.uniform(600, 1500)
    out = []
    t = start
    while t <= end:
        dt = t - start
        ang = phase + omega * dt
        lat = clat + r_nm / 60.0 * math.sin(ang)
        lon = clon + r_nm / 60.0 * math.cos(ang) / math.cos(math.radians(clat))
        # Velocity direction d/dt (sin, cos) = (cos, -sin) in (north, east).
        heading = math.degrees(math.atan2(-math.sin(ang), math.cos(ang))) % 360.0
        alt_ft = base + amp * math.sin(2 * math.pi * dt / period)
        vr_fpm = amp * 2 * math.pi / period * math.cos(2 * math.pi * dt / period) * 60.0
        out.append(dict(time=t, icao=f["icao"], lat=lat, lon=lon, vel=speed * KT, hdg=heading,
                        vr=vr_fpm * FT / 60.0, baro=alt_ft * FT, geo=alt_ft * FT + 15.0,
                        lpu=t - 0.4, ground=False))
        t += 10
    return out


def fmt(x, nd):
    return "" if x is None else ("%." + str(nd) + "f") % x


def row_text(r):
    return ",".join([
        str(r["time"]), r["icao"], fmt(r["lat"], 5), fmt(r["lon"], 5), fmt(r["vel"], 3),
        fmt(r["hdg"], 2), fmt(r["vr"], 3), "TST%s" % r["icao"][-3:].upper(),
        "True" if r["ground"] else "False", "False", "False", "1200",
        fmt(r["baro"], 2), fmt(r["geo"], 2), fmt(r["lpu"], 1), "%.1f" % (r["time"] + 0.6),
    ])


def in_box(lat, lon):
    return LAT0 < lat < LAT1 and LON0 < lon < LON1


def complete(r):
    return (r["lat"] is not None and r["lon"] is not None
            and (r["baro"] is not None or r["geo"] is not None) and r["time"] > 0)


def hour_rows(fleet, hour):
    rng = random.Random(1000 + hour)
    rows = []
    for i, f in enumerate(fleet):
        # Every aircraft flies in at least one hour; a third fly in both.
        if not (i % 3 == 0 or (i % 2 == 0) == (hour == 5)):
            continue
        rows.extend(track(f, hour, rng))
    return rows


def perturb(rows, hour, fleet):
    """Applies the fixture's defects. Returns (rows, malformed_lines)."""
    rng = random.Random(77 + hour)
    by = {}
    for r in rows:
        by.setdefault(r["icao"], []).append(r)
    icaos = sorted(by)
    # Altitude spikes.
    for a in icaos[1:4]:
        mid = by[a][len(by[a]) // 2]
        mid["baro"] += 900.0
        mid["geo"] += 900.0
    # A transponder speed glitch above every class ceiling.
    glitch = by[icaos[4]]
    glitch[len(glitch) // 2]["vel"] = 420.0
    # A five minute gap in two tracks.
    for a in icaos[5:7]:
        tr = by[a]
        k = len(tr) // 3
        for r in tr[k:k + 30]:
            r["drop"] = True
    # Missing rates in one track, filled from gradients downstream.
    for r in by[icaos[8]]:
        r["vel"] = r["hdg"] = r["vr"] = None
    # A pass below the terrain surface.
    for r in by[icaos[9]]:
        r["baro"] *= 0.15
        r["geo"] = r["baro"] + 5.0
    # Short track: only six samples survive.
    for r in by[icaos[10]][6:]:
        r["drop"] = True
    rows = [r for r in rows if not r.get("drop")]
    # Incomplete reports.
    picks = rng.sample(range(len(rows)), 30)
    for n, k in enumerate(picks):
        if n % 3 == 0:
            rows[k]["lat"] = None
        elif n % 3 == 1:
            rows[k]["baro"] = rows[k]["geo"] = None
        else:
            rows[k]["lon"] = None
    # Duplicates: same aircraft and time, older position update.
    dups = []
    for k in rng.sample(range(len(rows)), 25):
        d = dict(rows[k])
        d["lpu"] = d["lpu"] - 1.0
        dups.append(d)
    rows.extend(dups)
    rows.sort(key=lambda r: (r["time"], r["icao"]))
    malformed = [
        "%d,zz12g4,42.5,-71.5,50,90,0,BAD,False,False,False,1200,300,310,1,1" % hour_epoch(hour),
        "%d,a00c12,42.5,-71.5,50,90,0,BAD,maybe,False,False,1200,300,310,1,1" % hour_epoch(hour),
        "%d,a00c12,42.5" % hour_epoch(hour),
        "notatime,a00c12,42.5,-71.5,50,90,0,BAD,False,False,False,1200,300,310,1,1",
        "%d,a00c12,forty,-71.5,50,90,0,BAD,False,False,False,1200,300,310,1,1" % hour_epoch(hour),
    ]
    return rows, malformed


def oracle(rows, malformed, hour):
    raw = len(rows)
    ok = [r for r in rows if complete(r)]
    q = raw - len(ok)
    best = {}
    for r in ok:
        k = (r["icao"], r["time"])
        if k not in best or r["lpu"] > best[k]["lpu"]:
            best[k] = r
    dup = len(ok) - len(best)
    kept = [r for r in best.values() if in_box(round(r["lat"], 5), round(r["lon"], 5))]
    geo = len(best) - len(kept)
    files = len({r["icao"] for r in kept})
    return "2020-03-16_%02d\t%d\t%d\t%d\t%d\t%d\t%d\t%d" % (
        hour, raw, len(malformed), q + dup, dup, geo, len(kept), files)


def srtm_tile():
    n = 1201
    out = bytearray()
    for r in range(n):
        base = 100.0 + 80.0 * math.sin(r / 170.0)
        for c in range(n):
            v = int(round(base + 0.12 * c + 25.0 * math.cos(c / 90.0)))
            out += struct.pack(">h", v)
    return gzip.compress(bytes(out), compresslevel=9, mtime=0)


def ring(lat0, lat1, lon0, lon1):
    return [[lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]]


def circle(clat, clon, r_nm, n=24):
    pts = []
    for k in range(n):
        a = 2 * math.pi * k / n
        pts.append([round(clon + r_nm / 60 * math.cos(a) / math.cos(math.radians(clat)), 6),
                    round(clat + r_nm / 60 * math.sin(a), 6)])
    pts.append(pts[0])
    return pts


def feature(coords, props):
    return {"type": "Feature", "properties": props, "geometry": {"type": "Polygon", "coordinates": [coords]}}


def main():
    fleet = make_aircraft()
    fleet[12]["edge"] = True  # partly leaves the study box
    us, ca = registry(fleet)
    write("registry/2020/US.csv", us)
    write("registry/2020/CA.csv", ca)

    oracle_lines = ["hour\trawCount\tmalformed\tqualityDropped\tduplicates\tgeoDropped\torganizedCount\tfilesWritten"]
    for h in HOURS:
        rows, bad = perturb(hour_rows(fleet, h), h, fleet)
        lines = [HEADER] + [row_text(r) for r in rows]
        # Malformed lines are spread through the file.
        for k, b in enumerate(bad):
            lines.insert(1 + (k + 1) * len(rows) // (len(bad) + 1), b)
        text = "\n".join(lines) + "\n"
        write("raw/2020-03-16/states_2020-03-16-%02d.csv.gz" % h, gzip.compress(text.encode(), 6, mtime=0))
        oracle_lines.append(oracle(rows, bad, h))
    write("reference/organize_oracle.tsv", "\n".join(oracle_lines) + "\n")

    fc = lambda feats: json.dumps({"type": "FeatureCollection", "features": feats}, indent=1) + "\n"
    write("polygon.geojson", fc([feature(ring(LAT0, LAT1, LON0, LON1), {"name": "study area"})]))
    write("land.geojson", fc([feature(ring(41.9, 43.1, -72.1, COAST_LON), {"name": "mainland"})]))
    write("airspace.geojson", fc([
        feature(circle(42.5, -71.5, 12.0), {"class": "B", "floor_ft": 0, "ceiling_ft": 7000}),
        feature(circle(42.7, -71.7, 6.0), {"class": "C", "floor_ft": 0, "ceiling_ft": 4000}),
        feature(circle(42.3, -71.7, 4.0), {"class": "D", "floor_ft": 0, "ceiling_ft": 2500}),
    ]))
    write("terrain/srtm3/N42W072.hgt.gz", srtm_tile())
    with open(os.path.join(HERE, "reference/fleet.tsv"), "w") as f:
        f.write("icao24\tclass\tseats\n")
        for a in fleet:
            f.write("%s\t%s\t%s\n" % (a["icao"].upper(), a["cls"] if a["seats"] else "Unknown", a["seats"] or ""))


if __name__ == "__main__":
    main()
