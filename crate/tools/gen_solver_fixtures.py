"""Writes the solver benchmark scenes under fixtures/solver.

Each scene starts from a valid layout (the witness): objects are placed
without overlap on the floor or on top of surface furniture, then explicit
constraints that hold in that layout are sampled. The program never fixes
positions, so the solver has to rediscover a valid arrangement.
"""

import json
import random
import sys
from pathlib import Path

FLOOR = {
    "bed": (2.0, 0.5, 1.6, False),
    "sofa": (2.0, 0.85, 0.9, False),
    "desk": (1.2, 0.75, 0.6, True),
    "table": (1.4, 0.75, 0.8, True),
    "dresser": (1.0, 0.9, 0.5, True),
    "bookshelf": (0.9, 1.8, 0.35, False),
    "wardrobe": (1.2, 2.0, 0.6, False),
    "armchair": (0.8, 0.9, 0.8, False),
    "chair": (0.5, 0.9, 0.5, False),
    "nightstand": (0.45, 0.55, 0.4, True),
    "tv_stand": (1.5, 0.5, 0.45, True),
    "plant": (0.4, 1.1, 0.4, False),
    "floor_lamp": (0.35, 1.6, 0.35, False),
    "ottoman": (0.6, 0.45, 0.6, False),
    "cabinet": (0.8, 0.9, 0.45, True),
}
SMALL = {
    "lamp": (0.25, 0.45, 0.25),
    "vase": (0.15, 0.3, 0.15),
    "books": (0.25, 0.12, 0.2),
    "monitor": (0.55, 0.4, 0.2),
    "clock": (0.25, 0.25, 0.1),
    "bowl": (0.3, 0.12, 0.3),
}
COLORS = ["white", "black", "grey", "oak brown", "navy", "beige", "green", "red"]
MATERIALS = ["wood", "metal", "fabric", "leather", "glass", "ceramic"]
GAP = 0.12


def r2(v):
    return round(v, 3)


class Obj:
    def __init__(self, oid, cat, dims, region):
        self.id, self.cat, self.dims, self.region = oid, cat, dims, region
        self.pos = None
        self.yaw = 0
        self.support = None

    def half(self):
        w, _, d = self.dims
        return (d / 2, w / 2) if self.yaw in (90, 270) else (w / 2, d / 2)

    def rect(self):
        hx, hz = self.half()
        x, _, z = self.pos
        return (x - hx, x + hx, z - hz, z + hz)


def overlaps(a, b, gap):
    return not (a[1] + gap <= b[0] or b[1] + gap <= a[0] or a[3] + gap <= b[2] or b[3] + gap <= a[2])


def place_floor(rng, obj, room, placed):
    x0, z0, x1, z1 = room["bounds"]
    for _ in range(2000):
        obj.yaw = rng.choice([0, 90, 180, 270])
        hx, hz = obj.half()
        if x1 - x0 < 2 * hx + 2 * GAP or z1 - z0 < 2 * hz + 2 * GAP:
            continue
        x = r2(rng.uniform(x0 + hx + GAP, x1 - hx - GAP))
        z = r2(rng.uniform(z0 + hz + GAP, z1 - hz - GAP))
        obj.pos = (x, r2(obj.dims[1] / 2), z)
        if all(not overlaps(obj.rect(), p.rect(), GAP) for p in placed if p.region == obj.region and p.support is None):
            return True
    return False


def place_on(rng, obj, base, placed):
    bx0, bx1, bz0, bz1 = base.rect()
    top = base.pos[1] + base.dims[1] / 2
    for _ in range(500):
        obj.yaw = rng.choice([0, 180]) if base.yaw in (0, 180) else rng.choice([90, 270])
        hx, hz = obj.half()
        if bx1 - bx0 < 2 * hx + 0.02 or bz1 - bz0 < 2 * hz + 0.02:
            return False
        x = r2(rng.uniform(bx0 + hx + 0.01, bx1 - hx - 0.01))
        z = r2(rng.uniform(bz0 + hz + 0.01, bz1 - hz - 0.01))
        obj.pos = (x, r2(top + obj.dims[1] / 2), z)
        obj.support = base.id
        if all(not overlaps(obj.rect(), p.rect(), 0.02) for p in placed if p.support == base.id):
            return True
    return False


def build_scene(index, n, n_explicit, two_rooms, rng):
    rooms = []
    area = 4.5 * n
    w = r2(max(3.5, min(8.0, (area * 1.3) ** 0.5)))
    d = r2(max(3.0, area / w))
    if two_rooms:
        rooms.append({"id": "living", "bounds": (0.0, 0.0, w, d)})
        rooms.append({"id": "study", "bounds": (w, 0.0, w + 4.0, d)})
    else:
        rooms.append({"id": "room", "bounds": (0.0, 0.0, w, d)})

    objs = []
    counts = {}

    def new_id(cat):
        counts[cat] = counts.get(cat, 0) + 1
        return cat if counts[cat] == 1 else f"{cat}_{counts[cat]}"

    n_small = max(1, n // 4)
    floor_cats = list(FLOOR)
    while True:
        objs.clear()
        counts.clear()
        ok = True
        for i in range(n - n_small):
            cat = rng.choice(floor_cats)
            room = rooms[i % len(rooms)] if two_rooms else rooms[0]
            w_, h_, d_, _ = FLOOR[cat]
            o = Obj(new_id(cat), cat, (w_, h_, d_), room["id"])
            if not place_floor(rng, o, room, objs):
                ok = False
                break
            objs.append(o)
        surfaces = [o for o in objs if FLOOR[o.cat][3]]
        if ok and not surfaces:
            ok = False
        if ok:
            for _ in range(n_small):
                cat = rng.choice(list(SMALL))
                base = rng.choice(surfaces)
                o = Obj(new_id(cat), cat, SMALL[cat], base.region)
                if not place_on(rng, o, base, objs):
                    ok = False
                    break
                objs.append(o)
        if ok:
            break

    by_id = {o.id: o for o in objs}
    asserts = []
    variables = []
    allow = []

    def px(o):
        return o.pos[0]

    def pz(o):
        return o.pos[2]

    def order(axis):
        a, b = rng.sample(objs, 2)
        va, vb = (px(a), px(b)) if axis == "x" else (pz(a), pz(b))
        if abs(va - vb) < 0.25:
            return None
        if va > vb:
            a, b = b, a
        return f"assert {a.id}.pos.{axis} < {b.id}.pos.{axis};"

    def near():
        a, b = rng.sample(objs, 2)
        dx, dz = abs(px(a) - px(b)), abs(pz(a) - pz(b))
        if dx > 2.5 or dz > 2.5:
            return None
        lx, lz = r2(dx + 0.6), r2(dz + 0.6)
        return (
            f"assert {a.id}.pos.x - {b.id}.pos.x < {lx} && {b.id}.pos.x - {a.id}.pos.x < {lx}"
            f" && {a.id}.pos.z - {b.id}.pos.z < {lz} && {b.id}.pos.z - {a.id}.pos.z < {lz};"
        )

    def on_top():
        stacked = [o for o in objs if o.support and o.id not in used_stack]
        if not stacked:
            return None
        o = rng.choice(stacked)
        used_stack.add(o.id)
        b = by_id[o.support]
        return (
            f"assert {o.id}.pos.y > {b.id}.pos.y && {o.id}.pos.x - {b.id}.pos.x < 0.8 && {b.id}.pos.x - {o.id}.pos.x < 0.8"
            f" && {o.id}.pos.z - {b.id}.pos.z < 0.8 && {b.id}.pos.z - {o.id}.pos.z < 0.8;"
        )

    def facing():
        o = rng.choice([o for o in objs if o.support is None])
        return f"assert {o.id}.rot.y = {o.yaw};"

    def wall():
        o = rng.choice([o for o in objs if o.support is None])
        room = next(r for r in rooms if r["id"] == o.region)
        x0, z0, x1, z1 = room["bounds"]
        side = rng.choice(["x<", "x>", "z<", "z>"])
        if side == "x<":
            return f"assert {o.id}.pos.x < {r2(px(o) + 0.5)};"
        if side == "x>":
            return f"assert {o.id}.pos.x > {r2(px(o) - 0.5)};"
        if side == "z<":
            return f"assert {o.id}.pos.z < {r2(pz(o) + 0.5)};"
        return f"assert {o.id}.pos.z > {r2(pz(o) - 0.5)};"

    def either():
        o = rng.choice(objs)
        room = next(r for r in rooms if r["id"] == o.region)
        x0, z0, x1, z1 = room["bounds"]
        mid = r2((x0 + x1) / 2)
        if px(o) < mid:
            return f"assert {o.id}.pos.x < {mid} || {o.id}.pos.z > {r2(z1 + 1)};"
        return f"assert {o.id}.pos.z < {r2(z0 - 1)} || {o.id}.pos.x > {mid};"

    def negated():
        a, b = rng.sample(objs, 2)
        if abs(pz(a) - pz(b)) < 0.25:
            return None
        if pz(a) < pz(b):
            a, b = b, a
        return f"assert !({a.id}.pos.z < {b.id}.pos.z);"

    def gap_var():
        a, b = rng.sample([o for o in objs if o.support is None], 2)
        if px(a) > px(b):
            a, b = b, a
        g = r2(max(0.0, px(b) - px(a) - 0.4))
        name = f"gap{len(variables) // 2 + 1}"
        variables.append(f"Number {name};")
        variables.append(f"{name} <- {g};")
        return f"assert {b.id}.pos.x - {a.id}.pos.x >= {name};"

    def membership():
        o = rng.choice(objs)
        return f"assert inside({o.id}, {o.region});"

    def low():
        o = rng.choice([o for o in objs if o.support is None])
        return f"assert {o.id}.pos.y < {r2(o.pos[1] + 0.3)};"

    used_stack = set()
    makers = [lambda: order("x"), lambda: order("z"), near, on_top, facing, wall, either, negated, gap_var, membership, low]
    weights = [3, 3, 3, 3, 1, 2, 1, 1, 1, 1, 1]
    seen = set()
    guard = 0
    while len(asserts) < n_explicit and guard < 10000:
        guard += 1
        s = rng.choices(makers, weights)[0]()
        if s and s not in seen:
            seen.add(s)
            asserts.append(s)

    colors = {o.id: rng.choice(COLORS) for o in objs}
    lines = [f"// benchmark scene {index:02d}: {n} objects"]
    lines += [f"region {r['id']};" for r in rooms]
    lines += [f"object {o.id};" for o in objs]
    for o in objs:
        if rng.random() < 0.4:
            lines.append(f'{o.id}.color <- "{colors[o.id]}";')
    lines += variables
    lines += asserts
    program = "\n".join(lines) + "\n"

    toml = []
    for r in rooms:
        x0, z0, x1, z1 = r["bounds"]
        toml.append(f"[regions.{r['id']}]")
        toml.append(f"vertices = [[{x0}, {z0}], [{x1}, {z0}], [{x1}, {z1}], [{x0}, {z1}]]")
        toml.append("floor_y = 0.0")
        toml.append("height = 2.8")
        toml.append("")
    for o in objs:
        toml.append(f"[objects.{o.id}]")
        toml.append(f'category = "{o.cat.replace("_", " ")}"')
        toml.append(f"dimensions = [{o.dims[0]}, {o.dims[1]}, {o.dims[2]}]")
        toml.append(f'region = "{o.region}"')
        toml.append(f'material = "{rng.choice(MATERIALS)}"')
        toml.append("")
    witness = {o.id: {"pos": list(o.pos), "rot": [0.0, float(o.yaw), 0.0]} for o in objs}
    hidden = n * (n - 1) // 2 + 2 * n
    return program, "\n".join(toml), witness, hidden + len(asserts)


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "fixtures/solver")
    out.mkdir(parents=True, exist_ok=True)
    plan = [
        (6, 6, False), (6, 8, False), (7, 6, False), (7, 8, True), (8, 6, False),
        (8, 8, False), (8, 10, True), (9, 6, False), (9, 8, False), (9, 10, True),
        (10, 6, False), (10, 8, False), (10, 10, True), (10, 12, False), (11, 8, False),
        (11, 10, False), (11, 12, True), (12, 8, False), (12, 12, False), (12, 20, False),
    ]
    for i, (n, k, two) in enumerate(plan, start=1):
        rng = random.Random(1000 + i)
        program, toml, witness, total = build_scene(i, n, k, two, rng)
        stem = out / f"scene_{i:02d}"
        stem.with_suffix(".sthl").write_text(program)
        Path(f"{stem}.scene.toml").write_text(toml)
        Path(f"{stem}.witness.json").write_text(json.dumps(witness, indent=2, sort_keys=True) + "\n")
        print(f"{stem.name}: {n} objects, {total} constraints")


if __name__ == "__main__":
    main()
