"""PLY, OBJ/MTL and JSON writers (and the readers used to check them).

All writers go through a temporary file and an atomic rename, and produce
identical bytes for identical input.
"""

import json
import math
from pathlib import Path

import numpy as np

from ._io import atomic_write
from .errors import DomainError
from .mesh import TriangleMesh

RGB = {0: (230, 230, 230), 1: (30, 30, 30)}  # white, black
MATERIALS = {0: "white", 1: "black"}
KD = {0: "0.902 0.902 0.902", 1: "0.118 0.118 0.118"}
CORNER_CODES = {"V1": 1, "V2": 2, "E1": 3, "E2": 4}

_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


def _mesh_and_colors(surface, colors=None):
    mesh = surface if isinstance(surface, TriangleMesh) else surface.mesh
    if colors is None:
        colors = getattr(surface, "color", None)
    if colors is None:
        colors = np.zeros(mesh.n_faces, dtype=np.int8)
    colors = np.asarray(colors).astype(np.int64)
    if len(colors) != mesh.n_faces or not np.isin(colors, (0, 1)).all():
        raise DomainError("need one colour (0 white, 1 black) per face")
    return mesh, colors


def _fmt(x):
    return repr(float(x))


def ply_bytes(surface, mode="ascii", colors=None, comments=(), vertex_extra=None):
    """Encode a mesh with per-face colours as PLY.

    ``vertex_extra`` is an optional (name, uchar array) pair appended as a
    per-vertex property.
    """
    mesh, colors = _mesh_and_colors(surface, colors)
    if mode in ("binary", "binary-little-endian", "binary_little_endian"):
        fmt = "binary_little_endian"
    elif mode == "ascii":
        fmt = "ascii"
    else:
        raise DomainError(f"unknown PLY mode {mode!r}")
    V, F = mesh.vertices, mesh.faces
    rgb = np.array([RGB[int(c)] for c in colors], dtype=np.uint8).reshape(-1, 3)
    head = ["ply", f"format {fmt} 1.0"]
    head += [f"comment {c}" for c in comments]
    head += [f"element vertex {len(V)}", "property double x", "property double y", "property double z"]
    if vertex_extra is not None:
        head.append(f"property uchar {vertex_extra[0]}")
    head += [
        f"element face {len(F)}", "property list uchar int vertex_indices",
        "property uchar red", "property uchar green", "property uchar blue", "end_header",
    ]
    header = ("\n".join(head) + "\n").encode("ascii")
    if fmt == "ascii":
        lines = []
        for i, p in enumerate(V):
            row = " ".join(_fmt(x) for x in p)
            if vertex_extra is not None:
                row += f" {int(vertex_extra[1][i])}"
            lines.append(row)
        for f, c in zip(F, rgb):
            lines.append(f"3 {f[0]} {f[1]} {f[2]} {c[0]} {c[1]} {c[2]}")
        return header + ("\n".join(lines) + "\n").encode("ascii")
    vfields = [("x", "<f8"), ("y", "<f8"), ("z", "<f8")]
    if vertex_extra is not None:
        vfields.append((vertex_extra[0], "u1"))
    vrec = np.empty(len(V), dtype=vfields)
    vrec["x"], vrec["y"], vrec["z"] = V[:, 0], V[:, 1], V[:, 2]
    if vertex_extra is not None:
        vrec[vertex_extra[0]] = vertex_extra[1]
    frec = np.empty(len(F), dtype=[("n", "u1"), ("v", "<i4", 3), ("rgb", "u1", 3)])
    frec["n"], frec["v"], frec["rgb"] = 3, F, rgb
    return header + vrec.tobytes() + frec.tobytes()


def write_ply(surface, path, mode="ascii", colors=None):
    return atomic_write(path, ply_bytes(surface, mode, colors))


def _parse_header(data):
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise DomainError("not a PLY file")
    nl = data.index(b"\n", end)
    lines = data[:nl].decode("ascii").splitlines()
    fmt, comments, elements = None, [], []
    for line in lines[1:]:
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "format":
            fmt = tok[1]
        elif tok[0] == "comment":
            comments.append(line[len("comment "):])
        elif tok[0] == "element":
            elements.append({"name": tok[1], "count": int(tok[2]), "props": []})
        elif tok[0] == "property":
            if tok[1] == "list":
                elements[-1]["props"].append((tok[4], "list", _PLY_TYPES[tok[2]], _PLY_TYPES[tok[3]]))
            else:
                elements[-1]["props"].append((tok[2], _PLY_TYPES[tok[1]]))
    return fmt, comments, elements, data[nl + 1:]


def read_ply(path):
    """Read a triangle PLY. Returns a dict with vertices, faces, colors
    (0/1 from the rgb triple), comments and any extra vertex properties."""
    data = Path(path).read_bytes()
    fmt, comments, elements, body = _parse_header(data)
    out = {"comments": comments, "vertex_props": {}}
    if fmt == "ascii":
        tokens = body.split()
        pos = 0
        for el in elements:
            rows = []
            for _ in range(el["count"]):
                row = {}
                for prop in el["props"]:
                    if prop[1] == "list":
                        n = int(tokens[pos])
                        row[prop[0]] = [int(t) for t in tokens[pos + 1:pos + 1 + n]]
                        pos += 1 + n
                    else:
                        row[prop[0]] = float(tokens[pos])
                        pos += 1
                rows.append(row)
            el["rows"] = rows
        verts = elements[0]["rows"]
        out["vertices"] = np.array([[r["x"], r["y"], r["z"]] for r in verts], dtype=float).reshape(-1, 3)
        for name, *_ in elements[0]["props"]:
            if name not in "xyz":
                out["vertex_props"][name] = np.array([int(r[name]) for r in verts])
        faces = elements[1]["rows"] if len(elements) > 1 else []
        out["faces"] = np.array([r["vertex_indices"] for r in faces], dtype=np.int64).reshape(-1, 3)
        rgb = np.array([[r.get("red", 230), r.get("green", 230), r.get("blue", 230)] for r in faces]).reshape(-1, 3)
    elif fmt == "binary_little_endian":
        offset = 0
        parsed = []
        for el in elements:
            fields = []
            for prop in el["props"]:
                if prop[1] == "list":
                    fields += [(prop[0] + "_n", prop[2]), (prop[0], "<" + prop[3], 3)]
                else:
                    fields.append((prop[0], "<" + prop[1] if prop[1][-1] != "1" else prop[1]))
            dt = np.dtype(fields)
            rec = np.frombuffer(body, dtype=dt, count=el["count"], offset=offset)
            offset += dt.itemsize * el["count"]
            parsed.append(rec)
        v = parsed[0]
        out["vertices"] = np.c_[v["x"], v["y"], v["z"]].astype(float)
        for name in v.dtype.names:
            if name not in ("x", "y", "z"):
                out["vertex_props"][name] = v[name].astype(int)
        f = parsed[1]
        if np.any(f["vertex_indices_n"] != 3):
            raise DomainError("only triangle faces are supported")
        out["faces"] = f["vertex_indices"].astype(np.int64)
        rgb = np.c_[f["red"], f["green"], f["blue"]]
    else:
        raise DomainError(f"unsupported PLY format {fmt!r}")
    out["colors"] = (np.asarray(rgb)[:, 0] < 128).astype(np.int8)
    out["rgb"] = np.asarray(rgb, dtype=int)
    return out


def obj_text(surface, mtl_name, colors=None):
    mesh, colors = _mesh_and_colors(surface, colors)
    lines = [f"mtllib {mtl_name}"]
    lines += ["v " + " ".join(_fmt(x) for x in p) for p in mesh.vertices]
    current = None
    for f, c in zip(mesh.faces, colors):
        if c != current:
            lines.append(f"usemtl {MATERIALS[int(c)]}")
            current = c
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    return "\n".join(lines) + "\n"


def mtl_text():
    out = []
    for c in (0, 1):
        out += [f"newmtl {MATERIALS[c]}", f"Kd {KD[c]}", ""]
    return "\n".join(out)


def write_obj(surface, path, colors=None):
    """Write ``path`` and a sibling .mtl with materials "white" and "black"."""
    path = Path(path)
    mtl = path.with_suffix(".mtl")
    text = obj_text(surface, mtl.name, colors)
    atomic_write(mtl, mtl_text())
    atomic_write(path, text)
    return path, mtl


def read_obj(path):
    verts, faces, colors = [], [], []
    current = 0
    names = {v: k for k, v in MATERIALS.items()}
    for line in Path(path).read_text().splitlines():
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "v":
            verts.append([float(x) for x in tok[1:4]])
        elif tok[0] == "usemtl":
            current = names[tok[1]]
        elif tok[0] == "f":
            faces.append([int(t.split("/")[0]) - 1 for t in tok[1:4]])
            colors.append(current)
    return {
        "vertices": np.array(verts, dtype=float).reshape(-1, 3),
        "faces": np.array(faces, dtype=np.int64).reshape(-1, 3),
        "colors": np.array(colors, dtype=np.int8),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def report_text(report):
    return json.dumps(_jsonable(report or {}), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_report(report, path):
    """JSON with sorted keys; floats use the shortest round-trip repr."""
    return atomic_write(path, report_text(report))


def write_patch_ply(patch, path, mode="ascii"):
    """Patch mesh with a per-vertex ``corner`` code and c in a comment."""
    code = np.zeros(patch.mesh.n_vertices, dtype=np.uint8)
    for label, v in patch.corners.items():
        code[v] = CORNER_CODES[label]
    data = ply_bytes(patch.mesh, mode, comments=[f"contour {patch.c!r}"], vertex_extra=("corner", code))
    return atomic_write(path, data)


def read_patch_ply(path):
    from .patch_mesher import PatchMesh

    d = read_ply(path)
    c = None
    for com in d["comments"]:
        if com.startswith("contour "):
            c = float(com.split()[1])
    if c is None or "corner" not in d["vertex_props"]:
        raise DomainError(f"{path} is not a patch PLY (missing contour comment or corner codes)")
    codes = d["vertex_props"]["corner"]
    corners = {}
    for label, k in CORNER_CODES.items():
        idx = np.flatnonzero(codes == k)
        if len(idx) != 1:
            raise DomainError(f"patch PLY has {len(idx)} vertices tagged {label}")
        corners[label] = int(idx[0])
    patch = PatchMesh(TriangleMesh(d["vertices"], d["faces"]), corners, c, info={"source": str(path)})
    return patch.validate()
