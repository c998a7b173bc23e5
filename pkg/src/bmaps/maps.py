"""Half-edge combinatorial maps with ordered hole marks, vertex labels,
validation, and a line-based serialization format.

Conventions, used consistently by every module in the package:

  * half-edges are 0..2e-1 and alpha(h) = h ^ 1 pairs them, so alpha is a
    fixed-point-free involution by construction;
  * sigma[h] is the next half-edge counterclockwise around the source
    vertex of h;
  * phi = sigma o alpha traces each face, and the transition x -> phi(x)
    sweeps the corner of the half-edge alpha(x), where corner(h) is the
    angular sector reached from h rotating counterclockwise to sigma[h];
  * vertex and face ids are the ranks of their orbits ordered by smallest
    contained half-edge, which makes ids reproducible after serialization.

Holes are an ordered tuple of ("face", id) / ("vertex", id) marks; the
order is significant and is preserved by all operations.
"""

import json

import numpy as np


class CombinatorialMap:
    """Rotation system on half-edges 0..2e-1 with alpha(h) = h ^ 1."""

    def __init__(self, sigma, root=None, holes=()):
        self.sigma = np.asarray(sigma, dtype=np.int64)
        self.root = None if root is None else int(root)
        self.holes = tuple((str(kind), int(i)) for kind, i in holes)
        self._orbits = None

    @property
    def n_half(self):
        return len(self.sigma)

    @property
    def n_edges(self):
        return len(self.sigma) // 2

    def alpha(self, h):
        return h ^ 1

    def phi(self, h):
        return int(self.sigma[h ^ 1])

    # -- orbit structure ----------------------------------------------------

    def _compute_orbits(self):
        if self._orbits is not None:
            return self._orbits
        n = self.n_half
        vertices = _perm_orbits(self.sigma)
        phi = self.sigma[np.arange(n) ^ 1] if n else self.sigma
        faces = _perm_orbits(phi)
        vertex_of = np.empty(n, dtype=np.int64)
        for i, orb in enumerate(vertices):
            for h in orb:
                vertex_of[h] = i
        face_of = np.empty(n, dtype=np.int64)
        for i, orb in enumerate(faces):
            for h in orb:
                face_of[h] = i
        self._orbits = (vertices, faces, vertex_of, face_of)
        return self._orbits

    @property
    def vertices(self):
        return self._compute_orbits()[0]

    @property
    def faces(self):
        return self._compute_orbits()[1]

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def vertex_of(self, h):
        return int(self._compute_orbits()[2][h])

    def face_of(self, h):
        return int(self._compute_orbits()[3][h])

    def face_of_corner(self, h):
        """Face whose contour sweeps corner(h) = (h, sigma[h])."""
        return self.face_of(h ^ 1)

    def genus(self):
        v = self.n_vertices
        f = self.n_faces
        e = self.n_edges
        chi = v - e + f
        if chi % 2:
            raise ValueError("odd Euler characteristic")
        return (2 - chi) // 2

    def face_degree(self, face_id):
        return len(self.faces[face_id])

    def vertex_degree(self, vertex_id):
        return len(self.vertices[vertex_id])

    def face_corners(self, face_id, start_corner=None):
        """Corners of the face in contour order, each given as the half-edge
        h with corner(h) = (h, sigma[h]).  The corner's vertex is source(h).
        With start_corner = h the walk starts at that corner."""
        orb = self.faces[face_id]
        n = len(orb)
        corners = [x ^ 1 for x in orb]
        if start_corner is not None:
            i = corners.index(start_corner)
            corners = corners[i:] + corners[:i]
        return corners

    def edges_as_pairs(self):
        """(vertex, vertex) endpoints of each edge i = (2i, 2i+1)."""
        vo = self._compute_orbits()[2]
        return [(int(vo[2 * i]), int(vo[2 * i + 1])) for i in range(self.n_edges)]

    def is_connected(self):
        n = self.n_half
        if n == 0:
            return False
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            h = stack.pop()
            for t in (h ^ 1, int(self.sigma[h])):
                if not seen[t]:
                    seen[t] = True
                    stack.append(t)
        return bool(seen.all())

    def __eq__(self, other):
        if not isinstance(other, CombinatorialMap):
            return NotImplemented
        return (
            self.n_half == other.n_half
            and (self.sigma == other.sigma).all()
            and self.root == other.root
            and self.holes == other.holes
        )

    def __hash__(self):
        return hash((bytes(self.sigma.tobytes()), self.root, self.holes))


def _perm_orbits(perm):
    """Orbits of a permutation, each rotated to start at its smallest element,
    listed in increasing order of that element."""
    n = len(perm)
    seen = np.zeros(n, dtype=bool)
    orbits = []
    for h0 in range(n):
        if seen[h0]:
            continue
        orb = []
        h = h0
        while not seen[h]:
            seen[h] = True
            orb.append(h)
            h = int(perm[h])
        orbits.append(tuple(orb))
    return orbits


# ---------------------------------------------------------------------------
# labels


class LabeledMap:
    """Map plus integer vertex labels and a designated face whose contour the
    labels must be well-behaved on: consecutive corner labels may drop by at
    most 1.  A rooted labeled map carries label 0 at the root vertex."""

    def __init__(self, map, labels, face):
        self.map = map
        self.labels = np.asarray(labels, dtype=np.int64)
        self.face = int(face)

    def corner_labels(self, start_corner=None):
        m = self.map
        return [int(self.labels[m.vertex_of(h)]) for h in m.face_corners(self.face, start_corner)]

    def __eq__(self, other):
        if not isinstance(other, LabeledMap):
            return NotImplemented
        return self.map == other.map and (self.labels == other.labels).all() and self.face == other.face


# ---------------------------------------------------------------------------
# validation


class ValidationReport:
    def __init__(self):
        self.failures = []
        self.n_vertices = None
        self.n_edges = None
        self.n_faces = None
        self.genus = None

    @property
    def ok(self):
        return not self.failures

    def fail(self, msg):
        self.failures.append(msg)

    def __repr__(self):
        state = "ok" if self.ok else "; ".join(self.failures)
        return f"<ValidationReport {state}>"


def validate_map(m):
    """Structural validation.  Failures are collected in the report, never
    raised, so callers can inspect everything that is wrong at once."""
    rep = ValidationReport()
    n = m.n_half
    if n == 0:
        rep.fail("map has no half-edges")
        return rep
    if n % 2:
        rep.fail("odd number of half-edges: alpha(h) = h ^ 1 has a fixed point")
        return rep
    sig = m.sigma
    if sorted(sig.tolist()) != list(range(n)):
        rep.fail("sigma is not a permutation of the half-edges")
        return rep
    if not m.is_connected():
        rep.fail("map is not connected")
    rep.n_vertices = m.n_vertices
    rep.n_edges = m.n_edges
    rep.n_faces = m.n_faces
    chi = rep.n_vertices - rep.n_edges + rep.n_faces
    if chi % 2 or chi > 2:
        rep.fail(f"Euler characteristic {chi} is not of the form 2 - 2g")
    else:
        rep.genus = (2 - chi) // 2
    if m.root is not None and not (0 <= m.root < n):
        rep.fail(f"root {m.root} out of range")
    seen_faces = set()
    seen_vertices = set()
    for kind, i in m.holes:
        if kind == "face":
            if not (0 <= i < rep.n_faces):
                rep.fail(f"hole face {i} does not exist")
            elif i in seen_faces:
                rep.fail(f"hole face {i} repeated")
            seen_faces.add(i)
        elif kind == "vertex":
            if not (0 <= i < rep.n_vertices):
                rep.fail(f"hole vertex {i} does not exist")
            elif i in seen_vertices:
                rep.fail(f"hole vertex {i} repeated")
            seen_vertices.add(i)
        else:
            rep.fail(f"unknown hole kind {kind!r}")
    return rep


def validate_labeled(lm):
    rep = validate_map(lm.map)
    if not rep.ok:
        return rep
    if len(lm.labels) != lm.map.n_vertices:
        rep.fail("label vector length differs from vertex count")
        return rep
    if not (0 <= lm.face < lm.map.n_faces):
        rep.fail(f"designated face {lm.face} does not exist")
        return rep
    lab = lm.corner_labels()
    for i in range(len(lab)):
        if lab[(i + 1) % len(lab)] < lab[i] - 1:
            rep.fail(f"label drop larger than 1 after corner {i} of the designated face")
            break
    if lm.map.root is not None:
        rv = lm.map.vertex_of(lm.map.root)
        if lm.labels[rv] != 0:
            rep.fail(f"root vertex carries label {int(lm.labels[rv])}, not 0")
    return rep


def is_bipartite(m):
    color = np.full(m.n_vertices, -1, dtype=np.int64)
    adj = [[] for _ in range(m.n_vertices)]
    for a, b in m.edges_as_pairs():
        adj[a].append(b)
        adj[b].append(a)
    for s in range(m.n_vertices):
        if color[s] >= 0:
            continue
        color[s] = 0
        stack = [s]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if color[w] < 0:
                    color[w] = color[v] ^ 1
                    stack.append(w)
                elif color[w] == color[v]:
                    return False
    return True


def internal_vertex_formula(n, l, g, k):
    """Internal vertex count of a quadrangulation with n quads, hole
    half-perimeters l, genus g and k holes."""
    return n + sum(l) + 2 - 2 * g - k


def internal_vertex_count(m, n, l):
    """Evaluate the internal vertex formula on a quadrangulation with holes
    and assert it against the actual number of non-hole vertices."""
    l = tuple(l)
    g = m.genus()
    k = len(m.holes)
    if k != len(l):
        raise ValueError("perimeter vector length differs from hole count")
    hole_vertices = set()
    for (kind, i), li in zip(m.holes, l):
        if kind == "vertex":
            if li != 0:
                raise ValueError("vertex hole must have perimeter 0")
            hole_vertices.add(i)
        else:
            if m.face_degree(i) != 2 * li:
                raise ValueError(
                    f"hole face {i} has degree {m.face_degree(i)}, expected {2 * li}"
                )
    expected = internal_vertex_formula(n, l, g, k)
    actual = m.n_vertices - len(hole_vertices)
    if actual != expected:
        raise AssertionError(f"internal vertex count {actual} != formula value {expected}")
    return expected


# ---------------------------------------------------------------------------
# rooted canonical form


def canonical_rooted_form(m, labels=None):
    """Canonical relabeling of the half-edges by breadth-first discovery from
    the root, following alpha then sigma.  Two rooted maps are equal as rooted
    maps exactly when their canonical forms coincide.  Labels (per vertex) and
    holes are carried into the form when given."""
    if m.root is None:
        raise ValueError("map has no root")
    n = m.n_half
    new_id = np.full(n, -1, dtype=np.int64)
    order = []
    new_id[m.root] = 0
    order.append(m.root)
    head = 0
    while head < len(order):
        h = order[head]
        head += 1
        for t in (h ^ 1, int(m.sigma[h])):
            if new_id[t] < 0:
                new_id[t] = len(order)
                order.append(t)
    if len(order) != n:
        raise ValueError("map is not connected")
    sigma_c = tuple(int(new_id[m.sigma[h]]) for h in order)
    alpha_c = tuple(int(new_id[h ^ 1]) for h in order)
    hole_part = []
    for kind, i in m.holes:
        if kind == "face":
            key = min(int(new_id[x]) for x in m.faces[i])
        else:
            key = min(int(new_id[x]) for x in m.vertices[i])
        hole_part.append((kind, key))
    label_part = None
    if labels is not None:
        vo = m._compute_orbits()[2]
        label_part = tuple(int(labels[vo[h]]) for h in order)
    return (sigma_c, alpha_c, tuple(hole_part), label_part)


def rooted_equal(m1, m2, labels1=None, labels2=None):
    return canonical_rooted_form(m1, labels1) == canonical_rooted_form(m2, labels2)


# ---------------------------------------------------------------------------
# serialization


def _cycles_to_text(perm):
    parts = []
    for orb in _perm_orbits(perm):
        parts.append("(" + " ".join(str(h) for h in orb) + ")")
    return "".join(parts)


def _cycles_from_text(text, n):
    perm = np.arange(n, dtype=np.int64)
    for chunk in text.replace("(", " ( ").replace(")", " ) ").split("("):
        ids = [int(t) for t in chunk.replace(")", " ").split()]
        for i, h in enumerate(ids):
            perm[h] = ids[(i + 1) % len(ids)]
    return perm


def serialize_map(m, labels=None, marks=None):
    """Line format: `halfedges`, `sigma` in cycle notation, optional `root`,
    `hole`, `label` and `mark` records.  Parsing the result reproduces
    (sigma, root, holes, labels, marks) exactly."""
    lines = [f"halfedges {m.n_half}", f"sigma {_cycles_to_text(m.sigma)}"]
    if m.root is not None:
        lines.append(f"root {m.root}")
    for kind, i in m.holes:
        lines.append(f"hole {kind} {i}")
    if labels is not None:
        for v, lab in enumerate(labels):
            lines.append(f"label {v} {int(lab)}")
    if marks is not None:
        for idx, rec in marks:
            for name in ("apex", "geodesic", "shuttle"):
                seq = rec.get(name)
                if seq is None:
                    continue
                seq = seq if hasattr(seq, "__len__") else [seq]
                lines.append(f"mark {idx} {name} " + " ".join(str(int(v)) for v in seq))
    return "\n".join(lines) + "\n"


def parse_map(text):
    """Inverse of serialize_map.  Returns (map, labels or None, marks)."""
    n = None
    sigma = None
    root = None
    holes = []
    labels = {}
    marks = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        if key == "halfedges":
            n = int(rest)
        elif key == "sigma":
            if n is None:
                raise ValueError("halfedges line must precede sigma")
            sigma = _cycles_from_text(rest, n)
        elif key == "root":
            root = int(rest)
        elif key == "hole":
            kind, i = rest.split()
            holes.append((kind, int(i)))
        elif key == "label":
            v, lab = rest.split()
            labels[int(v)] = int(lab)
        elif key == "mark":
            idx, name, *vs = rest.split()
            marks.setdefault(int(idx), {})[name] = [int(v) for v in vs]
        else:
            raise ValueError(f"unknown record {key!r}")
    if n is None or sigma is None:
        raise ValueError("missing halfedges or sigma record")
    m = CombinatorialMap(sigma, root=root, holes=holes)
    lab = None
    if labels:
        lab = np.zeros(max(labels) + 1, dtype=np.int64)
        for v, x in labels.items():
            lab[v] = x
    mark_list = sorted(marks.items())
    return m, lab, mark_list


def map_to_json(m, labels=None, marks=None):
    doc = {
        "halfedges": m.n_half,
        "sigma": [int(x) for x in m.sigma],
        "root": m.root,
        "holes": [[kind, i] for kind, i in m.holes],
    }
    if labels is not None:
        doc["labels"] = [int(x) for x in labels]
    if marks is not None:
        doc["marks"] = [
            [idx, {k: [int(v) for v in vs] for k, vs in rec.items()}] for idx, rec in marks
        ]
    return json.dumps(doc)


def map_from_json(text):
    doc = json.loads(text)
    m = CombinatorialMap(doc["sigma"], root=doc.get("root"), holes=doc.get("holes", ()))
    labels = None
    if "labels" in doc:
        labels = np.asarray(doc["labels"], dtype=np.int64)
    marks = [(idx, rec) for idx, rec in doc.get("marks", [])]
    return m, labels, marks
