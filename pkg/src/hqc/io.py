"""Readers, writers and renderers for clustering artifacts.

Every writer returns text (and the ``write_*`` helpers save it), so output
is byte-identical for identical input. Layout constants for the SVG
renderers are module-level and fixed.
"""

import csv
import io
import json
import math
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .engine import LinkageRecord, leaf_value_sets
from .exceptions import DataError, LinkageParseError

LINKAGE_HEADER = ["id", "child1", "child2", "distance", "size", "values"]

# dendrogram layout, in SVG user units
LEAF_SPACING = 22
MARGIN_TOP = 20
MARGIN_BOTTOM = 50
MARGIN_RIGHT = 30
LABEL_WIDTH = 260
PLOT_WIDTH = 520
FONT_SIZE = 12

# scatter layout
SCATTER_SIZE = 560
SCATTER_MARGIN = 70


def _fmt6(x):
    return format(float(x), ".6g")


def _join_values(values):
    parts = [v.replace("\\", "\\\\").replace(";", "\\;") for v in sorted(values)]
    return ";".join(parts)


def _split_values(text):
    values, cur, i = [], [], 0
    if text == "":
        return values
    while i < len(text):
        ch = text[i]
        if ch == "\\":
            if i + 1 >= len(text):
                raise ValueError("dangling escape in values field")
            cur.append(text[i + 1])
            i += 2
            continue
        if ch == ";":
            values.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
        i += 1
    values.append("".join(cur))
    return values


def linkage_to_csv(records):
    """Serialize records with the columns ``id, child1, child2, distance, size, values``.

    Distances carry 6 significant digits; ``values`` is the sorted value set
    joined by ``;`` (``;`` and ``\\`` inside a value are backslash-escaped).
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LINKAGE_HEADER)
    for r in records:
        w.writerow([r.new_id, r.child1, r.child2, _fmt6(r.distance), r.size,
                    _join_values(r.values)])
    return buf.getvalue()


def parse_linkage_csv(text):
    """Inverse of :func:`linkage_to_csv`; raises :class:`LinkageParseError` with the line number."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise LinkageParseError("empty linkage file", 1) from None
    if header != LINKAGE_HEADER:
        raise LinkageParseError(f"unexpected header {header!r}", 1)
    records = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(LINKAGE_HEADER):
            raise LinkageParseError(f"expected 6 fields, got {len(row)}", line)
        try:
            new_id, c1, c2 = int(row[0]), int(row[1]), int(row[2])
            dist = float(row[3])
            size = int(row[4])
            values = frozenset(_split_values(row[5]))
        except ValueError as exc:
            raise LinkageParseError(str(exc), line) from None
        if not math.isfinite(dist) or dist < 0 or size < 0:
            raise LinkageParseError("distance and size must be non-negative", line)
        try:
            records.append(LinkageRecord(new_id, c1, c2, dist, size, values))
        except DataError as exc:
            raise LinkageParseError(str(exc), line) from None
    return records


def dissimilarity_to_csv(entries, labels):
    """Square matrix with a header row and a leading label column; full precision."""
    entries = np.asarray(entries, dtype=np.float64)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", *labels])
    for lab, row in zip(labels, entries):
        w.writerow([lab, *(repr(float(v)) for v in row)])
    return buf.getvalue()


def parse_dissimilarity_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:1] != ["label"]:
        raise DataError("dissimilarity CSV must start with a 'label' header")
    labels = rows[0][1:]
    body = [r for r in rows[1:] if r]
    if [r[0] for r in body] != labels:
        raise DataError("row labels do not match the header")
    return np.array([[float(v) for v in r[1:]] for r in body]), labels


def embedding_to_csv(embedding):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "pc1", "pc2"])
    for lab, (a, b) in zip(embedding.labels, embedding.coords):
        w.writerow([lab, repr(float(a)), repr(float(b))])
    return buf.getvalue()


def parse_embedding_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["label", "pc1", "pc2"]:
        raise DataError("embedding CSV must have the header label,pc1,pc2")
    labels = [r[0] for r in rows[1:] if r]
    coords = np.array([[float(r[1]), float(r[2])] for r in rows[1:] if r]).reshape(-1, 2)
    return labels, coords


class Tree:
    """Binary tree view of a linkage for rendering."""

    def __init__(self, records, labels=None):
        if not records:
            raise DataError("cannot build a tree from an empty linkage")
        self.records = {r.new_id: r for r in records}
        n_leaves = len(records) + 1
        if labels is None:
            leaf_sets = leaf_value_sets(records)
            labels = [next(iter(leaf_sets[i])) for i in range(n_leaves)]
        if len(labels) != n_leaves:
            raise DataError(f"{len(labels)} leaf labels for a linkage with {n_leaves} leaves")
        self.labels = list(labels)
        self.root = records[-1].new_id

    def is_leaf(self, node):
        return node not in self.records

    def height(self, node):
        return 0.0 if self.is_leaf(node) else float(self.records[node].distance)

    def children(self, node):
        r = self.records[node]
        return r.child1, r.child2

    def leaf_order(self):
        order, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if self.is_leaf(node):
                order.append(node)
            else:
                c1, c2 = self.children(node)
                stack.extend([c2, c1])
        return order

    def values(self, node):
        if self.is_leaf(node):
            return [self.labels[node]]
        return sorted(self.records[node].values)

    def size(self, node):
        return None if self.is_leaf(node) else self.records[node].size


def dendrogram_json(records, labels=None, leaf_sizes=None):
    """Nested ``{id, value_set, height, size, children}`` tree as JSON text.

    Leaves have height 0 and an empty ``children`` list.
    """
    tree = Tree(records, labels)
    built = {}
    for node in _postorder(tree):
        if tree.is_leaf(node):
            size = None if leaf_sizes is None else int(leaf_sizes[node])
            kids = []
        else:
            size = tree.size(node)
            kids = [built.pop(c) for c in tree.children(node)]
        built[node] = {"id": int(node), "value_set": tree.values(node),
                       "height": tree.height(node), "size": size, "children": kids}
    return json.dumps(built[tree.root], indent=1, ensure_ascii=False) + "\n"


def _postorder(tree):
    out, stack = [], [(tree.root, False)]
    while stack:
        node, done = stack.pop()
        if done or tree.is_leaf(node):
            out.append(node)
            continue
        stack.append((node, True))
        c1, c2 = tree.children(node)
        stack.extend([(c2, False), (c1, False)])
    return out


def _dot_quote(s):
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def dendrogram_dot(records, labels=None):
    """Graphviz digraph; edges carry the parent's merge distance."""
    tree = Tree(records, labels)
    lines = ["digraph dendrogram {", "  rankdir=RL;", "  node [fontsize=10];"]
    for leaf in sorted(tree.leaf_order()):
        lines.append(f"  n{leaf} [shape=box, label={_dot_quote(f'{tree.labels[leaf]} [{leaf}]')}];")
    for node in sorted(tree.records):
        r = tree.records[node]
        lines.append(f"  n{node} [shape=ellipse, label={_dot_quote(f'{node} ({_fmt6(r.distance)})')}, "
                     f"height={repr(float(r.distance))}, size={r.size}];")
    for node in sorted(tree.records):
        r = tree.records[node]
        for child in (r.child1, r.child2):
            lines.append(f"  n{node} -> n{child} [distance={repr(float(r.distance))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _nice_ticks(top, n=5):
    if top <= 0:
        return [0.0]
    raw = top / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    ticks, t = [], 0.0
    while t <= top * (1 + 1e-9):
        ticks.append(round(t, 12))
        t += step
    return ticks


def _f(x):
    return f"{x:.2f}"


def dendrogram_layout(records, labels=None):
    """Leaf y positions and joint coordinates in data units.

    Returns ``(leaf_y, joints)`` where ``joints[id] = (height, y)`` and y is
    measured in leaf slots from the top.
    """
    tree = Tree(records, labels)
    y = {leaf: float(i) for i, leaf in enumerate(tree.leaf_order())}
    joints = {}
    for node in _postorder(tree):
        if tree.is_leaf(node):
            continue
        c1, c2 = tree.children(node)
        y[node] = (y[c1] + y[c2]) / 2.0
        joints[node] = (tree.height(node), y[node])
    return tree, y, joints


def render_dendrogram_svg(records, labels=None):
    """Horizontal dendrogram: leaves on the left, dissimilarity on the x axis.

    A merge below one of its children's heights is drawn at its own x, so
    its connectors point left.
    """
    tree, y, joints = dendrogram_layout(records, labels)
    n_leaves = len(tree.labels)
    top = max(h for h, _ in joints.values())
    ticks = _nice_ticks(top)
    xmax = max(ticks[-1], top) or 1.0
    width = LABEL_WIDTH + PLOT_WIDTH + MARGIN_RIGHT
    height = MARGIN_TOP + LEAF_SPACING * n_leaves + MARGIN_BOTTOM

    def px(h):
        return LABEL_WIDTH + PLOT_WIDTH * h / xmax

    def py(slot):
        return MARGIN_TOP + LEAF_SPACING * (slot + 0.5)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="{FONT_SIZE}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        '<g class="leaves">',
    ]
    for leaf in tree.leaf_order():
        text = escape(f"{tree.labels[leaf]} [{leaf}]")
        out.append(f'<text x="{_f(LABEL_WIDTH - 6)}" y="{_f(py(y[leaf]) + 4)}" '
                   f'text-anchor="end">{text}</text>')
    out.append("</g>")
    out.append('<g class="links" stroke="#1f4e79" stroke-width="1.5" fill="none">')
    for node in sorted(joints):
        h, yy = joints[node]
        c1, c2 = tree.children(node)
        x = px(h)
        out.append(f'<path data-id="{node}" data-height="{repr(h)}" d="'
                   f"M{_f(px(tree.height(c1)))},{_f(py(y[c1]))} H{_f(x)} "
                   f"V{_f(py(y[c2]))} H{_f(px(tree.height(c2)))}\"/>")
    out.append("</g>")
    out.append('<g class="joints" font-size="9" fill="#555">')
    for node in sorted(joints):
        h, yy = joints[node]
        out.append(f'<text x="{_f(px(h) + 3)}" y="{_f(py(yy) - 3)}">{node}</text>')
    out.append("</g>")
    axis_y = MARGIN_TOP + LEAF_SPACING * n_leaves + 8
    out.append('<g class="axis" stroke="black">')
    out.append(f'<line x1="{_f(px(0))}" y1="{_f(axis_y)}" x2="{_f(px(xmax))}" y2="{_f(axis_y)}"/>')
    for t in ticks:
        out.append(f'<line x1="{_f(px(t))}" y1="{_f(axis_y)}" x2="{_f(px(t))}" y2="{_f(axis_y + 5)}"/>')
    out.append("</g>")
    out.append('<g class="ticks" text-anchor="middle">')
    for t in ticks:
        out.append(f'<text x="{_f(px(t))}" y="{_f(axis_y + 18)}">{t:g}</text>')
    out.append(f'<text x="{_f(px(xmax / 2))}" y="{_f(axis_y + 36)}">dissimilarity</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_scatter_svg(embedding):
    """Labelled scatter of a 2-D embedding with explained-variance axis titles."""
    coords = np.asarray(embedding.coords, dtype=np.float64)
    size = SCATTER_SIZE
    m = SCATTER_MARGIN
    lo = coords.min(axis=0) if coords.size else np.zeros(2)
    hi = coords.max(axis=0) if coords.size else np.ones(2)
    span = np.where(hi - lo > 0, hi - lo, 1.0)

    def px(v):
        return m + (size - 2 * m) * (v - lo[0]) / span[0]

    def py(v):
        return size - m - (size - 2 * m) * (v - lo[1]) / span[1]

    r1, r2 = embedding.explained_variance_ratio
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="{FONT_SIZE - 1}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{m}" y="{m}" width="{size - 2 * m}" height="{size - 2 * m}" '
        'fill="none" stroke="#999"/>',
    ]
    for lab, (a, b) in zip(embedding.labels, coords):
        out.append(f'<circle cx="{_f(px(a))}" cy="{_f(py(b))}" r="4" fill="#1f4e79" '
                   f'data-label={quoteattr(lab)}/>')
        out.append(f'<text x="{_f(px(a) + 6)}" y="{_f(py(b) - 6)}">{escape(lab)}</text>')
    out.append(f'<text x="{size / 2:.2f}" y="{size - m / 3:.2f}" text-anchor="middle">'
               f'component 1 ({100 * r1:.1f}%)</text>')
    out.append(f'<text x="{m / 3:.2f}" y="{size / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 {m / 3:.2f} {size / 2:.2f})">'
               f'component 2 ({100 * r2:.1f}%)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_linkage_csv(records, path):
    write_text(path, linkage_to_csv(records))


def read_linkage_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_linkage_csv(fh.read())
