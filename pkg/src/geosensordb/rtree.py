"""In-memory R-tree with quadratic split, standing in for a GiST index.

Boxes are (min_x, min_y, max_x, max_y) tuples; overlap is closed-box.
``last_leaf_visits`` records how many leaf nodes the most recent search
touched, which the tests use to assert index selectivity.
"""

from __future__ import annotations

DEFAULT_FANOUT = 16


def _union(a, b):
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))


def _area(b):
    return (b[2] - b[0]) * (b[3] - b[1])


def _enlargement(b, e):
    return _area(_union(b, e)) - _area(b)


def _overlaps(a, b):
    return a[0] <= b[2] and b[0] <= a[2] and a[1] <= b[3] and b[1] <= a[3]


def _contains(outer, inner):
    return (outer[0] <= inner[0] and outer[1] <= inner[1]
            and outer[2] >= inner[2] and outer[3] >= inner[3])


class _Node:
    __slots__ = ("leaf", "entries")

    def __init__(self, leaf):
        self.leaf = leaf
        self.entries = []  # (bbox, key) for leaves, (bbox, _Node) for internals

    def bbox(self):
        box = self.entries[0][0]
        for b, _ in self.entries[1:]:
            box = _union(box, b)
        return box


class RTree:
    def __init__(self, fanout: int = DEFAULT_FANOUT):
        if fanout < 4:
            raise ValueError("fanout must be at least 4")
        self.fanout = fanout
        self.min_fill = max(2, fanout * 2 // 5)
        self.root = _Node(leaf=True)
        self.size = 0
        self.last_leaf_visits = 0

    # -- insertion --------------------------------------------------------

    def insert(self, bbox, key) -> None:
        split = self._insert(self.root, bbox, key)
        if split is not None:
            old_root = self.root
            self.root = _Node(leaf=False)
            self.root.entries = [(old_root.bbox(), old_root), (split.bbox(), split)]
        self.size += 1

    def _insert(self, node, bbox, key):
        if node.leaf:
            node.entries.append((bbox, key))
        else:
            idx = self._choose_subtree(node, bbox)
            child_box, child = node.entries[idx]
            split = self._insert(child, bbox, key)
            node.entries[idx] = (_union(child_box, bbox), child)
            if split is not None:
                node.entries[idx] = (child.bbox(), child)
                node.entries.append((split.bbox(), split))
        if len(node.entries) > self.fanout:
            return self._split(node)
        return None

    def _choose_subtree(self, node, bbox):
        best, best_enl, best_area = 0, None, None
        for i, (b, _) in enumerate(node.entries):
            enl = _enlargement(b, bbox)
            area = _area(b)
            if best_enl is None or enl < best_enl or (enl == best_enl and area < best_area):
                best, best_enl, best_area = i, enl, area
        return best

    def _split(self, node):
        # Quadratic seeds: the pair wasting the most area together.
        entries = node.entries
        worst, seeds = -1.0, (0, 1)
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                waste = (_area(_union(entries[i][0], entries[j][0]))
                         - _area(entries[i][0]) - _area(entries[j][0]))
                if waste > worst:
                    worst, seeds = waste, (i, j)
        i, j = seeds
        a_entries = [entries[i]]
        b_entries = [entries[j]]
        a_box, b_box = entries[i][0], entries[j][0]
        rest = [e for k, e in enumerate(entries) if k not in (i, j)]
        while rest:
            # Honor the minimum fill if one side is running out of entries.
            if len(a_entries) + len(rest) == self.min_fill:
                a_entries.extend(rest)
                for b, _ in rest:
                    a_box = _union(a_box, b)
                break
            if len(b_entries) + len(rest) == self.min_fill:
                b_entries.extend(rest)
                for b, _ in rest:
                    b_box = _union(b_box, b)
                break
            # Pick the entry with the strongest preference for one group.
            best_k, best_diff = 0, -1.0
            for k, (b, _) in enumerate(rest):
                diff = abs(_enlargement(a_box, b) - _enlargement(b_box, b))
                if diff > best_diff:
                    best_k, best_diff = k, diff
            b, payload = rest.pop(best_k)
            if _enlargement(a_box, b) <= _enlargement(b_box, b):
                a_entries.append((b, payload))
                a_box = _union(a_box, b)
            else:
                b_entries.append((b, payload))
                b_box = _union(b_box, b)
        node.entries = a_entries
        sibling = _Node(leaf=node.leaf)
        sibling.entries = b_entries
        return sibling

    # -- search -----------------------------------------------------------

    def search(self, bbox) -> list:
        """Keys of all entries whose box overlaps ``bbox`` (closed-box)."""
        out = []
        self.last_leaf_visits = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.leaf:
                self.last_leaf_visits += 1
                for b, key in node.entries:
                    if _overlaps(b, bbox):
                        out.append(key)
            else:
                for b, child in node.entries:
                    if _overlaps(b, bbox):
                        stack.append(child)
        return out

    def leaf_count(self) -> int:
        count = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.leaf:
                count += 1
            else:
                stack.extend(child for _, child in node.entries)
        return count

    # -- structural checks (used by tests) --------------------------------

    def validate(self) -> int:
        """Walk the tree checking containment invariants; returns the number
        of reachable keys."""
        return self._validate(self.root, None)

    def _validate(self, node, outer_box):
        count = 0
        if not node.entries and node is not self.root:
            raise AssertionError("empty non-root node")
        for b, payload in node.entries:
            if outer_box is not None and not _contains(outer_box, b):
                raise AssertionError(f"entry box {b} escapes parent box {outer_box}")
            if node.leaf:
                count += 1
            else:
                if payload.bbox() != b:
                    raise AssertionError("stale internal entry box")
                count += self._validate(payload, b)
        return count
