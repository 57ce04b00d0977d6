"""Indexing on binary trees: ancestors, meets and subtrees.

Both tree kinds share one flat heap layout, so a vertex is a (depth, index)
pair and the meet depth of two leaves is read off the bits of their indices.
"""

from treecover.tree import TreeKind, TreeShape, VertexRef, ancestor, degree, meet, meet_depth, subtree_leaves

for kind in (TreeKind.REGULAR, TreeKind.UNARY_ROOT):
    shape = TreeShape(kind, 4)
    print(f"{kind.value}: {shape.vertex_count} vertices, {shape.leaf_count} leaves, "
          f"root degree {degree(shape.root(), shape)}")



def show(v):
    return f"(depth {v.depth}, index {v.index})"


kind = TreeKind.REGULAR
x, y = VertexRef(kind, 4, 5), VertexRef(kind, 4, 6)
print(f"ancestor of {show(x)} at depth 2: {show(ancestor(x, 2))}")
print(f"meet of {show(x)} and {show(y)}: {show(meet(x, y))}")
print("vectorised meet depths of leaf 0 with leaves 0..15:", meet_depth(0, range(16), 4))

shape = TreeShape(kind, 4)
print(f"leaves below {show(VertexRef(kind, 2, 1))}:", [v.index for v in subtree_leaves(VertexRef(kind, 2, 1), 2, shape)])
