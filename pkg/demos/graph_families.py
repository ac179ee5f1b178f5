"""Tour of the built-in vertex-typed graph families.

Every family realizes a type blueprint: a matrix counting, for a vertex of
type i, how many neighbors of type j it must have.  The type proportions are
not free parameters; they are forced by the edge-counting balance
#V_i * n_i(j) = #V_j * n_j(i) and come out as exact fractions.
"""

from rumorlab import (
    bipartite24,
    build_configuration_model,
    comb,
    cycle,
    decorated_grid,
    strip3,
    torus2d,
    validate_blueprint,
    verify_realization,
)


def show(name, graph):
    bp = graph.blueprint
    report = verify_realization(graph)
    props = ", ".join(str(p) for p in bp.proportions)
    print(f"{name:18s} n={graph.num_vertices:4d}  types={bp.n_types}  "
          f"proportions=({props})  verified={report.ok}  connected={report.connected}")


print("regular families")
show("cycle(12)", cycle(12))
show("torus2d(8)", torus2d(8))
show("bipartite24(5)", bipartite24(5))
show("decorated_grid", decorated_grid(6, 4))
show("comb(8)", comb(8))
show("strip3(6)", strip3(6))

print()
print("configuration model: random simple graphs with the same local statistics")
gamma = validate_blueprint([[0, 2], [4, 0]])
for size in (9, 30, 90):
    g = build_configuration_model(gamma, size, seed=1)
    show(f"config {size}", g)

path = validate_blueprint([[0, 1, 0], [1, 0, 1], [0, 2, 0]])
print()
print("the 3-type path blueprint realized at the minimum size is the 5-path itself:")
g5 = build_configuration_model(path, 5, seed=0)
for v in range(5):
    print(f"  vertex {v} (type {g5.type_of[v]}): neighbors {g5.neighbors(v).tolist()}")

print()
print("a five-orbit blueprint from a transitive tiling; dense rows make random")
print("realization impractical, but all deterministic machinery needs only this:")
five = validate_blueprint(
    [
        [0, 24, 2, 0, 3],
        [24, 0, 2, 0, 1],
        [2, 2, 0, 4, 0],
        [0, 0, 4, 0, 0],
        [3, 1, 0, 0, 0],
    ]
)
print(f"  degrees {[five.degree(i) for i in range(5)]}, proportions "
      f"({', '.join(str(p) for p in five.proportions)})")
