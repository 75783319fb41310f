"""
Planning through the maze
=========================

The shipped maze is a 10 by 10 workspace with walls that force the car
through four switchback corridors. We run both planners on the same samples
and compare what they pay in path length and in collision checks. Then we
confirm that the precomputed neighbour cache changes only the timing.
"""
from dcaplan.environment import free_space_measure, load_scenario
from dcaplan.planners import plan

maze = load_scenario("maze")
print(f"free configuration volume {free_space_measure(maze):.2f}, turning radius {maze.R}")

# The roadmap planner checks every near pair; the tree planner checks only
# the best parent of each new vertex. On shared samples the tree can never
# beat the roadmap, because the tree is a subgraph of it.
for n in (500, 1000, 2000):
    roadmap, _ = plan(maze, "dprm", n)
    tree, graph = plan(maze, "dfmt", n)
    print(
        f"n={n:5d}  r_n={tree.stats.r_n:.3f}  "
        f"roadmap {roadmap.cost:.4f} ({roadmap.stats.collision_checks} checks)  "
        f"tree {tree.cost:.4f} ({tree.stats.collision_checks} checks)"
    )

# The route itself: vertex indices and the Reeds-Shepp word of every edge.
print("route:", " -> ".join(str(v) for v in tree.vertices))
print("words:", " ".join(e.word for e in tree.edges))

# With and without the neighbour cache the answers are identical.
on, _ = plan(maze, "dfmt", 1000, cache="on")
off, _ = plan(maze, "dfmt", 1000, cache="off")
print(f"cache on  {on.cost!r} in {on.stats.wall_time:.2f} s")
print(f"cache off {off.cost!r} in {off.stats.wall_time:.2f} s")
