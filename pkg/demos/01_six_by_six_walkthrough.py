"""
Co-clustering a 6 x 6 toy matrix, step by step
==============================================

A small hit matrix with three bands of users and two bands of pages. We
compute the fuzzy subsets, the two similarity matrices, cluster both axes and
look at the relation coefficients.
"""

import numpy as np

from coclick import (
    build_grid,
    fuzzy_subsets,
    kmeans_best_of,
    similarity_matrix,
    top_interest,
)

np.set_printoptions(precision=3, suppress=True)

hits = np.array([
    [5, 5, 5, 0, 0, 0],
    [2, 2, 2, 0, 0, 0],
    [0, 0, 0, 1, 5, 7],
    [0, 0, 0, 1, 5, 7],
    [4, 4, 0, 4, 4, 4],
    [4, 4, 0, 4, 4, 4],
])

###############################################################################
# Fuzzy subsets: rows of the first matrix sum to 1, columns of the second do.
subsets = fuzzy_subsets(hits)
print(subsets.user_memberships)
print(subsets.page_memberships)

###############################################################################
# Users 1 and 2 visit the same pages in the same proportions, so their fuzzy
# similarity is exactly 1 even though user 1 has 2.5x the hits.
users = similarity_matrix(subsets, "users").values
pages = similarity_matrix(subsets, "pages").values
print(users)

###############################################################################
# K-Means over similarity rows, best of 10 seeds by Davies-Bouldin index.
u = kmeans_best_of(users, 3)
p = kmeans_best_of(pages, 2)
print("user labels", u.assignments, "DB", round(u.db_index, 4))
print("page labels", p.assignments, "DB", round(p.db_index, 4))
print("per-seed DB on pages:", [round(db, 4) for _, db in p.restart_scores])

###############################################################################
# The user bands come out exactly. On pages, page 3 is the odd one out: only
# users 1 and 2 ever visit it, and the lowest DB index isolates it rather than
# splitting pages into {1,2,3} and {4,5,6}.
grid = build_grid(hits, u, p)
print("user clusters", grid.user_clusters)
print("page clusters", grid.page_clusters)
print(grid.block_hits)

###############################################################################
# Forcing the column bands instead gives the blocks you would read off the
# matrix by eye.
banded = build_grid(hits, u, [0, 0, 0, 1, 1, 1])
print(banded.block_hits)
print("r1 (columns sum to 1)\n", banded.r1)
print("r2 (rows sum to 1)\n", banded.r2)
print("pages most used by user cluster 3:", top_interest(banded, user_cluster=2))
