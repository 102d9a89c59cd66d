"""P1 finite elements on the Kuhn triangulation of a uniform node grid.

Every grid cube is split into n! simplices, one per axis permutation; the
simplex for permutation pi walks from the cube's low corner along
e_pi[0], e_pi[1], ...  The gradient of a P1 function on such a simplex is
the vector of differences along that path divided by h, which keeps
assembly cheap.  For the Laplacian this reproduces the 5-point (2D) and
7-point (3D) stencils, and the lumped mass of every interior node is h^n.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.sparse as sp

from .field import Grid


class KuhnMesh:
    def __init__(self, grid: Grid):
        g = grid.space()
        self.grid = g
        self.n = g.n
        self.h = g.h
        shape = np.array(g.shape)
        strides = np.array([int(np.prod(shape[d + 1 :])) for d in range(self.n)])
        corners = np.stack(
            np.meshgrid(*[np.arange(k - 1) for k in shape], indexing="ij"), axis=-1
        ).reshape(-1, self.n)
        base = corners @ strides
        perms = list(itertools.permutations(range(self.n)))
        verts = np.empty((base.size * len(perms), self.n + 1), dtype=np.int64)
        for j, perm in enumerate(perms):
            path = np.concatenate([[0], np.cumsum(strides[list(perm)])])
            verts[j :: len(perms)] = base[:, None] + path[None, :]
        self.vertices = verts
        self.volume = self.h**self.n / math.factorial(self.n)
        self.num_nodes = g.size
        pts = g.points()
        self.barycenters = pts[verts].mean(axis=1)

    @property
    def num_simplices(self) -> int:
        return self.vertices.shape[0]

    def gradients(self, u: np.ndarray) -> np.ndarray:
        """Path-ordered gradient components, shape (num_simplices, n).

        Only rotation-invariant quantities (norms, isotropic fluxes) may be
        built from these directly, since the axis order varies per simplex.
        """
        uv = u[self.vertices]
        return (uv[:, 1:] - uv[:, :-1]) / self.h

    def assemble_vector(self, flux: np.ndarray) -> np.ndarray:
        """sum_T |T| flux_T . grad(phi_i) for path-ordered fluxes."""
        c = self.volume * flux / self.h
        out = np.bincount(self.vertices[:, 1:].ravel(), weights=c.ravel(), minlength=self.num_nodes)
        out -= np.bincount(self.vertices[:, :-1].ravel(), weights=c.ravel(), minlength=self.num_nodes)
        return out

    def assemble_matrix(self, C: np.ndarray) -> sp.csr_matrix:
        """sum_T |T| D^T C_T D with D the path difference operator / h.

        ``C`` is either (num_simplices,) for a scalar coefficient times the
        identity or (num_simplices, n, n) in path coordinates.
        """
        n = self.n
        scale = self.volume / self.h**2
        local = np.zeros((C.shape[0], n + 1, n + 1))
        for k in range(n):
            for l in range(n):
                if C.ndim == 1:
                    if k != l:
                        continue
                    c = scale * C
                else:
                    c = scale * C[:, k, l]
                local[:, k, l] += c
                local[:, k, l + 1] -= c
                local[:, k + 1, l] -= c
                local[:, k + 1, l + 1] += c
        rows = np.repeat(self.vertices, n + 1, axis=1).ravel()
        cols = np.tile(self.vertices, (1, n + 1)).ravel()
        A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(self.num_nodes,) * 2)
        return A.tocsr()

    def boundary_nodes(self) -> np.ndarray:
        """Boolean mask of nodes on the faces of the grid box."""
        idx = np.stack(np.meshgrid(*[np.arange(k) for k in self.grid.shape], indexing="ij"), -1)
        idx = idx.reshape(-1, self.n)
        return np.any((idx == 0) | (idx == np.array(self.grid.shape) - 1), axis=1)


def hat_split(grid: Grid, positions: np.ndarray, masses: np.ndarray) -> np.ndarray:
    """Distribute point masses onto nodes with multilinear hat weights.

    Conserves total mass and first moments; a mass exactly at a node goes to
    that node alone.  Positions must lie inside the spatial grid box.
    """
    g = grid.space()
    out = np.zeros(g.shape)
    if not masses.size:
        return out
    lo = np.array(g.lo)
    shape = np.array(g.shape)
    s = (positions - lo) / g.h
    tol = 1e-9
    if np.any(s < -tol) or np.any(s > shape - 1 + tol):
        raise ValueError("mass outside the grid box")
    s = np.clip(s, 0, shape - 1)
    i0 = np.minimum(np.floor(s).astype(int), shape - 2)
    frac = s - i0
    for corner in itertools.product((0, 1), repeat=g.n):
        c = np.array(corner)
        w = np.prod(np.where(c == 1, frac, 1.0 - frac), axis=1)
        np.add.at(out, tuple((i0 + c).T), w * masses)
    return out
