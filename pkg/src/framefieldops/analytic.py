"""Closed-form oracles: the Fourier spectrum of the constant-field operator
on the square, and conformal warps for the pullback experiment."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import GeometryError
from .fem import assemble_operator
from .framefield import axis_frame, constant_field, map_coframe_field
from .geometry import SimplicialMesh
from .solve import eigs_generalized


@dataclass
class SquareSpectrum:
    """Analytic eigenvalues of the axis-aligned operator on [-1, 1]^2.

    Frequencies live on the half-integer-pi lattice omega = (pi/2) (a, b);
    ``frequencies`` records (a, b) per returned eigenvalue, sorted ascending
    with multiplicities kept.
    """

    epsilon: float
    frequencies: np.ndarray
    values: np.ndarray


def square_spectrum(epsilon, count):
    """First ``count`` analytic eigenvalues on the square, ascending.

    The constant axis-aligned field yields the operator
    ``2 u_xxyy + eps (u_xxxx + u_yyyy)`` (the cross term carries coefficient
    2 from expanding the tensor contraction), so a Fourier mode with
    frequency (wa, wb) is an eigenfunction with eigenvalue
    ``2 wa^2 wb^2 + eps (wa^4 + wb^4)``.  The lattice spacing pi/2 matches
    products of cosines on [-1, 1] whose odd derivatives vanish at the
    endpoints.  The lattice is enlarged until the returned values are
    provably the globally smallest ones.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    if count < 1:
        raise ValueError("count must be at least 1")

    def lam(a, b):
        wa, wb = a * np.pi / 2.0, b * np.pi / 2.0
        return 2.0 * wa**2 * wb**2 + epsilon * (wa**4 + wb**4)

    K = 8
    while True:
        a, b = np.meshgrid(np.arange(K + 1), np.arange(K + 1), indexing="ij")
        vals = lam(a.ravel(), b.ravel())
        order = np.argsort(vals, kind="stable")
        boundary_min = min(lam(K, 0), lam(0, K))
        if len(order) >= count and vals[order[count - 1]] < boundary_min:
            break
        K *= 2
    take = order[:count]
    freqs = np.column_stack([a.ravel()[take], b.ravel()[take]])
    return SquareSpectrum(epsilon=epsilon, frequencies=freqs, values=vals[take])


@dataclass
class ConformalMap:
    """A closed-form conformal planar map with its derivative fields."""

    name: str
    params: dict

    def _fz(self, z):
        if self.name == "polynomial":
            c = self.params["c"]
            return z + c * z**2, 1.0 + 2.0 * c * z
        if self.name == "exponential":
            w = np.exp(z)
            return w, w
        raise ValueError(f"unknown map {self.name!r}")

    def apply(self, points):
        points = np.asarray(points, dtype=float)
        w, _ = self._fz(points[:, 0] + 1j * points[:, 1])
        return np.column_stack([w.real, w.imag])

    def jacobian(self, points):
        points = np.asarray(points, dtype=float)
        _, d = self._fz(points[:, 0] + 1j * points[:, 1])
        J = np.empty((len(points), 2, 2))
        J[:, 0, 0] = d.real
        J[:, 0, 1] = -d.imag
        J[:, 1, 0] = d.imag
        J[:, 1, 1] = d.real
        return J

    def inverse_jacobian(self, points):
        points = np.asarray(points, dtype=float)
        _, d = self._fz(points[:, 0] + 1j * points[:, 1])
        sq = np.abs(d) ** 2
        J = np.empty((len(points), 2, 2))
        J[:, 0, 0] = d.real / sq
        J[:, 0, 1] = d.imag / sq
        J[:, 1, 0] = -d.imag / sq
        J[:, 1, 1] = d.real / sq
        return J

    def validate_on(self, points, grid=None):
        """Nonsingularity and injectivity checks by sampling.

        Raises GeometryError if the Jacobian determinant is not strictly
        positive at the sample points, or if two well-separated samples map
        to nearly the same image (grid self-intersection test).
        """
        points = np.asarray(points, dtype=float)
        _, d = self._fz(points[:, 0] + 1j * points[:, 1])
        if np.any(np.abs(d) ** 2 < 1e-12):
            raise GeometryError(f"{self.name} map is singular on the domain")
        sample = grid if grid is not None else points
        imgs = self.apply(sample)
        spacing = np.min(
            cKDTree(sample).query(sample, k=2)[0][:, 1]
        )
        pairs = cKDTree(imgs).query_pairs(r=1e-9, output_type="ndarray")
        for i, j in pairs:
            if np.linalg.norm(sample[i] - sample[j]) > 0.5 * spacing:
                raise GeometryError(f"{self.name} map self-intersects on the domain")
        return True


def conformal_warp(name, **params):
    """Construct a named conformal map.

    ``polynomial``: z -> z + c z^2 (injective where |2 c z| < 1);
    ``exponential``: z -> exp(z) on a rectangle of height below 2 pi.
    """
    if name == "polynomial":
        params.setdefault("c", 0.05)
    elif name == "exponential":
        if params:
            raise ValueError("the exponential map takes no parameters")
    else:
        raise ValueError(f"unknown map {name!r}")
    return ConformalMap(name=name, params=params)


@dataclass
class WarpResult:
    values_base: np.ndarray
    values_warped: np.ndarray
    vectors_base: np.ndarray
    vectors_warped: np.ndarray
    base_mesh: SimplicialMesh
    warped_mesh: SimplicialMesh


def warp_experiment(base_mesh, warp, epsilon, k, bc="neumann", path="auto"):
    """Spectra of the constant-field operator and its coframe pullback.

    Builds the constant axis-aligned operator on ``base_mesh`` and the map
    coframe operator on the warped copy (same connectivity, mapped
    vertices), computes ``k`` eigenpairs of each with matching boundary
    conditions, and returns both, with the base eigenfunctions sharing
    vertex indexing with the warped mesh for side-by-side export.
    """
    warp.validate_on(base_mesh.vertices)
    warped = SimplicialMesh(warp.apply(base_mesh.vertices), base_mesh.elements)
    field_base = constant_field(base_mesh, axis_frame(base_mesh.dim))
    field_warp = map_coframe_field(warped, warp.inverse_jacobian(base_mesh.vertices))

    op_base = assemble_operator(base_mesh, field_base, epsilon, bc)
    op_warp = assemble_operator(warped, field_warp, epsilon, bc)
    eig_base = eigs_generalized(op_base, op_base.vertex_mass, k, path=path)
    eig_warp = eigs_generalized(op_warp, op_warp.vertex_mass, k, path=path)
    return WarpResult(
        values_base=eig_base.values,
        values_warped=eig_warp.values,
        vectors_base=eig_base.vectors,
        vectors_warped=eig_warp.vectors,
        base_mesh=base_mesh,
        warped_mesh=warped,
    )
