import numpy as np

from ltmlab.channels import KrausChannel


def haar(dim: int, rng: np.random.Generator) -> np.ndarray:
    """One Haar-distributed unitary (Ginibre + phase-fixed QR)."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None):
    rank = rank or dim
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_traceless_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (g + g.conj().T) / 2
    return h - (np.trace(h).real / dim) * np.eye(dim)


def random_kraus_channel(
    dim: int, rank: int, rng: np.random.Generator
) -> KrausChannel:
    """Random channel from a Haar Stinespring isometry with ``rank`` Kraus ops."""
    v = haar(dim * rank, rng)[:, :dim]
    return KrausChannel([v[i * dim : (i + 1) * dim, :] for i in range(rank)])
