"""One-site DMRG with optimized local bases for the oscillator chain.

The superblock is L-site-R with a single free site. Blocks keep at most n
states selected from the target-averaged reduced density matrix. In
optimized mode the free site's basis is refined in place: groups of bare
number states are fed alongside the current kept states, the superblock is
re-solved, and the n dominant eigenvectors of the site's averaged density
matrix become the new basis. In bare mode the site basis stays frozen to
the lowest n number states, which reproduces the unoptimized algorithm for
comparison runs.

Block growth absorbs the free site with the block index major, i.e.
enlarged indices are (block, site); right blocks are stored mirrored (edge
site last), which the reflection symmetry of the uniform chain makes
identical to left blocks during warmup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainSpec
from .entropy import von_neumann
from .errors import ConvergenceError
from .fock import (
    SiteBasis,
    bare_site_basis,
    bond_coefficient,
    kron,
    ladder_ops,
    onsite_term,
    project,
)
from .lanczos import EigResult, dense_sym_eig, lowest_k

__all__ = [
    "DmrgConfig",
    "Block",
    "TruncationRecord",
    "SiteOperators",
    "DmrgResult",
    "site_operators",
    "enlarge_block",
    "truncate_block",
    "superblock_solve",
    "optimize_site_basis",
    "run_dmrg",
]

_DEGENERACY_TOL = 1e-10
_MAX_REFINE_CYCLES = 25
_BASIS_DRIFT_TOL = 1e-12


@dataclass(frozen=True)
class DmrgConfig:
    """Run controls.

    kept_states is the block and site basis size n; feed_size is the number
    of bare states fed per refinement step (0 disables the optimized-basis
    refinement regardless of ``optimized``). bare_dim may restate the
    chain's Fock cutoff m; when set it must agree with the ChainSpec.
    """

    kept_states: int
    bare_dim: int | None = None
    feed_size: int = 4
    n_targets: int = 1
    target_weights: tuple[float, ...] | None = None
    n_sweeps: int = 6
    eig_tol: float = 1e-10
    eig_max_iter: int = 2000
    basis_tol: float = 1e-9
    energy_tol: float = 1e-8
    optimized: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.kept_states < 1:
            raise ValueError("kept_states must be >= 1")
        if self.bare_dim is not None and self.bare_dim < 2:
            raise ValueError("bare_dim must be >= 2")
        if self.feed_size < 0:
            raise ValueError("feed_size must be >= 0")
        if self.n_targets < 1:
            raise ValueError("n_targets must be >= 1")
        if self.target_weights is not None:
            w = np.asarray(self.target_weights, dtype=float)
            if w.size != self.n_targets:
                raise ValueError("target_weights length must equal n_targets")
            if np.any(w <= 0):
                raise ValueError("target_weights must be positive")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ValueError("target_weights must sum to 1 within 1e-12")
        if self.n_sweeps < 1:
            raise ValueError("n_sweeps must be >= 1")
        for name in ("eig_tol", "basis_tol", "energy_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    def weights(self) -> np.ndarray:
        if self.target_weights is None:
            return np.full(self.n_targets, 1.0 / self.n_targets)
        return np.asarray(self.target_weights, dtype=float)


@dataclass
class Block:
    """Renormalized block: effective Hamiltonian, the (a^dag + a) operator
    of the edge site adjacent to the free site, and the truncation
    history (one transform per truncation, oldest first)."""

    length: int
    basis_dim: int
    hamiltonian: np.ndarray
    edge_x: np.ndarray
    transforms: list = field(default_factory=list)

    @staticmethod
    def empty() -> "Block":
        z = np.zeros((1, 1))
        return Block(0, 1, z, z.copy(), [])


@dataclass(frozen=True)
class TruncationRecord:
    """Spectrum of one truncation event.

    ``position`` is the 1-based site index at which the event happened;
    ``kind`` is "block" (block-basis truncation) or "site" (optimized-basis
    refinement). ``boundary_degenerate`` flags an eigenvalue tie across the
    kept/discarded boundary, where the kept set is rotation-arbitrary.
    """

    position: int
    lambdas: np.ndarray
    kept: int
    discarded_weight: float
    kind: str = "block"
    boundary_degenerate: bool = False


@dataclass(frozen=True)
class SiteOperators:
    """Free-site operators projected into its current basis."""

    h: np.ndarray
    x: np.ndarray
    bond_coeff: float

    @property
    def dim(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class DmrgResult:
    """Outputs of a DMRG run.

    ``energies`` holds the n_tar lowest superblock energies from the final
    central-site solve; ``gap`` is energies[1]-energies[0] when at least two
    states were targeted. ``site_entropies[i]`` is the ground-state
    entanglement of site i+1 with the rest of the chain, and
    ``entanglement_SE`` their average. ``central_site_lambdas`` is the
    target-averaged central-site density-matrix spectrum and
    ``central_block_lambdas`` the target-averaged spectrum of the enlarged
    central block (the truncation density matrix, whose rank is capped by
    n times the number of targets), both descending.
    ``sweep_energy_trace`` records the best ground energy seen in each
    sweep.
    """

    energies: np.ndarray
    gap: float | None
    entanglement_SE: float
    site_entropies: np.ndarray
    truncation_records: list
    sweep_energy_trace: np.ndarray
    converged: bool
    central_site_lambdas: np.ndarray
    central_block_lambdas: np.ndarray


def site_operators(site: SiteBasis, hbar_tilde: float) -> SiteOperators:
    """Bare on-site term and (a^dag + a) projected into the site basis."""
    m = site.bare_dim
    a, ad = ladder_ops(m)
    return SiteOperators(
        h=project(onsite_term(m, hbar_tilde), site),
        x=project(a + ad, site),
        bond_coeff=bond_coefficient(hbar_tilde),
    )


def enlarge_block(block: Block, site: SiteBasis, hbar_tilde: float) -> Block:
    """Absorb one site into the block (block index major):
    H' = H (x) 1 + 1 (x) h_site + g * edge_x (x) x_site, edge' = 1 (x) x_site.
    """
    ops = site_operators(site, hbar_tilde)
    i_block = np.eye(block.basis_dim)
    i_site = np.eye(ops.dim)
    h = (
        kron(block.hamiltonian, i_site)
        + kron(i_block, ops.h)
        + ops.bond_coeff * kron(block.edge_x, ops.x)
    )
    edge = kron(i_block, ops.x)
    return Block(
        length=block.length + 1,
        basis_dim=block.basis_dim * ops.dim,
        hamiltonian=h,
        edge_x=edge,
        transforms=list(block.transforms),
    )


def truncate_block(
    block: Block, rdm: np.ndarray, n: int, position: int = 0
) -> tuple[Block, TruncationRecord]:
    """Rotate the block into the n dominant eigenvectors of its averaged
    reduced density matrix. ``n == basis_dim`` is a pure rotation."""
    rdm = np.asarray(rdm, dtype=float)
    dim = block.basis_dim
    if rdm.shape != (dim, dim):
        raise ValueError(f"rdm shape {rdm.shape} != block dim {dim}")
    if n > dim:
        raise ValueError(f"cannot keep {n} states of a {dim}-dimensional block")
    eig = dense_sym_eig(rdm)
    lam = eig.values[::-1].copy()
    vecs = eig.vectors[:, ::-1]
    v = vecs[:, :n].copy()
    tie = bool(n < dim and lam[n - 1] - lam[n] <= _DEGENERACY_TOL)
    record = TruncationRecord(
        position=position,
        lambdas=lam,
        kept=n,
        discarded_weight=float(1.0 - lam[:n].sum()),
        kind="block",
        boundary_degenerate=tie,
    )
    h = v.T @ block.hamiltonian @ v
    x = v.T @ block.edge_x @ v
    new = Block(
        length=block.length,
        basis_dim=n,
        hamiltonian=0.5 * (h + h.T),
        edge_x=0.5 * (x + x.T),
        transforms=list(block.transforms) + [v],
    )
    return new, record


def _superblock_matvec(left: Block, ops: SiteOperators, right: Block):
    dl, ds, dr = left.basis_dim, ops.dim, right.basis_dim
    use_l = left.length > 0
    use_r = right.length > 0
    # Stacked operator pairs let one GEMM produce both the Hamiltonian and
    # the bond piece for each side; the site GEMM combines the on-site term
    # with both bond completions.
    lhx = np.vstack([left.hamiltonian, left.edge_x])
    rhx = np.vstack([right.hamiltonian, right.edge_x])
    shx = np.hstack([ops.h, ops.bond_coeff * ops.x])

    def apply_block(vblock: np.ndarray) -> np.ndarray:
        nb = vblock.shape[1]
        psi = vblock.reshape(dl, ds * dr * nb)
        out = np.zeros((dl, ds, dr, nb))
        acc = np.zeros((dl, ds, dr, nb))
        if use_l:
            both = (lhx @ psi).reshape(2, dl, ds, dr, nb)
            out += both[0]
            acc += both[1]
        if use_r:
            t = vblock.reshape(dl * ds, dr, nb).transpose(0, 2, 1).reshape(-1, dr)
            both = (t @ rhx.T).reshape(dl * ds, nb, 2, dr)
            out += both[:, :, 0, :].transpose(0, 2, 1).reshape(dl, ds, dr, nb)
            acc += both[:, :, 1, :].transpose(0, 2, 1).reshape(dl, ds, dr, nb)
        stacked = np.concatenate(
            [
                vblock.reshape(dl, ds, dr * nb),
                acc.reshape(dl, ds, dr * nb),
            ],
            axis=1,
        ).transpose(1, 0, 2).reshape(2 * ds, -1)
        out += (shx @ stacked).reshape(ds, dl, dr, nb).transpose(1, 0, 2, 3)
        return out.reshape(dl * ds * dr, nb)

    def apply(v: np.ndarray) -> np.ndarray:
        return apply_block(v.reshape(-1, 1)).reshape(-1)

    return apply, apply_block, (dl, ds, dr)


def superblock_solve(
    left: Block,
    site_ops: SiteOperators,
    right: Block,
    config: DmrgConfig,
    k: int | None = None,
    v0: np.ndarray | None = None,
) -> tuple[EigResult, np.ndarray]:
    """Lowest eigenpairs of the L-site-R Hamiltonian, matrix-free.

    Returns the EigResult and the wavefunction tensor of shape
    (dim_L, dim_site, dim_R, k). k defaults to the configured number of
    targeted states, clamped to the superblock dimension.
    """
    apply, apply_block, (dl, ds, dr) = _superblock_matvec(left, site_ops, right)
    dim = dl * ds * dr
    if k is None:
        k = config.n_targets
    k = min(k, dim)
    res = lowest_k(
        apply,
        dim,
        k,
        tol=config.eig_tol,
        max_iter=config.eig_max_iter,
        seed=config.seed,
        v0=v0,
        apply_block=apply_block,
    )
    psi = res.vectors.reshape(dl, ds, dr, k)
    return res, psi


def _target_weights_for(config: DmrgConfig, k: int) -> np.ndarray:
    w = config.weights()[:k]
    return w / w.sum()


def _site_rdm_averaged(psi: np.ndarray, weights: np.ndarray) -> np.ndarray:
    k = psi.shape[3]
    rho = np.zeros((psi.shape[1], psi.shape[1]))
    for j in range(k):
        rho += weights[j] * np.einsum("asb,atb->st", psi[..., j], psi[..., j])
    return 0.5 * (rho + rho.T)


def _left_rdm_averaged(psi: np.ndarray, weights: np.ndarray) -> np.ndarray:
    dl, ds, dr, k = psi.shape
    rho = np.zeros((dl * ds, dl * ds))
    for j in range(k):
        m = psi[..., j].reshape(dl * ds, dr)
        rho += weights[j] * (m @ m.T)
    return 0.5 * (rho + rho.T)


def _right_rdm_averaged(psi: np.ndarray, weights: np.ndarray) -> np.ndarray:
    dl, ds, dr, k = psi.shape
    rho = np.zeros((dr * ds, dr * ds))
    for j in range(k):
        m = psi[..., j].transpose(2, 1, 0).reshape(dr * ds, dl)
        rho += weights[j] * (m @ m.T)
    return 0.5 * (rho + rho.T)


def _feed_columns(basis: np.ndarray, group: list[int], m: int) -> np.ndarray:
    """Bare unit vectors of ``group`` orthonormalized against the current
    basis columns (two passes); directions already spanned are skipped."""
    cols = []
    for idx in group:
        v = np.zeros(m)
        v[idx] = 1.0
        for _ in range(2):
            v -= basis @ (basis.T @ v)
            for u in cols:
                v -= u * (u @ v)
        nrm = np.linalg.norm(v)
        if nrm > 1e-8:
            cols.append(v / nrm)
    if not cols:
        return np.empty((m, 0))
    return np.column_stack(cols)


def _refine_site_basis(
    spec: ChainSpec,
    config: DmrgConfig,
    left: Block,
    right: Block,
    basis: SiteBasis,
    position: int,
    max_cycles: int | None = None,
):
    """Optimized-basis refinement at one site (the feed loop).

    Cycles groups of ``feed_size`` bare states through the site basis:
    each group is orthogonalized against the current basis and appended,
    the superblock is solved for the targeted states, and the n dominant
    eigenvectors of the averaged site density matrix become the new basis.
    Stops when the ground energy changes by less than ``basis_tol`` over a
    full cycle, or when a cycle leaves the kept subspace unchanged.

    Returns (basis, last record, last EigResult, last psi tensor, last
    site-truncation matrix mapping the augmented basis onto the kept one).
    """
    m = basis.bare_dim
    n = basis.kept_dim
    n1 = config.feed_size
    hbar = spec.hbar_tilde
    a, ad = ladder_ops(m)
    bare_h = onsite_term(m, hbar)
    bare_x = a + ad
    g = bond_coefficient(hbar)

    groups = [list(range(s, min(s + n1, m))) for s in range(0, m, n1)] if n1 else []
    b_cur = basis.transform.copy()
    if max_cycles is None:
        max_cycles = _MAX_REFINE_CYCLES

    last = None
    prev_energy = None
    prev_psi_bare = None
    for _cycle in range(max_cycles):
        fed_any = False
        cycle_start = b_cur
        for group in groups:
            extra = _feed_columns(b_cur, group, m)
            if extra.shape[1] == 0 and last is not None:
                continue
            fed_any = fed_any or extra.shape[1] > 0
            b_aug = np.hstack([b_cur, extra]) if extra.shape[1] else b_cur
            aug = SiteBasis(m, b_aug.shape[1], b_aug)
            ops = SiteOperators(project(bare_h, aug), project(bare_x, aug), g)
            v0 = None
            if prev_psi_bare is not None:
                # Transport the previous solutions into the new site basis;
                # pure iteration warm start, deterministic.
                guess = np.tensordot(prev_psi_bare, b_aug, axes=(1, 0))
                v0 = guess.transpose(0, 3, 1, 2).reshape(-1, guess.shape[2])
            try:
                eig, psi = superblock_solve(left, ops, right, config, v0=v0)
            except ConvergenceError as err:
                raise ConvergenceError(
                    f"superblock solve failed at site {position}: {err}",
                    residual_norms=err.residual_norms,
                ) from err
            weights = _target_weights_for(config, psi.shape[3])
            rho = _site_rdm_averaged(psi, weights)
            dres = dense_sym_eig(rho)
            lam = dres.values[::-1].copy()
            vecs = dres.vectors[:, ::-1]
            v_keep = vecs[:, :n].copy()
            tie = bool(n < lam.size and lam[n - 1] - lam[n] <= _DEGENERACY_TOL)
            record = TruncationRecord(
                position=position,
                lambdas=lam,
                kept=n,
                discarded_weight=float(1.0 - lam[:n].sum()),
                kind="site",
                boundary_degenerate=tie,
            )
            b_cur = b_aug @ v_keep
            prev_psi_bare = np.tensordot(psi, b_aug, axes=(1, 1)).transpose(0, 3, 1, 2)
            last = (record, eig, psi, v_keep, b_aug)
        if last is None:
            break
        energy = last[1].values[0]
        if not fed_any:
            break
        if prev_energy is not None and abs(energy - prev_energy) < config.basis_tol:
            break
        drift = n - np.linalg.norm(cycle_start.T @ b_cur) ** 2
        if drift < _BASIS_DRIFT_TOL:
            break
        prev_energy = energy
    if last is None:
        # No feed groups at all (feed_size 0): single solve, no refinement.
        aug = SiteBasis(m, n, b_cur)
        ops = SiteOperators(project(bare_h, aug), project(bare_x, aug), g)
        eig, psi = superblock_solve(left, ops, right, config)
        weights = _target_weights_for(config, psi.shape[3])
        rho = _site_rdm_averaged(psi, weights)
        dres = dense_sym_eig(rho)
        lam = dres.values[::-1].copy()
        record = TruncationRecord(
            position=position,
            lambdas=lam,
            kept=n,
            discarded_weight=float(1.0 - lam[:n].sum()),
            kind="site",
            boundary_degenerate=False,
        )
        last = (record, eig, psi, np.eye(n), b_cur)

    record, eig, psi, v_keep, b_aug = last
    return SiteBasis(m, n, b_cur), record, eig, psi, v_keep


def optimize_site_basis(
    spec: ChainSpec,
    config: DmrgConfig,
    left: Block,
    right: Block,
    current: SiteBasis,
    position: int = 1,
    max_cycles: int | None = None,
) -> tuple[SiteBasis, TruncationRecord]:
    """Refine the free site's basis between the given blocks.

    Returns the final basis and the truncation record of the last
    refinement step (full averaged-density-matrix spectrum, descending).
    ``max_cycles`` caps the number of feed cycles (mainly for inspecting
    per-cycle behavior; the default runs to the ``basis_tol`` criterion).
    """
    new_basis, record, _eig, _psi, _vk = _refine_site_basis(
        spec, config, left, right, current, position, max_cycles=max_cycles
    )
    return new_basis, record


def run_dmrg(spec: ChainSpec, config: DmrgConfig) -> DmrgResult:
    """Warmup, finite-system sweeps, and a final measurement pass.

    Warmup grows the left block one site at a time against its mirror
    image until the superblock spans the chain. Sweeps run right then left
    until the per-sweep best ground energy changes by less than
    ``energy_tol`` or ``n_sweeps`` is exhausted (``converged`` records
    which); a final left-to-right pass collects per-site entropies, the
    central-site spectrum, and the reported energies at the central site.
    """
    n_sites = spec.n_sites
    if n_sites < 3:
        raise ValueError("run_dmrg requires N >= 3; use the exact oracle below that")
    if config.bare_dim is not None and config.bare_dim != spec.bare_dim:
        raise ValueError(
            f"config bare_dim {config.bare_dim} != chain bare_dim {spec.bare_dim}"
        )
    m = spec.bare_dim
    n = config.kept_states
    if n > m:
        raise ValueError(f"kept_states {n} exceeds bare_dim {m}")
    hbar = spec.hbar_tilde
    optimizing = config.optimized and config.feed_size > 0

    bases = [bare_site_basis(m, n) for _ in range(n_sites)]
    records: list[TruncationRecord] = []
    left: dict[int, Block] = {0: Block.empty()}
    right: dict[int, Block] = {0: Block.empty()}

    def solve_at(p: int):
        """Solve (and refine, in optimized mode) at free site p (0-based).

        Returns (eig, psi in the final n-dim site basis, ground-state site
        entropy, averaged site spectrum descending)."""
        blk_l = left[p]
        blk_r = right[n_sites - p - 1]
        if optimizing:
            new_basis, rec, eig, psi, v_keep = _refine_site_basis(
                spec, config, blk_l, blk_r, bases[p], position=p + 1
            )
            bases[p] = new_basis
            records.append(rec)
            site_lams = rec.lambdas
            psi_fin = np.tensordot(psi, v_keep, axes=(1, 0)).transpose(0, 3, 1, 2)
            for j in range(psi_fin.shape[3]):
                nrm = np.linalg.norm(psi_fin[..., j])
                if nrm > 0:
                    psi_fin[..., j] /= nrm
        else:
            ops = site_operators(bases[p], hbar)
            try:
                eig, psi = superblock_solve(blk_l, ops, blk_r, config)
            except ConvergenceError as err:
                raise ConvergenceError(
                    f"superblock solve failed at site {p + 1}: {err}",
                    residual_norms=err.residual_norms,
                ) from err
            psi_fin = psi
            weights = _target_weights_for(config, psi.shape[3])
            site_lams = np.sort(
                np.linalg.eigvalsh(_site_rdm_averaged(psi, weights))
            )[::-1].copy()
        rho_ground = np.einsum("asb,atb->st", psi[..., 0], psi[..., 0])
        s_site = von_neumann(rho_ground)
        return eig, psi_fin, s_site, site_lams

    def move_right(p: int, psi_fin: np.ndarray) -> None:
        enlarged = enlarge_block(left[p], bases[p], hbar)
        if enlarged.basis_dim > n:
            weights = _target_weights_for(config, psi_fin.shape[3])
            rho = _left_rdm_averaged(psi_fin, weights)
            enlarged, rec = truncate_block(enlarged, rho, n, position=p + 1)
            records.append(rec)
        left[p + 1] = enlarged

    def move_left(p: int, psi_fin: np.ndarray) -> None:
        enlarged = enlarge_block(right[n_sites - p - 1], bases[p], hbar)
        if enlarged.basis_dim > n:
            weights = _target_weights_for(config, psi_fin.shape[3])
            rho = _right_rdm_averaged(psi_fin, weights)
            enlarged, rec = truncate_block(enlarged, rho, n, position=p + 1)
            records.append(rec)
        right[n_sites - p] = enlarged

    # Warmup: grow against the mirror environment (bases are still uniform).
    left[1] = enlarge_block(left[0], bases[0], hbar)
    right[1] = enlarge_block(right[0], bases[n_sites - 1], hbar)
    length = 1
    while n_sites - length - 1 > length:
        ops = site_operators(bases[length], hbar)
        try:
            _eig, psi = superblock_solve(left[length], ops, right[length], config)
        except ConvergenceError as err:
            raise ConvergenceError(
                f"warmup solve failed at site {length + 1}: {err}",
                residual_norms=err.residual_norms,
            ) from err
        enlarged = enlarge_block(left[length], bases[length], hbar)
        if enlarged.basis_dim > n:
            weights = _target_weights_for(config, psi.shape[3])
            rho = _left_rdm_averaged(psi, weights)
            enlarged, rec = truncate_block(enlarged, rho, n, position=length + 1)
            records.append(rec)
        left[length + 1] = enlarged
        right[length + 1] = enlarged
        length += 1

    # Finite-system sweeps.
    sweep_trace: list[float] = []
    prev_best = None
    converged = False
    start = length
    for _sweep in range(config.n_sweeps):
        best = math.inf
        for p in range(start, n_sites):
            eig, psi_fin, _s, _lams = solve_at(p)
            best = min(best, eig.values[0])
            if p < n_sites - 1:
                move_right(p, psi_fin)
        for p in range(n_sites - 2, -1, -1):
            eig, psi_fin, _s, _lams = solve_at(p)
            best = min(best, eig.values[0])
            if p > 0:
                move_left(p, psi_fin)
        sweep_trace.append(best)
        if prev_best is not None and abs(prev_best - best) < config.energy_tol:
            converged = True
            break
        prev_best = best
        start = 0

    # Measurement pass: entropies per site, energies at the central site.
    site_entropies = np.zeros(n_sites)
    central = (n_sites - 1) // 2
    energies = None
    central_lams = None
    central_block_lams = None
    for p in range(n_sites):
        eig, psi_fin, s_site, site_lams = solve_at(p)
        site_entropies[p] = s_site
        if p == central:
            energies = eig.values.copy()
            central_lams = np.asarray(site_lams, dtype=float)
            weights = _target_weights_for(config, psi_fin.shape[3])
            rho_block = _left_rdm_averaged(psi_fin, weights)
            central_block_lams = np.sort(np.linalg.eigvalsh(rho_block))[::-1].copy()
        if p < n_sites - 1:
            move_right(p, psi_fin)

    gap = float(energies[1] - energies[0]) if energies.size >= 2 else None
    return DmrgResult(
        energies=energies,
        gap=gap,
        entanglement_SE=float(site_entropies.mean()),
        site_entropies=site_entropies,
        truncation_records=records,
        sweep_energy_trace=np.array(sweep_trace),
        converged=converged,
        central_site_lambdas=central_lams,
        central_block_lambdas=central_block_lams,
    )
