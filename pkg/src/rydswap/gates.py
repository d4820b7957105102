"""Gate-protocol catalog, realized-gate extraction and fidelity metrics.

Protocols follow the three-step recipe: (i) a resonant square pi pulse per
control from |0> to its Rydberg level (sequential for multi-control,
simultaneous dual-level for the multiplexed variants), (ii) a target stage of
duration T with a truncated-Gaussian microwave drive (sigma = T/4) and a
square optical drive, (iii) control retrieval mirroring (i) in reverse
order.  The retrieval pulses are phase-inverted so an excitation round trip
composes to the identity rather than -1; the realized gate matrix is then
read out in the interaction picture of the static frame (the deterministic
diagonal frame phases are removed) before the tabulated single-qubit phase
adjustments are applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .basis import ProductBasis, build_basis, qubit_scheme
from .dynamics import Stage, StagePlan, propagate, propagate_matrix
from .model import (
    DriveTerm,
    HamiltonianSpec,
    InteractionGraph,
    NoiseRealization,
    gaussian_pulse,
    square_pulse,
    standard_target_frame,
)

TWO_PI = 2.0 * math.pi

VARIANTS = (
    "SWAP",
    "iSWAP",
    "sqrt_iSWAP",
    "bSWAP",
    "C_iSWAP",
    "C_SWAP_CCSdag",
    "Ck_SWAP",
    "MUX_SWAP_4T",
    "MUX_SWAP_3T",
)

_CONTROLLED = ("C_iSWAP", "C_SWAP_CCSdag", "Ck_SWAP", "MUX_SWAP_4T", "MUX_SWAP_3T")


@dataclass(frozen=True)
class GateParams:
    """Physical knobs of a gate protocol, angular frequencies in rad/us.

    v_cc defaults to |v_ct| (close-packed multi-control geometry); the
    interaction_overrides mapping replaces individual graph entries, keyed
    (atom_i, level_i, atom_j, level_j) -> shift, for user-supplied
    anisotropic couplings.
    """

    omega1_max: float
    omega2: float
    delta: float
    duration: float
    v_tt: float = TWO_PI * 700.0
    v_ct: float = 0.0
    v_cc: float | None = None
    omega_c: float = TWO_PI * 10.0
    sigma_ratio: float = 0.25
    lifetime: float | None = 400.0
    n_controls: int = 1
    interaction_overrides: dict | None = None
    model: str = "collective"

    def __post_init__(self):
        if self.model not in ("collective", "full"):
            raise ValueError(f"model must be 'collective' or 'full', got {self.model!r}")

    @property
    def decay_rate(self) -> float:
        return 0.0 if not self.lifetime else 1.0 / self.lifetime

    @property
    def control_pi_time(self) -> float:
        return math.pi / self.omega_c


@dataclass(frozen=True)
class GateProtocol:
    variant: str
    basis: ProductBasis
    plan: StagePlan
    ideal: np.ndarray
    phase_adjust: tuple[tuple[int, str, float], ...]  # (atom, level, radians)
    n_controls: int
    params: GateParams
    conjugation: tuple[np.ndarray, np.ndarray] | None = None  # (pre, post) ideal flankers

    @property
    def n_qubits(self) -> int:
        return self.basis.n_atoms

    @property
    def total_duration(self) -> float:
        return self.plan.total_duration


@dataclass
class GateReport:
    """Realized gate over the computational subspace plus error budgets.

    u_gate carries the Rydberg-decay amplitude damping (column norms below
    one); rotation_matrix is u_gate with each column renormalized by its
    surviving norm, the decomposition the result tables use.  fidelity is the
    process fidelity of the renormalized gate (rotation and phase errors
    only); fidelity_with_loss scores u_gate itself, so decay counts against
    it.  Phases follow the accumulated-phase sign convention: the reported
    argument is minus the propagator's, matching the tabulated data.
    """

    variant: str
    u_gate: np.ndarray
    rotation_matrix: np.ndarray
    fidelity: float
    fidelity_with_loss: float
    loss_matrix: np.ndarray
    per_input_loss: np.ndarray
    mean_loss: float
    t_bar_r: float
    total_duration: float


# ---------------------------------------------------------------------------
# Ideal unitaries


def _permutation_ideal(n_qubits: int, mapper) -> np.ndarray:
    """Ideal unitary from a bit-tuple mapper: bits -> (bits_out, amplitude)."""
    n = 2**n_qubits
    u = np.zeros((n, n), dtype=complex)
    for j in range(n):
        bits = tuple((j >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits))
        bits_out, amp = mapper(bits)
        i = 0
        for b in bits_out:
            i = (i << 1) | b
        u[i, j] = amp
    return u


def _exchange(bits, a, b):
    out = list(bits)
    out[a], out[b] = out[b], out[a]
    return tuple(out)


def ideal_unitary(variant: str, n_controls: int = 1) -> np.ndarray:
    if variant == "SWAP":
        return _permutation_ideal(2, lambda b: (_exchange(b, 0, 1), 1.0))
    if variant == "iSWAP":
        return _permutation_ideal(2, lambda b: (_exchange(b, 0, 1), 1j if b[0] != b[1] else 1.0))
    if variant == "sqrt_iSWAP":
        u = np.eye(4, dtype=complex)
        u[1, 1] = u[2, 2] = 1.0 / math.sqrt(2.0)
        u[1, 2] = u[2, 1] = 1j / math.sqrt(2.0)
        return u
    if variant == "bSWAP":
        x2 = _permutation_ideal(2, lambda b: ((b[0], 1 - b[1]), 1.0))
        swap = ideal_unitary("SWAP")
        return x2 @ swap @ x2
    if variant == "C_iSWAP":
        u = np.eye(8, dtype=complex)
        u[4:8, 4:8] = ideal_unitary("iSWAP")
        return u
    if variant == "C_SWAP_CCSdag":
        u = np.eye(8, dtype=complex)
        u[4:8, 4:8] = ideal_unitary("SWAP")
        u[7, 7] *= np.exp(-0.5j * math.pi)
        return u
    if variant == "Ck_SWAP":
        k = n_controls

        def mapper(bits):
            if all(bits[:k]):
                return bits[:k] + _exchange(bits[k:], 0, 1), 1.0
            return bits, 1.0

        return _permutation_ideal(k + 2, mapper)
    if variant == "MUX_SWAP_4T":

        def mapper(bits):
            c, t = bits[0], list(bits[1:])
            if c == 0:
                t[0], t[1] = t[1], t[0]
            else:
                t[2], t[3] = t[3], t[2]
            return (c, *t), 1.0

        return _permutation_ideal(5, mapper)
    if variant == "MUX_SWAP_3T":

        def mapper(bits):
            c, t = bits[0], list(bits[1:])
            if c == 0:
                t[0], t[1] = t[1], t[0]
            else:
                t[0], t[2] = t[2], t[0]
            return (c, *t), 1.0

        return _permutation_ideal(4, mapper)
    raise ValueError(f"unknown variant {variant!r}")


# Final virtual-Z adjustments, (phase/pi, who, level).  Controls carry their
# correction on |0>, the level that makes the Rydberg round trip; the two
# printed forms (-pi/2 on c for the conditional iSWAP, +pi/2 on c for the
# CCS+CSWAP composite) are this same operation up to a global phase.
_PHASE_ADJUST = {
    "SWAP": ((-0.2971, "targets", "1"),),
    "iSWAP": ((-0.5, "targets", "1"),),
    "sqrt_iSWAP": (),
    "bSWAP": ((-0.2971, "targets", "1"),),
    "C_iSWAP": ((-0.5, "targets", "1"), (-0.5, "controls", "0")),
    "C_SWAP_CCSdag": ((-0.5, "controls", "0"),),
    "Ck_SWAP": ((-0.5, "controls", "0"),),
    "MUX_SWAP_4T": (),
    "MUX_SWAP_3T": (),
}


# ---------------------------------------------------------------------------
# Protocol construction


def _interaction_graph(variant: str, params: GateParams, n_controls: int, n_targets: int) -> InteractionGraph:
    entries: dict = {}
    t0 = n_controls  # first target atom index
    if variant == "MUX_SWAP_4T":
        entries[(t0 + 0, "r", t0 + 1, "r")] = params.v_tt
        entries[(t0 + 2, "r", t0 + 3, "r")] = params.v_tt
        for t in (t0 + 2, t0 + 3):
            entries[(0, "rP", t, "r")] = params.v_ct
        for t in (t0 + 0, t0 + 1):
            entries[(0, "rD", t, "r")] = params.v_ct
    elif variant == "MUX_SWAP_3T":
        entries[(t0 + 0, "r", t0 + 1, "r")] = params.v_tt
        entries[(t0 + 0, "r", t0 + 2, "r")] = params.v_tt
        entries[(t0 + 1, "r", t0 + 2, "r")] = params.v_tt
        entries[(0, "rP", t0 + 2, "r")] = params.v_ct
        entries[(0, "rD", t0 + 1, "r")] = params.v_ct
    else:
        for i in range(n_targets):
            for j in range(i + 1, n_targets):
                entries[(t0 + i, "r", t0 + j, "r")] = params.v_tt
        for c in range(n_controls):
            for t in range(n_targets):
                entries[(c, "r", t0 + t, "r")] = params.v_ct
        v_cc = abs(params.v_ct) if params.v_cc is None else params.v_cc
        for c1 in range(n_controls):
            for c2 in range(c1 + 1, n_controls):
                entries[(c1, "r", c2, "r")] = v_cc
    if params.interaction_overrides:
        entries.update(params.interaction_overrides)
    return InteractionGraph.from_dict(entries)


def make_protocol(variant: str, params: GateParams) -> GateProtocol:
    """Assemble stages, ideal unitary and phase adjustments for a variant."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r} (choose from {VARIANTS})")
    mux = variant.startswith("MUX")
    if variant in _CONTROLLED and params.v_ct == 0.0:
        raise ValueError(f"{variant} requires a control-target interaction v_ct")

    n_controls = params.n_controls if variant == "Ck_SWAP" else (1 if variant in _CONTROLLED else 0)
    n_targets = {"MUX_SWAP_4T": 4, "MUX_SWAP_3T": 3}.get(variant, 2)

    target_scheme = qubit_scheme(("r",), params.decay_rate)
    if mux:
        control_scheme = qubit_scheme(("rP", "rD"), params.decay_rate)
    else:
        control_scheme = qubit_scheme(("r",), params.decay_rate)
    basis = build_basis([control_scheme] * n_controls + [target_scheme] * n_targets)

    interactions = _interaction_graph(variant, params, n_controls, n_targets)
    frame = standard_target_frame(basis, params.delta, atoms=range(n_controls, basis.n_atoms))
    t_pi = params.control_pi_time

    if params.model == "collective":
        t0 = n_controls
        if variant == "MUX_SWAP_4T":
            pairs = ((t0, t0 + 1), (t0 + 2, t0 + 3))
        elif variant == "MUX_SWAP_3T":
            # The hub shares both exchange channels and all three targets
            # sit inside one blockade radius, so the whole trio forms a
            # single collective cluster; anything less breaks the
            # hub-exchange symmetry of the shared intermediate.
            pairs = ((t0, t0 + 1), (t0, t0 + 2), (t0 + 1, t0 + 2))
        else:
            pairs = ((t0, t0 + 1),)
    else:
        pairs = ()

    def control_stage(control: int, sign: float) -> Stage:
        if mux:
            pulses = (("0", "rP"), ("1", "rD"))
        else:
            pulses = (("0", "r"),)
        drives = tuple(
            DriveTerm(
                control,
                lower,
                upper,
                square_pulse(sign * params.omega_c, 0.0, t_pi),
                doppler_sensitive=True,
                family="omega_c",
            )
            for lower, upper in pulses
        )
        return Stage(t_pi, HamiltonianSpec(basis, drives, interactions, frame, pairs))

    def target_stage() -> Stage:
        drives = []
        for t in range(n_controls, basis.n_atoms):
            drives.append(
                DriveTerm(
                    t,
                    "0",
                    "1",
                    gaussian_pulse(params.omega1_max, 0.0, params.duration, params.sigma_ratio),
                    doppler_sensitive=False,
                    family="omega1",
                )
            )
            drives.append(
                DriveTerm(
                    t,
                    "1",
                    "r",
                    square_pulse(params.omega2, 0.0, params.duration),
                    doppler_sensitive=True,
                    family="omega2",
                )
            )
        return Stage(params.duration, HamiltonianSpec(basis, tuple(drives), interactions, frame, pairs))

    stages: list[Stage] = []
    for c in range(n_controls):
        stages.append(control_stage(c, +1.0))
    stages.append(target_stage())
    # Retrieval in reverse order, phase-inverted: the round trip is identity.
    for c in reversed(range(n_controls)):
        stages.append(control_stage(c, -1.0))

    adjust = []
    for phi_pi, who, level in _PHASE_ADJUST[variant]:
        if who == "targets":
            atoms = range(n_controls, basis.n_atoms)
        else:
            atoms = range(n_controls)
        adjust.extend((a, level, phi_pi * math.pi) for a in atoms)

    conjugation = None
    if variant == "bSWAP":
        x2 = _permutation_ideal(2, lambda b: ((b[0], 1 - b[1]), 1.0))
        conjugation = (x2, x2)

    return GateProtocol(
        variant=variant,
        basis=basis,
        plan=StagePlan(tuple(stages)),
        ideal=ideal_unitary(variant, n_controls),
        phase_adjust=tuple(adjust),
        n_controls=n_controls,
        params=params,
        conjugation=conjugation,
    )


def two_target_plan(params: GateParams, duration: float | None = None) -> StagePlan:
    """Bare two-target exchange stage, used by the duration calibration."""
    p = params if duration is None else replace(params, duration=duration)
    proto = make_protocol("SWAP", replace(p, v_ct=0.0))
    return proto.plan


def calibrate_duration(
    variant: str,
    params: GateParams,
    t_seed: float,
    half_width: float = 0.03,
    coarse: float = 2e-3,
    fine: float = 2e-4,
) -> float:
    """Pin the stage duration by maximizing the full-gate process fidelity.

    The bare exchange amplitude rides fast dressing ripples whose crests
    recur every light-shift cycle and are near-degenerate, so the published
    durations are fidelity optima rather than transfer optima; seed with the
    transfer-calibrated duration and keep the window inside one crest
    spacing of it.  A two-stage grid (coarse, then fine around the best
    crest) handles the rippled landscape that defeats unimodal searches.
    """
    def fid(t: float) -> float:
        return run_gate(make_protocol(variant, replace(params, duration=float(t)))).fidelity

    lo, hi = (1.0 - half_width) * t_seed, (1.0 + half_width) * t_seed
    grid = np.arange(lo, hi + coarse, coarse)
    vals = [fid(t) for t in grid]
    t_best = float(grid[int(np.argmax(vals))])
    fine_grid = np.arange(t_best - coarse, t_best + coarse + fine, fine)
    fine_vals = [fid(t) for t in fine_grid]
    return float(fine_grid[int(np.argmax(fine_vals))])


def table_params(variant: str) -> GateParams:
    """Published operating points for the gate catalog.

    Angular frequencies carry the usual 2*pi per MHz; the control-target
    shift is quoted in bare rad/us (22140 and 24800), the units under which
    the blocked-branch phases of the published data reproduce (see the
    project notes on the unit resolution for this quantity).
    """
    common = dict(omega1_max=TWO_PI * 33.5, v_tt=TWO_PI * 700.0, duration=4.7259)
    catalog = {
        "SWAP": GateParams(omega2=TWO_PI * 190.8, delta=TWO_PI * 999.73, **common),
        "bSWAP": GateParams(omega2=TWO_PI * 190.8, delta=TWO_PI * 999.73, **common),
        "iSWAP": GateParams(omega2=TWO_PI * 145.82, delta=TWO_PI * 999.84, **common),
        "sqrt_iSWAP": GateParams(
            omega1_max=TWO_PI * 33.5,
            omega2=TWO_PI * 137.56,
            delta=TWO_PI * 1000.3,
            duration=2.3095,
            v_tt=TWO_PI * 700.0,
        ),
        "C_iSWAP": GateParams(omega2=TWO_PI * 145.82, delta=TWO_PI * 1000.3, v_ct=24800.0, **common),
        "C_SWAP_CCSdag": GateParams(omega2=TWO_PI * 89.76, delta=TWO_PI * 1001.2, v_ct=22140.0, **common),
    }
    if variant not in catalog:
        raise KeyError(f"no published operating point for {variant!r}")
    return catalog[variant]


# ---------------------------------------------------------------------------
# Gate extraction and metrics


def _comp_bits(n_qubits: int, index: int) -> tuple[int, ...]:
    return tuple((index >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits))


def _adjust_diagonal(protocol: GateProtocol) -> np.ndarray:
    """Per-computational-state phase factor of the virtual-Z adjustments."""
    n = len(protocol.basis.comp_indices)
    nq = protocol.n_qubits
    diag = np.ones(n, dtype=complex)
    for atom, level, phi in protocol.phase_adjust:
        bit = 1 if level == "1" else 0
        for i in range(n):
            if _comp_bits(nq, i)[atom] == bit:
                diag[i] *= np.exp(1j * phi)
    return diag


def _frame_removal_diagonal(protocol: GateProtocol) -> np.ndarray:
    """exp(+i E_frame T_total) per computational state."""
    spec = protocol.plan.stages[0].spec
    t_total = protocol.total_duration
    basis = protocol.basis
    energies = np.array(
        [spec.frame_energy(basis.labels_of(idx)) for idx in basis.comp_indices]
    )
    return np.exp(1j * energies * t_total)


def run_gate(protocol: GateProtocol, noise: NoiseRealization | None = None) -> GateReport:
    """Propagate every computational input and assemble the gate report."""
    basis = protocol.basis
    comp = list(basis.comp_indices)
    n = len(comp)
    columns = np.zeros((basis.dim, n), dtype=complex)
    for j, idx in enumerate(comp):
        columns[idx, j] = 1.0

    final, loss, t_ryd = propagate_matrix(protocol.plan, columns, noise)

    u = final[comp, :]
    u = _frame_removal_diagonal(protocol)[:, None] * u
    # Accumulated-phase sign convention (resolved against the tabulated
    # exchange phase): report the conjugate of the propagator elements.
    u = np.conj(u)
    u = _adjust_diagonal(protocol)[:, None] * u
    if protocol.conjugation is not None:
        pre, post = protocol.conjugation
        u = post @ u @ pre
        # the flanking permutation relabels which physical input feeds each
        # column, so per-input quantities follow it
        perm = np.argmax(np.abs(pre), axis=0)
        loss = loss[perm]
        t_ryd = t_ryd[perm]

    rotation = u / np.sqrt(np.clip(1.0 - loss, 1e-12, None))[None, :]
    loss_matrix = np.where(np.abs(protocol.ideal) > 1e-12, loss[None, :], 0.0)
    return GateReport(
        variant=protocol.variant,
        u_gate=u,
        rotation_matrix=rotation,
        fidelity=process_fidelity(rotation, protocol.ideal),
        fidelity_with_loss=process_fidelity(u, protocol.ideal),
        loss_matrix=loss_matrix,
        per_input_loss=loss,
        mean_loss=float(np.mean(loss)),
        t_bar_r=float(np.mean(t_ryd)),
        total_duration=protocol.total_duration,
    )


def process_fidelity(u_gate: np.ndarray, u_ideal: np.ndarray) -> float:
    """[Tr(M M+) + |Tr M|^2] / [n (n+1)] with M = U_ideal^+ U_gate.

    Insensitive to a global phase of the realized gate; equals 1 iff the
    gate matches the ideal up to that phase.
    """
    if u_gate.shape != u_ideal.shape or u_gate.shape[0] != u_gate.shape[1]:
        raise ValueError("gate and ideal must be square matrices of equal dimension")
    n = u_gate.shape[0]
    m = u_ideal.conj().T @ u_gate
    val = (np.trace(m @ m.conj().T).real + abs(np.trace(m)) ** 2) / (n * (n + 1))
    return float(val)


def rotation_fidelity(u_gate: np.ndarray, u_ideal: np.ndarray) -> float:
    """Process fidelity after per-element phase stripping.

    Each realized element is replaced by its modulus carrying the ideal
    element's phase, isolating population-rotation errors from phase errors.
    """
    phases = np.where(np.abs(u_ideal) > 1e-12, u_ideal / np.where(np.abs(u_ideal) > 1e-12, np.abs(u_ideal), 1.0), 1.0)
    return process_fidelity(np.abs(u_gate) * phases, u_ideal)


def phase_optimized_fidelity(u_gate: np.ndarray, u_ideal: np.ndarray, n_qubits: int) -> float:
    """Best process fidelity over per-qubit virtual-Z corrections.

    Used where the tabulated phase convention is ambiguous (the half-angle
    exchange variant carries no printed adjustment).
    """
    n = u_gate.shape[0]
    bit_table = np.array([_comp_bits(n_qubits, i) for i in range(n)])

    def neg_fid(phis):
        diag = np.exp(1j * (bit_table @ phis))
        return -process_fidelity(diag[:, None] * u_gate, u_ideal)

    best = -neg_fid(np.zeros(n_qubits))
    rng = np.random.default_rng(7)
    starts = [np.zeros(n_qubits)] + [rng.uniform(-math.pi, math.pi, n_qubits) for _ in range(6)]
    for x0 in starts:
        res = minimize(neg_fid, x0, method="Nelder-Mead", options={"xatol": 1e-8, "fatol": 1e-12})
        best = max(best, -res.fun)
    return float(best)


def rydberg_exposure(report: GateReport) -> float:
    """Input-averaged time-integrated Rydberg population, us."""
    return report.t_bar_r


def conditional_rotation_fidelity(
    report: GateReport, protocol: GateProtocol, control_bits: tuple[int, ...]
) -> float:
    """Rotation fidelity of the block conditioned on a control configuration.

    Uses the decay-renormalized matrix: routing quality is scored separately
    from the Rydberg-loss budget.
    """
    nq = protocol.n_qubits
    k = len(control_bits)
    sel = [i for i in range(2**nq) if _comp_bits(nq, i)[:k] == tuple(control_bits)]
    sub = report.rotation_matrix[np.ix_(sel, sel)]
    ideal_sub = protocol.ideal[np.ix_(sel, sel)]
    return rotation_fidelity(sub, ideal_sub)


def acquired_phase(
    protocol: GateProtocol, input_bits: tuple[int, ...], lifetime_override: bool = False
) -> float:
    """Acquired AC-Stark phase of one computational input, radians in (-pi, pi].

    Convention: the input is propagated through the bare protocol (no
    tabulated phase adjustments), the static frame phases are removed, and
    the phase is read from the dominant output element as minus its argument,
    with the pi rotation sign of a completed exchange divided out.  This
    isolates the dynamical light-shift phase the effective model predicts.
    """
    basis = protocol.basis
    nq = protocol.n_qubits
    j = 0
    for b in input_bits:
        j = (j << 1) | b
    psi0 = np.zeros(basis.dim, dtype=complex)
    psi0[basis.comp_indices[j]] = 1.0
    res = propagate(protocol.plan, psi0)
    amps = res.final_state[list(basis.comp_indices)]
    amps = _frame_removal_diagonal(protocol) * amps
    i = int(np.argmax(np.abs(amps)))
    a = amps[i]
    if i != j:
        a = -a
    from .analytic import wrap_phase

    return wrap_phase(-float(np.angle(a)))
