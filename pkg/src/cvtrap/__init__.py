"""Simulation laboratory for a continuous-variable trap-code quantum
authentication scheme: an exact Gaussian-state engine, the full
encode/attack/decode pipeline, the closed-form protocol quantities, and a
seeded Monte Carlo harness that cross-validates simulation against them.
"""

from .analytics import (
    SchemeParams,
    big_g,
    eps_dec,
    eta_bound,
    g1,
    g2,
    hamming_weight_delta,
    indicator_I,
    p_exact,
    split_layout,
    twirl_factor,
    twirl_mc_oracle,
)
from .adversary import (
    AttackSpec,
    attack_fixed_modes,
    attack_identity,
    attack_mixture,
    attack_random_modes,
    parse_attack_file,
    parse_attack_text,
    write_attack_file,
)
from .cvgauss import (
    GaussianState,
    HomodyneRecord,
    Quadrature,
    displace,
    displace_all,
    homodyne,
    invert_permutation,
    make_coherent,
    make_squeezed_p,
    make_squeezed_x,
    make_vacuum,
    permute_modes,
    permute_vector,
    sample_homodyne,
    tensor,
    unpermute_vector,
)
from .harness import (
    ExperimentConfig,
    ExperimentSummary,
    bounds_table,
    run_attack,
    run_no_attack,
    run_pipeline_equivalence,
    run_sweep,
    run_twirl_check,
    summaries_to_csv,
    write_summaries_csv,
)
from .trapauth import (
    DUMMY_MESSAGE,
    AuthKey,
    CipherState,
    DecodeResult,
    Flag,
    LogicalMessage,
    apply_attack,
    decode,
    encode,
    keygen,
    load_cipher,
    plain_state,
    qecc_oracle_decode,
    save_cipher,
)

__version__ = "0.1.0"
