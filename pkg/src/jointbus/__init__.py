"""Joint crosstalk-avoidance and error-correction coding for parallel buses."""

__version__ = "0.1.0"

from .buscore import (
    BusState,
    RunParse,
    ViolationReport,
    check_transition,
    fib,
    free_wires,
    parse_runs,
    state_from_runs,
)
from .cac import (
    RunCodebook,
    cac_decode,
    cac_encode,
    cac_rate,
    count_codewords,
    k_info,
    run_rank,
    run_unrank,
)
from .ira import (
    DegreeDistribution,
    IraGraph,
    ira_encode,
    rate_ldpc,
    recc_from_rldpc,
    sample_graph,
    validate_checks,
)
from .jointcode import (
    DminResult,
    EmbeddedCodeword,
    ParitySelection,
    RateComparison,
    WireLayout,
    build_layout,
    compare_rates,
    decode_payload,
    dmin_bruteforce,
    dmin_witness,
    embedded_encode,
    payload_size,
    rate_embedded,
    rate_shielded,
    select_parity_wires,
    wires_needed,
)
from .bpdecode import (
    ERASED,
    DecodeResult,
    ErasureWord,
    FactorGraph,
    bp_decode,
    build_factor_graph,
    cac_node_update,
    ecc_node_update,
    variable_node_update,
)
from .densevo import (
    AsymptoticRate,
    CacDegreeDist,
    DeModel,
    DeState,
    asymptotic_cac_rate,
    de_step,
    de_threshold,
    de_trajectory,
    p_coeffs,
    p_poly,
    rho_tilde,
)
from .simkit import (
    EnsembleSpec,
    ModifiedPastState,
    SimConfig,
    TrialStats,
    bec_transmit,
    de_vs_simulation,
    gen_past_modified,
    gen_past_uniform,
    run_trials,
    trial_rng,
    wilson_interval,
)
