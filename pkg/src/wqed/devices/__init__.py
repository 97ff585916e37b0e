"""Measurement devices composed from the scattering maps."""
from .active_bsa import (
    active_bsa_error_closed_form,
    active_bsa_report,
    active_bsa_run,
    active_bsa_success_closed_form,
)
from .modes import (
    BellLabel,
    DetectorModel,
    ModalTwoPhotonState,
    apply_mode_map,
    beamsplitter_apply,
    beamsplitter_array,
    bell_state,
    spectral_filter,
)
from .passive_bsa import (
    StageResult,
    linear_optics_fallback,
    passive_bsa_chain,
    passive_bsa_stage,
    sorter_bank,
)
from .qnd import (
    QndBranch,
    QndBranches,
    ThreeLevelEmitter,
    qnd_detect_single,
    qnd_efficiency,
    qnd_efficiency_closed_form,
    qnd_kraus,
    qnd_rotate,
)
from .report import INCONCLUSIVE, VERDICTS, BsaReport
from .sorter import (
    SingleSorterOutput,
    SorterArrayReport,
    SorterOutput,
    sorter_array,
    sorter_error_probability,
    sorter_single_photon,
    sorter_success_probability,
    sorter_two_photon,
)

__all__ = [name for name in dir() if not name.startswith("_")]
