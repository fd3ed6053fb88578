"""Wastewater surveillance analytics toolkit.

Turns per-plant virus measurements into national indicator curves,
scores cheaper sampling designs against the reference design, and runs
process-monitoring charts that alarm when the indicator leaves control.
"""

from .aggregation import (
    METHOD1,
    METHOD2,
    AggregationConfig,
    NationalCurve,
    aggregate,
    aggregate_method1,
    aggregate_method2,
    iqr_band,
    normalize_curve,
)
from .arma import ArmaModel, fit_arma_css, arma_residuals, ljung_box_test, simulate_arma
from .charts import (
    ChartRun,
    CusumConfig,
    NigPrior,
    PccConfig,
    ShewhartConfig,
    alpha_for_arl,
    calibrate_pcc_alpha,
    cusum_run,
    cusum_run_length_mc,
    pcc_prior_from_historical,
    pcc_run,
    residual_shewhart_run,
    shewhart_run,
    siegmund_arl,
)
from .count_model import (
    IngarchFit,
    IngarchSpec,
    fit_ingarch_qcml,
    ingarch_simulate,
    lambda_path,
    lambda_step,
)
from .dissimilarity import (
    DissimilarityConfig,
    DissimilarityUndefinedError,
    corr_dissimilarity,
    cross_correlation,
    crosscorr_dissimilarity,
    dissimilarity,
    l2_distance,
)
from .excretion import (
    ExcretionConfig,
    ExcretorsPanel,
    build_excretors_panel,
    fictitious_excretors,
    interpolate_daily,
    per_capita_rate,
    virus_load,
)
from .ingest import (
    Finding,
    PanelDataset,
    PanelFormatError,
    PlantMeta,
    SampleRecord,
    parse_panel_csv,
    validate_panel,
    write_panel_csv,
)
from .scenarios import (
    SamplingScenario,
    ScenarioResult,
    SewerScenario,
    apply_sampling_scenario,
    apply_sewer_scenario,
    rank_scenarios,
    sampling_scenario_grid,
    sewer_scenario_grid,
    wwtp_influence,
)
from .series import DailySeries
from .synth import EpidemicWave, SynthConfig, generate_panel, truth_series
from .uncertainty import (
    BootstrapConfig,
    PercentileInterval,
    bootstrap_percentile_ci,
    method2_pointwise_interval,
)

__version__ = "0.1.0"
