"""Post-processing and evaluation of binary vehicle-detection masks for
wide-area aerial imagery: area sieving followed by morphological closing,
four comparison schemes, and overlap-based TP/FN/FP evaluation."""

from .errors import (ComponentError, ContextError, DimensionError, FormatError, PackingError,
                     ParameterError, WamiError)
from .evaluation import (MatchResult, Metrics, SummaryStats, compute_metrics, match_detections,
                         metrics_from_counts, summarize)
from .masks import (Component, LabelMap, Rect, as_mask, component_stats, label_components,
                    render_components)
from .morphology import StructuringElement, closing, dilate, disk, erode, median_filter, opening, square
from .schemes import (FilteredDilation, GroundTruthContext, HeuristicFiltering, NoOp, Proposed,
                      SchemeSpec, ShapeIndexFiltering, SieveAndOpen, apply_filtered_dilation,
                      apply_heuristic_filtering, apply_proposed, apply_scheme, apply_shape_index_filtering,
                      apply_sieve_and_open, shape_index, sieve_area)
from .synth import CorruptionParams, Scene, SceneParams, SplitMix64, generate_frames, generate_scene, prng_next

__version__ = "0.1.0"
