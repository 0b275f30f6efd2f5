"""replab: recurrence/repetition statistics of symbol sequences, Renyi
entropies of analytic sources, and empirical verification of the sandwich
bounds that link them."""

__version__ = "0.1.0"

from .seqstat import (CensoredValue, CurveKind, StatCurve, SuffixAutomaton,
                      SymbolSeq, brute_force_curve, check_duality,
                      check_min_decomposition, compute_curve,
                      longest_match_curve, maximal_repetition_curve,
                      recurrence_time, recurrence_time_curve, repetition_time,
                      repetition_time_curve, z_array)
from .sources import (CopySource, HMMSource, IIDSource, MarkovSource,
                      SeedSpec, Source, block_probability,
                      conditional_block_probability,
                      enumerate_log_block_probabilities, model_from_config,
                      sample_copy_source, sample_path,
                      stationary_distribution)
from .entropy import (ContextLengthValue, EntropyTable, EntropyValue,
                      VarentropyResult, WeightedEntropyValue,
                      block_min_entropy, block_renyi_entropy,
                      check_chain_rule, conditional_block_renyi,
                      conditional_min_entropy, conditional_renyi,
                      context_length, entropy_rate, modal_block,
                      plug_in_entropy, pmi_bound_estimate, renyi_entropy,
                      varentropy, weighted_conditional_entropy)
from .hilberg import (EnsembleSummary, HilbergEstimate, HilbergFit, LawFit,
                      check_t_increasing, dyadic_grid, ensemble_summary,
                      fit_law, hilberg_exponent, t_increasing_violations)
from .verify import (RecurrencePointProcess, RhoRule, VerificationReport,
                     block_occurrences, check_context_length_bounds,
                     check_recurrence_sandwich, check_repetition_lower,
                     check_repetition_upper, exponent_sandwich_report,
                     verify_chen_moy, verify_kac, verify_kontoyiannis)
