"""Moment builders and samplers for latent variable models."""

from .base import MomentSet
from .gmm import (GmmSpec, gmm_common_from_raw, gmm_common_moments, gmm_differing_from_raw,
                  gmm_differing_moments, gmm_multiview_split, gmm_population_moments,
                  random_rotation, sample_gmm, view_groups)
from .hmm import (HmmReduction, HmmSpec, hmm_conditional_means, hmm_multiview_spec,
                  hmm_population_moments, hmm_reduce, sample_hmm)
from .ica import (IcaSpec, contract_one, contract_pair, ica_cumulant, ica_from_raw,
                  ica_population_moments, sample_ica)
from .lda import (LdaSpec, lda_from_raw, lda_moments, lda_population_moments, lda_topic_weights,
                  sample_lda)
from .multiview import (MultiviewSpec, multiview_from_raw, multiview_population_moments,
                        multiview_raw_moments, multiview_symmetrized_moments, other_view_means,
                        sample_multiview)
from .noisyor import (NoisyOrSpec, noisy_or_lowrank, noisy_or_pmi, noisy_or_population_pmi,
                      sample_noisyor)
from .topic import (TopicSpec, sample_topic, topic_empirical_moments, topic_population_moments,
                    word_triple_moments)

__all__ = [name for name in dir() if not name.startswith("_")]
