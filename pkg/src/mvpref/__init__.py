"""Human-preference tooling for multi-view image generation.

Subpackages:
    dataset     prompt catalogs, Borda consensus, comparison pairs, splits,
                and a synthetic multi-view asset generator
    annotation  ranking-collection service (store + HTTP API)
    reward      multi-view reward model and its pairwise training
    diffusion   toy multi-view denoising diffusion model
    tuning      reward-feedback fine-tuning of the diffusion model
    evaluation  ranking statistics (Spearman, win rates, method tables)
"""

__version__ = "0.1.0"
